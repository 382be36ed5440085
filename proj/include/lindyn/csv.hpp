#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

namespace lindyn::csv {

/// Round-trippable, locale-independent text for a double.
std::string number(double v);

/// Writes the `epoch,mode,kind,value` header.
void write_trajectory_header(std::ostream& out);
void write_trajectory_row(std::ostream& out, double epoch, long mode, std::string_view kind,
                          double value);

}  // namespace lindyn::csv
