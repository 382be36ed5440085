#include "lindyn/csv.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace lindyn::csv {

std::string number(double v) {
  if (v == 0.0) return "0";  // folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trajectory_header(std::ostream& out) { out << "epoch,mode,kind,value\n"; }

void write_trajectory_row(std::ostream& out, double epoch, long mode, std::string_view kind,
                          double value) {
  out << number(epoch) << ',' << mode << ',' << kind << ',' << number(value) << '\n';
}

}  // namespace lindyn::csv
