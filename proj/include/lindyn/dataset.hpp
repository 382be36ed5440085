#pragma once

#include <cstddef>
#include <string_view>

#include "lindyn/matrix.hpp"

namespace lindyn {

enum class DataSource { synthetic, mnist, cifar10, file };

std::string_view to_string(DataSource s) noexcept;

/// N samples of dimension D, one per row. Validated on construction and
/// immutable afterwards.
class Dataset {
 public:
  /// Throws InvalidArgument if empty or if any entry is non-finite; the
  /// message names the offending sample index.
  Dataset(Matrix samples, DataSource source);

  const Matrix& samples() const noexcept { return samples_; }
  std::size_t n() const noexcept { return samples_.rows(); }
  std::size_t d() const noexcept { return samples_.cols(); }
  DataSource source() const noexcept { return source_; }

 private:
  Matrix samples_;
  DataSource source_;
};

}  // namespace lindyn
