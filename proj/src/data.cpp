#include "lindyn/data.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "lindyn/csv.hpp"
#include "lindyn/errors.hpp"
#include "lindyn/simulate.hpp"

namespace lindyn {

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

std::uint8_t to_byte(double v, bool scaled) {
  const double b = std::round(scaled ? v * 255.0 : v);
  if (!(b >= 0.0 && b <= 255.0)) throw InvalidArgument("pixel value outside the byte range");
  return static_cast<std::uint8_t>(b);
}

void check_magic(std::span<const std::uint8_t> bytes, std::uint32_t expected, const char* what) {
  if (bytes.size() < 4)
    throw TruncatedInputError(std::string(what) + ": header ends after " +
                                  std::to_string(bytes.size()) + " bytes",
                              bytes.size());
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != expected)
    throw BadMagicError(std::string(what) + ": expected magic " + hex32(expected) + ", found " +
                            hex32(magic),
                        0);
}

int checked_label(std::uint8_t v, std::uint64_t offset) {
  if (v > 9) throw ParseError("label " + std::to_string(v) + " outside 0..9", offset);
  return v;
}

}  // namespace

RawImageBatch parse_idx(std::span<const std::uint8_t> bytes, std::size_t count_limit,
                        bool scale_to_unit) {
  check_magic(bytes, kIdxImageMagic, "IDX images");
  if (bytes.size() < 16)
    throw TruncatedInputError("IDX images: dimension header ends early", bytes.size());
  const std::uint64_t n = read_be32(bytes, 4);
  const std::uint64_t rows = read_be32(bytes, 8);
  const std::uint64_t cols = read_be32(bytes, 12);
  if (rows == 0 || cols == 0)
    throw DimensionOverflowError("IDX images: zero image dimension", rows == 0 ? 8 : 12);
  const std::uint64_t d = rows * cols;
  // Counts are 32-bit, so d*n fits in 64 bits; cap it to something addressable.
  constexpr std::uint64_t kMaxBytes = std::uint64_t{1} << 40;
  if (d > kMaxBytes || (n > 0 && d * n > kMaxBytes))
    throw DimensionOverflowError("IDX images: " + std::to_string(n) + " x " + std::to_string(rows) +
                                     " x " + std::to_string(cols) + " is too large",
                                 4);
  const std::uint64_t count = std::min<std::uint64_t>(n, count_limit);
  const std::uint64_t needed = 16 + count * d;
  if (bytes.size() < needed)
    throw TruncatedInputError("IDX images: header promises " + std::to_string(count) +
                                  " images (" + std::to_string(needed) + " bytes), file has " +
                                  std::to_string(bytes.size()),
                              bytes.size());

  RawImageBatch batch;
  batch.pixels = Matrix(count, d);
  batch.image_rows = rows;
  batch.image_cols = cols;
  batch.source = DataSource::mnist;
  batch.scaled_to_unit = scale_to_unit;
  const double s = scale_to_unit ? 1.0 / 255.0 : 1.0;
  const std::uint8_t* p = bytes.data() + 16;
  double* out = batch.pixels.data();
  for (std::uint64_t i = 0; i < count * d; ++i) out[i] = p[i] * s;
  return batch;
}

std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes, std::size_t count_limit) {
  check_magic(bytes, kIdxLabelMagic, "IDX labels");
  if (bytes.size() < 8) throw TruncatedInputError("IDX labels: count missing", bytes.size());
  const std::uint64_t n = read_be32(bytes, 4);
  const std::uint64_t count = std::min<std::uint64_t>(n, count_limit);
  if (bytes.size() < 8 + count)
    throw TruncatedInputError("IDX labels: header promises " + std::to_string(count) +
                                  " labels, file has " + std::to_string(bytes.size() - 8),
                              bytes.size());
  std::vector<int> labels(count);
  for (std::uint64_t i = 0; i < count; ++i) labels[i] = checked_label(bytes[8 + i], 8 + i);
  return labels;
}

std::vector<std::uint8_t> encode_idx(const RawImageBatch& batch) {
  const std::size_t d = batch.pixels.cols();
  std::size_t rows = batch.image_rows, cols = batch.image_cols;
  if (rows * cols != d) {
    rows = 1;
    cols = d;
  }
  std::vector<std::uint8_t> out;
  out.reserve(16 + batch.pixels.size());
  put_be32(out, kIdxImageMagic);
  put_be32(out, static_cast<std::uint32_t>(batch.pixels.rows()));
  put_be32(out, static_cast<std::uint32_t>(rows));
  put_be32(out, static_cast<std::uint32_t>(cols));
  for (double v : batch.pixels.values()) out.push_back(to_byte(v, batch.scaled_to_unit));
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(std::span<const int> labels) {
  std::vector<std::uint8_t> out;
  put_be32(out, kIdxLabelMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) {
    if (l < 0 || l > 9) throw InvalidArgument("label outside 0..9");
    out.push_back(static_cast<std::uint8_t>(l));
  }
  return out;
}

RawImageBatch parse_cifar10(std::span<const std::uint8_t> bytes, std::size_t count_limit,
                            bool scale_to_unit) {
  const std::size_t size = bytes.size();
  if (size == 0 || size % kCifarRecord != 0) {
    const std::size_t whole = size / kCifarRecord;
    throw TruncatedInputError("CIFAR-10 batch: expected a multiple of " +
                                  std::to_string(kCifarRecord) + " bytes (" +
                                  std::to_string((whole + 1) * kCifarRecord) + "), actual " +
                                  std::to_string(size),
                              whole * kCifarRecord);
  }
  const std::size_t count = std::min(size / kCifarRecord, count_limit);
  RawImageBatch batch;
  batch.pixels = Matrix(count, kCifarPixels);
  batch.labels.resize(count);
  batch.image_rows = 32;
  batch.image_cols = 32;
  batch.source = DataSource::cifar10;
  batch.scaled_to_unit = scale_to_unit;
  const double s = scale_to_unit ? 1.0 / 255.0 : 1.0;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = i * kCifarRecord;
    batch.labels[i] = checked_label(bytes[at], at);
    auto row = batch.pixels.row(i);
    for (std::size_t j = 0; j < kCifarPixels; ++j) row[j] = bytes[at + 1 + j] * s;
  }
  return batch;
}

std::vector<std::uint8_t> encode_cifar10(const RawImageBatch& batch) {
  if (batch.pixels.cols() != kCifarPixels)
    throw InvalidArgument("CIFAR-10 records need 3072 pixels");
  if (batch.labels.size() != batch.pixels.rows())
    throw InvalidArgument("CIFAR-10 records need one label per image");
  std::vector<std::uint8_t> out;
  out.reserve(batch.pixels.rows() * kCifarRecord);
  for (std::size_t i = 0; i < batch.pixels.rows(); ++i) {
    const int l = batch.labels[i];
    if (l < 0 || l > 9) throw InvalidArgument("label outside 0..9");
    out.push_back(static_cast<std::uint8_t>(l));
    for (double v : batch.pixels.row(i)) out.push_back(to_byte(v, batch.scaled_to_unit));
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error writing " + path.string());
}

RawImageBatch load_idx(const std::filesystem::path& images_path, std::size_t count_limit,
                       bool scale_to_unit) {
  return parse_idx(read_file(images_path), count_limit, scale_to_unit);
}

std::vector<int> load_idx_labels(const std::filesystem::path& labels_path,
                                 std::size_t count_limit) {
  return parse_idx_labels(read_file(labels_path), count_limit);
}

RawImageBatch load_cifar10(const std::filesystem::path& batch_path, std::size_t count_limit,
                           bool scale_to_unit) {
  return parse_cifar10(read_file(batch_path), count_limit, scale_to_unit);
}

Dataset synthetic_dataset(std::span<const double> eigenvalues, std::size_t n, std::uint64_t seed) {
  const std::size_t d = eigenvalues.size();
  if (d < 1) throw InvalidArgument("need at least one eigenvalue");
  if (n < 1) throw InvalidArgument("n must be >= 1");
  for (double l : eigenvalues)
    if (!(l >= 0.0) || !std::isfinite(l)) throw InvalidArgument("eigenvalues must be >= 0");
  std::mt19937_64 rng(seed);
  const Matrix q = random_orthogonal(d, rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> sd(d);
  for (std::size_t j = 0; j < d; ++j) sd[j] = std::sqrt(eigenvalues[j] / static_cast<double>(n));
  Matrix x(n, d);
  std::vector<double> g(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) g[j] = sd[j] * normal(rng);
    auto row = x.row(i);
    for (std::size_t r = 0; r < d; ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += q(r, j) * g[j];
      row[r] = s;
    }
  }
  return Dataset(std::move(x), DataSource::synthetic);
}

Dataset exact_spectrum_dataset(std::span<const double> eigenvalues, std::uint64_t seed) {
  const std::size_t d = eigenvalues.size();
  if (d < 1) throw InvalidArgument("need at least one eigenvalue");
  for (double l : eigenvalues)
    if (!(l >= 0.0) || !std::isfinite(l)) throw InvalidArgument("eigenvalues must be >= 0");
  Matrix q = Matrix::identity(d);
  if (seed != 0) {
    std::mt19937_64 rng(seed);
    q = random_orthogonal(d, rng);
  }
  Matrix x(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    const double s = std::sqrt(eigenvalues[j]);
    for (std::size_t r = 0; r < d; ++r) x(j, r) = s * q(r, j);
  }
  return Dataset(std::move(x), DataSource::synthetic);
}

namespace {

Matrix preprocess_matrix(Matrix x, const PreprocessOptions& options) {
  const std::size_t n = x.rows(), d = x.cols();
  if (options.center && n > 0) {
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j);
    for (double& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) x(i, j) -= mean[j];
  }
  if (options.scale) {
    const double m = max_abs(x);
    if (m > 0.0) x *= 1.0 / m;
  }
  return x;
}

}  // namespace

Dataset preprocess(const RawImageBatch& batch, const PreprocessOptions& options) {
  return Dataset(preprocess_matrix(batch.pixels, options), batch.source);
}

Dataset preprocess(const Dataset& dataset, const PreprocessOptions& options) {
  return Dataset(preprocess_matrix(dataset.samples(), options), dataset.source());
}

void write_matrix_binary(const std::filesystem::path& path, const Matrix& m) {
  if (m.rows() > UINT32_MAX || m.cols() > UINT32_MAX)
    throw InvalidArgument("matrix too large for the cache header");
  std::vector<std::uint8_t> out;
  out.reserve(8 + 8 * m.size());
  auto put_le32 = [&](std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  };
  put_le32(static_cast<std::uint32_t>(m.rows()));
  put_le32(static_cast<std::uint32_t>(m.cols()));
  for (double v : m.values()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
  }
  write_file(path, out);
}

Matrix read_matrix_binary(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> b = read_file(path);
  if (b.size() < 8) throw TruncatedInputError("matrix cache: header ends early", b.size());
  auto le32 = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t{b[at + k]} << (8 * k);
    return v;
  };
  const std::uint64_t rows = le32(0), cols = le32(4);
  const std::uint64_t need = 8 + 8 * rows * cols;
  if (b.size() != need)
    throw TruncatedInputError("matrix cache: expected " + std::to_string(need) + " bytes, actual " +
                                  std::to_string(b.size()),
                              std::min<std::uint64_t>(b.size(), need));
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= std::uint64_t{b[8 + 8 * i + k]} << (8 * k);
    m.data()[i] = std::bit_cast<double>(bits);
  }
  return m;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << csv::number(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("error writing " + path.string());
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  const char* const begin = reinterpret_cast<const char*>(bytes.data());
  const char* const end = begin + bytes.size();
  std::vector<double> values;
  std::size_t cols = 0, rows = 0;
  const char* p = begin;
  while (p < end) {
    const char* line_end = std::find(p, end, '\n');
    const char* q = p;
    std::size_t in_row = 0;
    while (q < line_end && (*q == ' ' || *q == '\r')) ++q;
    if (q == line_end) {  // blank line
      p = line_end + (line_end < end);
      continue;
    }
    while (q < line_end) {
      while (q < line_end && *q == ' ') ++q;
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(q, line_end, v);
      if (ec != std::errc())
        throw ParseError("csv: expected a number", static_cast<std::uint64_t>(q - begin));
      values.push_back(v);
      ++in_row;
      q = ptr;
      while (q < line_end && (*q == ' ' || *q == '\r')) ++q;
      if (q < line_end) {
        if (*q != ',')
          throw ParseError("csv: expected ','", static_cast<std::uint64_t>(q - begin));
        ++q;
      }
    }
    if (rows == 0) cols = in_row;
    if (in_row != cols)
      throw ParseError("csv: row " + std::to_string(rows + 1) + " has " + std::to_string(in_row) +
                           " fields, expected " + std::to_string(cols),
                       static_cast<std::uint64_t>(p - begin));
    ++rows;
    p = line_end + (line_end < end);
  }
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

Dataset load_dataset(const std::filesystem::path& path, std::size_t count_limit,
                     const PreprocessOptions& options) {
  const std::string ext = path.extension().string();
  auto limited = [&](Matrix m) {
    if (m.rows() > count_limit) {
      Matrix cut(count_limit, m.cols());
      std::copy(m.data(), m.data() + cut.size(), cut.data());
      m = std::move(cut);
    }
    return preprocess(Dataset(std::move(m), DataSource::file), options);
  };
  if (ext == ".csv") return limited(read_matrix_csv(path));
  if (ext == ".f64") return limited(read_matrix_binary(path));
  const std::vector<std::uint8_t> bytes = read_file(path);
  if (bytes.size() >= 4 && read_be32(bytes, 0) == kIdxImageMagic)
    return preprocess(parse_idx(bytes, count_limit), options);
  if (ext == ".bin") return preprocess(parse_cifar10(bytes, count_limit), options);
  throw ParseError("unrecognized dataset format in " + path.string(), 0);
}

}  // namespace lindyn
