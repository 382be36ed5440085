#pragma once

// Dataset ingestion: MNIST IDX and CIFAR-10 binary batches, synthetic data
// with a prescribed covariance spectrum, preprocessing, and a small matrix
// cache format.
//
// Cache format (".f64"): little-endian uint32 rows, uint32 cols, then
// rows*cols little-endian IEEE-754 doubles in row-major order. CSV caches are
// plain comma-separated rows without a header.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include "lindyn/dataset.hpp"
#include "lindyn/matrix.hpp"

namespace lindyn {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr std::size_t kCifarPixels = 3072;
inline constexpr std::size_t kCifarRecord = kCifarPixels + 1;
inline constexpr std::size_t kNoLimit = std::numeric_limits<std::size_t>::max();

struct RawImageBatch {
  /// N x D, bytes divided by 255 unless parsed with scale_to_unit = false.
  Matrix pixels;
  /// One label per row, empty when the source has none.
  std::vector<int> labels;
  std::size_t image_rows = 0;
  std::size_t image_cols = 0;
  DataSource source = DataSource::file;
  bool scaled_to_unit = true;
};

/// IDX unsigned-byte rank-3 image tensor. Errors carry the byte offset.
RawImageBatch parse_idx(std::span<const std::uint8_t> bytes, std::size_t count_limit = kNoLimit,
                        bool scale_to_unit = true);
RawImageBatch load_idx(const std::filesystem::path& images_path,
                       std::size_t count_limit = kNoLimit, bool scale_to_unit = true);
std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes,
                                  std::size_t count_limit = kNoLimit);
std::vector<int> load_idx_labels(const std::filesystem::path& labels_path,
                                 std::size_t count_limit = kNoLimit);
/// Inverse of parse_idx. Pixels are mapped back to bytes.
std::vector<std::uint8_t> encode_idx(const RawImageBatch& batch);
std::vector<std::uint8_t> encode_idx_labels(std::span<const int> labels);

/// Consecutive 3073-byte records: label byte, then R, G and B planes.
RawImageBatch parse_cifar10(std::span<const std::uint8_t> bytes,
                            std::size_t count_limit = kNoLimit, bool scale_to_unit = true);
RawImageBatch load_cifar10(const std::filesystem::path& batch_path,
                           std::size_t count_limit = kNoLimit, bool scale_to_unit = true);
std::vector<std::uint8_t> encode_cifar10(const RawImageBatch& batch);

/// Rows iid N(0, diag(lambda) / n) rotated by a seeded random orthogonal
/// matrix, so the expected unnormalized covariance has eigenvalues lambda.
Dataset synthetic_dataset(std::span<const double> eigenvalues, std::size_t n, std::uint64_t seed);

/// D samples whose unnormalized covariance is Q diag(lambda) Q^T up to
/// roundoff, with Q seeded random orthogonal (identity when seed is 0).
Dataset exact_spectrum_dataset(std::span<const double> eigenvalues, std::uint64_t seed);

struct PreprocessOptions {
  /// Subtract each feature's mean.
  bool center = false;
  /// Divide everything by the largest absolute entry (after centering).
  bool scale = false;
};

Dataset preprocess(const RawImageBatch& batch, const PreprocessOptions& options = {});
Dataset preprocess(const Dataset& dataset, const PreprocessOptions& options);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

void write_matrix_binary(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_binary(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& path);

/// Loads by content: IDX magic, CIFAR record size (".bin"), ".f64" cache or
/// ".csv". count_limit applies to the image formats and caches alike.
Dataset load_dataset(const std::filesystem::path& path, std::size_t count_limit = kNoLimit,
                     const PreprocessOptions& options = {});

}  // namespace lindyn
