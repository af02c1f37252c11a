#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dagm/types.hpp"

namespace dagm {

/// Unsigned-byte IDX tensor (the MNIST container format).
struct IdxTensor {
  static constexpr std::uint32_t kLabelMagic = 0x00000801;  // 1-D labels
  static constexpr std::uint32_t kImageMagic = 0x00000803;  // 3-D images

  std::uint32_t magic = 0;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;

  std::size_t element_count() const;
};

/// Parses an IDX byte stream. Header is big-endian: magic, then one 32-bit
/// size per dimension, then the payload. Throws ParseError naming the byte
/// offset on a bad magic, short header, oversize dimensions, or a truncated
/// or over-long payload.
IdxTensor parse_idx(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> serialize_idx(const IdxTensor& tensor);
IdxTensor read_idx_file(const std::filesystem::path& path);
void write_idx_file(const std::filesystem::path& path, const IdxTensor& tensor);

/// Binary classification data. Each feature row holds pixel intensities in
/// [0,1] followed by a constant bias column of 1.
struct LabeledDataset {
  Matrix features;
  Vector labels;  // entries 0 or 1
  std::string source;

  Eigen::Index rows() const noexcept { return features.rows(); }
};

struct ShardedDataset {
  std::vector<LabeledDataset> shards;
  int count() const noexcept { return static_cast<int>(shards.size()); }
};

inline constexpr std::size_t kNoCap = std::numeric_limits<std::size_t>::max();

struct BinaryDigitOptions {
  int positive_digit = 5;
  int negative_digit = 1;
  std::size_t cap = kNoCap;
  std::uint64_t seed = 0;
};

/// Keeps the rows labelled with either digit, maps positive -> 1 and
/// negative -> 0, scales pixels by 1/255 and appends the bias column. When
/// more rows than `cap` survive, a seeded shuffle selects which ones are kept
/// (kept rows retain their original order).
LabeledDataset build_binary_dataset(const IdxTensor& images, const IdxTensor& labels,
                                    const BinaryDigitOptions& options = {});

/// Reads train-images-idx3-ubyte / train-labels-idx1-ubyte from `directory`.
LabeledDataset load_mnist_binary(const std::filesystem::path& directory, const BinaryDigitOptions& options = {});
bool mnist_files_present(const std::filesystem::path& directory);

/// Two Gaussian classes in [0,1]^features (clipped), plus the bias column.
/// Labels alternate 0,1,0,1,...
LabeledDataset make_gaussian_dataset(std::size_t samples, int features, double separation, std::uint64_t seed);

/// Splits the dataset into m contiguous shards after a seeded shuffle of the
/// row order. Sizes are ceil(n/m) for the first n mod m shards and floor(n/m)
/// for the rest. `shuffle = false` keeps the original row order.
ShardedDataset shard(const LabeledDataset& dataset, int agents, std::uint64_t seed = 0, bool shuffle = true);

}  // namespace dagm
