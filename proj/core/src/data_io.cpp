#include "dagm/data_io.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "dagm/error.hpp"

namespace dagm {

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::size_t expected_rank(std::uint32_t magic) {
  switch (magic) {
    case IdxTensor::kLabelMagic: return 1;
    case IdxTensor::kImageMagic: return 3;
    default: return 0;
  }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::size_t IdxTensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

IdxTensor parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw ParseError("IDX header too short for magic number", bytes.size());
  IdxTensor t;
  t.magic = read_be32(bytes, 0);
  const std::size_t rank = expected_rank(t.magic);
  if (rank == 0) throw ParseError(fmt::format("unsupported IDX magic 0x{:08x}", t.magic), 0);

  const std::size_t header = 4 + 4 * rank;
  std::size_t count = 1;
  for (std::size_t k = 0; k < rank; ++k) {
    const std::size_t offset = 4 + 4 * k;
    if (bytes.size() < offset + 4) throw ParseError("IDX header truncated in dimension list", bytes.size());
    const std::uint32_t dim = read_be32(bytes, offset);
    if (dim != 0 && count > std::numeric_limits<std::size_t>::max() / dim) {
      throw ParseError("IDX dimensions overflow", offset);
    }
    count *= dim;
    t.dims.push_back(dim);
  }
  const std::size_t available = bytes.size() - header;
  if (available < count) {
    throw ParseError(fmt::format("IDX payload truncated: declared {} bytes, found {}", count, available),
                     header + available);
  }
  if (available > count) {
    throw ParseError(fmt::format("IDX payload has {} trailing bytes", available - count), header + count);
  }
  t.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return t;
}

std::vector<std::uint8_t> serialize_idx(const IdxTensor& tensor) {
  const std::size_t rank = expected_rank(tensor.magic);
  if (rank == 0 || tensor.dims.size() != rank) throw InvalidArgument("IDX tensor has inconsistent magic and rank");
  if (tensor.data.size() != tensor.element_count()) throw InvalidArgument("IDX payload size does not match dims");
  std::vector<std::uint8_t> out;
  out.reserve(4 + 4 * rank + tensor.data.size());
  write_be32(out, tensor.magic);
  for (auto d : tensor.dims) write_be32(out, d);
  out.insert(out.end(), tensor.data.begin(), tensor.data.end());
  return out;
}

IdxTensor read_idx_file(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_idx(bytes);
}

void write_idx_file(const std::filesystem::path& path, const IdxTensor& tensor) {
  const auto bytes = serialize_idx(tensor);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

LabeledDataset build_binary_dataset(const IdxTensor& images, const IdxTensor& labels,
                                    const BinaryDigitOptions& options) {
  if (images.magic != IdxTensor::kImageMagic || labels.magic != IdxTensor::kLabelMagic) {
    throw InvalidArgument("expected an image tensor and a label tensor");
  }
  if (images.dims[0] != labels.dims[0]) throw DimensionError("image and label counts differ");
  if (options.positive_digit == options.negative_digit) throw InvalidArgument("digits must be distinct");

  std::vector<std::size_t> kept;
  bool saw_positive = false;
  bool saw_negative = false;
  for (std::size_t n = 0; n < labels.data.size(); ++n) {
    const int digit = labels.data[n];
    if (digit == options.positive_digit) saw_positive = true;
    if (digit == options.negative_digit) saw_negative = true;
    if (digit == options.positive_digit || digit == options.negative_digit) kept.push_back(n);
  }
  if (!saw_positive || !saw_negative) {
    throw InvalidArgument(fmt::format("digit {} absent from labels", saw_positive ? options.negative_digit
                                                                                   : options.positive_digit));
  }
  if (kept.size() > options.cap) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(kept.begin(), kept.end(), rng);
    kept.resize(options.cap);
    std::sort(kept.begin(), kept.end());
  }

  const std::size_t pixels = static_cast<std::size_t>(images.dims[1]) * images.dims[2];
  LabeledDataset ds;
  ds.features.resize(static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(pixels + 1));
  ds.labels.resize(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t r = 0; r < kept.size(); ++r) {
    const std::size_t n = kept[r];
    const auto row = static_cast<Eigen::Index>(r);
    for (std::size_t p = 0; p < pixels; ++p) {
      ds.features(row, static_cast<Eigen::Index>(p)) = images.data[n * pixels + p] / 255.0;
    }
    ds.features(row, static_cast<Eigen::Index>(pixels)) = 1.0;
    ds.labels(row) = labels.data[n] == options.positive_digit ? 1.0 : 0.0;
  }
  ds.source = fmt::format("idx digits {}(1) vs {}(0), {} rows", options.positive_digit, options.negative_digit,
                          kept.size());
  return ds;
}

bool mnist_files_present(const std::filesystem::path& directory) {
  return std::filesystem::exists(directory / "train-images-idx3-ubyte") &&
         std::filesystem::exists(directory / "train-labels-idx1-ubyte");
}

LabeledDataset load_mnist_binary(const std::filesystem::path& directory, const BinaryDigitOptions& options) {
  const auto images = read_idx_file(directory / "train-images-idx3-ubyte");
  const auto labels = read_idx_file(directory / "train-labels-idx1-ubyte");
  auto ds = build_binary_dataset(images, labels, options);
  ds.source = "mnist:" + directory.string() + " " + ds.source;
  return ds;
}

LabeledDataset make_gaussian_dataset(std::size_t samples, int features, double separation, std::uint64_t seed) {
  if (samples < 2 || features < 1) throw InvalidArgument("gaussian dataset needs >= 2 samples and >= 1 feature");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.15);
  Vector direction(features);
  for (int j = 0; j < features; ++j) direction(j) = unit(rng);
  direction /= direction.norm();

  LabeledDataset ds;
  ds.features.resize(static_cast<Eigen::Index>(samples), features + 1);
  ds.labels.resize(static_cast<Eigen::Index>(samples));
  for (std::size_t n = 0; n < samples; ++n) {
    const auto row = static_cast<Eigen::Index>(n);
    const double label = static_cast<double>(n % 2);
    const double side = label == 1.0 ? 0.5 : -0.5;
    for (int j = 0; j < features; ++j) {
      const double v = 0.5 + side * separation * direction(j) + noise(rng);
      ds.features(row, j) = std::clamp(v, 0.0, 1.0);
    }
    ds.features(row, features) = 1.0;
    ds.labels(row) = label;
  }
  ds.source = fmt::format("gaussian n={} p={} sep={} seed={}", samples, features, separation, seed);
  return ds;
}

ShardedDataset shard(const LabeledDataset& dataset, int agents, std::uint64_t seed, bool shuffle) {
  if (agents < 1) throw InvalidArgument("need at least one shard");
  const auto n = static_cast<std::size_t>(dataset.rows());
  if (n < static_cast<std::size_t>(agents)) {
    throw InvalidArgument(fmt::format("too few samples ({}) for {} shards", n, agents));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) {
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  ShardedDataset out;
  const std::size_t base = n / static_cast<std::size_t>(agents);
  const std::size_t extra = n % static_cast<std::size_t>(agents);
  std::size_t cursor = 0;
  for (std::size_t s = 0; s < static_cast<std::size_t>(agents); ++s) {
    const std::size_t size = base + (s < extra ? 1 : 0);
    LabeledDataset part;
    part.features.resize(static_cast<Eigen::Index>(size), dataset.features.cols());
    part.labels.resize(static_cast<Eigen::Index>(size));
    for (std::size_t r = 0; r < size; ++r) {
      const auto src = static_cast<Eigen::Index>(order[cursor + r]);
      part.features.row(static_cast<Eigen::Index>(r)) = dataset.features.row(src);
      part.labels(static_cast<Eigen::Index>(r)) = dataset.labels(src);
    }
    part.source = fmt::format("{} [shard {}/{}]", dataset.source, s, agents);
    cursor += size;
    out.shards.push_back(std::move(part));
  }
  return out;
}

}  // namespace dagm
