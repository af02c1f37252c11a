#include <doctest.h>

#include <filesystem>
#include <numeric>

#include "dagm/data_io.hpp"
#include "dagm/error.hpp"

namespace {

dagm::IdxTensor tiny_images() {
  dagm::IdxTensor t;
  t.magic = dagm::IdxTensor::kImageMagic;
  t.dims = {6, 2, 2};
  for (int n = 0; n < 6; ++n)
    for (int p = 0; p < 4; ++p) t.data.push_back(static_cast<std::uint8_t>(n * 40 + p));
  return t;
}

dagm::IdxTensor tiny_labels() {
  dagm::IdxTensor t;
  t.magic = dagm::IdxTensor::kLabelMagic;
  t.dims = {6};
  t.data = {5, 1, 7, 5, 1, 1};
  return t;
}

}  // namespace

TEST_CASE("IDX header is big-endian") {
  const std::vector<std::uint8_t> bytes = {0, 0, 8, 1, 0, 0, 0, 3, 9, 8, 7};
  const auto t = dagm::parse_idx(bytes);
  CHECK(t.magic == 0x801u);
  CHECK(t.dims == std::vector<std::uint32_t>{3});
  CHECK(t.data == std::vector<std::uint8_t>{9, 8, 7});
  CHECK(dagm::serialize_idx(t) == bytes);
}

TEST_CASE("IDX errors name the byte offset") {
  const auto expect_offset = [](std::vector<std::uint8_t> bytes, std::size_t offset) {
    try {
      dagm::parse_idx(bytes);
      FAIL("expected ParseError");
    } catch (const dagm::ParseError& e) {
      CHECK(e.offset() == offset);
    }
  };
  expect_offset({0, 0}, 2);                               // short magic
  expect_offset({0, 0, 9, 1, 0, 0, 0, 1, 0}, 0);          // wrong type code
  expect_offset({0, 0, 8, 3, 0, 0, 0, 2, 0, 0}, 10);      // truncated dimension list
  expect_offset({0, 0, 8, 1, 0, 0, 0, 4, 1, 2}, 10);      // truncated payload
  expect_offset({0, 0, 8, 1, 0, 0, 0, 1, 1, 2}, 9);       // trailing bytes
}

TEST_CASE("IDX file round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "dagm_idx_test";
  std::filesystem::create_directories(dir);
  dagm::write_idx_file(dir / "train-images-idx3-ubyte", tiny_images());
  dagm::write_idx_file(dir / "train-labels-idx1-ubyte", tiny_labels());
  CHECK(dagm::mnist_files_present(dir));
  const auto back = dagm::read_idx_file(dir / "train-images-idx3-ubyte");
  CHECK(back.dims == tiny_images().dims);
  CHECK(back.data == tiny_images().data);

  const auto ds = dagm::load_mnist_binary(dir, {5, 1, dagm::kNoCap, 0});
  CHECK(ds.rows() == 5);
  CHECK(ds.features.cols() == 5);
  std::filesystem::remove_all(dir);
  CHECK_FALSE(dagm::mnist_files_present(dir));
  CHECK_THROWS_AS(dagm::read_idx_file(dir / "missing"), dagm::Error);
}

TEST_CASE("binary digit extraction") {
  const auto ds = dagm::build_binary_dataset(tiny_images(), tiny_labels(), {5, 1, dagm::kNoCap, 0});
  REQUIRE(ds.rows() == 5);  // the 7 is dropped
  CHECK(ds.labels(0) == 1.0);
  CHECK(ds.labels(1) == 0.0);
  CHECK(ds.features(0, 4) == 1.0);             // bias
  CHECK(ds.features(1, 1) == doctest::Approx(41.0 / 255.0));
  CHECK(ds.features(2, 0) == doctest::Approx(120.0 / 255.0));  // original row 3

  const auto capped = dagm::build_binary_dataset(tiny_images(), tiny_labels(), {5, 1, 3, 9});
  CHECK(capped.rows() == 3);
  CHECK_THROWS_AS(dagm::build_binary_dataset(tiny_images(), tiny_labels(), {5, 3, dagm::kNoCap, 0}),
                  dagm::InvalidArgument);
  CHECK_THROWS_AS(dagm::build_binary_dataset(tiny_images(), tiny_labels(), {5, 5, dagm::kNoCap, 0}),
                  dagm::InvalidArgument);
}

TEST_CASE("sharding sizes and determinism") {
  const auto ds = dagm::make_gaussian_dataset(23, 3, 1.0, 5);
  CHECK(ds.features.cols() == 4);
  CHECK(ds.features.leftCols(3).minCoeff() >= 0.0);
  CHECK(ds.features.leftCols(3).maxCoeff() <= 1.0);
  const auto a = dagm::shard(ds, 5, 2);
  const auto b = dagm::shard(ds, 5, 2);
  std::vector<Eigen::Index> sizes;
  for (const auto& s : a.shards) sizes.push_back(s.rows());
  CHECK(sizes == std::vector<Eigen::Index>{5, 5, 5, 4, 4});
  for (int i = 0; i < 5; ++i) CHECK(a.shards[i].features == b.shards[i].features);

  const auto ordered = dagm::shard(ds, 5, 0, false);
  CHECK(ordered.shards[1].features.row(0) == ds.features.row(5));
  // All rows accounted for.
  double total = 0.0;
  for (const auto& s : a.shards) total += s.labels.sum();
  CHECK(total == ds.labels.sum());
  CHECK_THROWS_AS(dagm::shard(ds, 30, 0), dagm::InvalidArgument);
}
