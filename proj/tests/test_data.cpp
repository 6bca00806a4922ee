#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "dwsnn/dataset.hpp"
#include "dwsnn/encoding.hpp"
#include "dwsnn/error.hpp"
#include "dwsnn/rng.hpp"

using namespace dwsnn;

namespace {

void push_be32(std::vector<std::uint8_t>& v, std::uint32_t x) {
  v.push_back(x >> 24);
  v.push_back(x >> 16);
  v.push_back(x >> 8);
  v.push_back(x);
}

std::vector<std::uint8_t> idx_images(std::uint32_t n, std::uint8_t fill) {
  std::vector<std::uint8_t> bytes;
  push_be32(bytes, 0x00000803u);
  push_be32(bytes, n);
  push_be32(bytes, 28);
  push_be32(bytes, 28);
  bytes.insert(bytes.end(), n * 784, fill);
  return bytes;
}

std::vector<std::uint8_t> idx_labels(const std::vector<std::uint8_t>& labels) {
  std::vector<std::uint8_t> bytes;
  push_be32(bytes, 0x00000801u);
  push_be32(bytes, static_cast<std::uint32_t>(labels.size()));
  bytes.insert(bytes.end(), labels.begin(), labels.end());
  return bytes;
}

}  // namespace

TEST_CASE("idx loader parses a hand-crafted all-ones image") {
  const ImageSet set = load_idx(idx_images(1, 255), idx_labels({3}));
  REQUIRE(set.size() == 1);
  CHECK(set.rows == 28);
  CHECK(set.cols == 28);
  CHECK(set.labels[0] == 3);
  for (std::size_t i = 0; i < 784; ++i) CHECK(set.pixels[i] == 1.0f);
}

TEST_CASE("idx loader rejects bad magic, truncation and count mismatch") {
  auto images = idx_images(1, 7);
  auto labels = idx_labels({1});
  SUBCASE("wrong image magic") {
    images[3] = 0x02;
    CHECK_THROWS_WITH_AS(load_idx(images, labels), doctest::Contains("format"),
                         Error);
  }
  SUBCASE("wrong label magic") {
    labels[3] = 0x03;
    CHECK_THROWS_WITH_AS(load_idx(images, labels), doctest::Contains("format"),
                         Error);
  }
  SUBCASE("truncated payload") {
    images.resize(images.size() - 10);
    CHECK_THROWS_WITH_AS(load_idx(images, labels), doctest::Contains("length"),
                         Error);
  }
  SUBCASE("count mismatch") {
    auto two_labels = idx_labels({1, 2});
    CHECK_THROWS_WITH_AS(load_idx(images, two_labels),
                         doctest::Contains("consistency"), Error);
  }
}

TEST_CASE("idx files round-trip exactly") {
  ImageSet set;
  set.rows = set.cols = 28;
  RngStream rng(555);
  const std::size_t n = 17;
  set.pixels.resize(n * 784);
  for (auto& p : set.pixels)
    p = static_cast<float>(rng.next_below(256)) / 255.0f;
  for (std::size_t i = 0; i < n; ++i)
    set.labels.push_back(static_cast<std::uint8_t>(rng.next_below(10)));

  const auto dir = std::filesystem::temp_directory_path() / "dwsnn_idx_test";
  std::filesystem::create_directories(dir);
  const std::string img = (dir / "images-idx3-ubyte").string();
  const std::string lab = (dir / "labels-idx1-ubyte").string();
  save_idx_files(set, img, lab);
  const ImageSet loaded = load_idx_files(img, lab);
  REQUIRE(loaded.size() == set.size());
  CHECK(loaded.pixels == set.pixels);
  CHECK(loaded.labels == set.labels);
  std::filesystem::remove_all(dir);
}

TEST_CASE("zero-sigma noise is the identity") {
  ImageSet set;
  set.rows = set.cols = 2;
  set.pixels = {0.1f, 0.5f, 0.9f, 1.0f};
  set.labels = {0};
  const ImageSet out = add_noise(set, NoiseSpec{0.0}, 31);
  CHECK(out.pixels == set.pixels);
  CHECK(out.labels == set.labels);
}

TEST_CASE("noisy pixels stay inside the unit interval") {
  ImageSet set;
  set.rows = set.cols = 4;
  set.pixels.assign(16 * 32, 0.5f);
  set.labels.assign(32, 1);
  const ImageSet out = add_noise(set, NoiseSpec{3.0}, 8);
  for (float p : out.pixels) {
    CHECK(p >= 0.0f);
    CHECK(p <= 1.0f);
  }
  CHECK_THROWS_AS(add_noise(set, NoiseSpec{-0.5}, 8), Error);
}

TEST_CASE("small-sigma noise keeps the empirical mean") {
  ImageSet set;
  set.rows = 28;
  set.cols = 28;
  const std::size_t n = 1276;  // ~1e6 pixels
  set.pixels.assign(n * 784, 0.5f);
  set.labels.assign(n, 0);
  const ImageSet out = add_noise(set, NoiseSpec{0.1}, 99);
  double mean = 0.0;
  for (float p : out.pixels) mean += p;
  mean /= static_cast<double>(out.pixels.size());
  CHECK(std::abs(mean - 0.5) < 0.001);
}

TEST_CASE("poisson encoding of extreme intensities") {
  ImageSet set;
  set.rows = 1;
  set.cols = 2;
  set.pixels = {0.0f, 1.0f};
  set.labels = {0};
  const SpikeBatch batch = poisson_encode(set, 50, 7);
  for (std::size_t t = 0; t < 50; ++t) {
    CHECK(batch.at(t, 0, 0) == 0);  // dark pixel never spikes
    CHECK(batch.at(t, 0, 1) == 1);  // brightest pixel spikes every step
  }
  CHECK(batch.timestep_period == doctest::Approx(1e-7));
}

TEST_CASE("poisson encoding spike count concentrates at the intensity") {
  ImageSet set;
  set.rows = 1;
  set.cols = 1;
  set.pixels = {0.5f};
  set.labels = {0};
  const SpikeBatch batch = poisson_encode(set, 10000, 2025);
  long count = 0;
  for (std::size_t t = 0; t < 10000; ++t) count += batch.at(t, 0, 0);
  CHECK(count >= 4850);
  CHECK(count <= 5150);
}

TEST_CASE("poisson encoding is unbiased per pixel") {
  ImageSet set;
  set.rows = 1;
  set.cols = 8;
  set.pixels = {0.05f, 0.2f, 0.35f, 0.5f, 0.65f, 0.8f, 0.95f, 0.999f};
  set.labels = {0};
  const std::size_t T = 20000;
  const SpikeBatch batch = poisson_encode(set, static_cast<int>(T), 4);
  for (std::size_t f = 0; f < 8; ++f) {
    double rate = 0.0;
    for (std::size_t t = 0; t < T; ++t) rate += batch.at(t, 0, f);
    rate /= static_cast<double>(T);
    const double p = set.pixels[f];
    const double bound = 3.0 * std::sqrt(p * (1 - p) / static_cast<double>(T));
    CHECK(std::abs(rate - p) <= bound);
  }
}

TEST_CASE("poisson encoding is independent of batch partitioning") {
  ImageSet set;
  set.rows = 2;
  set.cols = 2;
  RngStream rng(3);
  set.pixels.resize(10 * 4);
  for (auto& p : set.pixels) p = static_cast<float>(rng.next_double());
  set.labels.assign(10, 0);

  const SpikeBatch whole = poisson_encode(set, 0, 10, 6, 77, 0);
  const SpikeBatch head = poisson_encode(set, 0, 4, 6, 77, 0);
  const SpikeBatch tail = poisson_encode(set, 4, 10, 6, 77, 4);
  for (std::size_t t = 0; t < 6; ++t) {
    for (std::size_t b = 0; b < 10; ++b)
      for (std::size_t f = 0; f < 4; ++f) {
        const std::uint8_t expected =
            b < 4 ? head.at(t, b, f) : tail.at(t, b - 4, f);
        CHECK(whole.at(t, b, f) == expected);
      }
  }
}

TEST_CASE("split is deterministic, disjoint and exhaustive") {
  ImageSet set;
  set.rows = 1;
  set.cols = 1;
  for (int i = 0; i < 100; ++i) {
    set.pixels.push_back(static_cast<float>(i) / 255.0f);
    set.labels.push_back(static_cast<std::uint8_t>(i % 10));
  }
  const auto [train_a, val_a] = split(set, 0.1, 12);
  const auto [train_b, val_b] = split(set, 0.1, 12);
  CHECK(train_a.size() == 90);
  CHECK(val_a.size() == 10);
  CHECK(train_a.pixels == train_b.pixels);
  CHECK(val_a.pixels == val_b.pixels);

  // union reproduces the multiset of pixel ids
  std::vector<int> seen(100, 0);
  for (float p : train_a.pixels) seen[static_cast<int>(std::lround(p * 255))]++;
  for (float p : val_a.pixels) seen[static_cast<int>(std::lround(p * 255))]++;
  for (int c : seen) CHECK(c == 1);

  const auto [train_c, val_c] = split(set, 0.1, 13);
  CHECK(train_c.pixels != train_a.pixels);  // different seed, different split

  CHECK_THROWS_AS(split(set, 0.0, 1), Error);
  CHECK_THROWS_AS(split(set, 1.0, 1), Error);
}
