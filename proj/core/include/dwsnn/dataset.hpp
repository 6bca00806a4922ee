#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace dwsnn {

// Labeled image set; pixels normalized to [0,1] for processing. IDX files
// store 8-bit intensities, so a loaded set round-trips exactly through
// save_idx_files/load_idx_files.
struct ImageSet {
  std::size_t rows = 28;
  std::size_t cols = 28;
  std::vector<float> pixels;  // size() * rows * cols, row-major per image
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t pixel_count() const { return rows * cols; }
  const float* image(std::size_t i) const {
    return pixels.data() + i * pixel_count();
  }
};

// Parses the IDX pair: images with big-endian magic 0x00000803 and three
// dimensions, labels with magic 0x00000801 and one dimension. Intensities
// are normalized by 1/255.
ImageSet load_idx(const std::vector<std::uint8_t>& image_bytes,
                  const std::vector<std::uint8_t>& label_bytes);

// File variant; transparently handles gzip-compressed files.
ImageSet load_idx_files(const std::string& image_path,
                        const std::string& label_path);

// Writes raw (uncompressed) IDX files.
void save_idx_files(const ImageSet& set, const std::string& image_path,
                    const std::string& label_path);

struct NoiseSpec {
  double sigma = 0.0;  // standard deviation in normalized-intensity units
};

// x' = clamp(x + eps, 0, 1) with eps ~ Normal(0, sigma^2) i.i.d. per pixel
// from counter-derived streams; sigma = 0 is the identity. Labels unchanged.
ImageSet add_noise(const ImageSet& set, const NoiseSpec& spec,
                   std::uint64_t seed);

// Deterministic shuffled split by seeded permutation; disjoint and
// exhaustive. Returns (train, val) with round(val_fraction * n) validation
// images.
std::pair<ImageSet, ImageSet> split(const ImageSet& set, double val_fraction,
                                    std::uint64_t seed);

// First `count` images (whole set when count >= size).
ImageSet subset(const ImageSet& set, std::size_t count);

}  // namespace dwsnn
