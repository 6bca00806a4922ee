#include "dwsnn/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dwsnn/error.hpp"
#include "dwsnn/rng.hpp"

namespace dwsnn {

namespace {

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes,
                        std::size_t offset) {
  if (offset + 4 > bytes.size())
    throw Error(ErrorClass::Data, "length: truncated IDX header");
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
         (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[offset + 3]);
}

void write_be32(std::vector<std::uint8_t>& bytes, std::uint32_t v) {
  bytes.push_back(static_cast<std::uint8_t>(v >> 24));
  bytes.push_back(static_cast<std::uint8_t>(v >> 16));
  bytes.push_back(static_cast<std::uint8_t>(v >> 8));
  bytes.push_back(static_cast<std::uint8_t>(v));
}

// gzread handles both gzip-compressed and plain files.
std::vector<std::uint8_t> read_file_maybe_gz(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr)
    throw Error(ErrorClass::Io, "cannot open " + path);
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 16];
  int n = 0;
  while ((n = gzread(f, buf, sizeof(buf))) > 0)
    out.insert(out.end(), buf, buf + n);
  const bool failed = n < 0;
  gzclose(f);
  if (failed) throw Error(ErrorClass::Io, "failed reading " + path);
  return out;
}

}  // namespace

ImageSet load_idx(const std::vector<std::uint8_t>& image_bytes,
                  const std::vector<std::uint8_t>& label_bytes) {
  const std::uint32_t image_magic = read_be32(image_bytes, 0);
  if (image_magic != 0x00000803u)
    throw Error(ErrorClass::Data, "format: bad IDX image magic");
  const std::size_t n = read_be32(image_bytes, 4);
  const std::size_t rows = read_be32(image_bytes, 8);
  const std::size_t cols = read_be32(image_bytes, 12);
  const std::size_t payload = n * rows * cols;
  if (image_bytes.size() < 16 + payload)
    throw Error(ErrorClass::Data, "length: truncated IDX image payload");

  const std::uint32_t label_magic = read_be32(label_bytes, 0);
  if (label_magic != 0x00000801u)
    throw Error(ErrorClass::Data, "format: bad IDX label magic");
  const std::size_t n_labels = read_be32(label_bytes, 4);
  if (label_bytes.size() < 8 + n_labels)
    throw Error(ErrorClass::Data, "length: truncated IDX label payload");
  if (n_labels != n)
    throw Error(ErrorClass::Data, "consistency: image/label count mismatch");

  ImageSet set;
  set.rows = rows;
  set.cols = cols;
  set.pixels.resize(payload);
  for (std::size_t i = 0; i < payload; ++i)
    set.pixels[i] = static_cast<float>(image_bytes[16 + i]) / 255.0f;
  set.labels.assign(label_bytes.begin() + 8, label_bytes.begin() + 8 + n_labels);
  return set;
}

ImageSet load_idx_files(const std::string& image_path,
                        const std::string& label_path) {
  return load_idx(read_file_maybe_gz(image_path),
                  read_file_maybe_gz(label_path));
}

void save_idx_files(const ImageSet& set, const std::string& image_path,
                    const std::string& label_path) {
  std::vector<std::uint8_t> images;
  images.reserve(16 + set.pixels.size());
  write_be32(images, 0x00000803u);
  write_be32(images, static_cast<std::uint32_t>(set.size()));
  write_be32(images, static_cast<std::uint32_t>(set.rows));
  write_be32(images, static_cast<std::uint32_t>(set.cols));
  for (float p : set.pixels) {
    const long q = std::lround(static_cast<double>(p) * 255.0);
    images.push_back(static_cast<std::uint8_t>(std::clamp(q, 0L, 255L)));
  }
  std::vector<std::uint8_t> labels;
  write_be32(labels, 0x00000801u);
  write_be32(labels, static_cast<std::uint32_t>(set.size()));
  labels.insert(labels.end(), set.labels.begin(), set.labels.end());

  for (const auto& [path, bytes] :
       {std::make_pair(image_path, &images), std::make_pair(label_path, &labels)}) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) throw Error(ErrorClass::Io, "cannot write " + path);
    const std::size_t written = std::fwrite(bytes->data(), 1, bytes->size(), f);
    std::fclose(f);
    if (written != bytes->size())
      throw Error(ErrorClass::Io, "short write to " + path);
  }
}

ImageSet add_noise(const ImageSet& set, const NoiseSpec& spec,
                   std::uint64_t seed) {
  if (spec.sigma < 0.0)
    throw Error(ErrorClass::Range, "noise sigma must be non-negative");
  ImageSet out = set;
  if (spec.sigma == 0.0) return out;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    RngStream rng = derive_stream(seed, {stream_tag::kNoise, i});
    const double x =
        static_cast<double>(out.pixels[i]) + spec.sigma * rng.next_normal();
    out.pixels[i] = static_cast<float>(std::clamp(x, 0.0, 1.0));
  }
  return out;
}

std::pair<ImageSet, ImageSet> split(const ImageSet& set, double val_fraction,
                                    std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw Error(ErrorClass::Range, "val_fraction must be in (0, 1)");
  const std::size_t n = set.size();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  RngStream rng = derive_stream(seed, {stream_tag::kSplit});
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.next_below(i);
    std::swap(perm[i - 1], perm[j]);
  }
  const std::size_t n_val =
      static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));

  auto gather = [&](std::size_t begin, std::size_t end) {
    ImageSet s;
    s.rows = set.rows;
    s.cols = set.cols;
    const std::size_t px = set.pixel_count();
    s.pixels.reserve((end - begin) * px);
    s.labels.reserve(end - begin);
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t i = perm[k];
      s.pixels.insert(s.pixels.end(), set.image(i), set.image(i) + px);
      s.labels.push_back(set.labels[i]);
    }
    return s;
  };
  return {gather(n_val, n), gather(0, n_val)};
}

ImageSet subset(const ImageSet& set, std::size_t count) {
  count = std::min(count, set.size());
  ImageSet s;
  s.rows = set.rows;
  s.cols = set.cols;
  s.pixels.assign(set.pixels.begin(),
                  set.pixels.begin() + count * set.pixel_count());
  s.labels.assign(set.labels.begin(), set.labels.begin() + count);
  return s;
}

}  // namespace dwsnn
