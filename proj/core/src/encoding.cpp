#include "dwsnn/encoding.hpp"

#include "dwsnn/error.hpp"
#include "dwsnn/rng.hpp"

namespace dwsnn {

Tensor SpikeBatch::to_stacked_tensor() const {
  Tensor out({timesteps * batch, features});
  for (std::size_t i = 0; i < spikes.size(); ++i)
    out[i] = static_cast<double>(spikes[i]);
  return out;
}

namespace {

SpikeBatch encode_impl(const ImageSet& set, const std::size_t* indices,
                       std::size_t count, int timesteps, std::uint64_t seed,
                       std::size_t first_position) {
  if (timesteps < 1)
    throw Error(ErrorClass::Range, "poisson_encode needs timesteps >= 1");
  const std::size_t px = set.pixel_count();
  SpikeBatch out;
  out.timesteps = static_cast<std::size_t>(timesteps);
  out.batch = count;
  out.features = px;
  out.spikes.assign(out.timesteps * count * px, 0);

  for (std::size_t b = 0; b < count; ++b) {
    const std::size_t img = indices == nullptr ? b : indices[b];
    const float* intensity = set.image(img);
    const std::uint64_t position = first_position + b;
    for (std::size_t f = 0; f < px; ++f) {
      const double p = static_cast<double>(intensity[f]);
      RngStream rng = derive_stream(seed, {stream_tag::kEncode, position, f});
      if (p <= 0.0) continue;
      if (p >= 1.0) {
        for (std::size_t t = 0; t < out.timesteps; ++t)
          out.spikes[(t * count + b) * px + f] = 1;
        continue;
      }
      for (std::size_t t = 0; t < out.timesteps; ++t)
        if (rng.bernoulli(p)) out.spikes[(t * count + b) * px + f] = 1;
    }
  }
  return out;
}

}  // namespace

SpikeBatch poisson_encode(const ImageSet& set, std::size_t begin,
                          std::size_t end, int timesteps, std::uint64_t seed,
                          std::size_t first_position) {
  if (begin > end || end > set.size())
    throw Error(ErrorClass::Range, "poisson_encode range out of bounds");
  std::vector<std::size_t> indices(end - begin);
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = begin + i;
  return encode_impl(set, indices.data(), indices.size(), timesteps, seed,
                     first_position);
}

SpikeBatch poisson_encode(const ImageSet& set, int timesteps,
                          std::uint64_t seed) {
  return poisson_encode(set, 0, set.size(), timesteps, seed, 0);
}

SpikeBatch poisson_encode_gather(const ImageSet& set,
                                 const std::vector<std::size_t>& indices,
                                 int timesteps, std::uint64_t seed,
                                 std::size_t first_position) {
  for (std::size_t i : indices)
    if (i >= set.size())
      throw Error(ErrorClass::Range, "poisson_encode index out of bounds");
  return encode_impl(set, indices.data(), indices.size(), timesteps, seed,
                     first_position);
}

}  // namespace dwsnn
