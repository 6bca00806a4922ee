#pragma once

#include <cstdint>
#include <vector>

#include "dwsnn/dataset.hpp"
#include "dwsnn/tensor.hpp"

namespace dwsnn {

// Binary spike train over (timestep x sample x unit), time-major. The
// default timestep period is 100 ns: a 10 MHz sampling rate caps the
// brightest pixel at one spike per step.
struct SpikeBatch {
  std::size_t timesteps = 0;
  std::size_t batch = 0;
  std::size_t features = 0;
  std::vector<std::uint8_t> spikes;  // ((t * batch) + b) * features + f
  double timestep_period = 1e-7;

  std::uint8_t at(std::size_t t, std::size_t b, std::size_t f) const {
    return spikes[(t * batch + b) * features + f];
  }
  // [(T*B) x F] double tensor for the network's stacked matmuls.
  Tensor to_stacked_tensor() const;
};

// Poisson (rate) encoding: per pixel and timestep an independent
// Bernoulli(intensity) spike. Each (pass position, pixel) pair derives its
// own stream, so the result is independent of batch partitioning and thread
// count; `first_position` is the global position of `begin` within the
// encoding pass.
SpikeBatch poisson_encode(const ImageSet& set, std::size_t begin,
                          std::size_t end, int timesteps, std::uint64_t seed,
                          std::size_t first_position);

// Whole-set convenience overload.
SpikeBatch poisson_encode(const ImageSet& set, int timesteps,
                          std::uint64_t seed);

// Gathered variant used by the shuffled training loop: encodes
// set[indices[i]] at pass position first_position + i.
SpikeBatch poisson_encode_gather(const ImageSet& set,
                                 const std::vector<std::size_t>& indices,
                                 int timesteps, std::uint64_t seed,
                                 std::size_t first_position);

}  // namespace dwsnn
