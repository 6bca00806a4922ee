#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "dwsnn/encoding.hpp"
#include "dwsnn/graph.hpp"
#include "dwsnn/neuron.hpp"

namespace dwsnn {

using NeuronSpec = std::variant<BinaryNeuronParams, MWNeuronParams, LIFParams>;

const char* neuron_kind_name(const NeuronSpec& spec);  // binary|mw|lif

// Two-hidden-layer spiking MLP configuration.
struct MLPConfig {
  std::size_t input = 784;
  std::vector<std::size_t> hidden = {200, 200};
  std::size_t output = 10;
  std::vector<NeuronSpec> neurons;  // one per hidden layer
  int timesteps = 80;
  double beta_out = 0.9;  // readout leak
  std::size_t batch_size = 100;
  double learning_rate = 1e-3;
  int epochs = 10;
  double bn_momentum = 0.1;
  double bn_epsilon = 1e-5;

  void validate() const;
};

// Convenience: same neuron in both hidden layers.
MLPConfig make_config(const NeuronSpec& neuron, std::size_t hidden_size,
                      int timesteps);

struct BatchNormParams {
  Tensor gamma, beta;              // trainable, per feature
  Tensor running_mean, running_var;

  static BatchNormParams init(std::size_t features);
};

struct ModelParams {
  Tensor w1, b1;
  BatchNormParams bn1;
  Tensor w2, b2;
  BatchNormParams bn2;
  Tensor w3, b3;  // readout has no batchnorm

  // Scaled-uniform fan-in initialization (bound sqrt(6/fan_in)); biases
  // zero; gamma 1, beta 0.
  static ModelParams init(const MLPConfig& config, std::uint64_t seed);

  std::vector<Tensor*> trainable();
  std::vector<const Tensor*> trainable() const;
  bool all_finite() const;
};

// Node handles produced by one forward pass; trainable_nodes aligns with
// ModelParams::trainable().
struct ForwardNodes {
  NodeId trace;   // [(T*B) x output] readout membrane stack
  NodeId logits;  // [B x output] max over time
  std::vector<NodeId> trainable_nodes;
};

// Unrolls the network over the spike batch. Training mode uses batch
// statistics (pooled over batch x time) and updates the running stats in
// params; inference mode reads the running stats only.
ForwardNodes forward(Graph& g, ModelParams& params, const MLPConfig& config,
                     const SpikeBatch& spikes, Mode mode, RngStream& rng,
                     bool training);

}  // namespace dwsnn
