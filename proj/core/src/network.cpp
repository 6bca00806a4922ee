#include "dwsnn/network.hpp"

#include <cmath>

#include "dwsnn/error.hpp"

namespace dwsnn {

const char* neuron_kind_name(const NeuronSpec& spec) {
  if (std::holds_alternative<BinaryNeuronParams>(spec)) return "binary";
  if (std::holds_alternative<MWNeuronParams>(spec)) return "mw";
  return "lif";
}

void MLPConfig::validate() const {
  if (input == 0 || output == 0)
    throw Error(ErrorClass::Config, "input/output sizes must be positive");
  if (hidden.empty())
    throw Error(ErrorClass::Config, "at least one hidden layer required");
  for (std::size_t h : hidden)
    if (h == 0) throw Error(ErrorClass::Config, "hidden sizes must be positive");
  if (neurons.size() != hidden.size())
    throw Error(ErrorClass::Config, "one neuron spec per hidden layer required");
  if (timesteps < 1) throw Error(ErrorClass::Config, "timesteps must be >= 1");
  if (batch_size < 2)
    throw Error(ErrorClass::Config, "batch size must be >= 2 for batchnorm");
  if (epochs < 0) throw Error(ErrorClass::Config, "epochs must be >= 0");
  if (!(beta_out >= 0.0 && beta_out < 1.0))
    throw Error(ErrorClass::Config, "beta_out must be in [0, 1)");
  if (!(bn_momentum > 0.0 && bn_momentum < 1.0))
    throw Error(ErrorClass::Config, "bn momentum must be in (0, 1)");
  if (!(bn_epsilon > 0.0))
    throw Error(ErrorClass::Config, "bn epsilon must be positive");
}

MLPConfig make_config(const NeuronSpec& neuron, std::size_t hidden_size,
                      int timesteps) {
  MLPConfig c;
  c.hidden = {hidden_size, hidden_size};
  c.neurons = {neuron, neuron};
  c.timesteps = timesteps;
  return c;
}

BatchNormParams BatchNormParams::init(std::size_t features) {
  BatchNormParams bn;
  bn.gamma = Tensor({features}, 1.0);
  bn.beta = Tensor({features}, 0.0);
  bn.running_mean = Tensor({features}, 0.0);
  bn.running_var = Tensor({features}, 1.0);
  return bn;
}

namespace {

Tensor uniform_fanin(std::size_t fan_in, std::size_t fan_out, RngStream& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  Tensor w({fan_in, fan_out});
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = bound * (2.0 * rng.next_double() - 1.0);
  return w;
}

}  // namespace

ModelParams ModelParams::init(const MLPConfig& config, std::uint64_t seed) {
  config.validate();
  if (config.hidden.size() != 2)
    throw Error(ErrorClass::Config, "ModelParams expects exactly 2 hidden layers");
  RngStream rng = derive_stream(seed, {stream_tag::kInit});
  ModelParams p;
  p.w1 = uniform_fanin(config.input, config.hidden[0], rng);
  p.b1 = Tensor({config.hidden[0]}, 0.0);
  p.bn1 = BatchNormParams::init(config.hidden[0]);
  p.w2 = uniform_fanin(config.hidden[0], config.hidden[1], rng);
  p.b2 = Tensor({config.hidden[1]}, 0.0);
  p.bn2 = BatchNormParams::init(config.hidden[1]);
  p.w3 = uniform_fanin(config.hidden[1], config.output, rng);
  p.b3 = Tensor({config.output}, 0.0);
  return p;
}

std::vector<Tensor*> ModelParams::trainable() {
  return {&w1, &b1, &bn1.gamma, &bn1.beta, &w2, &b2,
          &bn2.gamma, &bn2.beta, &w3, &b3};
}

std::vector<const Tensor*> ModelParams::trainable() const {
  return {&w1, &b1, &bn1.gamma, &bn1.beta, &w2, &b2,
          &bn2.gamma, &bn2.beta, &w3, &b3};
}

bool ModelParams::all_finite() const {
  for (const Tensor* t : trainable())
    if (!t->all_finite()) return false;
  return bn1.running_mean.all_finite() && bn1.running_var.all_finite() &&
         bn2.running_mean.all_finite() && bn2.running_var.all_finite();
}

namespace {

// Applies one hidden layer's neuron over the stacked [(T*B) x H]
// pre-activation node. Stateless kinds act on the whole stack; stateful
// kinds scan per timestep with freshly reset per-unit state.
NodeId apply_neuron(Graph& g, NodeId pre, const NeuronSpec& spec, Mode mode,
                    RngStream& rng, std::size_t timesteps, std::size_t batch) {
  if (const auto* bin = std::get_if<BinaryNeuronParams>(&spec))
    return binary_layer(g, pre, *bin, mode, &rng);

  if (const auto* mw = std::get_if<MWNeuronParams>(&spec)) {
    if (mode == Mode::MeanField) return mw_meanfield_layer(g, pre, *mw);
    const std::size_t width = g.value(pre).cols();
    std::vector<int> state(batch * width, 1);  // all units start at S1
    std::vector<NodeId> steps;
    steps.reserve(timesteps);
    for (std::size_t t = 0; t < timesteps; ++t) {
      NodeId pre_t = g.slice_rows(pre, t * batch, (t + 1) * batch);
      steps.push_back(mw_sampled_step(g, pre_t, *mw, state, rng));
    }
    return g.concat_rows(steps);
  }

  const auto& lif = std::get<LIFParams>(spec);
  const std::size_t width = g.value(pre).cols();
  NodeId membrane = g.leaf(Tensor::zeros({batch, width}), false);
  std::vector<NodeId> steps;
  steps.reserve(timesteps);
  for (std::size_t t = 0; t < timesteps; ++t) {
    NodeId pre_t = g.slice_rows(pre, t * batch, (t + 1) * batch);
    LifStepNodes r = lif_graph_step(g, lif, membrane, pre_t, mode);
    membrane = r.membrane;
    steps.push_back(r.spike);
  }
  return g.concat_rows(steps);
}

}  // namespace

ForwardNodes forward(Graph& g, ModelParams& params, const MLPConfig& config,
                     const SpikeBatch& spikes, Mode mode, RngStream& rng,
                     bool training) {
  config.validate();
  const std::size_t timesteps = spikes.timesteps;
  const std::size_t batch = spikes.batch;
  if (spikes.features != config.input)
    throw Error(ErrorClass::Shape, "spike feature count != network input size");
  if (static_cast<int>(timesteps) != config.timesteps)
    throw Error(ErrorClass::Shape, "spike batch timesteps != config timesteps");

  ForwardNodes out;
  NodeId x = g.leaf(spikes.to_stacked_tensor(), false);

  NodeId w1 = g.leaf(params.w1, true);
  NodeId b1 = g.leaf(params.b1, true);
  NodeId g1 = g.leaf(params.bn1.gamma, true);
  NodeId be1 = g.leaf(params.bn1.beta, true);
  NodeId w2 = g.leaf(params.w2, true);
  NodeId b2 = g.leaf(params.b2, true);
  NodeId g2 = g.leaf(params.bn2.gamma, true);
  NodeId be2 = g.leaf(params.bn2.beta, true);
  NodeId w3 = g.leaf(params.w3, true);
  NodeId b3 = g.leaf(params.b3, true);
  out.trainable_nodes = {w1, b1, g1, be1, w2, b2, g2, be2, w3, b3};

  auto bn = [&](NodeId z, NodeId gamma, NodeId beta, BatchNormParams& p) {
    if (training)
      return g.batchnorm_train(z, gamma, beta, p.running_mean, p.running_var,
                               config.bn_momentum, config.bn_epsilon);
    return g.batchnorm_infer(z, gamma, beta, p.running_mean, p.running_var,
                             config.bn_epsilon);
  };

  NodeId a1 = bn(g.add_bias(g.matmul(x, w1), b1), g1, be1, params.bn1);
  NodeId s1 = apply_neuron(g, a1, config.neurons[0], mode, rng, timesteps, batch);
  NodeId a2 = bn(g.add_bias(g.matmul(s1, w2), b2), g2, be2, params.bn2);
  NodeId s2 = apply_neuron(g, a2, config.neurons[1], mode, rng, timesteps, batch);
  NodeId u = g.add_bias(g.matmul(s2, w3), b3);

  // Leaky-integrator readout trace, then max over time.
  NodeId membrane = g.leaf(Tensor::zeros({batch, config.output}), false);
  std::vector<NodeId> trace_steps;
  trace_steps.reserve(timesteps);
  for (std::size_t t = 0; t < timesteps; ++t) {
    NodeId u_t = g.slice_rows(u, t * batch, (t + 1) * batch);
    membrane = g.axpby(config.beta_out, membrane, 1.0, u_t);
    trace_steps.push_back(membrane);
  }
  out.trace = g.concat_rows(trace_steps);
  out.logits = g.max_over_time(out.trace, timesteps, batch);
  return out;
}

}  // namespace dwsnn
