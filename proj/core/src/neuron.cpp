#include "dwsnn/neuron.hpp"

#include <cmath>
#include <memory>

#include "dwsnn/error.hpp"

namespace dwsnn {

double drive_voltage(const VoltageMap& vmap, double a) { return vmap.apply(a); }

double device_half_point(const SwitchingModel& model) {
  if (const auto* s = std::get_if<SwitchingSigmoid>(&model)) return s->v50;
  const auto& t = std::get<SwitchingTable>(model);
  for (std::size_t i = 1; i < t.voltages.size(); ++i) {
    if (t.probabilities[i - 1] <= 0.5 && t.probabilities[i] >= 0.5) {
      const double dp = t.probabilities[i] - t.probabilities[i - 1];
      if (dp == 0.0) return 0.5 * (t.voltages[i - 1] + t.voltages[i]);
      const double f = (0.5 - t.probabilities[i - 1]) / dp;
      return t.voltages[i - 1] + f * (t.voltages[i] - t.voltages[i - 1]);
    }
  }
  return 0.5 * (t.domain_lo() + t.domain_hi());
}

VoltageMap default_voltage_map(const SwitchingModel& model) {
  VoltageMap vmap;
  vmap.lo = switching_domain_lo(model);
  vmap.hi = switching_domain_hi(model);
  vmap.v_gain = (vmap.hi - vmap.lo) / 6.0;
  vmap.v_mid = device_half_point(model);
  return vmap;
}

VoltageMap default_voltage_map(const MWDeviceModel& model) {
  VoltageMap vmap;
  vmap.lo = model.domain_lo;
  vmap.hi = model.domain_hi;
  vmap.v_gain = (vmap.hi - vmap.lo) / 6.0;
  double mid = 0.0;
  for (const auto& tr : model.transitions) mid += device_half_point(tr);
  vmap.v_mid = mid / static_cast<double>(model.transitions.size());
  return vmap;
}

BinaryNeuronParams default_binary_neuron() {
  BinaryNeuronParams p;
  p.device = default_binary_model();
  p.vmap = default_voltage_map(p.device);
  return p;
}

MWNeuronParams default_mw_neuron() {
  MWNeuronParams p;
  p.device = default_mw_model();
  p.vmap = default_voltage_map(p.device);
  return p;
}

double binary_step(const BinaryNeuronParams& params, double a, RngStream* rng,
                   Mode mode, double* d_da) {
  const double v = params.vmap.apply(a);
  const double p = switching_probability(params.device, v);
  if (d_da != nullptr)
    *d_da = params.vmap.clamped(a)
                ? 0.0
                : switching_derivative(params.device, v) * params.vmap.v_gain;
  if (mode == Mode::MeanField) return p;
  if (rng == nullptr)
    throw Error(ErrorClass::State, "sampled binary_step needs an rng stream");
  return rng->bernoulli(p) ? 1.0 : 0.0;
}

namespace {
constexpr double kRateFloor = 1e-12;  // keeps the geometric mean differentiable
}

double mw_meanfield_rate(const MWNeuronParams& params, double a,
                         double* d_da) {
  const double v = params.vmap.apply(a);
  if (v <= params.device.domain_lo) {  // zero drive, matching the sampled rule
    if (d_da != nullptr) *d_da = 0.0;
    return 0.0;
  }
  const int transitions = MWDeviceModel::kStateCount - 1;
  double log_sum = 0.0;
  double slope_sum = 0.0;
  for (const auto& tr : params.device.transitions) {
    const double q = std::max(kRateFloor, switching_probability(tr, v));
    log_sum += std::log(q);
    slope_sum += switching_derivative(tr, v) / q;
  }
  const double geo_mean = std::exp(log_sum / transitions);
  const double rate = geo_mean / transitions;
  if (d_da != nullptr) {
    const double dr_dv = rate * slope_sum / transitions;
    *d_da = params.vmap.clamped(a) ? 0.0 : dr_dv * params.vmap.v_gain;
  }
  return rate;
}

MWStepResult mw_step(const MWNeuronParams& params, int state, double a,
                     RngStream* rng, Mode mode, double* d_da) {
  if (state < 1 || state > MWDeviceModel::kStateCount)
    throw Error(ErrorClass::State, "mw neuron state outside [1, state_count]");
  if (mode == Mode::MeanField) {
    MWStepResult r;
    r.spike = mw_meanfield_rate(params, a, d_da);
    r.state = state;
    return r;
  }
  if (rng == nullptr)
    throw Error(ErrorClass::State, "sampled mw_step needs an rng stream");
  if (d_da != nullptr) mw_meanfield_rate(params, a, d_da);

  MWStepResult r;
  if (state == MWDeviceModel::kStateCount) {
    // A stored last-notch state fires immediately and resets.
    r.spike = 1.0;
    r.state = 1;
    return r;
  }
  const double v = params.vmap.apply(a);
  const double q = params.device.advance_probability(state, v);
  if (rng->bernoulli(q)) {
    const int next = state + 1;
    if (next == MWDeviceModel::kStateCount) {
      r.spike = 1.0;  // fire on entering the last notch, reset same step
      r.state = 1;
    } else {
      r.state = next;
    }
  } else {
    r.state = state;
  }
  return r;
}

LifStepResult lif_step(const LIFParams& params, double v, double i) {
  const double v_after = params.beta * v + i;
  LifStepResult r;
  if (v_after >= params.threshold) {
    r.spike = 1.0;
    r.membrane = 0.0;
  } else {
    r.membrane = v_after;
  }
  return r;
}

double lif_surrogate(const LIFParams& params, double v_after) {
  const double d =
      1.0 + params.surrogate_slope * std::abs(v_after - params.threshold);
  return 1.0 / (d * d);
}

double lif_soft_spike(const LIFParams& params, double v_after) {
  const double x = v_after - params.threshold;
  return 0.5 * (1.0 + x / (1.0 + params.surrogate_slope * std::abs(x)));
}

double lif_soft_spike_derivative(const LIFParams& params, double v_after) {
  const double d =
      1.0 + params.surrogate_slope * std::abs(v_after - params.threshold);
  return 0.5 / (d * d);
}

double readout_step(double beta_out, double m, double i) {
  return beta_out * m + i;
}

namespace {

// Shared shape of all elementwise stochastic layers: forward values plus a
// stored surrogate derivative per element.
NodeId elementwise_surrogate(Graph& g, NodeId pre, Tensor out,
                             std::shared_ptr<std::vector<double>> d_da) {
  int pi = pre.v;
  return g.custom(std::move(out), {pi}, [pi, d_da](Graph& gg, int self) {
    if (!gg.needs_grad(pi)) return;
    const Tensor& go = gg.grad_buffer(self);
    Tensor& gp = gg.grad_buffer(pi);
    for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += go[i] * (*d_da)[i];
  });
}

}  // namespace

NodeId binary_layer(Graph& g, NodeId pre, const BinaryNeuronParams& params,
                    Mode mode, RngStream* rng) {
  const Tensor& a = g.value(pre);
  Tensor out(a.shape());
  auto d_da = std::make_shared<std::vector<double>>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    out[i] = binary_step(params, a[i], rng, mode, &(*d_da)[i]);
  return elementwise_surrogate(g, pre, std::move(out), std::move(d_da));
}

NodeId mw_meanfield_layer(Graph& g, NodeId pre, const MWNeuronParams& params) {
  const Tensor& a = g.value(pre);
  Tensor out(a.shape());
  auto d_da = std::make_shared<std::vector<double>>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    out[i] = mw_meanfield_rate(params, a[i], &(*d_da)[i]);
  return elementwise_surrogate(g, pre, std::move(out), std::move(d_da));
}

NodeId mw_sampled_step(Graph& g, NodeId pre_t, const MWNeuronParams& params,
                       std::vector<int>& state, RngStream& rng) {
  const Tensor& a = g.value(pre_t);
  if (state.size() != a.size())
    throw Error(ErrorClass::State, "mw state size mismatch");
  Tensor out(a.shape());
  auto d_da = std::make_shared<std::vector<double>>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const MWStepResult r =
        mw_step(params, state[i], a[i], &rng, Mode::Sampled, &(*d_da)[i]);
    out[i] = r.spike;
    state[i] = r.state;
  }
  return elementwise_surrogate(g, pre_t, std::move(out), std::move(d_da));
}

LifStepNodes lif_graph_step(Graph& g, const LIFParams& params,
                            NodeId membrane_prev, NodeId current, Mode mode) {
  NodeId v_after = g.axpby(params.beta, membrane_prev, 1.0, current);

  const Tensor& v = g.value(v_after);
  Tensor spike_vals(v.shape());
  auto d_dv = std::make_shared<std::vector<double>>(v.size());
  if (mode == Mode::Sampled) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      spike_vals[i] = v[i] >= params.threshold ? 1.0 : 0.0;
      (*d_dv)[i] = lif_surrogate(params, v[i]);
    }
  } else {
    for (std::size_t i = 0; i < v.size(); ++i) {
      spike_vals[i] = lif_soft_spike(params, v[i]);
      (*d_dv)[i] = lif_soft_spike_derivative(params, v[i]);
    }
  }
  NodeId spike =
      elementwise_surrogate(g, v_after, std::move(spike_vals), std::move(d_dv));

  // Reset-to-zero: v_next = v' * (1 - spike); gradient flows through both
  // the decay path and the reset gate.
  NodeId one_minus = g.add_scalar(g.scale(spike, -1.0), 1.0);
  NodeId membrane_next = g.mul(v_after, one_minus);
  return {spike, membrane_next};
}

}  // namespace dwsnn
