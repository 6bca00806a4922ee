#pragma once

#include <vector>

#include "dwsnn/device.hpp"
#include "dwsnn/graph.hpp"
#include "dwsnn/rng.hpp"

namespace dwsnn {

// Forward evaluation flavor. Sampled mode draws Bernoulli spikes (the
// hardware behavior); mean-field replaces every stochastic spike by its
// expectation so gradients can be checked against finite differences.
enum class Mode { Sampled, MeanField };

// Affine clamp mapping batchnormed pre-activations into the calibrated
// device voltage range: v = clamp(v_mid + v_gain * a, lo, hi).
struct VoltageMap {
  double v_mid = 0.0;
  double v_gain = 1.0;
  double lo = 0.0;
  double hi = 1.0;

  double apply(double a) const {
    const double v = v_mid + v_gain * a;
    return v < lo ? lo : (v > hi ? hi : v);
  }
  // Clamp is hard: no gradient flows from saturated units.
  bool clamped(double a) const {
    const double v = v_mid + v_gain * a;
    return v <= lo || v >= hi;
  }
};

double drive_voltage(const VoltageMap& vmap, double a);

// Voltage where the model crosses 50% switching probability (domain midpoint
// when the table never crosses).
double device_half_point(const SwitchingModel& model);

// Calibration rule: unit-variance pre-activations span the device domain at
// +-3, centered on the 50% point.
VoltageMap default_voltage_map(const SwitchingModel& model);
VoltageMap default_voltage_map(const MWDeviceModel& model);

struct BinaryNeuronParams {
  SwitchingModel device;
  VoltageMap vmap;
};
BinaryNeuronParams default_binary_neuron();

struct MWNeuronParams {
  MWDeviceModel device;
  VoltageMap vmap;
};
MWNeuronParams default_mw_neuron();

struct LIFParams {
  double beta = 0.9;           // membrane decay per step
  double threshold = 1.0;      // spike threshold; reset to zero
  double surrogate_slope = 10.0;
};

// --- scalar step rules -----------------------------------------------------

// Stateless spiker: firing probability is the device switching probability
// at the drive voltage. Sampled mode returns {0,1}; mean-field returns the
// probability. If d_da is non-null it receives the surrogate derivative
// d(spike)/da used by backward in both modes.
double binary_step(const BinaryNeuronParams& params, double a, RngStream* rng,
                   Mode mode, double* d_da = nullptr);

// Steady-state firing rate of the advance chain (geometric mean of the
// transition probabilities over the state count minus one).
double mw_meanfield_rate(const MWNeuronParams& params, double a,
                         double* d_da = nullptr);

struct MWStepResult {
  double spike = 0.0;
  int state = 1;
};

// Quantized integrator: advances one notch with probability q_state(v);
// entering the last state emits a spike and resets to S1 within the same
// step. Mean-field mode returns the steady-state rate and leaves the state
// untouched.
MWStepResult mw_step(const MWNeuronParams& params, int state, double a,
                     RngStream* rng, Mode mode, double* d_da = nullptr);

struct LifStepResult {
  double spike = 0.0;
  double membrane = 0.0;
};

// v' = beta*v + i; spike and reset to zero when v' reaches threshold.
LifStepResult lif_step(const LIFParams& params, double v, double i);

// SuperSpike-style surrogate: d(spike)/dv' = 1/(1+slope*|v'-threshold|)^2.
double lif_surrogate(const LIFParams& params, double v_after);
// Smooth spike used by mean-field mode; its exact derivative is half the
// surrogate, so finite differences and backward agree.
double lif_soft_spike(const LIFParams& params, double v_after);
double lif_soft_spike_derivative(const LIFParams& params, double v_after);

// Leaky integrator readout: m' = beta_out*m + i, no spike, no reset.
double readout_step(double beta_out, double m, double i);

// --- graph ops ---------------------------------------------------------

// Elementwise binary neuron over a full [(rows) x H] pre-activation node.
NodeId binary_layer(Graph& g, NodeId pre, const BinaryNeuronParams& params,
                    Mode mode, RngStream* rng);

// Elementwise mean-field MW rate over a full pre-activation node.
NodeId mw_meanfield_layer(Graph& g, NodeId pre, const MWNeuronParams& params);

// One sampled MW timestep over a [B x H] pre-activation slice; `state` holds
// the per-unit notch index and is updated in place. Backward applies the
// mean-field rate derivative (straight-through estimator).
NodeId mw_sampled_step(Graph& g, NodeId pre_t, const MWNeuronParams& params,
                       std::vector<int>& state, RngStream& rng);

struct LifStepNodes {
  NodeId spike;
  NodeId membrane;
};

// One LIF timestep built from tape ops so gradients propagate through the
// membrane recurrence: v' = beta*v + i, spike = f(v'), v_next = v'*(1-spike).
LifStepNodes lif_graph_step(Graph& g, const LIFParams& params,
                            NodeId membrane_prev, NodeId current, Mode mode);

}  // namespace dwsnn
