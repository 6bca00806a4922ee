#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace dwsnn {

// Logistic per-pulse switching probability p(v) = 1/(1+exp(-(v-v50)/width)),
// calibrated over [domain_lo, domain_hi].
struct SwitchingSigmoid {
  double v50 = 0.0;
  double width = 1.0;
  double domain_lo = 0.0;
  double domain_hi = 1.0;

  SwitchingSigmoid() = default;
  SwitchingSigmoid(double v50, double width, double domain_lo,
                   double domain_hi);

  double probability(double v) const;
  double derivative(double v) const;  // dp/dv
};

// Empirical lookup-table form; strictly ascending voltages with
// non-decreasing probabilities, evaluated by linear interpolation with
// clamping outside the table.
struct SwitchingTable {
  std::vector<double> voltages;
  std::vector<double> probabilities;

  SwitchingTable() = default;
  SwitchingTable(std::vector<double> voltages,
                 std::vector<double> probabilities);

  double domain_lo() const { return voltages.front(); }
  double domain_hi() const { return voltages.back(); }
  double probability(double v) const;
  double derivative(double v) const;  // local segment slope
};

using SwitchingModel = std::variant<SwitchingSigmoid, SwitchingTable>;

double switching_probability(const SwitchingModel& model, double v);
double switching_derivative(const SwitchingModel& model, double v);
double switching_domain_lo(const SwitchingModel& model);
double switching_domain_hi(const SwitchingModel& model);

// Five-state stochastic integrator: four voltage-dependent advance
// transitions between notch states S1..S5.
struct MWDeviceModel {
  static constexpr int kStateCount = 5;
  std::array<SwitchingModel, kStateCount - 1> transitions;
  double domain_lo = 0.0;
  double domain_hi = 5.5;

  double advance_probability(int from_state, double v) const;  // from S1..S4
};

// One constant-amplitude cycling experiment: pulse index of the first switch
// per cycle (1-based), or nullopt for cycles that never switched within
// max_pulses.
struct CyclingRecord {
  double voltage = 0.0;
  std::vector<std::optional<int>> first_switch_pulse;
  int max_pulses = 0;
};

struct EnergyParams {
  double r_2pt;               // ohms, CLK->IN path
  double r_4pt;               // ohms, DW track
  double effective_duration;  // seconds

  EnergyParams(double r_2pt, double r_4pt, double effective_duration);
};

// Default calibration reproducing the measured write energy: a 30 ns plateau
// with 10 ns rise/fall behaves like a 40 ns effective dissipation window.
EnergyParams default_energy_params();

// Joules dissipated across the DW track for one pulse; the track sees the
// applied voltage through the r_4pt/r_2pt divider.
double energy_per_pulse(double v_applied, const EnergyParams& params);
double track_voltage(double v_applied, const EnergyParams& params);

// Repeated constant-amplitude cycling. Each cycle draws independent
// per-pulse Bernoulli(p(v)) trials until the first switch or censoring at
// max_pulses. Cycles use counter-derived streams, so the result is a pure
// function of (model, v, n_cycles, max_pulses, seed) regardless of threads.
CyclingRecord simulate_cycling(const SwitchingModel& model, double v,
                               int n_cycles, int max_pulses,
                               std::uint64_t seed, int threads = 1);

// Aggregated sufficient statistics for the per-pulse Bernoulli likelihood at
// one voltage: switch events and non-switch pulse counts.
struct SwitchingCounts {
  double voltage = 0.0;
  double switches = 0.0;
  double holds = 0.0;
};

std::vector<SwitchingCounts> aggregate_counts(
    const std::vector<CyclingRecord>& records);

// Maximum-likelihood logistic fit on aggregated counts; first-switch pulses
// are Geometric(p(v)) and censored cycles contribute survival probability
// (1-p)^max_pulses. Bounded golden-section search over each coordinate.
SwitchingSigmoid fit_sigmoid_counts(const std::vector<SwitchingCounts>& counts);
SwitchingSigmoid fit_sigmoid(const std::vector<CyclingRecord>& records);

double fit_log_likelihood(const SwitchingSigmoid& model,
                          const std::vector<SwitchingCounts>& counts);

// Exact terminal-state distribution over S1..S5 after a linear voltage ramp
// from 0 to v_max with one pulse per step; forward propagation of the Markov
// chain, no sampling. The last state is absorbing.
std::vector<double> mw_ramp_distribution(const MWDeviceModel& model,
                                         double v_max, int ramp_steps);

// Same protocol over an arbitrary advance chain (used by reduced-state
// oracles in the tests).
std::vector<double> ramp_state_distribution(
    const std::vector<SwitchingModel>& transitions, double domain_lo,
    double domain_hi, double v_max, int ramp_steps);

// Canonical synthetic calibration matching the measured endpoint behavior:
// binary sigmoid 1.8 V / 0.12 V over [1.0, 2.2] V and a five-state model
// with transitions at {1.1, 2.2, 3.3, 4.4} V, width 0.3 V, over [0, 5.5] V.
SwitchingSigmoid default_binary_model();
MWDeviceModel default_mw_model();

// --- serialization -------------------------------------------------------

// CSV: header voltage_V,cycle_index,first_switch_pulse,max_pulses; one row
// per cycle; censored cycles leave first_switch_pulse empty.
std::string cycling_records_to_csv(const std::vector<CyclingRecord>& records);
std::vector<CyclingRecord> cycling_records_from_csv(const std::string& text);

// Lookup-table JSON export:
// {"kind":"binary"|"mw","voltages_V":[...],"probabilities":[...] or
//  per-transition arrays,"domain_V":[lo,hi]}.
std::string device_table_json(const SwitchingModel& model, int n_points = 11);
std::string device_table_json(const MWDeviceModel& model, int n_points = 11);

// Fitted-sigmoid JSON with per-voltage diagnostics.
std::string fitted_sigmoid_json(const SwitchingSigmoid& model,
                                const std::vector<SwitchingCounts>& counts);

// Accepts both the sigmoid form ({"kind":"binary","v50_V":...}) and the
// table form above.
SwitchingModel switching_model_from_json(const std::string& text);
MWDeviceModel mw_model_from_json(const std::string& text);

}  // namespace dwsnn
