#include "dwsnn/device.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dwsnn/error.hpp"
#include "dwsnn/rng.hpp"

namespace dwsnn {

using nlohmann::json;

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

SwitchingSigmoid::SwitchingSigmoid(double v50_, double width_,
                                   double domain_lo_, double domain_hi_)
    : v50(v50_), width(width_), domain_lo(domain_lo_), domain_hi(domain_hi_) {
  if (!(width > 0.0))
    throw Error(ErrorClass::Model, "sigmoid width must be positive");
  if (!(domain_lo < v50 && v50 < domain_hi))
    throw Error(ErrorClass::Model, "sigmoid v50 must lie inside its domain");
}

double SwitchingSigmoid::probability(double v) const {
  return logistic((v - v50) / width);
}

double SwitchingSigmoid::derivative(double v) const {
  const double p = probability(v);
  return p * (1.0 - p) / width;
}

SwitchingTable::SwitchingTable(std::vector<double> voltages_,
                               std::vector<double> probabilities_)
    : voltages(std::move(voltages_)), probabilities(std::move(probabilities_)) {
  if (voltages.size() < 2 || voltages.size() != probabilities.size())
    throw Error(ErrorClass::Model, "switching table needs >= 2 matched points");
  for (std::size_t i = 0; i < voltages.size(); ++i) {
    if (i > 0 && !(voltages[i] > voltages[i - 1]))
      throw Error(ErrorClass::Model, "table voltages must be strictly ascending");
    if (probabilities[i] < 0.0 || probabilities[i] > 1.0)
      throw Error(ErrorClass::Model, "table probabilities must be in [0,1]");
    if (i > 0 && probabilities[i] < probabilities[i - 1])
      throw Error(ErrorClass::Model, "table probabilities must be non-decreasing");
  }
}

double SwitchingTable::probability(double v) const {
  if (v <= voltages.front()) return probabilities.front();
  if (v >= voltages.back()) return probabilities.back();
  const auto it = std::upper_bound(voltages.begin(), voltages.end(), v);
  const std::size_t hi = static_cast<std::size_t>(it - voltages.begin());
  const std::size_t lo = hi - 1;
  const double t = (v - voltages[lo]) / (voltages[hi] - voltages[lo]);
  return probabilities[lo] + t * (probabilities[hi] - probabilities[lo]);
}

double SwitchingTable::derivative(double v) const {
  if (v <= voltages.front() || v >= voltages.back()) return 0.0;
  const auto it = std::upper_bound(voltages.begin(), voltages.end(), v);
  const std::size_t hi = static_cast<std::size_t>(it - voltages.begin());
  const std::size_t lo = hi - 1;
  return (probabilities[hi] - probabilities[lo]) /
         (voltages[hi] - voltages[lo]);
}

double switching_probability(const SwitchingModel& model, double v) {
  return std::visit([v](const auto& m) { return m.probability(v); }, model);
}

double switching_derivative(const SwitchingModel& model, double v) {
  return std::visit([v](const auto& m) { return m.derivative(v); }, model);
}

double switching_domain_lo(const SwitchingModel& model) {
  if (const auto* s = std::get_if<SwitchingSigmoid>(&model)) return s->domain_lo;
  return std::get<SwitchingTable>(model).domain_lo();
}

double switching_domain_hi(const SwitchingModel& model) {
  if (const auto* s = std::get_if<SwitchingSigmoid>(&model)) return s->domain_hi;
  return std::get<SwitchingTable>(model).domain_hi();
}

double MWDeviceModel::advance_probability(int from_state, double v) const {
  if (from_state < 1 || from_state >= kStateCount)
    throw Error(ErrorClass::State, "mw advance from invalid state");
  // No drive, no domain-wall motion: a pulse at or below the domain floor
  // never advances the notch position.
  if (v <= domain_lo) return 0.0;
  return switching_probability(transitions[from_state - 1], v);
}

EnergyParams::EnergyParams(double r_2pt_, double r_4pt_,
                           double effective_duration_)
    : r_2pt(r_2pt_), r_4pt(r_4pt_), effective_duration(effective_duration_) {
  if (!(r_4pt > 0.0) || !(r_2pt >= r_4pt))
    throw Error(ErrorClass::Range, "resistances must satisfy 0 < r_4pt <= r_2pt");
  if (!(effective_duration > 0.0))
    throw Error(ErrorClass::Range, "effective duration must be positive");
}

EnergyParams default_energy_params() { return EnergyParams(1029.0, 365.0, 40e-9); }

double track_voltage(double v_applied, const EnergyParams& params) {
  return v_applied * params.r_4pt / params.r_2pt;
}

double energy_per_pulse(double v_applied, const EnergyParams& params) {
  if (v_applied < 0.0)
    throw Error(ErrorClass::Range, "applied voltage must be non-negative");
  const double v_track = track_voltage(v_applied, params);
  return v_track * v_track / params.r_4pt * params.effective_duration;
}

CyclingRecord simulate_cycling(const SwitchingModel& model, double v,
                               int n_cycles, int max_pulses,
                               std::uint64_t seed, int threads) {
  if (n_cycles <= 0 || max_pulses <= 0)
    throw Error(ErrorClass::Range, "n_cycles and max_pulses must be positive");
  const double p = switching_probability(model, v);

  CyclingRecord record;
  record.voltage = v;
  record.max_pulses = max_pulses;
  record.first_switch_pulse.resize(n_cycles);

  auto run_range = [&](int begin, int end) {
    for (int c = begin; c < end; ++c) {
      RngStream rng = derive_stream(seed, {stream_tag::kCycle,
                                           static_cast<std::uint64_t>(c)});
      std::optional<int> first;
      for (int pulse = 1; pulse <= max_pulses; ++pulse) {
        if (rng.bernoulli(p)) {
          first = pulse;
          break;
        }
      }
      record.first_switch_pulse[c] = first;
    }
  };

  if (threads <= 1) {
    run_range(0, n_cycles);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n_cycles + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int begin = t * chunk;
      const int end = std::min(n_cycles, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  return record;
}

std::vector<SwitchingCounts> aggregate_counts(
    const std::vector<CyclingRecord>& records) {
  // Group by (voltage, max_pulses) in order of first appearance.
  std::vector<SwitchingCounts> out;
  std::map<std::pair<double, int>, std::size_t> index;
  for (const auto& rec : records) {
    const auto key = std::make_pair(rec.voltage, rec.max_pulses);
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(key, out.size());
      out.push_back({rec.voltage, 0.0, 0.0});
      it = index.find(key);
    }
    SwitchingCounts& c = out[it->second];
    for (const auto& first : rec.first_switch_pulse) {
      if (first.has_value()) {
        if (*first < 1 || *first > rec.max_pulses)
          throw Error(ErrorClass::Data, "first_switch_pulse outside [1, max_pulses]");
        c.switches += 1.0;
        c.holds += static_cast<double>(*first - 1);
      } else {
        c.holds += static_cast<double>(rec.max_pulses);
      }
    }
  }
  return out;
}

double fit_log_likelihood(const SwitchingSigmoid& model,
                          const std::vector<SwitchingCounts>& counts) {
  double ll = 0.0;
  for (const auto& c : counts) {
    double p = model.probability(c.voltage);
    p = std::min(1.0 - 1e-12, std::max(1e-12, p));
    ll += c.switches * std::log(p) + c.holds * std::log1p(-p);
  }
  return ll;
}

namespace {

double neg_log_likelihood(double v50, double width,
                          const std::vector<SwitchingCounts>& counts) {
  double nll = 0.0;
  for (const auto& c : counts) {
    double p = logistic((c.voltage - v50) / width);
    p = std::min(1.0 - 1e-12, std::max(1e-12, p));
    nll -= c.switches * std::log(p) + c.holds * std::log1p(-p);
  }
  return nll;
}

// Golden-section minimization of a unimodal 1-D slice.
template <typename F>
double golden_section(F f, double lo, double hi, double tol) {
  constexpr double invphi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

SwitchingSigmoid fit_sigmoid_counts(
    const std::vector<SwitchingCounts>& counts) {
  if (counts.empty()) throw Error(ErrorClass::Fit, "no records");
  std::vector<double> voltages;
  for (const auto& c : counts) voltages.push_back(c.voltage);
  std::sort(voltages.begin(), voltages.end());
  voltages.erase(std::unique(voltages.begin(), voltages.end()), voltages.end());
  if (voltages.size() < 3)
    throw Error(ErrorClass::Fit,
                "non-identifiable fit: need records at >= 3 distinct voltages");

  double total_switches = 0.0, total_holds = 0.0;
  for (const auto& c : counts) {
    total_switches += c.switches;
    total_holds += c.holds;
  }
  if (total_holds == 0.0)
    throw Error(ErrorClass::Fit,
                "non-identifiable fit: every cycle switched on pulse 1");
  if (total_switches == 0.0)
    throw Error(ErrorClass::Fit, "non-identifiable fit: no cycle ever switched");

  const double v_min = voltages.front();
  const double v_max = voltages.back();
  const double span = v_max - v_min;
  const double v50_lo = v_min + 1e-9 * span;
  const double v50_hi = v_max - 1e-9 * span;
  const double w_lo = 1e-4 * span;
  const double w_hi = 2.0 * span;

  // Coarse grid seed, then alternating bounded scalar searches.
  double best_v50 = 0.5 * (v_min + v_max);
  double best_w = 0.25 * span;
  double best = neg_log_likelihood(best_v50, best_w, counts);
  for (int i = 0; i <= 24; ++i) {
    const double v50 = v50_lo + (v50_hi - v50_lo) * i / 24.0;
    for (int j = 0; j <= 24; ++j) {
      const double w = w_lo * std::pow(w_hi / w_lo, j / 24.0);
      const double nll = neg_log_likelihood(v50, w, counts);
      if (nll < best) {
        best = nll;
        best_v50 = v50;
        best_w = w;
      }
    }
  }

  const double tol = 1e-10 * std::max(span, 1.0);
  for (int sweep = 0; sweep < 60; ++sweep) {
    const double prev_v50 = best_v50, prev_w = best_w;
    best_v50 = golden_section(
        [&](double v50) { return neg_log_likelihood(v50, best_w, counts); },
        v50_lo, v50_hi, tol);
    best_w = golden_section(
        [&](double w) { return neg_log_likelihood(best_v50, w, counts); },
        w_lo, w_hi, tol);
    if (std::abs(best_v50 - prev_v50) < tol && std::abs(best_w - prev_w) < tol)
      break;
  }

  return SwitchingSigmoid(best_v50, best_w, v_min, v_max);
}

SwitchingSigmoid fit_sigmoid(const std::vector<CyclingRecord>& records) {
  return fit_sigmoid_counts(aggregate_counts(records));
}

namespace {

template <typename AdvanceFn>
std::vector<double> propagate_ramp(std::size_t n_states, AdvanceFn advance,
                                   double domain_lo, double domain_hi,
                                   double v_max, int ramp_steps) {
  if (v_max < domain_lo || v_max > domain_hi)
    throw Error(ErrorClass::Range, "ramp target outside device domain");
  if (ramp_steps < 1)
    throw Error(ErrorClass::Range, "ramp needs at least one step");
  std::vector<double> dist(n_states, 0.0);
  dist[0] = 1.0;
  for (int k = 0; k < ramp_steps; ++k) {
    const double v = ramp_steps == 1
                         ? v_max
                         : v_max * static_cast<double>(k) /
                               static_cast<double>(ramp_steps - 1);
    // Descending update: one advance per pulse at most.
    for (std::size_t i = n_states - 1; i-- > 0;) {
      const double q = advance(i, v);
      const double moved = dist[i] * q;
      dist[i + 1] += moved;
      dist[i] -= moved;
    }
  }
  return dist;
}

}  // namespace

std::vector<double> ramp_state_distribution(
    const std::vector<SwitchingModel>& transitions, double domain_lo,
    double domain_hi, double v_max, int ramp_steps) {
  return propagate_ramp(
      transitions.size() + 1,
      [&](std::size_t i, double v) {
        return switching_probability(transitions[i], v);
      },
      domain_lo, domain_hi, v_max, ramp_steps);
}

std::vector<double> mw_ramp_distribution(const MWDeviceModel& model,
                                         double v_max, int ramp_steps) {
  return propagate_ramp(
      MWDeviceModel::kStateCount,
      [&](std::size_t i, double v) {
        return model.advance_probability(static_cast<int>(i) + 1, v);
      },
      model.domain_lo, model.domain_hi, v_max, ramp_steps);
}

SwitchingSigmoid default_binary_model() {
  return SwitchingSigmoid(1.8, 0.12, 1.0, 2.2);
}

MWDeviceModel default_mw_model() {
  MWDeviceModel m;
  m.domain_lo = 0.0;
  m.domain_hi = 5.5;
  for (int i = 0; i < MWDeviceModel::kStateCount - 1; ++i)
    m.transitions[i] =
        SwitchingSigmoid(1.1 * (i + 1), 0.3, m.domain_lo, m.domain_hi);
  return m;
}

std::string cycling_records_to_csv(const std::vector<CyclingRecord>& records) {
  std::ostringstream out;
  out << "voltage_V,cycle_index,first_switch_pulse,max_pulses\n";
  for (const auto& rec : records) {
    for (std::size_t c = 0; c < rec.first_switch_pulse.size(); ++c) {
      out << format_double(rec.voltage) << ',' << c << ',';
      if (rec.first_switch_pulse[c].has_value())
        out << *rec.first_switch_pulse[c];
      out << ',' << rec.max_pulses << '\n';
    }
  }
  return out.str();
}

std::vector<CyclingRecord> cycling_records_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorClass::Data, "no records: empty cycling CSV");
  if (line.size() && line.back() == '\r') line.pop_back();
  if (line != "voltage_V,cycle_index,first_switch_pulse,max_pulses")
    throw Error(ErrorClass::Data, "bad cycling CSV header: " + line);

  // Grouped by (voltage, max_pulses) in order of first appearance.
  std::vector<CyclingRecord> records;
  std::map<std::pair<double, int>, std::size_t> index;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<std::string, 4> fields;
    std::size_t start = 0, field = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (field >= 4)
          throw Error(ErrorClass::Data, "too many fields in cycling CSV row");
        fields[field++] = line.substr(start, i - start);
        start = i + 1;
      }
    }
    if (field != 4)
      throw Error(ErrorClass::Data, "expected 4 fields in cycling CSV row " +
                                        std::to_string(line_no));
    double voltage = 0.0;
    int max_pulses = 0;
    std::optional<int> first;
    try {
      voltage = std::stod(fields[0]);
      (void)std::stol(fields[1]);  // cycle index; row order is authoritative
      if (!fields[2].empty()) first = std::stoi(fields[2]);
      max_pulses = std::stoi(fields[3]);
    } catch (const std::exception&) {
      throw Error(ErrorClass::Data, "malformed cycling CSV row " +
                                        std::to_string(line_no));
    }
    if (max_pulses <= 0)
      throw Error(ErrorClass::Data, "max_pulses must be positive");
    if (first.has_value() && (*first < 1 || *first > max_pulses))
      throw Error(ErrorClass::Data,
                  "first_switch_pulse outside [1, max_pulses] in row " +
                      std::to_string(line_no));
    const auto key = std::make_pair(voltage, max_pulses);
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(key, records.size());
      CyclingRecord rec;
      rec.voltage = voltage;
      rec.max_pulses = max_pulses;
      records.push_back(std::move(rec));
      it = index.find(key);
    }
    records[it->second].first_switch_pulse.push_back(first);
  }
  if (records.empty())
    throw Error(ErrorClass::Data, "no records: cycling CSV has no data rows");
  return records;
}

namespace {

json sampled_table(const SwitchingModel& model, double lo, double hi,
                   int n_points) {
  json voltages = json::array();
  json probs = json::array();
  for (int i = 0; i < n_points; ++i) {
    const double v =
        n_points == 1 ? lo : lo + (hi - lo) * i / static_cast<double>(n_points - 1);
    voltages.push_back(v);
    probs.push_back(switching_probability(model, v));
  }
  return json{{"voltages_V", voltages}, {"probabilities", probs}};
}

}  // namespace

std::string device_table_json(const SwitchingModel& model, int n_points) {
  const double lo = switching_domain_lo(model);
  const double hi = switching_domain_hi(model);
  json j = sampled_table(model, lo, hi, n_points);
  j["kind"] = "binary";
  j["domain_V"] = {lo, hi};
  return j.dump(2) + "\n";
}

std::string device_table_json(const MWDeviceModel& model, int n_points) {
  json voltages = json::array();
  for (int i = 0; i < n_points; ++i)
    voltages.push_back(model.domain_lo +
                       (model.domain_hi - model.domain_lo) * i /
                           static_cast<double>(std::max(1, n_points - 1)));
  json per_transition = json::array();
  for (const auto& tr : model.transitions) {
    json probs = json::array();
    for (const auto& v : voltages)
      probs.push_back(switching_probability(tr, v.get<double>()));
    per_transition.push_back(probs);
  }
  json j{{"kind", "mw"},
         {"voltages_V", voltages},
         {"probabilities", per_transition},
         {"domain_V", {model.domain_lo, model.domain_hi}}};
  return j.dump(2) + "\n";
}

std::string fitted_sigmoid_json(const SwitchingSigmoid& model,
                                const std::vector<SwitchingCounts>& counts) {
  json voltages = json::array(), empirical = json::array(),
       fitted = json::array();
  for (const auto& c : counts) {
    voltages.push_back(c.voltage);
    const double trials = c.switches + c.holds;
    empirical.push_back(trials > 0.0 ? c.switches / trials : 0.0);
    fitted.push_back(model.probability(c.voltage));
  }
  json j{{"kind", "binary"},
         {"v50_V", model.v50},
         {"width_V", model.width},
         {"domain_V", {model.domain_lo, model.domain_hi}},
         {"fit",
          {{"log_likelihood", fit_log_likelihood(model, counts)},
           {"voltages_V", voltages},
           {"empirical_p", empirical},
           {"fitted_p", fitted}}}};
  return j.dump(2) + "\n";
}

namespace {

json parse_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw Error(ErrorClass::Data, "malformed device JSON");
  return j;
}

SwitchingModel switching_model_from(const json& j) {
  if (!j.contains("kind") || j["kind"] != "binary")
    throw Error(ErrorClass::Data, "device JSON kind must be \"binary\"");
  if (j.contains("v50_V")) {
    double lo = 0.0, hi = 0.0;
    if (j.contains("domain_V")) {
      lo = j["domain_V"][0].get<double>();
      hi = j["domain_V"][1].get<double>();
    } else {
      throw Error(ErrorClass::Data, "sigmoid device JSON needs domain_V");
    }
    return SwitchingSigmoid(j["v50_V"].get<double>(),
                            j["width_V"].get<double>(), lo, hi);
  }
  if (j.contains("voltages_V") && j.contains("probabilities"))
    return SwitchingTable(j["voltages_V"].get<std::vector<double>>(),
                          j["probabilities"].get<std::vector<double>>());
  throw Error(ErrorClass::Data, "device JSON needs v50_V or voltages_V");
}

}  // namespace

SwitchingModel switching_model_from_json(const std::string& text) {
  return switching_model_from(parse_json(text));
}

MWDeviceModel mw_model_from_json(const std::string& text) {
  json j = parse_json(text);
  if (!j.contains("kind") || j["kind"] != "mw")
    throw Error(ErrorClass::Data, "device JSON kind must be \"mw\"");
  MWDeviceModel m;
  if (j.contains("domain_V")) {
    m.domain_lo = j["domain_V"][0].get<double>();
    m.domain_hi = j["domain_V"][1].get<double>();
  }
  if (j.contains("v50s_V")) {
    const auto v50s = j["v50s_V"].get<std::vector<double>>();
    if (v50s.size() != MWDeviceModel::kStateCount - 1)
      throw Error(ErrorClass::Data, "mw device JSON needs 4 transition v50s");
    std::vector<double> widths;
    if (j.contains("widths_V"))
      widths = j["widths_V"].get<std::vector<double>>();
    else if (j.contains("width_V"))
      widths.assign(v50s.size(), j["width_V"].get<double>());
    else
      throw Error(ErrorClass::Data, "mw device JSON needs width_V or widths_V");
    if (widths.size() != v50s.size())
      throw Error(ErrorClass::Data, "mw device JSON widths length mismatch");
    for (std::size_t i = 0; i < v50s.size(); ++i)
      m.transitions[i] =
          SwitchingSigmoid(v50s[i], widths[i], m.domain_lo, m.domain_hi);
    return m;
  }
  if (j.contains("voltages_V") && j.contains("probabilities")) {
    const auto voltages = j["voltages_V"].get<std::vector<double>>();
    const auto& per_transition = j["probabilities"];
    if (!per_transition.is_array() ||
        per_transition.size() != MWDeviceModel::kStateCount - 1)
      throw Error(ErrorClass::Data, "mw device JSON needs 4 probability arrays");
    for (std::size_t i = 0; i < per_transition.size(); ++i)
      m.transitions[i] = SwitchingTable(
          voltages, per_transition[i].get<std::vector<double>>());
    return m;
  }
  throw Error(ErrorClass::Data, "mw device JSON needs v50s_V or voltages_V");
}

}  // namespace dwsnn
