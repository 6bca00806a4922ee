#include "dwsnn/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dwsnn/error.hpp"

namespace dwsnn {

using nlohmann::json;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorClass::Io, "cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorClass::Io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorClass::Io, "short write to " + path);
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& context) {
  if (!j.is_object())
    throw Error(ErrorClass::Config, "config section " + context +
                                        " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (allowed.find(key) == allowed.end())
      throw Error(ErrorClass::Config,
                  "unknown config key: " + context + "." + key);
  }
}

json vmap_to_json(const VoltageMap& v) {
  return json{{"v_mid", v.v_mid},
              {"v_gain", v.v_gain},
              {"clamp_V", {v.lo, v.hi}}};
}

void apply_vmap_overrides(VoltageMap& vmap, const json& j,
                          const std::string& context) {
  check_keys(j, {"v_mid", "v_gain", "clamp_V"}, context);
  if (j.contains("v_mid")) vmap.v_mid = j["v_mid"].get<double>();
  if (j.contains("v_gain")) vmap.v_gain = j["v_gain"].get<double>();
  if (j.contains("clamp_V")) {
    vmap.lo = j["clamp_V"][0].get<double>();
    vmap.hi = j["clamp_V"][1].get<double>();
  }
  if (!(vmap.v_gain > 0.0))
    throw Error(ErrorClass::Config, context + ": v_gain must be positive");
  if (!(vmap.lo <= vmap.v_mid && vmap.v_mid <= vmap.hi))
    throw Error(ErrorClass::Config,
                context + ": clamp range must contain v_mid");
}

// "default-binary" / "default-mw", a path to a device JSON file, or an
// inline device object.
std::string resolve_device_text(const json& device, const std::string& context) {
  if (device.is_object()) return device.dump();
  if (!device.is_string())
    throw Error(ErrorClass::Config,
                context + ".device must be a string or object");
  const std::string name = device.get<std::string>();
  if (name == "default-binary" || name == "default-mw") return name;
  return read_text_file(name);
}

json switching_model_to_json(const SwitchingModel& m) {
  if (const auto* s = std::get_if<SwitchingSigmoid>(&m))
    return json{{"kind", "binary"},
                {"v50_V", s->v50},
                {"width_V", s->width},
                {"domain_V", {s->domain_lo, s->domain_hi}}};
  const auto& t = std::get<SwitchingTable>(m);
  return json{{"kind", "binary"},
              {"voltages_V", t.voltages},
              {"probabilities", t.probabilities},
              {"domain_V", {t.domain_lo(), t.domain_hi()}}};
}

json neuron_spec_to_json(const NeuronSpec& spec) {
  if (const auto* b = std::get_if<BinaryNeuronParams>(&spec))
    return json{{"kind", "binary"},
                {"device", switching_model_to_json(b->device)},
                {"vmap", vmap_to_json(b->vmap)}};
  if (const auto* m = std::get_if<MWNeuronParams>(&spec)) {
    json transitions = json::array();
    for (const auto& tr : m->device.transitions)
      transitions.push_back(switching_model_to_json(tr));
    return json{{"kind", "mw"},
                {"device",
                 {{"kind", "mw"},
                  {"transitions", transitions},
                  {"domain_V", {m->device.domain_lo, m->device.domain_hi}}}},
                {"vmap", vmap_to_json(m->vmap)}};
  }
  const auto& l = std::get<LIFParams>(spec);
  return json{{"kind", "lif"},
              {"beta", l.beta},
              {"threshold", l.threshold},
              {"surrogate_slope", l.surrogate_slope}};
}

}  // namespace

std::string mlp_config_to_json(const MLPConfig& config) {
  json neurons = json::array();
  for (const auto& n : config.neurons) neurons.push_back(neuron_spec_to_json(n));
  json j{{"input", config.input},
         {"hidden", config.hidden},
         {"output", config.output},
         {"neurons", neurons},
         {"timesteps", config.timesteps},
         {"beta_out", config.beta_out},
         {"batch_size", config.batch_size},
         {"learning_rate", config.learning_rate},
         {"epochs", config.epochs},
         {"bn_momentum", config.bn_momentum},
         {"bn_epsilon", config.bn_epsilon}};
  return j.dump();
}

MLPConfig Experiment::instantiate(const std::string& model_name) const {
  MLPConfig config = base;
  NeuronSpec spec;
  if (model_name == "binary")
    spec = binary_neuron;
  else if (model_name == "mw")
    spec = mw_neuron;
  else if (model_name == "lif")
    spec = lif;
  else
    throw Error(ErrorClass::Config, "unknown model name: " + model_name);
  config.neurons.assign(config.hidden.size(), spec);
  config.validate();
  return config;
}

Experiment experiment_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw Error(ErrorClass::Config, "malformed experiment JSON");
  check_keys(j, {"dataset", "network", "training", "models", "seeds", "neuron",
                 "noise", "threads"},
             "config");

  Experiment exp;
  exp.binary_neuron = default_binary_neuron();
  exp.mw_neuron = default_mw_neuron();

  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    check_keys(d,
               {"train_images", "train_labels", "test_images", "test_labels",
                "train_subset", "test_subset", "val_fraction", "split_seed"},
               "dataset");
    exp.train_images = d.value("train_images", "");
    exp.train_labels = d.value("train_labels", "");
    exp.test_images = d.value("test_images", "");
    exp.test_labels = d.value("test_labels", "");
    exp.train_subset = d.value("train_subset", std::size_t{0});
    exp.test_subset = d.value("test_subset", std::size_t{0});
    exp.val_fraction = d.value("val_fraction", 0.1);
    exp.split_seed = d.value("split_seed", std::uint64_t{42});
  }

  if (j.contains("network")) {
    const json& n = j["network"];
    check_keys(n,
               {"input", "hidden", "output", "timesteps", "beta_out",
                "bn_momentum", "bn_epsilon"},
               "network");
    exp.base.input = n.value("input", exp.base.input);
    if (n.contains("hidden"))
      exp.base.hidden = n["hidden"].get<std::vector<std::size_t>>();
    exp.base.output = n.value("output", exp.base.output);
    exp.base.timesteps = n.value("timesteps", exp.base.timesteps);
    exp.base.beta_out = n.value("beta_out", exp.base.beta_out);
    exp.base.bn_momentum = n.value("bn_momentum", exp.base.bn_momentum);
    exp.base.bn_epsilon = n.value("bn_epsilon", exp.base.bn_epsilon);
  }

  if (j.contains("training")) {
    const json& t = j["training"];
    check_keys(t, {"epochs", "batch_size", "learning_rate"}, "training");
    exp.base.epochs = t.value("epochs", exp.base.epochs);
    exp.base.batch_size = t.value("batch_size", exp.base.batch_size);
    exp.base.learning_rate = t.value("learning_rate", exp.base.learning_rate);
  }

  if (j.contains("models"))
    exp.models = j["models"].get<std::vector<std::string>>();
  for (const auto& m : exp.models)
    if (m != "binary" && m != "mw" && m != "lif")
      throw Error(ErrorClass::Config, "unknown model name: " + m);

  if (j.contains("seeds"))
    exp.seeds = j["seeds"].get<std::vector<std::uint64_t>>();

  if (j.contains("neuron")) {
    const json& n = j["neuron"];
    check_keys(n, {"binary", "mw", "lif"}, "neuron");
    if (n.contains("binary")) {
      const json& b = n["binary"];
      check_keys(b, {"device", "vmap"}, "neuron.binary");
      if (b.contains("device")) {
        const std::string text = resolve_device_text(b["device"], "neuron.binary");
        exp.binary_neuron.device = text == "default-binary"
                                       ? SwitchingModel(default_binary_model())
                                       : switching_model_from_json(text);
        exp.binary_neuron.vmap = default_voltage_map(exp.binary_neuron.device);
      }
      if (b.contains("vmap"))
        apply_vmap_overrides(exp.binary_neuron.vmap, b["vmap"],
                             "neuron.binary.vmap");
    }
    if (n.contains("mw")) {
      const json& m = n["mw"];
      check_keys(m, {"device", "vmap"}, "neuron.mw");
      if (m.contains("device")) {
        const std::string text = resolve_device_text(m["device"], "neuron.mw");
        exp.mw_neuron.device = text == "default-mw"
                                   ? default_mw_model()
                                   : mw_model_from_json(text);
        exp.mw_neuron.vmap = default_voltage_map(exp.mw_neuron.device);
      }
      if (m.contains("vmap"))
        apply_vmap_overrides(exp.mw_neuron.vmap, m["vmap"], "neuron.mw.vmap");
    }
    if (n.contains("lif")) {
      const json& l = n["lif"];
      check_keys(l, {"beta", "threshold", "surrogate_slope"}, "neuron.lif");
      exp.lif.beta = l.value("beta", exp.lif.beta);
      exp.lif.threshold = l.value("threshold", exp.lif.threshold);
      exp.lif.surrogate_slope =
          l.value("surrogate_slope", exp.lif.surrogate_slope);
      if (!(exp.lif.beta > 0.0 && exp.lif.beta < 1.0))
        throw Error(ErrorClass::Config, "lif beta must be in (0, 1)");
      if (!(exp.lif.threshold > 0.0))
        throw Error(ErrorClass::Config, "lif threshold must be positive");
    }
  }

  if (j.contains("noise")) {
    const json& n = j["noise"];
    check_keys(n, {"sigmas", "seed"}, "noise");
    if (n.contains("sigmas"))
      exp.sigmas = n["sigmas"].get<std::vector<double>>();
    exp.noise_seed = n.value("seed", std::uint64_t{0});
  }

  exp.threads = j.value("threads", 1);
  if (exp.threads < 1)
    throw Error(ErrorClass::Config, "threads must be >= 1");
  return exp;
}

Experiment experiment_from_json_file(const std::string& path) {
  return experiment_from_json(read_text_file(path));
}

}  // namespace dwsnn
