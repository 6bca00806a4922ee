#include "dwsnn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dwsnn/error.hpp"
#include "dwsnn/rng.hpp"

namespace dwsnn {

using nlohmann::json;

namespace {

std::string csv_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::vector<int> batch_labels(const ImageSet& set,
                              const std::vector<std::size_t>& indices) {
  std::vector<int> labels;
  labels.reserve(indices.size());
  for (std::size_t i : indices) labels.push_back(set.labels[i]);
  return labels;
}

}  // namespace

std::string run_record_json(const RunRecord& record) {
  json j;
  j["model"] = record.model_name;
  j["seed"] = record.seed;
  j["precision"] = record.precision;
  j["complete"] = record.complete;
  if (!record.error.empty()) j["error"] = record.error;
  j["config"] = record.config_json.empty()
                    ? json::object()
                    : json::parse(record.config_json);
  json epochs = json::array();
  for (const auto& e : record.epochs)
    epochs.push_back({{"train_loss", e.train_loss},
                      {"val_accuracy", e.val_accuracy}});
  j["epochs"] = epochs;
  j["final_val_accuracy"] = record.final_val_accuracy;
  if (record.test_accuracy.has_value())
    j["test_accuracy"] = *record.test_accuracy;
  if (!record.noise_sweep.empty()) {
    json rows = json::array();
    for (const auto& r : record.noise_sweep)
      rows.push_back({{"sigma", r.sigma},
                      {"raw_accuracy", r.raw_accuracy},
                      {"normalized_accuracy", r.normalized_accuracy}});
    j["noise_sweep"] = rows;
  }
  return j.dump(2) + "\n";
}

RunRecord run_record_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw Error(ErrorClass::Data, "malformed run record JSON");
  RunRecord r;
  r.model_name = j.value("model", "");
  r.seed = j.value("seed", std::uint64_t{0});
  r.precision = j.value("precision", "float64");
  r.complete = j.value("complete", false);
  r.error = j.value("error", "");
  if (j.contains("config")) r.config_json = j["config"].dump();
  if (j.contains("epochs"))
    for (const auto& e : j["epochs"])
      r.epochs.push_back({e.value("train_loss", 0.0),
                          e.value("val_accuracy", 0.0)});
  r.final_val_accuracy = j.value("final_val_accuracy", 0.0);
  if (j.contains("test_accuracy"))
    r.test_accuracy = j["test_accuracy"].get<double>();
  if (j.contains("noise_sweep"))
    for (const auto& row : j["noise_sweep"])
      r.noise_sweep.push_back({row.value("sigma", 0.0),
                               row.value("raw_accuracy", 0.0),
                               row.value("normalized_accuracy", 0.0)});
  return r;
}

std::string metrics_csv(const RunRecord& record) {
  std::ostringstream out;
  out << "epoch,train_loss,val_acc\n";
  for (std::size_t e = 0; e < record.epochs.size(); ++e)
    out << (e + 1) << ',' << csv_double(record.epochs[e].train_loss) << ','
        << csv_double(record.epochs[e].val_accuracy) << '\n';
  return out.str();
}

std::string noise_csv(const std::vector<NoiseRow>& rows) {
  std::ostringstream out;
  out << "sigma,raw_acc,norm_acc\n";
  for (const auto& r : rows)
    out << csv_double(r.sigma) << ',' << csv_double(r.raw_accuracy) << ','
        << csv_double(r.normalized_accuracy) << '\n';
  return out.str();
}

std::vector<int> predict(ModelParams& params, const MLPConfig& config,
                         const ImageSet& set, std::uint64_t seed, Mode mode) {
  if (set.size() == 0)
    throw Error(ErrorClass::Range, "cannot evaluate on an empty set");
  const std::uint64_t encode_seed = derive_stream(seed, {stream_tag::kEncode}).next_u64();
  std::vector<int> predictions;
  predictions.reserve(set.size());
  std::size_t begin = 0;
  std::size_t batch_index = 0;
  while (begin < set.size()) {
    const std::size_t end = std::min(set.size(), begin + config.batch_size);
    SpikeBatch spikes =
        poisson_encode(set, begin, end, config.timesteps, encode_seed, begin);
    RngStream neuron_rng =
        derive_stream(seed, {stream_tag::kNeuron, batch_index});
    Graph g;
    ForwardNodes nodes =
        forward(g, params, config, spikes, mode, neuron_rng, false);
    const Tensor& logits = g.value(nodes.logits);
    for (std::size_t b = 0; b < end - begin; ++b) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < config.output; ++c)
        if (logits.at(b, c) > logits.at(b, best)) best = c;
      predictions.push_back(static_cast<int>(best));
    }
    begin = end;
    ++batch_index;
  }
  return predictions;
}

double evaluate(ModelParams& params, const MLPConfig& config,
                const ImageSet& set, std::uint64_t seed, Mode mode) {
  const std::vector<int> predictions = predict(params, config, set, seed, mode);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < set.size(); ++i)
    if (predictions[i] == set.labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(set.size());
}

TrainResult train(const MLPConfig& config, const ImageSet& train_set,
                  const ImageSet& val_set, std::uint64_t seed,
                  const std::string& model_name) {
  config.validate();
  if (train_set.size() < config.batch_size)
    throw Error(ErrorClass::Config,
                "training set smaller than one batch");

  const auto t_start = std::chrono::steady_clock::now();
  TrainResult result{RunRecord{}, ModelParams::init(config, seed), AdamState{}};
  result.record.model_name = model_name;
  result.record.seed = seed;
  result.optimizer = AdamState::init(result.params.trainable());

  const std::uint64_t eval_seed = derive_stream(seed, {stream_tag::kEval}).next_u64();
  const std::size_t n_batches = train_set.size() / config.batch_size;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    RngStream shuffle_rng = derive_stream(
        seed, {stream_tag::kShuffle, static_cast<std::uint64_t>(epoch)});
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.next_below(i)]);

    double loss_sum = 0.0;
    for (std::size_t batch = 0; batch < n_batches; ++batch) {
      std::vector<std::size_t> indices(
          order.begin() + batch * config.batch_size,
          order.begin() + (batch + 1) * config.batch_size);
      // Fresh Poisson draw per presentation.
      const std::uint64_t encode_seed =
          derive_stream(seed, {stream_tag::kEncode,
                               static_cast<std::uint64_t>(epoch), batch})
              .next_u64();
      SpikeBatch spikes = poisson_encode_gather(train_set, indices,
                                                config.timesteps, encode_seed, 0);
      RngStream neuron_rng = derive_stream(
          seed, {stream_tag::kNeuron, static_cast<std::uint64_t>(epoch), batch});

      Graph g;
      ForwardNodes nodes = forward(g, result.params, config, spikes,
                                   Mode::Sampled, neuron_rng, true);
      NodeId loss =
          g.softmax_cross_entropy(nodes.logits, batch_labels(train_set, indices));
      const double loss_value = g.value(loss)[0];
      if (!std::isfinite(loss_value)) {
        result.record.error =
            "non-finite loss at epoch " + std::to_string(epoch + 1) +
            " batch " + std::to_string(batch + 1);
        result.record.complete = false;
        return result;
      }
      loss_sum += loss_value;
      g.backward(loss);

      std::vector<Tensor> grads;
      grads.reserve(nodes.trainable_nodes.size());
      for (NodeId id : nodes.trainable_nodes) grads.push_back(g.grad(id));
      adam_update(result.params.trainable(), grads, result.optimizer,
                  config.learning_rate);
    }

    EpochMetrics metrics;
    metrics.train_loss = loss_sum / static_cast<double>(n_batches);
    metrics.val_accuracy = evaluate(result.params, config, val_set, eval_seed);
    result.record.epochs.push_back(metrics);
  }

  result.record.final_val_accuracy =
      result.record.epochs.empty()
          ? evaluate(result.params, config, val_set, eval_seed)
          : result.record.epochs.back().val_accuracy;
  result.record.complete = true;
  result.record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return result;
}

std::vector<NoiseRow> noise_sweep(ModelParams& params, const MLPConfig& config,
                                  const ImageSet& test_set,
                                  const std::vector<double>& sigmas,
                                  std::uint64_t seed) {
  const auto anchor = std::find(sigmas.begin(), sigmas.end(), 0.0);
  if (anchor == sigmas.end())
    throw Error(ErrorClass::Range,
                "noise grid must include sigma = 0 (normalization anchor)");

  std::vector<NoiseRow> rows;
  rows.reserve(sigmas.size());
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    const double sigma = sigmas[i];
    const ImageSet noisy =
        add_noise(test_set, NoiseSpec{sigma},
                  derive_stream(seed, {stream_tag::kNoise, i}).next_u64());
    const double acc =
        evaluate(params, config, noisy,
                 derive_stream(seed, {stream_tag::kEval, i}).next_u64());
    rows.push_back({sigma, acc, 0.0});
  }
  const double clean =
      rows[static_cast<std::size_t>(anchor - sigmas.begin())].raw_accuracy;
  for (auto& r : rows)
    r.normalized_accuracy = clean > 0.0 ? r.raw_accuracy / clean : 0.0;
  return rows;
}

namespace {

constexpr char kParamsMagic[8] = {'D', 'W', 'S', 'N', 'N', 'P', 'R', '1'};

void write_tensor(std::FILE* f, const Tensor& t) {
  const std::uint32_t rank = static_cast<std::uint32_t>(t.rank());
  std::fwrite(&rank, sizeof(rank), 1, f);
  for (std::size_t d : t.shape()) {
    const std::uint64_t dim = d;
    std::fwrite(&dim, sizeof(dim), 1, f);
  }
  std::fwrite(t.data(), sizeof(double), t.size(), f);
}

Tensor read_tensor(std::FILE* f) {
  std::uint32_t rank = 0;
  if (std::fread(&rank, sizeof(rank), 1, f) != 1)
    throw Error(ErrorClass::Data, "truncated parameter file");
  if (rank > 2) throw Error(ErrorClass::Data, "bad tensor rank in parameter file");
  std::vector<std::size_t> shape;
  for (std::uint32_t i = 0; i < rank; ++i) {
    std::uint64_t dim = 0;
    if (std::fread(&dim, sizeof(dim), 1, f) != 1)
      throw Error(ErrorClass::Data, "truncated parameter file");
    shape.push_back(static_cast<std::size_t>(dim));
  }
  Tensor t(shape);
  if (t.size() > 0 && std::fread(t.data(), sizeof(double), t.size(), f) != t.size())
    throw Error(ErrorClass::Data, "truncated parameter file");
  return t;
}

std::vector<Tensor*> all_tensors(ModelParams& p) {
  return {&p.w1, &p.b1, &p.bn1.gamma, &p.bn1.beta, &p.bn1.running_mean,
          &p.bn1.running_var, &p.w2, &p.b2, &p.bn2.gamma, &p.bn2.beta,
          &p.bn2.running_mean, &p.bn2.running_var, &p.w3, &p.b3};
}

}  // namespace

void save_params(const ModelParams& params, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) throw Error(ErrorClass::Io, "cannot write " + path);
  std::fwrite(kParamsMagic, 1, sizeof(kParamsMagic), f);
  ModelParams& mutable_params = const_cast<ModelParams&>(params);
  for (Tensor* t : all_tensors(mutable_params)) write_tensor(f, *t);
  std::fclose(f);
}

ModelParams load_params(const MLPConfig& config, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (f == nullptr) throw Error(ErrorClass::Io, "cannot open " + path);
  char magic[8];
  if (std::fread(magic, 1, sizeof(magic), f) != sizeof(magic) ||
      std::memcmp(magic, kParamsMagic, sizeof(magic)) != 0) {
    std::fclose(f);
    throw Error(ErrorClass::Data, "bad parameter file magic in " + path);
  }
  ModelParams reference = ModelParams::init(config, 0);
  try {
    for (Tensor* t : all_tensors(reference)) {
      Tensor loaded = read_tensor(f);
      if (!loaded.same_shape(*t))
        throw Error(ErrorClass::Data,
                    "parameter shape mismatch against config in " + path);
      *t = std::move(loaded);
    }
  } catch (...) {
    std::fclose(f);
    throw;
  }
  std::fclose(f);
  return reference;
}

}  // namespace dwsnn
