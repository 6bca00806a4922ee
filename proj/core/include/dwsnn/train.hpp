#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dwsnn/adam.hpp"
#include "dwsnn/dataset.hpp"
#include "dwsnn/network.hpp"

namespace dwsnn {

struct EpochMetrics {
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct NoiseRow {
  double sigma = 0.0;
  double raw_accuracy = 0.0;
  double normalized_accuracy = 0.0;
};

// Deterministic, serializable record of one experiment. Two runs with the
// same config and seed produce byte-identical JSON; wall-clock time is kept
// out of the serialized record for that reason (callers write it to a
// sidecar).
struct RunRecord {
  std::string model_name;
  std::uint64_t seed = 0;
  std::string config_json;  // resolved-config snapshot (self-describing)
  std::string precision = "float64";
  std::vector<EpochMetrics> epochs;
  double final_val_accuracy = 0.0;
  std::optional<double> test_accuracy;
  std::vector<NoiseRow> noise_sweep;
  bool complete = false;
  std::string error;  // diagnostic when a run aborted
  double wall_seconds = 0.0;  // not serialized into the record JSON
};

std::string run_record_json(const RunRecord& record);
RunRecord run_record_from_json(const std::string& text);
std::string metrics_csv(const RunRecord& record);  // epoch,train_loss,val_acc
std::string noise_csv(const std::vector<NoiseRow>& rows);  // sigma,raw_acc,norm_acc

struct TrainResult {
  RunRecord record;
  ModelParams params;
  AdamState optimizer;
};

// Supervised training: shuffled minibatches of freshly Poisson-encoded
// samples in sampled mode, Adam updates, per-epoch validation accuracy with
// a fixed evaluation seed. The final partial batch is dropped in training;
// evaluation batches include it.
TrainResult train(const MLPConfig& config, const ImageSet& train_set,
                  const ImageSet& val_set, std::uint64_t seed,
                  const std::string& model_name);

// Argmax class predictions over the full set; batchnorm in inference mode,
// spiking in sampled mode unless overridden.
std::vector<int> predict(ModelParams& params, const MLPConfig& config,
                         const ImageSet& set, std::uint64_t seed,
                         Mode mode = Mode::Sampled);

// Fraction of argmax(logits) == label over the full set.
double evaluate(ModelParams& params, const MLPConfig& config,
                const ImageSet& set, std::uint64_t seed,
                Mode mode = Mode::Sampled);

// For each sigma, corrupts the test set (same seed across models), evaluates
// and records raw accuracy; normalized accuracy divides by the sigma=0 raw
// accuracy. The grid must contain sigma = 0.
std::vector<NoiseRow> noise_sweep(ModelParams& params, const MLPConfig& config,
                                  const ImageSet& test_set,
                                  const std::vector<double>& sigmas,
                                  std::uint64_t seed);

// Compact little-endian binary parameter files (byte-identical across runs).
void save_params(const ModelParams& params, const std::string& path);
ModelParams load_params(const MLPConfig& config, const std::string& path);

}  // namespace dwsnn
