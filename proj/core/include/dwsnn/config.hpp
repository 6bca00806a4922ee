#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dwsnn/network.hpp"

namespace dwsnn {

// Parsed experiment description (see README for the JSON schema). Parsing
// validates against the schema up front and rejects unknown keys by name.
struct Experiment {
  // dataset
  std::string train_images, train_labels;
  std::string test_images, test_labels;
  std::size_t train_subset = 0;  // 0 = use everything
  std::size_t test_subset = 0;
  double val_fraction = 0.1;
  std::uint64_t split_seed = 42;  // shared across models and seeds

  // network/training template; neurons filled per model by instantiate()
  MLPConfig base;

  std::vector<std::string> models;  // subset of {binary, mw, lif}
  std::vector<std::uint64_t> seeds;

  // noise sweep
  std::vector<double> sigmas;
  std::uint64_t noise_seed = 0;

  int threads = 1;

  // resolved neuron specifications
  BinaryNeuronParams binary_neuron;
  MWNeuronParams mw_neuron;
  LIFParams lif;

  // MLPConfig for one of the configured model kinds.
  MLPConfig instantiate(const std::string& model_name) const;
};

Experiment experiment_from_json(const std::string& text);
Experiment experiment_from_json_file(const std::string& path);

// Resolved-config snapshot embedded in every run record.
std::string mlp_config_to_json(const MLPConfig& config);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace dwsnn
