#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dwsnn/config.hpp"
#include "dwsnn/device.hpp"
#include "dwsnn/error.hpp"
#include "dwsnn/figures.hpp"
#include "dwsnn/parallel.hpp"
#include "dwsnn/train.hpp"

namespace fs = std::filesystem;
using namespace dwsnn;

namespace {

int fail(const Error& e) {
  std::cerr << "dwsnn: error[" << error_class_name(e.klass())
            << "]: " << e.what() << std::endl;
  return 1;
}

int fail_internal(const std::exception& e) {
  std::cerr << "dwsnn: error[internal]: " << e.what() << std::endl;
  return 1;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty())
    throw Error(ErrorClass::Config, what + " path missing from config");
  if (!fs::exists(path))
    throw Error(ErrorClass::Io, "missing dataset: " + what + " file " + path);
}

// --- energy ---------------------------------------------------------------

struct EnergyArgs {
  double voltage = 1.8;
  double r2pt = 1029.0;
  double r4pt = 365.0;
  double duration_ns = 40.0;
};

int cmd_energy(const EnergyArgs& args) {
  EnergyParams params(args.r2pt, args.r4pt, args.duration_ns * 1e-9);
  const double v_track = track_voltage(args.voltage, params);
  const double pj = energy_per_pulse(args.voltage, params) * 1e12;
  std::cout << "v_track=" << fmt("%.3f", v_track) << " V, energy="
            << fmt("%.1f", pj) << " pJ" << std::endl;
  return 0;
}

// --- device-sim -------------------------------------------------------------

struct DeviceSimArgs {
  std::string model = "default-binary";
  double voltage = 1.75;
  int cycles = 15;
  int max_pulses = 64;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
};

SwitchingModel resolve_binary_model(const std::string& name) {
  if (name == "default-binary") return default_binary_model();
  if (name == "default-mw")
    throw Error(ErrorClass::Model,
                "device-sim cycles a binary model; default-mw is not one");
  if (fs::exists(name)) return switching_model_from_json(read_text_file(name));
  throw Error(ErrorClass::Model, "unknown model name: " + name);
}

int cmd_device_sim(const DeviceSimArgs& args) {
  const SwitchingModel model = resolve_binary_model(args.model);
  CyclingRecord record = simulate_cycling(model, args.voltage, args.cycles,
                                          args.max_pulses, args.seed,
                                          args.threads);
  const std::string csv = cycling_records_to_csv({record});
  if (args.out.empty())
    std::cout << csv;
  else
    write_text_file(args.out, csv);
  return 0;
}

// --- device-fit -------------------------------------------------------------

struct DeviceFitArgs {
  std::string input;
  std::string out;
  std::string table_out;
  int table_points = 11;
};

int cmd_device_fit(const DeviceFitArgs& args) {
  const auto records = cycling_records_from_csv(read_text_file(args.input));
  const auto counts = aggregate_counts(records);
  const SwitchingSigmoid fitted = fit_sigmoid_counts(counts);
  const std::string out_json = fitted_sigmoid_json(fitted, counts);
  if (args.out.empty())
    std::cout << out_json;
  else
    write_text_file(args.out, out_json);
  if (!args.table_out.empty())
    write_text_file(args.table_out,
                    device_table_json(SwitchingModel(fitted), args.table_points));
  std::cout << "fit: v50=" << fmt("%.4f", fitted.v50) << " V, width="
            << fmt("%.4f", fitted.width) << " V, domain=["
            << fmt("%.3f", fitted.domain_lo) << ", "
            << fmt("%.3f", fitted.domain_hi) << "] V" << std::endl;
  return 0;
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string out;
  int threads = 0;  // 0 = from config
  std::vector<std::uint64_t> seeds;  // overrides config seeds when non-empty
};

struct RunFiles {
  std::string stem;  // <model>_seed<seed>
  RunRecord record;
};

std::string run_stem(const std::string& model, std::uint64_t seed) {
  return model + "_seed" + std::to_string(seed);
}

int cmd_train(const TrainArgs& args) {
  Experiment exp = experiment_from_json_file(args.config);
  if (!args.seeds.empty()) exp.seeds = args.seeds;
  if (exp.models.empty())
    throw Error(ErrorClass::Config, "config.models must list at least one model");
  if (exp.seeds.empty())
    throw Error(ErrorClass::Config, "config.seeds must list at least one seed");
  require_file(exp.train_images, "train_images");
  require_file(exp.train_labels, "train_labels");

  const ImageSet full = load_idx_files(exp.train_images, exp.train_labels);
  const ImageSet pool =
      exp.train_subset > 0 ? subset(full, exp.train_subset) : full;
  const auto [train_set, val_set] = split(pool, exp.val_fraction, exp.split_seed);

  fs::create_directories(args.out);
  const int threads = args.threads > 0 ? args.threads : exp.threads;

  struct Task {
    std::string model;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const auto& model : exp.models)
    for (std::uint64_t seed : exp.seeds) tasks.push_back({model, seed});

  std::vector<RunFiles> results(tasks.size());
  run_parallel(threads, static_cast<int>(tasks.size()), [&](int i) {
    const Task& task = tasks[i];
    const MLPConfig config = exp.instantiate(task.model);
    TrainResult result =
        train(config, train_set, val_set, task.seed, task.model);
    result.record.config_json = mlp_config_to_json(config);

    const std::string stem = run_stem(task.model, task.seed);
    const fs::path base = fs::path(args.out) / stem;
    write_text_file(base.string() + ".json", run_record_json(result.record));
    write_text_file(base.string() + "_metrics.csv", metrics_csv(result.record));
    save_params(result.params, base.string() + ".params.bin");
    write_text_file(base.string() + ".timing.txt",
                    "wall_seconds=" + fmt("%.3f", result.record.wall_seconds) +
                        "\n");
    results[i] = RunFiles{stem, std::move(result.record)};
  });

  bool all_complete = true;
  for (const auto& r : results) {
    if (!r.record.complete) {
      all_complete = false;
      std::cerr << "dwsnn: run " << r.stem << " incomplete: " << r.record.error
                << std::endl;
    }
  }

  // Aggregate validation-accuracy and loss curves (mean, and std with >= 2
  // seeds) per model across seeds.
  const std::size_t n_epochs =
      results.empty() ? 0 : results[0].record.epochs.size();
  if (n_epochs > 0 && all_complete) {
    std::vector<double> epoch_axis(n_epochs);
    for (std::size_t e = 0; e < n_epochs; ++e)
      epoch_axis[e] = static_cast<double>(e + 1);
    FigureTable acc{"epoch", epoch_axis, {}, {}};
    FigureTable loss{"epoch", epoch_axis, {}, {}};
    for (const auto& model : exp.models) {
      std::vector<std::vector<double>> acc_runs, loss_runs;
      for (const auto& r : results) {
        if (r.record.model_name != model) continue;
        std::vector<double> a, l;
        for (const auto& e : r.record.epochs) {
          a.push_back(e.val_accuracy);
          l.push_back(e.train_loss);
        }
        acc_runs.push_back(std::move(a));
        loss_runs.push_back(std::move(l));
      }
      const auto [acc_mean, acc_std] = mean_std_rows(acc_runs);
      const auto [loss_mean, loss_std] = mean_std_rows(loss_runs);
      acc.add_series(model + "_mean", acc_mean);
      loss.add_series(model + "_mean", loss_mean);
      if (acc_runs.size() >= 2) {
        acc.add_series(model + "_std", acc_std);
        loss.add_series(model + "_std", loss_std);
      }
    }
    const fs::path out(args.out);
    write_text_file((out / "fig_val_accuracy.csv").string(), acc.to_csv());
    write_text_file((out / "fig_val_accuracy.svg").string(),
                    figure_svg(acc, "Validation accuracy", "epoch", "accuracy"));
    write_text_file((out / "fig_train_loss.csv").string(), loss.to_csv());
    write_text_file((out / "fig_train_loss.svg").string(),
                    figure_svg(loss, "Training loss", "epoch", "loss"));
  }

  for (const auto& r : results)
    std::cout << r.stem << ": final_val_acc="
              << fmt("%.4f", r.record.final_val_accuracy)
              << (r.record.complete ? "" : " (incomplete)") << std::endl;
  return all_complete ? 0 : 1;
}

// --- sweep-noise --------------------------------------------------------------

struct SweepArgs {
  std::string config;
  std::string models_dir;
  std::string out;
  int threads = 0;
};

int cmd_sweep_noise(const SweepArgs& args) {
  Experiment exp = experiment_from_json_file(args.config);
  if (exp.sigmas.empty())
    throw Error(ErrorClass::Config, "config.noise.sigmas must be set");
  require_file(exp.test_images, "test_images");
  require_file(exp.test_labels, "test_labels");

  const ImageSet full = load_idx_files(exp.test_images, exp.test_labels);
  const ImageSet test_set =
      exp.test_subset > 0 ? subset(full, exp.test_subset) : full;

  // Best run per model type by clean validation accuracy; records read in
  // sorted filename order.
  std::vector<fs::path> record_paths;
  if (!fs::is_directory(args.models_dir))
    throw Error(ErrorClass::Io, "model directory not found: " + args.models_dir);
  for (const auto& entry : fs::directory_iterator(args.models_dir))
    if (entry.path().extension() == ".json")
      record_paths.push_back(entry.path());
  std::sort(record_paths.begin(), record_paths.end());

  struct Best {
    RunRecord record;
    fs::path params;
  };
  std::map<std::string, Best> best;
  for (const auto& path : record_paths) {
    RunRecord record;
    try {
      record = run_record_from_json(read_text_file(path.string()));
    } catch (const Error&) {
      continue;  // not a run record
    }
    if (!record.complete || record.model_name.empty()) continue;
    fs::path params = path;
    params.replace_extension(".params.bin");
    if (!fs::exists(params)) continue;
    const std::string name = record.model_name;
    auto it = best.find(name);
    if (it == best.end() ||
        record.final_val_accuracy > it->second.record.final_val_accuracy)
      best[name] = Best{std::move(record), params};
  }
  if (best.empty())
    throw Error(ErrorClass::Data,
                "no trained models found in " + args.models_dir);

  fs::create_directories(args.out);
  std::vector<std::string> types;
  for (const auto& [type, _] : best) types.push_back(type);

  std::vector<std::vector<NoiseRow>> sweeps(types.size());
  const int threads = args.threads > 0 ? args.threads : exp.threads;
  run_parallel(threads, static_cast<int>(types.size()), [&](int i) {
    const std::string& type = types[i];
    const MLPConfig config = exp.instantiate(type);
    ModelParams params = load_params(config, best[type].params.string());
    sweeps[i] = noise_sweep(params, config, test_set, exp.sigmas, exp.noise_seed);
  });

  FigureTable raw{"sigma", exp.sigmas, {}, {}};
  FigureTable norm{"sigma", exp.sigmas, {}, {}};
  for (std::size_t i = 0; i < types.size(); ++i) {
    std::vector<double> r, n;
    for (const auto& row : sweeps[i]) {
      r.push_back(row.raw_accuracy);
      n.push_back(row.normalized_accuracy);
    }
    raw.add_series(types[i], r);
    norm.add_series(types[i], n);
    write_text_file(
        (fs::path(args.out) / (types[i] + "_noise.csv")).string(),
        noise_csv(sweeps[i]));
  }
  const fs::path out(args.out);
  write_text_file((out / "noise_raw.csv").string(), raw.to_csv());
  write_text_file((out / "noise_normalized.csv").string(), norm.to_csv());
  write_text_file((out / "noise_raw.svg").string(),
                  figure_svg(raw, "Test accuracy under noise", "sigma",
                             "accuracy"));
  write_text_file((out / "noise_normalized.svg").string(),
                  figure_svg(norm, "Normalized test accuracy under noise",
                             "sigma", "normalized accuracy"));

  // Crossover report: smallest sigma where a stochastic model's raw accuracy
  // reaches the LIF baseline.
  std::ostringstream crossover;
  const auto lif_it = std::find(types.begin(), types.end(), "lif");
  if (lif_it != types.end()) {
    const auto& lif_rows = sweeps[static_cast<std::size_t>(lif_it - types.begin())];
    for (std::size_t i = 0; i < types.size(); ++i) {
      if (types[i] == "lif") continue;
      std::optional<double> sigma;
      for (std::size_t k = 0; k < exp.sigmas.size(); ++k) {
        if (exp.sigmas[k] > 0.0 &&
            sweeps[i][k].raw_accuracy >= lif_rows[k].raw_accuracy) {
          sigma = exp.sigmas[k];
          break;
        }
      }
      crossover << "crossover " << types[i] << "/lif: "
                << (sigma ? "sigma=" + fmt("%.3g", *sigma)
                          : std::string("none within grid"))
                << '\n';
    }
  } else {
    crossover << "crossover: no lif baseline in model directory\n";
  }
  std::cout << crossover.str();
  write_text_file((out / "crossover.txt").string(), crossover.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic-device spiking neural network simulator"};
  app.require_subcommand(1);

  EnergyArgs energy_args;
  auto* energy = app.add_subcommand(
      "energy", "Write-pulse energy estimate from the resistance divider");
  energy->add_option("--voltage", energy_args.voltage, "Applied voltage [V]");
  energy->add_option("--r2pt", energy_args.r2pt, "Two-point resistance [ohm]");
  energy->add_option("--r4pt", energy_args.r4pt, "Four-point resistance [ohm]");
  energy->add_option("--duration-ns", energy_args.duration_ns,
                     "Effective pulse duration [ns]");

  DeviceSimArgs sim_args;
  auto* sim = app.add_subcommand(
      "device-sim", "Monte Carlo pulse cycling of a switching model");
  sim->add_option("--model", sim_args.model,
                  "default-binary or a device JSON file");
  sim->add_option("--voltage", sim_args.voltage, "Pulse amplitude [V]");
  sim->add_option("--cycles", sim_args.cycles, "Number of cycles");
  sim->add_option("--max-pulses", sim_args.max_pulses,
                  "Censoring limit per cycle");
  sim->add_option("--seed", sim_args.seed, "RNG seed");
  sim->add_option("--threads", sim_args.threads, "Worker threads");
  sim->add_option("--out", sim_args.out, "Output CSV (stdout when omitted)");

  DeviceFitArgs fit_args;
  auto* fit = app.add_subcommand(
      "device-fit", "Fit a switching sigmoid to cycling records");
  fit->add_option("--input", fit_args.input, "Cycling-record CSV")->required();
  fit->add_option("--out", fit_args.out, "Fitted model JSON (stdout when omitted)");
  fit->add_option("--table-out", fit_args.table_out,
                  "Optional lookup-table JSON export");
  fit->add_option("--table-points", fit_args.table_points,
                  "Points in the exported table");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand(
      "train", "Train spiking MLPs across model types and seeds");
  train_cmd->add_option("--config", train_args.config, "Experiment JSON")
      ->required();
  train_cmd->add_option("--out", train_args.out, "Run directory")->required();
  train_cmd->add_option("--threads", train_args.threads,
                        "Worker threads (overrides config)");
  train_cmd->add_option("--seed", train_args.seeds,
                        "Seed overrides (repeatable)");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand(
      "sweep-noise", "Noise-robustness sweep over trained models");
  sweep->add_option("--config", sweep_args.config, "Experiment JSON")
      ->required();
  sweep->add_option("--models", sweep_args.models_dir,
                    "Directory of train outputs")->required();
  sweep->add_option("--out", sweep_args.out, "Sweep output directory")
      ->required();
  sweep->add_option("--threads", sweep_args.threads,
                    "Worker threads (overrides config)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (energy->parsed()) return cmd_energy(energy_args);
    if (sim->parsed()) return cmd_device_sim(sim_args);
    if (fit->parsed()) return cmd_device_fit(fit_args);
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (sweep->parsed()) return cmd_sweep_noise(sweep_args);
  } catch (const Error& e) {
    return fail(e);
  } catch (const std::exception& e) {
    return fail_internal(e);
  }
  return 0;
}
