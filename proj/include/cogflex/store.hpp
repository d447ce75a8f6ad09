#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cogflex/config.hpp"
#include "cogflex/models.hpp"
#include "cogflex/protocol.hpp"
#include "cogflex/task_env.hpp"

namespace cogflex {

// On-disk layout of one experiment store:
//   manifest.json
//   <batch>/aggregate.json      metadata + aggregate statistics
//   <batch>/runs.csv            one row per launched run
//   <batch>/curves.csv          per-epoch training accuracy
//   <batch>/params/run<i>_step1.json, run<i>_final.json   kept runs only
// All files are deterministic functions of (config, master seed, code
// version); nothing records wall-clock time or absolute paths.

struct ManifestInfo {
  std::string command;               // "train", "reproduce", ...
  std::string figure;                // reproduce preset id, empty otherwise
  std::uint64_t master_seed = 0;
  std::string config_hash;
  std::vector<std::string> batches;  // completed batch directory names
  std::vector<std::string> failed;   // batches that missed the kept-run quota
};

void write_manifest(const std::string& root, const ManifestInfo& info);
ManifestInfo read_manifest(const std::string& root);

struct BatchMeta {
  std::string name;         // directory name, unique within the store
  std::string environment;  // preset name or regime tag
  std::string model;        // "mlp_1" .. "concat_2"
  ModelSpec spec;
  Regime first;
  Regime second;

  BatchMeta(std::string name_, std::string environment_, std::string model_,
            ModelSpec spec_, Regime first_, Regime second_)
      : name(std::move(name_)),
        environment(std::move(environment_)),
        model(std::move(model_)),
        spec(std::move(spec_)),
        first(std::move(first_)),
        second(std::move(second_)) {}
};

void write_batch(const std::string& root, const BatchMeta& meta,
                 const BatchResult& result, const ExperimentConfig& cfg);

// Named-tensor weight snapshot for one network state.
void write_params_file(const std::string& path, const Network& net,
                       const std::vector<double>& params);
// Loads a snapshot into `net`, matching tensors by name and shape.
void load_params_file(const std::string& path, Network& net);

struct LoadedRun {
  int run_index = 0;
  std::uint64_t seed = 0;
  bool kept = false;
  int step1_epochs = 0;
  bool step1_converged = false;
  double step1_final_accuracy = 0.0;
  int step2_epochs = 0;
  bool step2_converged = false;
  double step2_final_accuracy = 0.0;
  double generalization = 0.0;
  double stability = 0.0;
  std::vector<double> gen_per_task;   // second-regime task order
  std::vector<double> stab_per_task;  // first-regime task order
};

struct LoadedBatch {
  std::string dir;  // absolute or store-relative batch directory
  std::string name;
  std::string environment;
  std::string model;
  ModelSpec spec;
  Regime first;
  Regime second;
  ExperimentConfig config;
  int launched = 0;
  std::vector<int> kept;
  AggregateStat generalization;
  AggregateStat stability;
  std::vector<LoadedRun> runs;

  // Path of a kept run's snapshot; empty when absent.
  std::string params_path(int run_index, bool step1) const;
};

LoadedBatch read_batch(const std::string& dir);

// Convenience: manifest + all completed batches of a store.
struct LoadedStore {
  ManifestInfo manifest;
  std::vector<LoadedBatch> batches;
};
LoadedStore read_store(const std::string& root);

// Shared CSV helpers (deterministic formatting; %.17g round-trips doubles).
std::string csv_num(double v);
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace cogflex
