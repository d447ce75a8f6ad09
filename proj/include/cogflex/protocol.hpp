#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cogflex/models.hpp"
#include "cogflex/nn_core.hpp"
#include "cogflex/task_env.hpp"

namespace cogflex {

struct TrainingConfig {
  std::uint64_t master_seed = 12345;
  int batch_size = 32;
  int trials_per_task = 5000;
  int eval_trials_per_task = 1000;
  int max_epochs = 500;
  int early_stop_streak = 4;  // consecutive 100%-accuracy epochs
  int runs_kept = 50;
  int runs_launched = 70;
  double keep_threshold = 0.99;  // step-1 final accuracy must exceed this
  StimulusSampling sampling = StimulusSampling::IidUniform;
  bool adam_carryover = false;      // keep optimizer state across steps
  bool allow_regime_overlap = false;
  AdamConfig adam;
  int jobs = 1;
};

struct TrainResult {
  std::vector<double> curve;  // training accuracy per epoch
  int epochs = 0;
  bool converged = false;     // early-stop rule fired
  double final_accuracy = 0.0;
};

struct EvalResult {
  double accuracy = 0.0;          // correct / total trials
  std::vector<double> per_task;   // regime task order
};

// One seed through the full protocol: train on the first regime, test
// generalization on the second without updates, train on the second from the
// step-1 weights with a fresh optimizer, test stability on the first.
struct RunResult {
  int run_index = 0;
  std::uint64_t seed = 0;
  TrainResult step1;
  TrainResult step2;
  EvalResult generalization;
  EvalResult stability;
  std::vector<double> step1_params;  // weights after step 1
  std::vector<double> final_params;  // weights after step 2
};

struct AggregateStat {
  int count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
  double min = 0.0;
  double max = 0.0;
};

AggregateStat aggregate_stat(const std::vector<double>& values);

void validate_training_config(const TrainingConfig& cfg);

struct BatchResult {
  std::vector<RunResult> runs;  // launch order; may stop once the quota is met
  std::vector<int> kept;        // indices of the first qualifying runs
  AggregateStat generalization;
  AggregateStat stability;
};

// Seed streams hanging off one run seed; fixed assignments keep every
// consumer independent of the others.
enum class SeedStream : std::uint64_t {
  Init = 1,
  Step1Trials = 2,
  Step1Shuffle = 3,
  GeneralizationEval = 4,
  Step2Trials = 5,
  Step2Shuffle = 6,
  StabilityEval = 7,
  Sensitivity = 8,
};

std::uint64_t run_seed(const TrainingConfig& cfg, int run_index);
Rng stream_rng(std::uint64_t seed, SeedStream stream);

// Epoch accuracy is accumulated over the pre-update forward pass of each
// mini-batch; the trial set is generated once and reshuffled every epoch.
TrainResult train_regime(Network& net, Adam& adam, const Regime& regime,
                         const TrainingConfig& cfg, Rng& trial_rng,
                         Rng& shuffle_rng);

// Fresh trials, forward only.
EvalResult evaluate(Network& net, const Regime& regime, int trials_per_task,
                    Rng& rng, StimulusSampling sampling = StimulusSampling::IidUniform);

RunResult run_two_step(const ModelSpec& spec, const Regime& first,
                       const Regime& second, const TrainingConfig& cfg,
                       int run_index);

using RunProgress = std::function<void(const RunResult&)>;

// Launches runs in seed order until runs_kept qualify (or runs_launched is
// exhausted, which raises InsufficientRunsError). Results are identical for
// any jobs value. `keep_params`: drop weight snapshots of unkept runs.
BatchResult run_batch(const ModelSpec& spec, const Regime& first,
                      const Regime& second, const TrainingConfig& cfg,
                      bool keep_params = true, const RunProgress& progress = {});

}  // namespace cogflex
