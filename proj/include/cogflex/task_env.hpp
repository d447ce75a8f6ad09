#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cogflex/rng.hpp"

namespace cogflex {

// Size of a componential task family: n sensory dimensions x n motor
// dimensions, two values per dimension.
struct TaskStructure {
  int n = 0;

  TaskStructure() = default;
  explicit TaskStructure(int n_dims);

  int task_count() const { return n * n; }
  int stimulus_count() const { return 1 << n; }
  int cue_width() const { return 4 * n; }       // sensory cue block + motor cue block
  int stimulus_width() const { return 2 * n; }  // one two-unit slot per dimension
  int input_width() const { return 6 * n; }
  int output_width() const { return 2 * n; }
  double chance_accuracy() const { return 1.0 / (2.0 * n); }

  bool operator==(const TaskStructure&) const = default;
};

// One task: report the value of sensory dimension `sensory` on motor
// dimension `motor`.
struct Task {
  int sensory = 0;
  int motor = 0;

  auto operator<=>(const Task&) const = default;
};

// One multidimensional stimulus: values[d] in {0, 1} for each sensory
// dimension d.
struct Stimulus {
  std::vector<std::uint8_t> values;
};

Stimulus stimulus_from_index(const TaskStructure& s, int index);
int stimulus_index(const Stimulus& stim);

// A task set. Tasks are kept sorted and unique; the regime also admits a
// row-major n x n 0/1 matrix view (rows = sensory cues, cols = motor cues).
class Regime {
 public:
  Regime() = default;  // empty placeholder, no structure
  Regime(TaskStructure s, std::vector<Task> tasks);

  static Regime from_matrix(TaskStructure s, const std::vector<std::uint8_t>& cells);
  static Regime from_mask(TaskStructure s, std::uint64_t mask);

  const TaskStructure& structure() const { return structure_; }
  const std::vector<Task>& tasks() const { return tasks_; }
  int task_count() const { return static_cast<int>(tasks_.size()); }
  bool contains(Task t) const;

  // Bit (sensory * n + motor) set iff the task is present.
  std::uint64_t mask() const;
  std::vector<std::uint8_t> matrix() const;

  // True when every sensory cue and every motor cue appears in some task.
  bool covers_all_cues() const;

  bool operator==(const Regime&) const = default;

 private:
  TaskStructure structure_;
  std::vector<Task> tasks_;
};

// All tasks absent from `regime`, same structure.
Regime complement_regime(const Regime& regime);

// Binary cue vector, length 4n: sensory cue s sets positions {2s, 2s+1} of
// the first block, motor cue m sets {2m, 2m+1} of the second.
std::vector<std::uint8_t> encode_cues(const TaskStructure& s, Task t);

// Binary stimulus vector, length 2n: dimension d with value v sets position
// 2d + v.
std::vector<std::uint8_t> encode_stimulus(const TaskStructure& s, const Stimulus& stim);

// Index of the correct output unit: 2 * motor + stimulus value on the
// task's sensory dimension.
int target_index(const TaskStructure& s, Task t, const Stimulus& stim);

// One-hot vector of length 2n with target_index set.
std::vector<std::uint8_t> target_response(const TaskStructure& s, Task t,
                                          const Stimulus& stim);

enum class StimulusSampling {
  IidUniform,      // each trial's stimulus drawn independently
  BalancedBlocks,  // shuffled full blocks of all 2^n stimuli per task
};

StimulusSampling parse_stimulus_sampling(const std::string& name);
std::string to_string(StimulusSampling sampling);

// One materialized trial, mostly for tests and inspection; bulk storage is
// the packed TrialSet below.
struct Trial {
  Task task;
  Stimulus stimulus;
  std::vector<std::uint8_t> input;   // cue vector ++ stimulus vector, 6n
  std::vector<std::uint8_t> target;  // one-hot, 2n
};

// Packed trial storage: one byte per input position, one target index and
// one task id per trial.
struct TrialSet {
  TaskStructure structure;
  std::vector<std::uint8_t> inputs;    // size() * input_width, row-major
  std::vector<std::uint8_t> targets;   // hot index per trial
  std::vector<std::int32_t> task_ids;  // index into the source regime's tasks()

  std::size_t size() const { return targets.size(); }
  const std::uint8_t* input_row(std::size_t i) const {
    return inputs.data() + i * static_cast<std::size_t>(structure.input_width());
  }
};

// trials_per_task trials for every task in the regime, grouped by task in
// regime order. Stimuli are sampled per `sampling`.
TrialSet generate_trials(const Regime& regime, int trials_per_task, Rng& rng,
                         StimulusSampling sampling = StimulusSampling::IidUniform);

Trial trial_at(const Regime& regime, const TrialSet& set, std::size_t i);

// Built-in environments: a structure plus first and second training regimes.
struct EnvironmentPreset {
  std::string name;
  TaskStructure structure;
  Regime first;
  Regime second;
};

EnvironmentPreset environment_preset(const std::string& name);
std::vector<std::string> environment_preset_names();

// Plain-text regime files: n x n whitespace-separated 0/1 matrix.
Regime read_regime_file(const std::string& path);
void write_regime_file(const std::string& path, const Regime& regime);

}  // namespace cogflex
