#include "cogflex/task_env.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "cogflex/errors.hpp"

namespace cogflex {

namespace {

void check_task(const TaskStructure& s, Task t) {
  if (t.sensory < 0 || t.sensory >= s.n || t.motor < 0 || t.motor >= s.n) {
    throw ValidationError("task (" + std::to_string(t.sensory) + ", " +
                          std::to_string(t.motor) + ") out of range for n = " +
                          std::to_string(s.n));
  }
}

}  // namespace

TaskStructure::TaskStructure(int n_dims) : n(n_dims) {
  if (n < 1) {
    throw ValidationError("task structure needs n >= 1, got " + std::to_string(n));
  }
  if (n > 8) {
    throw ValidationError("task structure supports n <= 8, got " + std::to_string(n));
  }
}

Stimulus stimulus_from_index(const TaskStructure& s, int index) {
  if (index < 0 || index >= s.stimulus_count()) {
    throw ValidationError("stimulus index " + std::to_string(index) +
                          " out of range for n = " + std::to_string(s.n));
  }
  Stimulus stim;
  stim.values.resize(s.n);
  for (int d = 0; d < s.n; ++d) {
    stim.values[d] = static_cast<std::uint8_t>((index >> d) & 1);
  }
  return stim;
}

int stimulus_index(const Stimulus& stim) {
  int index = 0;
  for (std::size_t d = 0; d < stim.values.size(); ++d) {
    if (stim.values[d] > 1) {
      throw ValidationError("stimulus values must be 0 or 1");
    }
    index |= static_cast<int>(stim.values[d]) << d;
  }
  return index;
}

Regime::Regime(TaskStructure s, std::vector<Task> tasks)
    : structure_(s), tasks_(std::move(tasks)) {
  if (tasks_.empty()) {
    throw ValidationError("regime must contain at least one task");
  }
  for (Task t : tasks_) check_task(structure_, t);
  std::sort(tasks_.begin(), tasks_.end());
  if (std::adjacent_find(tasks_.begin(), tasks_.end()) != tasks_.end()) {
    throw ValidationError("regime contains a duplicate task");
  }
}

Regime Regime::from_matrix(TaskStructure s, const std::vector<std::uint8_t>& cells) {
  if (cells.size() != static_cast<std::size_t>(s.task_count())) {
    throw ValidationError("regime matrix needs " + std::to_string(s.task_count()) +
                          " cells, got " + std::to_string(cells.size()));
  }
  std::vector<Task> tasks;
  for (int r = 0; r < s.n; ++r) {
    for (int c = 0; c < s.n; ++c) {
      const std::uint8_t v = cells[static_cast<std::size_t>(r) * s.n + c];
      if (v > 1) throw ValidationError("regime matrix cells must be 0 or 1");
      if (v) tasks.push_back({r, c});
    }
  }
  return Regime(s, std::move(tasks));
}

Regime Regime::from_mask(TaskStructure s, std::uint64_t mask) {
  std::vector<std::uint8_t> cells(s.task_count());
  for (int i = 0; i < s.task_count(); ++i) {
    cells[i] = static_cast<std::uint8_t>((mask >> i) & 1);
  }
  return from_matrix(s, cells);
}

bool Regime::contains(Task t) const {
  return std::binary_search(tasks_.begin(), tasks_.end(), t);
}

std::uint64_t Regime::mask() const {
  std::uint64_t m = 0;
  for (Task t : tasks_) {
    m |= std::uint64_t{1} << (t.sensory * structure_.n + t.motor);
  }
  return m;
}

std::vector<std::uint8_t> Regime::matrix() const {
  std::vector<std::uint8_t> cells(structure_.task_count(), 0);
  for (Task t : tasks_) {
    cells[static_cast<std::size_t>(t.sensory) * structure_.n + t.motor] = 1;
  }
  return cells;
}

bool Regime::covers_all_cues() const {
  std::vector<bool> sensory(structure_.n, false), motor(structure_.n, false);
  for (Task t : tasks_) {
    sensory[t.sensory] = true;
    motor[t.motor] = true;
  }
  return std::all_of(sensory.begin(), sensory.end(), [](bool b) { return b; }) &&
         std::all_of(motor.begin(), motor.end(), [](bool b) { return b; });
}

Regime complement_regime(const Regime& regime) {
  const TaskStructure& s = regime.structure();
  std::vector<Task> rest;
  for (int r = 0; r < s.n; ++r) {
    for (int c = 0; c < s.n; ++c) {
      if (!regime.contains({r, c})) rest.push_back({r, c});
    }
  }
  if (rest.empty()) {
    throw ValidationError("complement of the full regime is empty");
  }
  return Regime(s, std::move(rest));
}

std::vector<std::uint8_t> encode_cues(const TaskStructure& s, Task t) {
  check_task(s, t);
  std::vector<std::uint8_t> v(s.cue_width(), 0);
  v[2 * t.sensory] = 1;
  v[2 * t.sensory + 1] = 1;
  v[2 * s.n + 2 * t.motor] = 1;
  v[2 * s.n + 2 * t.motor + 1] = 1;
  return v;
}

std::vector<std::uint8_t> encode_stimulus(const TaskStructure& s, const Stimulus& stim) {
  if (stim.values.size() != static_cast<std::size_t>(s.n)) {
    throw ValidationError("stimulus has " + std::to_string(stim.values.size()) +
                          " dimensions, expected " + std::to_string(s.n));
  }
  std::vector<std::uint8_t> v(s.stimulus_width(), 0);
  for (int d = 0; d < s.n; ++d) {
    if (stim.values[d] > 1) throw ValidationError("stimulus values must be 0 or 1");
    v[2 * d + stim.values[d]] = 1;
  }
  return v;
}

int target_index(const TaskStructure& s, Task t, const Stimulus& stim) {
  check_task(s, t);
  if (stim.values.size() != static_cast<std::size_t>(s.n)) {
    throw ValidationError("stimulus dimension mismatch in target_index");
  }
  return 2 * t.motor + stim.values[t.sensory];
}

std::vector<std::uint8_t> target_response(const TaskStructure& s, Task t,
                                          const Stimulus& stim) {
  std::vector<std::uint8_t> v(s.output_width(), 0);
  v[target_index(s, t, stim)] = 1;
  return v;
}

StimulusSampling parse_stimulus_sampling(const std::string& name) {
  if (name == "iid") return StimulusSampling::IidUniform;
  if (name == "balanced") return StimulusSampling::BalancedBlocks;
  throw ValidationError("unknown stimulus sampling '" + name +
                        "' (expected iid or balanced)");
}

std::string to_string(StimulusSampling sampling) {
  return sampling == StimulusSampling::IidUniform ? "iid" : "balanced";
}

TrialSet generate_trials(const Regime& regime, int trials_per_task, Rng& rng,
                         StimulusSampling sampling) {
  if (trials_per_task < 1) {
    throw ValidationError("trials_per_task must be positive");
  }
  const TaskStructure& s = regime.structure();
  const int width = s.input_width();
  const std::size_t total =
      static_cast<std::size_t>(trials_per_task) * regime.tasks().size();

  TrialSet set;
  set.structure = s;
  set.inputs.assign(total * width, 0);
  set.targets.resize(total);
  set.task_ids.resize(total);

  std::vector<int> block(s.stimulus_count());
  std::size_t row = 0;
  for (std::size_t ti = 0; ti < regime.tasks().size(); ++ti) {
    const Task task = regime.tasks()[ti];
    const std::vector<std::uint8_t> cue = encode_cues(s, task);
    int block_pos = s.stimulus_count();
    for (int k = 0; k < trials_per_task; ++k, ++row) {
      int stim_idx;
      if (sampling == StimulusSampling::IidUniform) {
        stim_idx = rng.uniform_int(s.stimulus_count());
      } else {
        if (block_pos == s.stimulus_count()) {
          for (int i = 0; i < s.stimulus_count(); ++i) block[i] = i;
          rng.shuffle(block);
          block_pos = 0;
        }
        stim_idx = block[block_pos++];
      }
      std::uint8_t* in = set.inputs.data() + row * width;
      std::copy(cue.begin(), cue.end(), in);
      std::uint8_t* stim_block = in + s.cue_width();
      for (int d = 0; d < s.n; ++d) {
        stim_block[2 * d + ((stim_idx >> d) & 1)] = 1;
      }
      set.targets[row] = static_cast<std::uint8_t>(
          2 * task.motor + ((stim_idx >> task.sensory) & 1));
      set.task_ids[row] = static_cast<std::int32_t>(ti);
    }
  }
  return set;
}

Trial trial_at(const Regime& regime, const TrialSet& set, std::size_t i) {
  if (i >= set.size()) throw ValidationError("trial index out of range");
  const TaskStructure& s = set.structure;
  Trial t;
  t.task = regime.tasks()[set.task_ids[i]];
  t.input.assign(set.input_row(i), set.input_row(i) + s.input_width());
  t.stimulus.values.resize(s.n);
  for (int d = 0; d < s.n; ++d) {
    t.stimulus.values[d] = t.input[s.cue_width() + 2 * d + 1] ? 1 : 0;
  }
  t.target.assign(s.output_width(), 0);
  t.target[set.targets[i]] = 1;
  return t;
}

namespace {

Regime regime_from_rows(TaskStructure s, const std::vector<std::string>& rows) {
  std::vector<std::uint8_t> cells;
  cells.reserve(s.task_count());
  for (const std::string& row : rows) {
    for (char ch : row) cells.push_back(static_cast<std::uint8_t>(ch - '0'));
  }
  return Regime::from_matrix(s, cells);
}

struct PresetDef {
  const char* name;
  int n;
  std::vector<std::string> first;
  std::vector<std::string> second;
};

// First/second training regimes for the built-in environments. The richness
// series per n shares one fixed second regime; rich is its complement, so
// poor is nested in middle is nested in rich. The ctd/dtd presets pair a
// connected or disconnected eight-task regime with its eight-task complement.
const std::vector<PresetDef>& preset_defs() {
  static const std::vector<PresetDef> defs = {
      {"multi2", 2, {"10", "01"}, {"01", "10"}},
      {"multi3-poor", 3, {"100", "010", "001"}, {"010", "001", "100"}},
      {"multi3-rich", 3, {"101", "110", "011"}, {"010", "001", "100"}},
      {"multi4-poor", 4,
       {"1000", "0100", "0010", "0001"},
       {"0100", "0010", "0001", "1000"}},
      {"multi4-middle", 4,
       {"1001", "1100", "0110", "0011"},
       {"0100", "0010", "0001", "1000"}},
      {"multi4-rich", 4,
       {"1011", "1101", "1110", "0111"},
       {"0100", "0010", "0001", "1000"}},
      {"multi4-ctd1", 4,
       {"1001", "1100", "0110", "0011"},
       {"0110", "0011", "1001", "1100"}},
      {"multi4-ctd2", 4,
       {"1011", "1100", "0110", "0001"},
       {"0100", "0011", "1001", "1110"}},
      {"multi4-dtd1", 4,
       {"1111", "1111", "0000", "0000"},
       {"0000", "0000", "1111", "1111"}},
      {"multi4-dtd2", 4,
       {"1100", "1100", "0011", "0011"},
       {"0011", "0011", "1100", "1100"}},
  };
  return defs;
}

}  // namespace

EnvironmentPreset environment_preset(const std::string& name) {
  for (const PresetDef& def : preset_defs()) {
    if (name == def.name) {
      TaskStructure s(def.n);
      return EnvironmentPreset{def.name, s, regime_from_rows(s, def.first),
                               regime_from_rows(s, def.second)};
    }
  }
  throw ValidationError("unknown environment preset '" + name + "'");
}

std::vector<std::string> environment_preset_names() {
  std::vector<std::string> names;
  for (const PresetDef& def : preset_defs()) names.emplace_back(def.name);
  return names;
}

Regime read_regime_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open regime file '" + path + "'");
  std::vector<std::uint8_t> cells;
  std::string tok;
  while (in >> tok) {
    if (tok.size() != 1 || (tok[0] != '0' && tok[0] != '1')) {
      throw ValidationError("regime file '" + path +
                            "' contains a token other than 0 or 1: '" + tok + "'");
    }
    cells.push_back(static_cast<std::uint8_t>(tok[0] - '0'));
  }
  int n = 0;
  while (static_cast<std::size_t>(n) * n < cells.size()) ++n;
  if (static_cast<std::size_t>(n) * n != cells.size() || n == 0) {
    throw ValidationError("regime file '" + path + "' has " +
                          std::to_string(cells.size()) +
                          " cells, which is not a positive square");
  }
  return Regime::from_matrix(TaskStructure(n), cells);
}

void write_regime_file(const std::string& path, const Regime& regime) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write regime file '" + path + "'");
  const int n = regime.structure().n;
  const std::vector<std::uint8_t> cells = regime.matrix();
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      out << static_cast<int>(cells[static_cast<std::size_t>(r) * n + c])
          << (c + 1 == n ? "" : " ");
    }
    out << "\n";
  }
  if (!out.good()) throw IoError("failed writing regime file '" + path + "'");
}

}  // namespace cogflex
