#include "cogflex/analysis.hpp"

#include <cmath>
#include <map>

#include "cogflex/errors.hpp"

namespace cogflex {

std::string to_string(CueChange change) {
  return change == CueChange::Sensory ? "sensory" : "motor";
}

std::vector<CuePair> cue_pairs(const Regime& first) {
  const TaskStructure& s = first.structure();
  std::vector<CuePair> pairs;
  for (Task trained : first.tasks()) {
    for (int v = 0; v < s.n; ++v) {
      const Task sensory_change{v, trained.motor};
      if (v != trained.sensory && !first.contains(sensory_change)) {
        pairs.push_back({trained, sensory_change});
      }
      const Task motor_change{trained.sensory, v};
      if (v != trained.motor && !first.contains(motor_change)) {
        pairs.push_back({trained, motor_change});
      }
    }
  }
  return pairs;
}

namespace {

// Per-tap activation profile of one task: layer activations averaged over
// all stimulus presentations under the task's cue configuration.
using TaskProfile = std::map<std::string, std::vector<double>>;

TaskProfile task_profile(Network& net, const TaskStructure& s, Task task,
                         const std::vector<std::string>& taps,
                         const SensitivityConfig& cfg) {
  const int stimuli = s.stimulus_count();
  const int width = s.input_width();
  const int rows = stimuli * cfg.repeats;
  std::vector<std::uint8_t> x(static_cast<std::size_t>(rows) * width, 0);
  const std::vector<std::uint8_t> cue = encode_cues(s, task);
  for (int r = 0; r < rows; ++r) {
    std::uint8_t* row = x.data() + static_cast<std::size_t>(r) * width;
    std::copy(cue.begin(), cue.end(), row);
    const int stim = r % stimuli;
    for (int d = 0; d < s.n; ++d) {
      row[s.cue_width() + 2 * d + ((stim >> d) & 1)] = 1;
    }
  }
  net.forward(x.data(), rows);

  TaskProfile profile;
  for (const std::string& tap : taps) {
    const Mat& act = net.tap_activation(tap);
    std::vector<double> mean(act.cols, 0.0);
    for (int r = 0; r < rows; ++r) {
      const double* a = act.row(r);
      for (int c = 0; c < act.cols; ++c) mean[c] += a[c];
    }
    for (double& m : mean) m /= rows;
    profile[tap] = std::move(mean);
  }
  return profile;
}

// Per-stimulus activation rows of one task, per tap.
std::map<std::string, Mat> task_rows(Network& net, const TaskStructure& s,
                                     Task task,
                                     const std::vector<std::string>& taps,
                                     const SensitivityConfig& cfg) {
  const int stimuli = s.stimulus_count();
  const int width = s.input_width();
  const int rows = stimuli * cfg.repeats;
  std::vector<std::uint8_t> x(static_cast<std::size_t>(rows) * width, 0);
  const std::vector<std::uint8_t> cue = encode_cues(s, task);
  for (int r = 0; r < rows; ++r) {
    std::uint8_t* row = x.data() + static_cast<std::size_t>(r) * width;
    std::copy(cue.begin(), cue.end(), row);
    const int stim = r % stimuli;
    for (int d = 0; d < s.n; ++d) {
      row[s.cue_width() + 2 * d + ((stim >> d) & 1)] = 1;
    }
  }
  net.forward(x.data(), rows);
  std::map<std::string, Mat> out;
  for (const std::string& tap : taps) out[tap] = net.tap_activation(tap);
  return out;
}

double cosine(const double* a, const double* b, int k) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int i = 0; i < k; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw ValidationError("cosine undefined for a zero activation vector");
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

std::vector<SensitivityValue> cue_sensitivity(Network& net, const ModelSpec& spec,
                                              const Regime& first,
                                              const SensitivityConfig& cfg) {
  if (cfg.repeats < 1) throw ValidationError("sensitivity repeats must be positive");
  const TaskStructure& s = first.structure();
  const std::vector<std::string> taps = analysis_taps(spec);
  const std::vector<CuePair> pairs = cue_pairs(first);
  if (pairs.empty()) {
    throw ValidationError("regime admits no single-cue-change task pairs");
  }

  // accumulated cosine and pair count per (tap, change)
  std::map<std::string, double> sums[2];
  int counts[2] = {0, 0};

  std::map<Task, TaskProfile> profiles;
  std::map<Task, std::map<std::string, Mat>> rows;
  auto profile_of = [&](Task t) -> const TaskProfile& {
    auto it = profiles.find(t);
    if (it == profiles.end()) {
      it = profiles.emplace(t, task_profile(net, s, t, taps, cfg)).first;
    }
    return it->second;
  };
  auto rows_of = [&](Task t) -> const std::map<std::string, Mat>& {
    auto it = rows.find(t);
    if (it == rows.end()) {
      it = rows.emplace(t, task_rows(net, s, t, taps, cfg)).first;
    }
    return it->second;
  };

  for (const CuePair& pair : pairs) {
    const int side = pair.change() == CueChange::Sensory ? 0 : 1;
    ++counts[side];
    if (!cfg.per_stimulus) {
      const TaskProfile& a = profile_of(pair.trained);
      const TaskProfile& b = profile_of(pair.untrained);
      for (const std::string& tap : taps) {
        const std::vector<double>& va = a.at(tap);
        const std::vector<double>& vb = b.at(tap);
        sums[side][tap] +=
            cosine(va.data(), vb.data(), static_cast<int>(va.size()));
      }
    } else {
      const auto& ra = rows_of(pair.trained);
      const auto& rb = rows_of(pair.untrained);
      for (const std::string& tap : taps) {
        const Mat& ma = ra.at(tap);
        const Mat& mb = rb.at(tap);
        double acc = 0.0;
        for (int r = 0; r < ma.rows; ++r) {
          acc += cosine(ma.row(r), mb.row(r), ma.cols);
        }
        sums[side][tap] += acc / ma.rows;
      }
    }
  }

  std::vector<SensitivityValue> out;
  for (const std::string& tap : taps) {
    for (int side = 0; side < 2; ++side) {
      if (counts[side] == 0) continue;
      SensitivityValue v;
      v.tap = tap;
      v.change = side == 0 ? CueChange::Sensory : CueChange::Motor;
      v.mean_cosine = sums[side][tap] / counts[side];
      v.pair_count = counts[side];
      out.push_back(std::move(v));
    }
  }
  return out;
}

}  // namespace cogflex
