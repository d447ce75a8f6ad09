#pragma once

#include <string>
#include <vector>

#include "cogflex/models.hpp"
#include "cogflex/nn_core.hpp"
#include "cogflex/task_env.hpp"

namespace cogflex {

enum class CueChange { Sensory, Motor };

std::string to_string(CueChange change);

// A trained task paired with an untrained task differing in exactly one cue.
struct CuePair {
  Task trained;
  Task untrained;

  CueChange change() const {
    return trained.sensory == untrained.sensory ? CueChange::Motor
                                                : CueChange::Sensory;
  }
};

// All (trained, untrained) pairs for a first training regime: trained in the
// regime, untrained anywhere outside it, exactly one cue differing.
std::vector<CuePair> cue_pairs(const Regime& first);

struct SensitivityConfig {
  int repeats = 1;           // repeated stimulus presentations per average
  bool per_stimulus = false; // cosine per stimulus, then averaged
};

// Mean cosine between layer activation profiles of the two tasks in a pair,
// averaged over all pairs with the same changed cue type. Lower cosine =
// higher sensitivity to that cue change.
struct SensitivityValue {
  std::string tap;
  CueChange change = CueChange::Sensory;
  double mean_cosine = 0.0;
  int pair_count = 0;
};

// The network must hold the weights to probe (e.g., the step-1 snapshot).
// Default mode: average each layer's activation over every stimulus under a
// task's cue configuration, then take the cosine of the two task profiles.
std::vector<SensitivityValue> cue_sensitivity(Network& net, const ModelSpec& spec,
                                              const Regime& first,
                                              const SensitivityConfig& cfg = {});

}  // namespace cogflex
