#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "cogflex/analysis.hpp"
#include "cogflex/errors.hpp"
#include "cogflex/models.hpp"
#include "cogflex/rng.hpp"
#include "cogflex/task_env.hpp"
#include "doctest.h"

using namespace cogflex;

namespace {

double find_cosine(const std::vector<SensitivityValue>& values,
                   const std::string& tap, CueChange change) {
  for (const SensitivityValue& v : values) {
    if (v.tap == tap && v.change == change) return v.mean_cosine;
  }
  REQUIRE(false);
  return 0.0;
}

// Test-side profile: mean tap activation over all stimuli for one task.
std::vector<double> oracle_profile(Network& net, const TaskStructure& s,
                                   Task task, const std::string& tap) {
  const int stimuli = s.stimulus_count();
  std::vector<std::uint8_t> x(static_cast<std::size_t>(stimuli) * s.input_width(), 0);
  const auto cue = encode_cues(s, task);
  for (int i = 0; i < stimuli; ++i) {
    auto* row = x.data() + static_cast<std::size_t>(i) * s.input_width();
    std::copy(cue.begin(), cue.end(), row);
    const auto stim = encode_stimulus(s, stimulus_from_index(s, i));
    std::copy(stim.begin(), stim.end(), row + s.cue_width());
  }
  net.forward(x.data(), stimuli);
  const Mat& act = net.tap_activation(tap);
  std::vector<double> mean(static_cast<std::size_t>(act.cols), 0.0);
  for (int r = 0; r < stimuli; ++r) {
    for (int c = 0; c < act.cols; ++c) mean[static_cast<std::size_t>(c)] += act.at(r, c);
  }
  for (double& m : mean) m /= stimuli;
  return mean;
}

double oracle_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

TEST_CASE("cue pairs enumerate exactly the single-cue neighbours") {
  // Exhaustive independent recount on several regimes.
  Rng rng(61);
  for (const char* preset : {"multi3-rich", "multi4-middle", "multi4-rich"}) {
    const EnvironmentPreset env = environment_preset(preset);
    const TaskStructure& s = env.structure;
    const auto pairs = cue_pairs(env.first);

    std::set<std::pair<int, int>> seen;  // (trained cell, untrained cell)
    for (const CuePair& p : pairs) {
      CHECK(env.first.contains(p.trained));
      CHECK_FALSE(env.first.contains(p.untrained));
      const bool same_sensory = p.trained.sensory == p.untrained.sensory;
      const bool same_motor = p.trained.motor == p.untrained.motor;
      CHECK(same_sensory != same_motor);  // exactly one cue moved
      CHECK(seen.insert({p.trained.sensory * s.n + p.trained.motor,
                         p.untrained.sensory * s.n + p.untrained.motor})
                .second);
    }
    // Independent exhaustive count over the full grid.
    std::size_t want = 0;
    for (const Task& t : env.first.tasks()) {
      for (int v = 0; v < s.n; ++v) {
        want += v != t.sensory && !env.first.contains({v, t.motor});
        want += v != t.motor && !env.first.contains({t.sensory, v});
      }
    }
    CHECK(pairs.size() == want);
  }
}

TEST_CASE("pair counts for the dense complement regime") {
  // Twelve trained tasks leave one free cell per row and per column.
  const EnvironmentPreset env = environment_preset("multi4-rich");
  const auto pairs = cue_pairs(env.first);
  CHECK(pairs.size() == 24);
  int sensory = 0, motor = 0;
  for (const CuePair& p : pairs) {
    (p.change() == CueChange::Sensory ? sensory : motor) += 1;
  }
  CHECK(sensory == 12);
  CHECK(motor == 12);
}

TEST_CASE("two full sensory rows admit only sensory-change pairs") {
  const EnvironmentPreset env = environment_preset("multi4-dtd1");
  const auto pairs = cue_pairs(env.first);
  CHECK(pairs.size() == 16);
  for (const CuePair& p : pairs) {
    CHECK(p.change() == CueChange::Sensory);
    CHECK(p.trained.motor == p.untrained.motor);
  }
}

TEST_CASE("change type classification") {
  CHECK(CuePair{{0, 1}, {2, 1}}.change() == CueChange::Sensory);
  CHECK(CuePair{{0, 1}, {0, 3}}.change() == CueChange::Motor);
  CHECK(to_string(CueChange::Sensory) == "sensory");
  CHECK(to_string(CueChange::Motor) == "motor");
}

TEST_CASE("sensitivity matches a hand-built profile oracle") {
  const TaskStructure s(2);
  const Regime single(s, {{0, 0}});  // one sensory pair, one motor pair
  const ModelSpec spec = default_model_spec("gate_1", s);
  Network net = build_network(spec);
  Rng rng(4242);
  net.init_params(rng);

  const auto values = cue_sensitivity(net, spec, single);
  // Three taps, two change types each.
  CHECK(values.size() == 6);
  for (const SensitivityValue& v : values) CHECK(v.pair_count == 1);

  for (const std::string& tap : analysis_taps(spec)) {
    const auto base = oracle_profile(net, s, {0, 0}, tap);
    const auto sens = oracle_profile(net, s, {1, 0}, tap);
    const auto moto = oracle_profile(net, s, {0, 1}, tap);
    CHECK(find_cosine(values, tap, CueChange::Sensory) ==
          doctest::Approx(oracle_cosine(base, sens)).epsilon(1e-12));
    CHECK(find_cosine(values, tap, CueChange::Motor) ==
          doctest::Approx(oracle_cosine(base, moto)).epsilon(1e-12));
  }
}

TEST_CASE("a cue-blind network scores cosine one everywhere") {
  const EnvironmentPreset env = environment_preset("multi4-rich");
  const ModelSpec spec = default_model_spec("gate_2", env.structure);
  Network net = build_network(spec);
  Rng rng(11);
  net.init_params(rng);
  // Cut every cue weight: all taps become functions of the stimulus alone,
  // so both tasks of any pair produce identical profiles.
  const DenseInfo& d1 = net.dense_layers()[0];
  for (int k = 0; k < d1.in * d1.out; ++k) {
    net.params()[d1.w_offset + static_cast<std::size_t>(k)] = 0.0;
  }
  for (const auto& v : cue_sensitivity(net, spec, env.first)) {
    CHECK(v.mean_cosine == doctest::Approx(1.0).epsilon(1e-12));
  }
  // Per-stimulus mode agrees in the cue-blind case.
  SensitivityConfig per;
  per.per_stimulus = true;
  for (const auto& v : cue_sensitivity(net, spec, env.first, per)) {
    CHECK(v.mean_cosine == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("sensitivity values stay inside the nonnegative cosine range") {
  // Sigmoid taps are strictly positive, so cosines live in (0, 1].
  for (const char* name : {"mlp_2", "gate_2", "concat_2"}) {
    const EnvironmentPreset env = environment_preset("multi4-middle");
    const ModelSpec spec = default_model_spec(name, env.structure);
    Network net = build_network(spec);
    Rng rng(77);
    net.init_params(rng);
    const auto values = cue_sensitivity(net, spec, env.first);
    const auto taps = analysis_taps(spec);
    CHECK(values.size() == taps.size() * 2);
    for (const auto& v : values) {
      CHECK(v.mean_cosine > 0.0);
      CHECK(v.mean_cosine <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("repeats replay identical presentations without drift") {
  const EnvironmentPreset env = environment_preset("multi3-rich");
  const ModelSpec spec = default_model_spec("concat_1", env.structure);
  Network net = build_network(spec);
  Rng rng(500);
  net.init_params(rng);

  const auto once = cue_sensitivity(net, spec, env.first);
  SensitivityConfig three;
  three.repeats = 3;
  const auto thrice = cue_sensitivity(net, spec, env.first, three);
  REQUIRE(once.size() == thrice.size());
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(once[i].tap == thrice[i].tap);
    CHECK(once[i].mean_cosine ==
          doctest::Approx(thrice[i].mean_cosine).epsilon(1e-12));
  }

  SensitivityConfig bad;
  bad.repeats = 0;
  CHECK_THROWS_AS(cue_sensitivity(net, spec, env.first, bad), ValidationError);
}

TEST_CASE("per-stimulus mode differs from profile mode on a generic net") {
  const EnvironmentPreset env = environment_preset("multi4-rich");
  const ModelSpec spec = default_model_spec("gate_2", env.structure);
  Network net = build_network(spec);
  Rng rng(3133);
  net.init_params(rng);

  const auto profile = cue_sensitivity(net, spec, env.first);
  SensitivityConfig cfg;
  cfg.per_stimulus = true;
  const auto per = cue_sensitivity(net, spec, env.first, cfg);
  REQUIRE(profile.size() == per.size());
  bool any_difference = false;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (std::fabs(profile[i].mean_cosine - per[i].mean_cosine) > 1e-9) {
      any_difference = true;
    }
  }
  CHECK(any_difference);
}

TEST_CASE("a saturated regime with no free neighbours is rejected") {
  const TaskStructure s(2);
  const Regime full = Regime::from_mask(s, 0xF);
  const ModelSpec spec = default_model_spec("gate_1", s);
  Network net = build_network(spec);
  Rng rng(1);
  net.init_params(rng);
  CHECK_THROWS_AS(cue_sensitivity(net, spec, full), ValidationError);
}
