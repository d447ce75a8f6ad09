#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cogflex/errors.hpp"
#include "cogflex/models.hpp"
#include "cogflex/rng.hpp"
#include "cogflex/task_env.hpp"
#include "doctest.h"

using namespace cogflex;

namespace {

std::size_t dense_params(int in, int out) {
  return static_cast<std::size_t>(out) * in + static_cast<std::size_t>(out);
}

const char* kAllModels[] = {"mlp_1", "mlp_2",    "gate_1",
                            "gate_2", "concat_1", "concat_2"};

}  // namespace

TEST_CASE("model names parse and print") {
  CHECK(parse_model_kind("mlp") == ModelKind::Mlp);
  CHECK(parse_model_kind("gate") == ModelKind::Gate);
  CHECK(parse_model_kind("concat") == ModelKind::Concat);
  CHECK_THROWS_AS(parse_model_kind("rnn"), ValidationError);

  const ModelName g2 = parse_model_name("gate_2");
  CHECK(g2.kind == ModelKind::Gate);
  CHECK(g2.variant == 2);
  CHECK(model_name(ModelKind::Concat, 1) == "concat_1");
  CHECK(to_string(ModelKind::Mlp) == "mlp");
  CHECK_THROWS_AS(parse_model_name("gate_3"), ValidationError);
  CHECK_THROWS_AS(parse_model_name("gate"), ValidationError);
}

TEST_CASE("default widths hit the capacity table for every build") {
  const struct {
    const char* name;
    int n;
    std::vector<int> widths;
  } table[] = {
      {"mlp_1", 2, {7, 7}},
      {"mlp_2", 2, {6, 6, 6}},
      {"mlp_1", 3, {12, 12, 12}},
      {"mlp_2", 3, {11, 11, 10, 10}},
      {"mlp_1", 4, {16, 16, 16}},
      {"mlp_2", 4, {14, 14, 14, 14}},
      {"gate_1", 2, {8, 2}},
      {"gate_2", 2, {8, 2, 2}},
      {"gate_1", 3, {8, 2, 2}},
      {"gate_2", 3, {10, 4, 4}},
      {"gate_1", 4, {10, 2, 14}},
      {"gate_2", 4, {16, 8, 12}},
      {"concat_1", 2, {8, 2}},
      {"concat_2", 2, {8, 2, 2}},
      {"concat_1", 3, {8, 2, 2}},
      {"concat_2", 3, {10, 4, 4}},
      {"concat_1", 4, {10, 2, 14}},
      {"concat_2", 4, {16, 8, 12}},
  };
  for (const auto& row : table) {
    CAPTURE(row.name);
    CAPTURE(row.n);
    const ModelSpec spec = default_model_spec(row.name, TaskStructure(row.n));
    CHECK(spec.layer_widths == row.widths);
    CHECK(spec.bottleneck == (spec.kind != ModelKind::Mlp && spec.variant == 1));
    CHECK_NOTHROW(validate_model_spec(spec));

    int units = 0;
    for (int w : spec.layer_widths) units += w;
    const ModelName parsed = parse_model_name(row.name);
    const CapacityRow cap = expected_capacity(parsed.kind, parsed.variant, row.n);
    CHECK(units == cap.hidden_units);
    CHECK(static_cast<int>(spec.layer_widths.size()) == cap.hidden_layers);
  }
  CHECK_THROWS_AS(default_model_spec("mlp_1", TaskStructure(5)), ValidationError);
}

TEST_CASE("capacity rows follow the shared budget per environment size") {
  // Within one environment size both attention kinds share a budget and the
  // MLPs get their own larger one.
  for (int n : {2, 3, 4}) {
    for (int variant : {1, 2}) {
      const CapacityRow g = expected_capacity(ModelKind::Gate, variant, n);
      const CapacityRow c = expected_capacity(ModelKind::Concat, variant, n);
      CHECK(g.hidden_units == c.hidden_units);
      CHECK(g.hidden_layers == c.hidden_layers);
      const CapacityRow m = expected_capacity(ModelKind::Mlp, variant, n);
      CHECK(m.hidden_units > g.hidden_units);
    }
  }
  CHECK(expected_capacity(ModelKind::Mlp, 1, 2).hidden_units == 14);
  CHECK(expected_capacity(ModelKind::Mlp, 2, 4).hidden_units == 56);
  CHECK(expected_capacity(ModelKind::Gate, 1, 4).hidden_units == 26);
  CHECK(expected_capacity(ModelKind::Concat, 2, 3).hidden_units == 18);
}

TEST_CASE("spec validation rejects off-budget or miswired layouts") {
  const TaskStructure s4(4);
  ModelSpec spec = default_model_spec("gate_2", s4);

  ModelSpec wrong_total = spec;
  wrong_total.layer_widths = {16, 8, 13};
  CHECK_THROWS_AS(validate_model_spec(wrong_total), ValidationError);
  CHECK_NOTHROW(validate_model_spec(wrong_total, true));  // explicit override
  // An allowed off-budget spec must also build; only structure gates here.
  CHECK(build_network(wrong_total).param_count() > 0);

  ModelSpec wrong_depth = spec;
  wrong_depth.layer_widths = {16, 20};
  CHECK_THROWS_AS(validate_model_spec(wrong_depth), ValidationError);

  // Dense1 must leave room for the 2n-wide gate A plus a nonempty B.
  ModelSpec thin = spec;
  thin.layer_widths = {8, 16, 12};
  CHECK_THROWS_AS(validate_model_spec(thin, true), ValidationError);

  // Variant 1 carries the two-unit middle dense; variant 2 must not.
  ModelSpec fake_bottleneck = spec;
  fake_bottleneck.bottleneck = true;
  CHECK_THROWS_AS(validate_model_spec(fake_bottleneck), ValidationError);
  ModelSpec v1 = default_model_spec("gate_1", s4);
  v1.bottleneck = false;
  CHECK_THROWS_AS(validate_model_spec(v1), ValidationError);
  v1.bottleneck = true;
  v1.layer_widths = {10, 3, 13};  // middle dense forced to width 2
  CHECK_THROWS_AS(validate_model_spec(v1, true), ValidationError);

  ModelSpec empty = spec;
  empty.layer_widths.clear();
  CHECK_THROWS_AS(validate_model_spec(empty, true), ValidationError);
}

TEST_CASE("built networks expose the documented shapes and parameter counts") {
  const TaskStructure s2(2), s3(3), s4(4);

  // MLPs read the full input row.
  const Network mlp = build_network(default_model_spec("mlp_2", s2));
  CHECK(mlp.input_width() == 12);
  CHECK(mlp.output_width() == 4);
  CHECK(mlp.param_count() == dense_params(12, 6) + dense_params(6, 6) +
                                 dense_params(6, 6) + dense_params(6, 4));

  // Attention nets drive Dense1 from the 4n cue block alone.
  const Network gate2 = build_network(default_model_spec("gate_2", s4));
  CHECK(gate2.dense_layers()[0].name == "Dense1");
  CHECK(gate2.dense_layers()[0].in == 16);
  CHECK(gate2.dense_layers()[0].out == 16);
  CHECK(gate2.param_count() == dense_params(16, 16) + dense_params(8, 8) +
                                   dense_params(8, 12) + dense_params(12, 8));
  CHECK(gate2.param_count() == 556);

  // Multi-2 attention: no dense between the stages, Dense2 follows stage two.
  const Network gate1 = build_network(default_model_spec("gate_1", s2));
  CHECK(gate1.param_count() ==
        dense_params(8, 8) + dense_params(4, 2) + dense_params(2, 4));

  // Concat stages widen instead of gating: stage one is [A ++ stimulus],
  // stage two is [B ++ middle stream].
  const Network cat2 = build_network(default_model_spec("concat_2", s3));
  CHECK(cat2.param_count() == dense_params(12, 10) + dense_params(12, 4) +
                                  dense_params(8, 4) + dense_params(4, 6));

  const Network cat1_m2 = build_network(default_model_spec("concat_1", s2));
  // Stage two concatenates B (width 4) with stage one (width 8).
  CHECK(cat1_m2.param_count() ==
        dense_params(8, 8) + dense_params(12, 2) + dense_params(2, 4));
}

TEST_CASE("every default build runs a forward pass at every size") {
  Rng rng(5);
  for (int n : {2, 3, 4}) {
    const TaskStructure s(n);
    const EnvironmentPreset env = environment_preset(
        n == 2 ? "multi2" : (n == 3 ? "multi3-rich" : "multi4-rich"));
    Rng trial_rng(17);
    const TrialSet set = generate_trials(env.first, 3, trial_rng);
    for (const char* name : kAllModels) {
      CAPTURE(name);
      Network net = build_network(default_model_spec(name, s));
      CHECK(net.input_width() == 6 * n);
      CHECK(net.output_width() == 2 * n);
      net.init_params(rng);
      net.forward(set.inputs.data(), static_cast<int>(set.size()));
      for (int r = 0; r < static_cast<int>(set.size()); ++r) {
        double sum = 0.0;
        for (int c = 0; c < 2 * n; ++c) sum += net.probs().at(r, c);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("gating is multiplicative, concatenation is additive routing") {
  const TaskStructure s(2);
  const EnvironmentPreset env = environment_preset("multi2");
  Rng trial_rng(3);
  const TrialSet set = generate_trials(env.first, 8, trial_rng);
  REQUIRE(set.size() >= 2);

  // Pick two trials of the same task with different stimuli.
  std::size_t first = 0, other = set.size();
  for (std::size_t i = 1; i < set.size(); ++i) {
    if (set.task_ids[i] != set.task_ids[first]) continue;
    bool same = true;
    for (int c = 0; c < 12; ++c) {
      if (set.input_row(i)[c] != set.input_row(first)[c]) same = false;
    }
    if (!same) {
      other = i;
      break;
    }
  }
  REQUIRE(other < set.size());

  for (ModelKind kind : {ModelKind::Gate, ModelKind::Concat}) {
    Network net = build_network(default_model_spec(model_name(kind, 1), s));
    Rng rng(909);
    net.init_params(rng);
    // Saturate Dense1 low: both gates collapse to (nearly) zero.
    const DenseInfo& d1 = net.dense_layers()[0];
    for (int k = 0; k < d1.out * d1.in; ++k) {
      net.params()[d1.w_offset + static_cast<std::size_t>(k)] = 0.0;
    }
    for (int o = 0; o < d1.out; ++o) {
      net.params()[d1.b_offset + static_cast<std::size_t>(o)] = -50.0;
    }

    net.forward(set.input_row(first), 1);
    std::vector<double> pa(net.probs().row(0), net.probs().row(0) + 4);
    net.forward(set.input_row(other), 1);
    std::vector<double> pb(net.probs().row(0), net.probs().row(0) + 4);

    double diff = 0.0;
    for (int c = 0; c < 4; ++c) diff += std::fabs(pa[c] - pb[c]);
    if (kind == ModelKind::Gate) {
      // Zero gates choke the stimulus path entirely.
      CHECK(diff < 1e-9);
    } else {
      // The concatenated stimulus block stays routable around the dead cues.
      CHECK(diff > 1e-3);
    }
  }
}

TEST_CASE("analysis taps walk the pipeline in order") {
  const TaskStructure s4(4);
  CHECK(analysis_taps(default_model_spec("gate_2", s4)) ==
        std::vector<std::string>{"Dense1A", "Dense1B", "Dense2", "Dense3"});
  CHECK(analysis_taps(default_model_spec("concat_1", s4)) ==
        std::vector<std::string>{"Dense1A", "Dense1B", "Dense2", "Dense3"});
  CHECK(analysis_taps(default_model_spec("mlp_2", s4)) ==
        std::vector<std::string>{"Dense1", "Dense2", "Dense3", "Dense4"});
  const TaskStructure s2(2);
  CHECK(analysis_taps(default_model_spec("gate_1", s2)) ==
        std::vector<std::string>{"Dense1A", "Dense1B", "Dense2"});
  CHECK(analysis_taps(default_model_spec("mlp_1", s2)) ==
        std::vector<std::string>{"Dense1", "Dense2"});

  // Taps resolve on the built network.
  Network net = build_network(default_model_spec("gate_2", s4));
  Rng rng(2);
  net.init_params(rng);
  const std::vector<std::uint8_t> x(24, 1);
  net.forward(x.data(), 1);
  for (const std::string& tap : analysis_taps(default_model_spec("gate_2", s4))) {
    CHECK_NOTHROW(net.tap_activation(tap));
  }
  CHECK(net.tap_activation("Dense1A").cols == 8);
  CHECK(net.tap_activation("Dense1B").cols == 8);
}

TEST_CASE("describe_model names the wiring") {
  const std::string text = describe_model(default_model_spec("gate_2", TaskStructure(4)));
  CHECK(text.find("Dense1") != std::string::npos);
  CHECK(text.find("16") != std::string::npos);
  const std::string mlp = describe_model(default_model_spec("mlp_1", TaskStructure(2)));
  CHECK(mlp.find("Dense1") != std::string::npos);
}
