#include <cmath>
#include <vector>

#include "cogflex/errors.hpp"
#include "cogflex/models.hpp"
#include "cogflex/protocol.hpp"
#include "cogflex/task_env.hpp"
#include "doctest.h"

using namespace cogflex;

namespace {

// Small but honest training budget: the two-dimensional environment stays
// cheap enough for unit tests while exercising the full pipeline.
TrainingConfig quick_config() {
  TrainingConfig cfg;
  cfg.master_seed = 2026;
  cfg.trials_per_task = 600;
  cfg.eval_trials_per_task = 400;
  cfg.max_epochs = 200;
  cfg.runs_kept = 2;
  cfg.runs_launched = 3;
  cfg.keep_threshold = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("run seeds derive deterministically and distinctly") {
  TrainingConfig cfg;
  cfg.master_seed = 77;
  const std::uint64_t s0 = run_seed(cfg, 0);
  CHECK(s0 == run_seed(cfg, 0));
  CHECK(s0 != run_seed(cfg, 1));
  cfg.master_seed = 78;
  CHECK(s0 != run_seed(cfg, 0));

  // Stream RNGs fan out of one run seed without overlapping.
  Rng a = stream_rng(123, SeedStream::Init);
  Rng b = stream_rng(123, SeedStream::Step1Trials);
  Rng a2 = stream_rng(123, SeedStream::Init);
  CHECK(a.next_u64() != b.next_u64());
  CHECK(stream_rng(123, SeedStream::Init).next_u64() == a2.next_u64());
}

TEST_CASE("config validation rejects inconsistent settings") {
  TrainingConfig cfg;
  CHECK_NOTHROW(validate_training_config(cfg));
  TrainingConfig bad = cfg;
  bad.runs_launched = bad.runs_kept - 1;
  CHECK_THROWS_AS(validate_training_config(bad), ValidationError);
  bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(validate_training_config(bad), ValidationError);
  bad = cfg;
  bad.trials_per_task = -5;
  CHECK_THROWS_AS(validate_training_config(bad), ValidationError);
  bad = cfg;
  bad.max_epochs = 0;
  CHECK_THROWS_AS(validate_training_config(bad), ValidationError);
  bad = cfg;
  bad.early_stop_streak = 0;
  CHECK_THROWS_AS(validate_training_config(bad), ValidationError);
  bad = cfg;
  bad.jobs = 0;
  CHECK_THROWS_AS(validate_training_config(bad), ValidationError);
}

TEST_CASE("aggregate_stat computes sample statistics") {
  const AggregateStat s = aggregate_stat({2.0, 4.0, 4.0, 6.0});
  CHECK(s.count == 4);
  CHECK(s.mean == doctest::Approx(4.0));
  // Sample variance of {2,4,4,6} is 8/3.
  CHECK(s.stddev == doctest::Approx(std::sqrt(8.0 / 3.0)).epsilon(1e-14));
  CHECK(s.min == 2.0);
  CHECK(s.max == 6.0);

  const AggregateStat one = aggregate_stat({3.5});
  CHECK(one.count == 1);
  CHECK(one.stddev == 0.0);
  CHECK(aggregate_stat({}).count == 0);
}

TEST_CASE("untrained networks sit at chance on every environment") {
  // Chance holds over an environment's full task set: the union of the two
  // phases hits every motor cue equally often, so no fixed response bias can
  // beat 1/(2n). A single skewed phase can be beaten by bias alone.
  for (const std::string& name : environment_preset_names()) {
    CAPTURE(name);
    const EnvironmentPreset env = environment_preset(name);
    const Regime both = Regime::from_mask(
        env.structure, env.first.mask() | env.second.mask());
    Network net = build_network(default_model_spec("gate_1", env.structure));
    double mean = 0.0;
    const int inits = 3;
    for (int i = 0; i < inits; ++i) {
      Rng init = stream_rng(404 + static_cast<std::uint64_t>(i), SeedStream::Init);
      net.init_params(init);
      Rng eval_rng =
          stream_rng(404 + static_cast<std::uint64_t>(i), SeedStream::GeneralizationEval);
      mean += evaluate(net, both, 400, eval_rng).accuracy;
    }
    mean /= inits;
    CHECK(std::fabs(mean - env.structure.chance_accuracy()) < 0.05);
  }
}

TEST_CASE("a response bias alone beats chance on a motor-skewed task set") {
  // Documents why chance-level checks run on the full environment: the
  // first phase below sends half of all trials to motor cue 0.
  const EnvironmentPreset env = environment_preset("multi4-ctd1");
  int motor0 = 0;
  for (const Task& t : env.first.tasks()) motor0 += t.motor == 0;
  CHECK(motor0 * 2 == env.first.task_count());

  Network net = build_network(default_model_spec("gate_1", env.structure));
  // Zero parameters: every logit ties, predictions collapse to unit 0.
  for (double& p : net.params()) p = 0.0;
  Rng eval_rng(5);
  const EvalResult res = evaluate(net, env.first, 500, eval_rng);
  // Unit 0 is motor 0 / value 0: half the tasks, half the stimuli.
  CHECK(res.accuracy == doctest::Approx(0.25).epsilon(0.15));
  CHECK(res.accuracy - env.structure.chance_accuracy() > 0.05);
}

TEST_CASE("evaluation accuracy is the mean of the per-task column") {
  const EnvironmentPreset env = environment_preset("multi3-rich");
  Network net = build_network(default_model_spec("mlp_1", env.structure));
  Rng init(9);
  net.init_params(init);
  Rng eval_rng(10);
  const EvalResult res = evaluate(net, env.first, 250, eval_rng);
  REQUIRE(res.per_task.size() == env.first.tasks().size());
  double mean = 0.0;
  for (double v : res.per_task) mean += v;
  mean /= static_cast<double>(res.per_task.size());
  // Equal trial counts per task make the overall rate a plain mean.
  CHECK(res.accuracy == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("training stops after the exact run of perfect epochs") {
  const EnvironmentPreset env = environment_preset("multi2");
  const ModelSpec spec = default_model_spec("mlp_1", env.structure);
  TrainingConfig cfg = quick_config();

  // First leg: train to convergence from scratch.
  Network net = build_network(spec);
  Rng init = stream_rng(run_seed(cfg, 0), SeedStream::Init);
  net.init_params(init);
  Adam adam(net.param_count(), cfg.adam);
  Rng t1 = stream_rng(run_seed(cfg, 0), SeedStream::Step1Trials);
  Rng s1 = stream_rng(run_seed(cfg, 0), SeedStream::Step1Shuffle);
  const TrainResult first = train_regime(net, adam, env.first, cfg, t1, s1);
  REQUIRE(first.converged);
  CHECK(first.final_accuracy == 1.0);
  CHECK(first.epochs == static_cast<int>(first.curve.size()));
  // The streak is exactly the tail of the curve.
  for (int i = 0; i < cfg.early_stop_streak; ++i) {
    CHECK(first.curve[first.curve.size() - 1 - static_cast<std::size_t>(i)] == 1.0);
  }
  // Accuracy one epoch before the streak was still imperfect.
  if (first.epochs > cfg.early_stop_streak) {
    CHECK(first.curve[first.curve.size() -
                      static_cast<std::size_t>(cfg.early_stop_streak) - 1] < 1.0);
  }

  // Second leg: an already perfect network exits after exactly the streak.
  Adam adam2(net.param_count(), cfg.adam);
  Rng t2 = stream_rng(run_seed(cfg, 0), SeedStream::Step2Trials);
  Rng s2 = stream_rng(run_seed(cfg, 0), SeedStream::Step2Shuffle);
  const TrainResult again = train_regime(net, adam2, env.first, cfg, t2, s2);
  CHECK(again.converged);
  CHECK(again.epochs == cfg.early_stop_streak);
  CHECK(again.curve == std::vector<double>(static_cast<std::size_t>(cfg.early_stop_streak), 1.0));

  // A shorter streak requirement exits earlier.
  TrainingConfig short_cfg = cfg;
  short_cfg.early_stop_streak = 2;
  Adam adam3(net.param_count(), short_cfg.adam);
  Rng t3 = stream_rng(run_seed(cfg, 0), SeedStream::Step2Trials);
  Rng s3 = stream_rng(run_seed(cfg, 0), SeedStream::Step2Shuffle);
  const TrainResult quick = train_regime(net, adam3, env.first, short_cfg, t3, s3);
  CHECK(quick.epochs == 2);
}

TEST_CASE("two-step run is deterministic and self-consistent") {
  const EnvironmentPreset env = environment_preset("multi2");
  const ModelSpec spec = default_model_spec("mlp_1", env.structure);
  const TrainingConfig cfg = quick_config();

  const RunResult a = run_two_step(spec, env.first, env.second, cfg, 1);
  const RunResult b = run_two_step(spec, env.first, env.second, cfg, 1);
  CHECK(a.seed == b.seed);
  CHECK(a.step1.curve == b.step1.curve);
  CHECK(a.step2.curve == b.step2.curve);
  CHECK(a.generalization.accuracy == b.generalization.accuracy);
  CHECK(a.stability.accuracy == b.stability.accuracy);
  CHECK(a.step1_params == b.step1_params);
  CHECK(a.final_params == b.final_params);

  // Distinct run index, distinct outcome.
  const RunResult c = run_two_step(spec, env.first, env.second, cfg, 2);
  CHECK(c.seed != a.seed);
  CHECK(c.step1_params != a.step1_params);

  // Snapshots: step-1 weights differ from final weights after retraining.
  CHECK(a.step1_params.size() == a.final_params.size());
  CHECK(a.step1_params != a.final_params);
  CHECK(a.generalization.per_task.size() == env.second.tasks().size());
  CHECK(a.stability.per_task.size() == env.first.tasks().size());
}

TEST_CASE("two-step run rejects malformed regime pairs") {
  const EnvironmentPreset m2 = environment_preset("multi2");
  const EnvironmentPreset m3 = environment_preset("multi3-rich");
  const ModelSpec spec = default_model_spec("mlp_1", m2.structure);
  const TrainingConfig cfg = quick_config();

  // Structure mismatch between phases.
  CHECK_THROWS_AS(run_two_step(spec, m2.first, m3.first, cfg, 0), ValidationError);
  // Shared tasks between phases are rejected unless explicitly allowed.
  CHECK_THROWS_AS(run_two_step(spec, m2.first, m2.first, cfg, 0), ValidationError);
  TrainingConfig relaxed = cfg;
  relaxed.allow_regime_overlap = true;
  relaxed.max_epochs = 30;
  CHECK_NOTHROW(run_two_step(spec, m2.first, m2.first, relaxed, 0));

  // Small environments must expose every cue during the first phase.
  const TaskStructure s3(3);
  const Regime partial(s3, {{0, 0}, {1, 1}});
  const Regime rest = complement_regime(partial);
  const ModelSpec spec3 = default_model_spec("mlp_1", s3);
  CHECK_THROWS_AS(run_two_step(spec3, partial, rest, cfg, 0), ValidationError);
}

TEST_CASE("batch keeps the first qualifying runs and aggregates them") {
  const EnvironmentPreset env = environment_preset("multi2");
  const ModelSpec spec = default_model_spec("mlp_1", env.structure);
  TrainingConfig cfg = quick_config();
  cfg.keep_threshold = 0.99;
  cfg.runs_kept = 2;
  cfg.runs_launched = 4;

  int progress_calls = 0;
  const BatchResult batch =
      run_batch(spec, env.first, env.second, cfg, true,
                [&](const RunResult&) { ++progress_calls; });
  CHECK(static_cast<int>(batch.runs.size()) == progress_calls);
  REQUIRE(batch.kept.size() == 2);
  CHECK(batch.generalization.count == 2);
  CHECK(batch.stability.count == 2);

  // Kept runs all clear the threshold and arrive in launch order.
  for (std::size_t i = 0; i < batch.kept.size(); ++i) {
    const RunResult& r = batch.runs[static_cast<std::size_t>(batch.kept[i])];
    CHECK(r.step1.final_accuracy > cfg.keep_threshold);
    if (i > 0) CHECK(batch.kept[i] > batch.kept[i - 1]);
  }

  // Aggregates recompute from the kept rows.
  std::vector<double> gen;
  for (int k : batch.kept) {
    gen.push_back(batch.runs[static_cast<std::size_t>(k)].generalization.accuracy);
  }
  const AggregateStat check = aggregate_stat(gen);
  CHECK(batch.generalization.mean == doctest::Approx(check.mean).epsilon(1e-15));
  CHECK(batch.generalization.stddev == doctest::Approx(check.stddev).epsilon(1e-15));

  // Unkept runs drop their parameter snapshots, kept runs keep them.
  for (std::size_t i = 0; i < batch.runs.size(); ++i) {
    const bool is_kept =
        std::find(batch.kept.begin(), batch.kept.end(), static_cast<int>(i)) !=
        batch.kept.end();
    CHECK(batch.runs[i].step1_params.empty() == !is_kept);
  }
}

TEST_CASE("an impossible keep threshold raises the quota error") {
  const EnvironmentPreset env = environment_preset("multi2");
  const ModelSpec spec = default_model_spec("mlp_1", env.structure);
  TrainingConfig cfg = quick_config();
  cfg.max_epochs = 3;          // nothing converges in three epochs
  cfg.keep_threshold = 0.999;
  cfg.runs_kept = 1;
  cfg.runs_launched = 2;
  CHECK_THROWS_AS(
      run_batch(spec, env.first, env.second, cfg), InsufficientRunsError);
}

TEST_CASE("parallel execution reproduces the serial batch exactly") {
  const EnvironmentPreset env = environment_preset("multi2");
  const ModelSpec spec = default_model_spec("mlp_1", env.structure);
  TrainingConfig serial_cfg = quick_config();
  serial_cfg.runs_kept = 3;
  serial_cfg.runs_launched = 4;
  TrainingConfig parallel_cfg = serial_cfg;
  parallel_cfg.jobs = 3;

  const BatchResult s = run_batch(spec, env.first, env.second, serial_cfg);
  const BatchResult p = run_batch(spec, env.first, env.second, parallel_cfg);
  REQUIRE(s.runs.size() == p.runs.size());
  CHECK(s.kept == p.kept);
  for (std::size_t i = 0; i < s.runs.size(); ++i) {
    CHECK(s.runs[i].seed == p.runs[i].seed);
    CHECK(s.runs[i].step1.curve == p.runs[i].step1.curve);
    CHECK(s.runs[i].generalization.accuracy == p.runs[i].generalization.accuracy);
    CHECK(s.runs[i].stability.accuracy == p.runs[i].stability.accuracy);
    CHECK(s.runs[i].step1_params == p.runs[i].step1_params);
    CHECK(s.runs[i].final_params == p.runs[i].final_params);
  }
  CHECK(s.generalization.mean == p.generalization.mean);
  CHECK(s.stability.mean == p.stability.mean);
}

TEST_CASE("optimizer carryover changes the second phase only") {
  const EnvironmentPreset env = environment_preset("multi2");
  const ModelSpec spec = default_model_spec("mlp_1", env.structure);
  TrainingConfig cfg = quick_config();
  TrainingConfig carry = cfg;
  carry.adam_carryover = true;

  const RunResult fresh = run_two_step(spec, env.first, env.second, cfg, 0);
  const RunResult kept = run_two_step(spec, env.first, env.second, carry, 0);
  // Same seed, same first phase.
  CHECK(fresh.step1.curve == kept.step1.curve);
  CHECK(fresh.step1_params == kept.step1_params);
  CHECK(fresh.generalization.accuracy == kept.generalization.accuracy);
  // Retraining trajectories diverge once optimizer state is preserved.
  CHECK(fresh.final_params != kept.final_params);
}
