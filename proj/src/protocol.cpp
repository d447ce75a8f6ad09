#include "cogflex/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "cogflex/errors.hpp"

namespace cogflex {

void validate_training_config(const TrainingConfig& cfg) {
  if (cfg.batch_size < 1) throw ValidationError("batch_size must be positive");
  if (cfg.trials_per_task < 1) throw ValidationError("trials_per_task must be positive");
  if (cfg.eval_trials_per_task < 1) {
    throw ValidationError("eval_trials_per_task must be positive");
  }
  if (cfg.max_epochs < 1) throw ValidationError("max_epochs must be positive");
  if (cfg.early_stop_streak < 1) {
    throw ValidationError("early_stop_streak must be positive");
  }
  if (cfg.runs_kept < 1) throw ValidationError("runs_kept must be positive");
  if (cfg.runs_launched < cfg.runs_kept) {
    throw ValidationError("runs_launched must be at least runs_kept");
  }
  if (!(cfg.keep_threshold >= 0.0 && cfg.keep_threshold <= 1.0)) {
    throw ValidationError("keep_threshold must lie in [0, 1]");
  }
  if (cfg.jobs < 1) throw ValidationError("jobs must be positive");
}

AggregateStat aggregate_stat(const std::vector<double>& values) {
  AggregateStat s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / s.count;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = s.count > 1 ? std::sqrt(ss / (s.count - 1)) : 0.0;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  s.min = *mn;
  s.max = *mx;
  return s;
}

std::uint64_t run_seed(const TrainingConfig& cfg, int run_index) {
  return derive_seed(cfg.master_seed, static_cast<std::uint64_t>(run_index));
}

Rng stream_rng(std::uint64_t seed, SeedStream stream) {
  return Rng(derive_seed(seed, static_cast<std::uint64_t>(stream)));
}

TrainResult train_regime(Network& net, Adam& adam, const Regime& regime,
                         const TrainingConfig& cfg, Rng& trial_rng,
                         Rng& shuffle_rng) {
  validate_training_config(cfg);
  const TrialSet set = generate_trials(regime, cfg.trials_per_task, trial_rng,
                                       cfg.sampling);
  const std::size_t total = set.size();
  const int width = set.structure.input_width();

  std::vector<std::uint32_t> order(total);
  std::iota(order.begin(), order.end(), 0u);
  std::vector<std::uint8_t> bx(static_cast<std::size_t>(cfg.batch_size) * width);
  std::vector<std::uint8_t> bt(cfg.batch_size);

  TrainResult res;
  int streak = 0;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    std::size_t correct = 0;
    for (std::size_t start = 0; start < total; start += cfg.batch_size) {
      const int rows = static_cast<int>(
          std::min<std::size_t>(cfg.batch_size, total - start));
      for (int r = 0; r < rows; ++r) {
        const std::uint32_t src = order[start + r];
        std::copy_n(set.input_row(src), width, bx.data() + static_cast<std::size_t>(r) * width);
        bt[r] = set.targets[src];
      }
      net.forward(bx.data(), rows);
      const double loss = net.mean_loss(bt.data(), rows);
      if (!std::isfinite(loss)) {
        throw DivergenceError("non-finite training loss at epoch " +
                              std::to_string(epoch + 1) + ", trial offset " +
                              std::to_string(start));
      }
      correct += net.correct_count(bt.data(), rows);
      net.backward(bx.data(), bt.data(), rows);
      adam.step(net.params(), net.grads());
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(total);
    res.curve.push_back(acc);
    if (acc == 1.0) {
      if (++streak >= cfg.early_stop_streak) {
        res.converged = true;
        break;
      }
    } else {
      streak = 0;
    }
  }
  res.epochs = static_cast<int>(res.curve.size());
  res.final_accuracy = res.curve.back();
  return res;
}

EvalResult evaluate(Network& net, const Regime& regime, int trials_per_task,
                    Rng& rng, StimulusSampling sampling) {
  if (trials_per_task < 1) throw ValidationError("trials_per_task must be positive");
  const TrialSet set = generate_trials(regime, trials_per_task, rng, sampling);
  const std::size_t total = set.size();
  const int width = set.structure.input_width();
  const int task_count = regime.task_count();

  std::vector<std::size_t> correct(task_count, 0);
  std::size_t correct_total = 0;
  constexpr std::size_t kChunk = 2048;
  for (std::size_t start = 0; start < total; start += kChunk) {
    const int rows = static_cast<int>(std::min(kChunk, total - start));
    net.forward(set.input_row(start), rows);
    for (int r = 0; r < rows; ++r) {
      const std::size_t i = start + r;
      if (net.predicted(r) == set.targets[i]) {
        ++correct[set.task_ids[i]];
        ++correct_total;
      }
    }
  }

  EvalResult res;
  res.accuracy = static_cast<double>(correct_total) / static_cast<double>(total);
  res.per_task.resize(task_count);
  for (int t = 0; t < task_count; ++t) {
    res.per_task[t] = static_cast<double>(correct[t]) / trials_per_task;
  }
  return res;
}

RunResult run_two_step(const ModelSpec& spec, const Regime& first,
                       const Regime& second, const TrainingConfig& cfg,
                       int run_index) {
  validate_training_config(cfg);
  if (!(first.structure() == second.structure())) {
    throw ValidationError("first and second regimes use different structures");
  }
  if (!(spec.structure == first.structure())) {
    throw ValidationError("model structure does not match the regimes");
  }
  if (!cfg.allow_regime_overlap && (first.mask() & second.mask()) != 0) {
    throw ValidationError("first and second regimes share a task");
  }
  if (first.structure().n <= 3 && !first.covers_all_cues()) {
    throw ValidationError("the first regime must cover every cue for n <= 3");
  }

  RunResult res;
  res.run_index = run_index;
  res.seed = run_seed(cfg, run_index);

  Network net = build_network(spec);
  {
    Rng init = stream_rng(res.seed, SeedStream::Init);
    net.init_params(init);
  }
  Adam adam(net.param_count(), cfg.adam);

  {
    Rng trials = stream_rng(res.seed, SeedStream::Step1Trials);
    Rng shuffle = stream_rng(res.seed, SeedStream::Step1Shuffle);
    res.step1 = train_regime(net, adam, first, cfg, trials, shuffle);
  }
  {
    Rng eval_rng = stream_rng(res.seed, SeedStream::GeneralizationEval);
    res.generalization = evaluate(net, second, cfg.eval_trials_per_task, eval_rng);
  }
  res.step1_params = net.params();

  if (!cfg.adam_carryover) adam.reset();
  {
    Rng trials = stream_rng(res.seed, SeedStream::Step2Trials);
    Rng shuffle = stream_rng(res.seed, SeedStream::Step2Shuffle);
    res.step2 = train_regime(net, adam, second, cfg, trials, shuffle);
  }
  {
    Rng eval_rng = stream_rng(res.seed, SeedStream::StabilityEval);
    res.stability = evaluate(net, first, cfg.eval_trials_per_task, eval_rng);
  }
  res.final_params = net.params();
  return res;
}

BatchResult run_batch(const ModelSpec& spec, const Regime& first,
                      const Regime& second, const TrainingConfig& cfg,
                      bool keep_params, const RunProgress& progress) {
  validate_training_config(cfg);
  BatchResult out;
  const std::size_t quota = static_cast<std::size_t>(cfg.runs_kept);

  int next = 0;
  while (next < cfg.runs_launched && out.kept.size() < quota) {
    const int wave = std::min(cfg.jobs, cfg.runs_launched - next);
    std::vector<RunResult> results(wave);
    std::vector<std::exception_ptr> errors(wave);
    if (wave == 1) {
      try {
        results[0] = run_two_step(spec, first, second, cfg, next);
      } catch (...) {
        errors[0] = std::current_exception();
      }
    } else {
      std::vector<std::thread> workers;
      workers.reserve(wave);
      for (int w = 0; w < wave; ++w) {
        workers.emplace_back([&, w] {
          try {
            results[w] = run_two_step(spec, first, second, cfg, next + w);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      for (std::thread& t : workers) t.join();
    }

    // Fold in launch order so artifacts never depend on the jobs setting.
    for (int w = 0; w < wave; ++w) {
      if (out.kept.size() >= quota) break;
      if (errors[w]) {
        try {
          std::rethrow_exception(errors[w]);
        } catch (const DivergenceError& e) {
          throw DivergenceError(std::string(e.what()) + " (run " +
                                std::to_string(next + w) + ")");
        }
      }
      out.runs.push_back(std::move(results[w]));
      RunResult& run = out.runs.back();
      if (run.step1.final_accuracy > cfg.keep_threshold) {
        out.kept.push_back(static_cast<int>(out.runs.size()) - 1);
      }
      if (progress) progress(run);
    }
    next += wave;
  }

  if (out.kept.size() < quota) {
    throw InsufficientRunsError(
        "only " + std::to_string(out.kept.size()) + " of " +
        std::to_string(cfg.runs_launched) + " launched runs exceeded step-1 accuracy " +
        std::to_string(cfg.keep_threshold) + "; needed " +
        std::to_string(cfg.runs_kept));
  }

  if (!keep_params) {
    std::vector<bool> is_kept(out.runs.size(), false);
    for (int k : out.kept) is_kept[k] = true;
    for (std::size_t i = 0; i < out.runs.size(); ++i) {
      if (!is_kept[i]) {
        out.runs[i].step1_params.clear();
        out.runs[i].final_params.clear();
      }
    }
  }

  std::vector<double> gen, stab;
  gen.reserve(out.kept.size());
  stab.reserve(out.kept.size());
  for (int k : out.kept) {
    gen.push_back(out.runs[k].generalization.accuracy);
    stab.push_back(out.runs[k].stability.accuracy);
  }
  out.generalization = aggregate_stat(gen);
  out.stability = aggregate_stat(stab);
  return out;
}

}  // namespace cogflex
