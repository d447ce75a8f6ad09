// Command-line laboratory for the multi-task cognitive-flexibility
// experiments: regime enumeration, model inspection, the two-step training
// protocol, post-hoc analysis, and figure reproduction presets.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cogflex/analysis.hpp"
#include "cogflex/config.hpp"
#include "cogflex/errors.hpp"
#include "cogflex/models.hpp"
#include "cogflex/protocol.hpp"
#include "cogflex/regime_graph.hpp"
#include "cogflex/stats.hpp"
#include "cogflex/store.hpp"
#include "cogflex/task_env.hpp"
#include "cogflex/version.hpp"

namespace fs = std::filesystem;
using namespace cogflex;

namespace {

const std::vector<std::string> kFigureIds = {
    "fig2", "fig3", "fig5",  "fig6",  "fig7",  "fig8",
    "fig9", "fig10", "fig11", "fig12", "fig13", "table1"};

const std::vector<std::string> kModelOrder = {"mlp_1",    "mlp_2",  "gate_1",
                                              "gate_2",   "concat_1",
                                              "concat_2"};

const std::vector<std::string> kDisplayTrio = {"mlp_2", "gate_2", "concat_2"};

int model_order_index(const std::string& name) {
  for (std::size_t i = 0; i < kModelOrder.size(); ++i)
    if (kModelOrder[i] == name) return static_cast<int>(i);
  return static_cast<int>(kModelOrder.size());
}

std::vector<std::string> parse_model_list(const std::string& list) {
  std::vector<std::string> models;
  std::string item;
  std::stringstream ss(list);
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    parse_model_name(item);  // validates
    if (std::find(models.begin(), models.end(), item) != models.end())
      throw ValidationError("model '" + item + "' listed twice");
    models.push_back(item);
  }
  if (models.empty()) throw ValidationError("no models given");
  return models;
}

// One (environment, regime pair) an experiment runs on.
struct EnvCase {
  std::string tag;
  Regime first;
  Regime second;
};

std::vector<EnvCase> sweep_cases() {
  std::vector<EnvCase> cases;
  const std::vector<CanonicalRegime> catalog = enumerate_unique_regimes(4, 8);
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    if (!catalog[i].metrics.connected) break;  // disconnected sort last
    char tag[8];
    std::snprintf(tag, sizeof tag, "r%02zu", i + 1);
    const Regime first = catalog[i].regime();
    cases.push_back({tag, first, complement_regime(first)});
  }
  return cases;
}

std::vector<EnvCase> preset_cases(const std::vector<std::string>& names) {
  std::vector<EnvCase> cases;
  for (const std::string& name : names) {
    const EnvironmentPreset p = environment_preset(name);
    cases.push_back({p.name, p.first, p.second});
  }
  return cases;
}

struct BatchJob {
  std::string name;  // directory name: <env tag>__<model>
  std::string environment;
  std::string model;
  ModelSpec spec;
  Regime first;
  Regime second;
};

std::vector<BatchJob> make_jobs(const std::vector<EnvCase>& cases,
                                const std::vector<std::string>& models,
                                const ExperimentConfig& cfg) {
  std::vector<BatchJob> jobs;
  for (const EnvCase& c : cases) {
    for (const std::string& model : models) {
      const ModelSpec spec =
          configured_model_spec(cfg, model, c.first.structure());
      jobs.push_back(
          {c.tag + "__" + model, c.tag, model, spec, c.first, c.second});
    }
  }
  return jobs;
}

struct CompletedBatch {
  BatchJob job;
  BatchResult result;
};

// Runs every job, persists its artifacts, and keeps going past quota
// failures so one stubborn batch cannot hide the rest of a sweep.
std::vector<CompletedBatch> execute_jobs(const std::vector<BatchJob>& jobs,
                                         const ExperimentConfig& cfg,
                                         const std::string& out,
                                         bool keep_params,
                                         ManifestInfo& manifest) {
  std::vector<CompletedBatch> done;
  for (const BatchJob& job : jobs) {
    std::cout << "[" << job.name << "] launching up to "
              << cfg.training.runs_launched << " runs (keeping "
              << cfg.training.runs_kept << ")\n";
    const auto progress = [&](const RunResult& r) {
      std::cout << "[" << job.name << "] run " << r.run_index << " step1 "
                << r.step1.epochs << " epochs acc " << r.step1.final_accuracy
                << (r.step1.converged ? "" : " (no early stop)") << " gen "
                << r.generalization.accuracy << " stab "
                << r.stability.accuracy << "\n";
      std::cout.flush();
    };
    try {
      BatchResult result =
          run_batch(job.spec, job.first, job.second, cfg.training, keep_params,
                    progress);
      BatchMeta meta(job.name, job.environment, job.model, job.spec, job.first,
                     job.second);
      write_batch(out, meta, result, cfg);
      manifest.batches.push_back(job.name);
      std::cout << "[" << job.name << "] kept " << result.kept.size() << "/"
                << result.runs.size() << " runs; gen "
                << result.generalization.mean << " stab "
                << result.stability.mean << "\n";
      done.push_back({job, std::move(result)});
    } catch (const InsufficientRunsError& e) {
      manifest.failed.push_back(job.name);
      std::cerr << "[" << job.name << "] " << e.what() << "\n";
    }
  }
  return done;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string task_label(const Task& t) {
  return "S" + std::to_string(t.sensory) + "M" + std::to_string(t.motor);
}

// Kept-run learning curves averaged per epoch; early-stopped runs hold their
// final accuracy through the longest run's length.
void write_curves_summary(const std::string& path,
                          const std::vector<CompletedBatch>& batches) {
  std::ostringstream out;
  out << "model,step,epoch,mean_accuracy,stddev_accuracy,runs\n";
  for (const CompletedBatch& b : batches) {
    for (int step = 1; step <= 2; ++step) {
      std::size_t longest = 0;
      for (int k : b.result.kept) {
        const RunResult& r = b.result.runs[static_cast<std::size_t>(k)];
        longest = std::max(longest,
                           (step == 1 ? r.step1 : r.step2).curve.size());
      }
      for (std::size_t e = 0; e < longest; ++e) {
        std::vector<double> vals;
        for (int k : b.result.kept) {
          const TrainResult& tr = step == 1
                                      ? b.result.runs[static_cast<std::size_t>(k)].step1
                                      : b.result.runs[static_cast<std::size_t>(k)].step2;
          vals.push_back(e < tr.curve.size() ? tr.curve[e] : tr.curve.back());
        }
        const AggregateStat s = aggregate_stat(vals);
        out << b.job.model << ',' << step << ',' << (e + 1) << ','
            << csv_num(s.mean) << ',' << csv_num(s.stddev) << ',' << s.count
            << "\n";
      }
    }
  }
  write_text(path, out.str());
}

void write_env_summary(const std::string& path,
                       const std::vector<CompletedBatch>& batches) {
  std::ostringstream out;
  out << "environment,model,chance,generalization_mean,generalization_stddev,"
         "generalization_min,generalization_max,stability_mean,"
         "stability_stddev,stability_min,stability_max,runs\n";
  for (const CompletedBatch& b : batches) {
    const AggregateStat& g = b.result.generalization;
    const AggregateStat& s = b.result.stability;
    out << b.job.environment << ',' << b.job.model << ','
        << csv_num(b.job.first.structure().chance_accuracy()) << ','
        << csv_num(g.mean) << ',' << csv_num(g.stddev) << ',' << csv_num(g.min)
        << ',' << csv_num(g.max) << ',' << csv_num(s.mean) << ','
        << csv_num(s.stddev) << ',' << csv_num(s.min) << ',' << csv_num(s.max)
        << ',' << g.count << "\n";
  }
  write_text(path, out.str());
}

void write_taskwise_summary(const std::string& path,
                            const std::vector<CompletedBatch>& batches,
                            bool generalization) {
  std::ostringstream out;
  out << "model,task,mean_accuracy,stddev_accuracy,runs\n";
  for (const CompletedBatch& b : batches) {
    const std::vector<Task>& tasks =
        generalization ? b.job.second.tasks() : b.job.first.tasks();
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
      std::vector<double> vals;
      for (int k : b.result.kept) {
        const RunResult& r = b.result.runs[static_cast<std::size_t>(k)];
        const EvalResult& ev = generalization ? r.generalization : r.stability;
        vals.push_back(ev.per_task[ti]);
      }
      const AggregateStat s = aggregate_stat(vals);
      out << b.job.model << ',' << task_label(tasks[ti]) << ','
          << csv_num(s.mean) << ',' << csv_num(s.stddev) << ',' << s.count
          << "\n";
    }
  }
  write_text(path, out.str());
}

struct RegimeKey {
  double aspl = 0;
  double lspl = 0;
  std::string matrix;
  int id = 0;  // 1-based position in ascending metric order
};

// Distinct first regimes of a batch list, ordered like the regime catalog.
std::vector<std::pair<RegimeKey, std::vector<const CompletedBatch*>>>
group_by_regime(const std::vector<CompletedBatch>& batches) {
  std::map<std::string, std::pair<RegimeKey, std::vector<const CompletedBatch*>>>
      by_matrix;
  for (const CompletedBatch& b : batches) {
    const std::string m = matrix_string(b.job.first);
    auto& slot = by_matrix[m];
    if (slot.second.empty()) {
      const ConnectivityMetrics met =
          connectivity_metrics(CueGraph::from_regime(b.job.first));
      slot.first = {met.aspl(), met.lspl(), m, 0};
    }
    slot.second.push_back(&b);
  }
  std::vector<std::pair<RegimeKey, std::vector<const CompletedBatch*>>> groups;
  for (auto& [m, slot] : by_matrix) groups.push_back(std::move(slot));
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
    if (a.first.aspl != b.first.aspl) return a.first.aspl < b.first.aspl;
    if (a.first.lspl != b.first.lspl) return a.first.lspl < b.first.lspl;
    return a.first.matrix < b.first.matrix;
  });
  for (std::size_t i = 0; i < groups.size(); ++i) {
    groups[i].first.id = static_cast<int>(i + 1);
    std::sort(groups[i].second.begin(), groups[i].second.end(),
              [](const CompletedBatch* a, const CompletedBatch* b) {
                return model_order_index(a->job.model) <
                       model_order_index(b->job.model);
              });
  }
  return groups;
}

std::string metric_repr(double v) {
  return std::isinf(v) ? "inf" : csv_num(v);
}

void write_sweep_summary(const std::string& path,
                         const std::vector<CompletedBatch>& batches) {
  std::ostringstream out;
  out << "regime_id,canonical_matrix,aspl,lspl,model,generalization_mean,"
         "generalization_stddev,stability_mean,stability_stddev,runs\n";
  for (const auto& [key, group] : group_by_regime(batches)) {
    for (const CompletedBatch* b : group) {
      out << key.id << ',' << key.matrix << ',' << metric_repr(key.aspl) << ','
          << metric_repr(key.lspl) << ',' << b->job.model << ','
          << csv_num(b->result.generalization.mean) << ','
          << csv_num(b->result.generalization.stddev) << ','
          << csv_num(b->result.stability.mean) << ','
          << csv_num(b->result.stability.stddev) << ','
          << b->result.generalization.count << "\n";
    }
  }
  write_text(path, out.str());
}

void write_violin_csv(const std::string& path,
                      const std::vector<CompletedBatch>& batches) {
  std::ostringstream out;
  out << "regime_id,environment,aspl,model,run_id,generalization,stability\n";
  for (const auto& [key, group] : group_by_regime(batches)) {
    for (const CompletedBatch* b : group) {
      for (int k : b->result.kept) {
        const RunResult& r = b->result.runs[static_cast<std::size_t>(k)];
        out << key.id << ',' << b->job.environment << ','
            << metric_repr(key.aspl) << ',' << b->job.model << ','
            << r.run_index << ',' << csv_num(r.generalization.accuracy) << ','
            << csv_num(r.stability.accuracy) << "\n";
      }
    }
  }
  write_text(path, out.str());
}

void write_distribution_summary(const std::string& path,
                                const std::vector<CompletedBatch>& batches) {
  std::ostringstream out;
  out << "regime_id,environment,model,metric,count,mean,stddev,min,q1,median,"
         "q3,max\n";
  for (const auto& [key, group] : group_by_regime(batches)) {
    for (const CompletedBatch* b : group) {
      for (int metric = 0; metric < 2; ++metric) {
        std::vector<double> vals;
        for (int k : b->result.kept) {
          const RunResult& r = b->result.runs[static_cast<std::size_t>(k)];
          vals.push_back(metric == 0 ? r.generalization.accuracy
                                     : r.stability.accuracy);
        }
        const DistributionSummary d = summarize_distribution(vals);
        out << key.id << ',' << b->job.environment << ',' << b->job.model << ','
            << (metric == 0 ? "generalization" : "stability") << ',' << d.count
            << ',' << csv_num(d.mean) << ',' << csv_num(d.stddev) << ','
            << csv_num(d.min) << ',' << csv_num(d.q1) << ','
            << csv_num(d.median) << ',' << csv_num(d.q3) << ','
            << csv_num(d.max) << "\n";
      }
    }
  }
  write_text(path, out.str());
}

// Pearson + least squares of a connectivity metric against kept-run mean
// accuracy, one row per (model, target).
void write_regression_files(const std::string& points_path,
                            const std::string& regression_path,
                            const std::vector<CompletedBatch>& batches,
                            bool use_lspl) {
  const auto groups = group_by_regime(batches);
  std::map<std::string, std::vector<std::array<double, 3>>> per_model;
  std::ostringstream pts;
  pts << "model,regime_id,aspl,lspl,generalization_mean,stability_mean\n";
  std::set<std::string> models_seen;
  for (const auto& [key, group] : groups) {
    for (const CompletedBatch* b : group) {
      pts << b->job.model << ',' << key.id << ',' << metric_repr(key.aspl)
          << ',' << metric_repr(key.lspl) << ','
          << csv_num(b->result.generalization.mean) << ','
          << csv_num(b->result.stability.mean) << "\n";
      if (!std::isinf(key.aspl)) {
        per_model[b->job.model].push_back({use_lspl ? key.lspl : key.aspl,
                                           b->result.generalization.mean,
                                           b->result.stability.mean});
        models_seen.insert(b->job.model);
      }
    }
  }
  write_text(points_path, pts.str());

  std::vector<std::string> models(models_seen.begin(), models_seen.end());
  std::sort(models.begin(), models.end(), [](const auto& a, const auto& b) {
    return model_order_index(a) < model_order_index(b);
  });
  std::ostringstream reg;
  reg << "model,metric,target,r,p,slope,intercept,points\n";
  for (const std::string& model : models) {
    const auto& rows = per_model[model];
    if (rows.size() < 3) continue;
    std::vector<double> x;
    for (const auto& row : rows) x.push_back(row[0]);
    for (int target = 0; target < 2; ++target) {
      std::vector<double> y;
      for (const auto& row : rows) y.push_back(row[static_cast<std::size_t>(target) + 1]);
      const PearsonResult pr = pearson(x, y);
      const LinearFit fit = least_squares(x, y);
      reg << model << ',' << (use_lspl ? "lspl" : "aspl") << ','
          << (target == 0 ? "generalization" : "stability") << ','
          << csv_num(pr.r) << ',' << csv_num(pr.p) << ',' << csv_num(fit.slope)
          << ',' << csv_num(fit.intercept) << ',' << pr.count << "\n";
    }
  }
  write_text(regression_path, reg.str());
}

struct SensitivityRow {
  std::string model;
  std::string environment;
  std::string tap;
  std::string cue;
  double mean_cos = 0;
  double stddev = 0;
  int runs = 0;
};

// Mean per-run cue-change cosines over the sensitivity pool: kept runs whose
// step-1 accuracy clears the (separate) sensitivity threshold.
std::vector<SensitivityRow> sensitivity_rows(
    const std::string& model, const std::string& environment,
    const ModelSpec& spec, const Regime& first, const ExperimentConfig& cfg,
    const std::vector<const std::vector<double>*>& param_sets) {
  Network net = build_network(spec);
  SensitivityConfig scfg;
  scfg.repeats = cfg.sensitivity_repeats;
  scfg.per_stimulus = cfg.sensitivity_per_stimulus;
  std::vector<std::string> order;  // "tap|cue" in first-seen order
  std::map<std::string, std::vector<double>> acc;
  for (const std::vector<double>* params : param_sets) {
    if (params->size() != net.param_count())
      throw ValidationError("parameter snapshot does not fit the model");
    net.params() = *params;
    for (const SensitivityValue& v : cue_sensitivity(net, spec, first, scfg)) {
      const std::string key = v.tap + "|" + to_string(v.change);
      if (!acc.count(key)) order.push_back(key);
      acc[key].push_back(v.mean_cosine);
    }
  }
  std::vector<SensitivityRow> rows;
  for (const std::string& key : order) {
    const std::size_t bar = key.find('|');
    const AggregateStat s = aggregate_stat(acc[key]);
    rows.push_back({model, environment, key.substr(0, bar),
                    key.substr(bar + 1), s.mean, s.stddev, s.count});
  }
  return rows;
}

void write_sensitivity_csv(const std::string& path,
                           const std::vector<SensitivityRow>& rows) {
  std::ostringstream out;
  out << "model,environment,tap,cue_type,mean_cos,std\n";
  for (const SensitivityRow& r : rows) {
    out << r.model << ',' << r.environment << ',' << r.tap << ',' << r.cue
        << ',' << csv_num(r.mean_cos) << ',' << csv_num(r.stddev) << "\n";
  }
  write_text(path, out.str());
}

std::vector<SensitivityRow> batch_sensitivity(const CompletedBatch& b,
                                              const ExperimentConfig& cfg) {
  std::vector<const std::vector<double>*> pool;
  for (int k : b.result.kept) {
    const RunResult& r = b.result.runs[static_cast<std::size_t>(k)];
    if (r.step1.final_accuracy > cfg.sensitivity_threshold &&
        !r.step1_params.empty())
      pool.push_back(&r.step1_params);
  }
  return sensitivity_rows(b.job.model, b.job.environment, b.job.spec,
                          b.job.first, cfg, pool);
}

// ---------------------------------------------------------------------------
// Flag plumbing shared by train and reproduce.

struct RunFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int runs = 0;
  bool runs_set = false;
  int launched = 0;
  bool launched_set = false;
  int jobs = 0;
  bool jobs_set = false;
  bool full = false;
  int trials = 0;
  bool trials_set = false;
  int max_epochs = 0;
  bool max_epochs_set = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool reproduce) {
  cmd->add_option("--config", f.config_path,
                  "key=value config file applied before flags");
  cmd->add_option("--seed", f.seed, "master seed")
      ->each([&f](const std::string&) { f.seed_set = true; });
  cmd->add_option("--runs", f.runs, "kept runs per batch")
      ->each([&f](const std::string&) { f.runs_set = true; });
  cmd->add_option("--launched", f.launched, "launched runs per batch")
      ->each([&f](const std::string&) { f.launched_set = true; });
  cmd->add_option("--jobs", f.jobs, "worker threads")
      ->each([&f](const std::string&) { f.jobs_set = true; });
  cmd->add_option("--trials-per-task", f.trials, "training trials per task")
      ->each([&f](const std::string&) { f.trials_set = true; });
  cmd->add_option("--max-epochs", f.max_epochs, "epoch cap per step")
      ->each([&f](const std::string&) { f.max_epochs_set = true; });
  if (reproduce)
    cmd->add_flag("--full", f.full, "full scale: keep 50 of up to 70 runs");
}

int default_launched(int kept) {
  const int margin = (2 * kept + 4) / 5;  // ceil(0.4 kept)
  return kept + std::max(2, margin);
}

ExperimentConfig resolve_config(const RunFlags& f, bool reproduce) {
  ExperimentConfig base;
  if (reproduce) {
    // Desk scale: enough runs for ordinal checks in minutes, not hours.
    base.training.runs_kept = 10;
    base.training.runs_launched = default_launched(10);
  }
  ExperimentConfig cfg =
      f.config_path.empty() ? base : parse_config_file(f.config_path, base);
  if (f.full) {
    cfg.training.runs_kept = 50;
    cfg.training.runs_launched = 70;
  }
  if (f.runs_set) {
    cfg.training.runs_kept = f.runs;
    cfg.training.runs_launched = default_launched(f.runs);
  }
  if (f.launched_set) cfg.training.runs_launched = f.launched;
  if (f.seed_set) cfg.training.master_seed = f.seed;
  if (f.jobs_set) cfg.training.jobs = f.jobs;
  if (f.trials_set) cfg.training.trials_per_task = f.trials;
  if (f.max_epochs_set) cfg.training.max_epochs = f.max_epochs;
  if (const char* env_seed = std::getenv("COGFLEX_SEED")) {
    const std::string text = env_seed;
    if (!text.empty()) {
      try {
        std::size_t pos = 0;
        cfg.training.master_seed = std::stoull(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
      } catch (const std::exception&) {
        throw ValidationError("COGFLEX_SEED is not an unsigned integer: '" +
                              text + "'");
      }
    }
  }
  validate_training_config(cfg.training);
  return cfg;
}

int finish_store(const std::string& out, ManifestInfo& manifest) {
  write_manifest(out, manifest);
  if (!manifest.failed.empty()) {
    std::cerr << manifest.failed.size()
              << " batch(es) missed the kept-run quota\n";
    return 2;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Subcommand bodies.

int cmd_enumerate(int n, int tasks, const std::string& out_path) {
  const std::vector<CanonicalRegime> catalog = enumerate_unique_regimes(n, tasks);
  int connected = 0;
  for (const CanonicalRegime& c : catalog) connected += c.metrics.connected;
  write_catalog_csv(out_path, catalog);
  std::cout << catalog.size() << " unique (" << connected << " connected, "
            << (catalog.size() - connected) << " disconnected)\n";
  std::cout << "catalog written to " << out_path << "\n";
  return 0;
}

int cmd_describe(const std::string& model, int n, const std::string& env,
                 const std::string& widths, bool allow_override) {
  TaskStructure structure;
  if (!env.empty()) {
    structure = environment_preset(env).structure;
  } else if (n > 0) {
    structure = TaskStructure(n);
  } else {
    throw ValidationError("describe-model needs --n or --env");
  }
  ExperimentConfig cfg;
  cfg.allow_capacity_override = allow_override;
  ModelSpec spec;
  if (!widths.empty()) {
    const ModelName mn = parse_model_name(model);
    spec.kind = mn.kind;
    spec.variant = mn.variant;
    spec.structure = structure;
    spec.bottleneck = mn.kind != ModelKind::Mlp && mn.variant == 1;
    std::string item;
    std::stringstream ss(widths);
    while (std::getline(ss, item, ','))
      spec.layer_widths.push_back(std::stoi(item));
    validate_model_spec(spec, allow_override);
  } else {
    spec = configured_model_spec(cfg, model, structure);
  }
  std::cout << describe_model(spec);
  return 0;
}

int cmd_train(const std::string& env, const std::string& regime1_path,
              const std::string& regime2_path, const std::string& model_list,
              const std::string& out, const RunFlags& flags) {
  const ExperimentConfig cfg = resolve_config(flags, false);
  const std::vector<std::string> models = parse_model_list(model_list);

  std::vector<EnvCase> cases;
  if (!env.empty() && !regime1_path.empty())
    throw ValidationError("--env and --regime1 are mutually exclusive");
  if (env == "multi4-middle-sweep") {
    cases = sweep_cases();
  } else if (!env.empty()) {
    cases = preset_cases({env});
  } else if (!regime1_path.empty()) {
    const Regime first = read_regime_file(regime1_path);
    const Regime second = regime2_path.empty()
                              ? complement_regime(first)
                              : read_regime_file(regime2_path);
    cases.push_back({"custom", first, second});
  } else {
    throw ValidationError("train needs --env or --regime1");
  }

  ManifestInfo manifest;
  manifest.command = "train";
  manifest.master_seed = cfg.training.master_seed;
  manifest.config_hash = config_hash_hex(cfg);
  execute_jobs(make_jobs(cases, models, cfg), cfg, out, true, manifest);
  return finish_store(out, manifest);
}

int cmd_analyze(const std::string& store_dir, bool do_sensitivity,
                bool do_correlations, bool do_sweep, bool do_violin,
                bool do_distributions, double threshold_override,
                bool threshold_set, int repeats_override, bool repeats_set,
                bool per_stimulus) {
  const LoadedStore store = read_store(store_dir);
  if (store.batches.empty())
    throw IoError("incomplete store: no completed batches in '" + store_dir +
                  "'");
  const bool all = !do_sensitivity && !do_correlations && !do_sweep &&
                   !do_violin && !do_distributions;

  // Integrity gate: aggregates must match a recomputation from runs.csv.
  std::vector<CompletedBatch> batches;
  for (const LoadedBatch& lb : store.batches) {
    CompletedBatch cb{
        BatchJob{lb.name, lb.environment, lb.model, lb.spec, lb.first,
                 lb.second},
        BatchResult{}};
    for (const LoadedRun& lr : lb.runs) {
      RunResult r;
      r.run_index = lr.run_index;
      r.seed = lr.seed;
      r.step1.epochs = lr.step1_epochs;
      r.step1.converged = lr.step1_converged;
      r.step1.final_accuracy = lr.step1_final_accuracy;
      if (lr.step1_epochs > 0) r.step1.curve = {lr.step1_final_accuracy};
      r.step2.epochs = lr.step2_epochs;
      r.step2.converged = lr.step2_converged;
      r.step2.final_accuracy = lr.step2_final_accuracy;
      r.generalization.accuracy = lr.generalization;
      r.generalization.per_task = lr.gen_per_task;
      r.stability.accuracy = lr.stability;
      r.stability.per_task = lr.stab_per_task;
      cb.result.runs.push_back(std::move(r));
    }
    cb.result.kept = lb.kept;
    std::vector<double> gen;
    std::vector<double> stab;
    for (int k : lb.kept) {
      gen.push_back(lb.runs[static_cast<std::size_t>(k)].generalization);
      stab.push_back(lb.runs[static_cast<std::size_t>(k)].stability);
    }
    cb.result.generalization = aggregate_stat(gen);
    cb.result.stability = aggregate_stat(stab);
    const auto close = [](const AggregateStat& a, const AggregateStat& b) {
      return a.count == b.count && std::fabs(a.mean - b.mean) <= 1e-12 &&
             std::fabs(a.stddev - b.stddev) <= 1e-12 &&
             std::fabs(a.min - b.min) <= 1e-12 &&
             std::fabs(a.max - b.max) <= 1e-12;
    };
    if (!close(cb.result.generalization, lb.generalization) ||
        !close(cb.result.stability, lb.stability))
      throw IoError(lb.name +
                    ": aggregate.json disagrees with recomputation from "
                    "runs.csv");
    batches.push_back(std::move(cb));
  }

  // Figure sweeps must be complete before correlations mean anything.
  const std::string& fig = store.manifest.figure;
  if (fig == "fig8" || fig == "fig9" || fig == "fig10" || fig == "fig11") {
    std::map<std::string, std::set<std::string>> regimes_by_model;
    for (const CompletedBatch& b : batches)
      regimes_by_model[b.job.model].insert(b.job.environment);
    std::vector<std::string> missing;
    for (const auto& [model, regs] : regimes_by_model) {
      for (int i = 1; i <= 17; ++i) {
        char tag[8];
        std::snprintf(tag, sizeof tag, "r%02d", i);
        if (!regs.count(tag)) missing.push_back(std::string(tag) + "__" + model);
      }
    }
    if (!missing.empty()) {
      std::string list;
      for (const std::string& m : missing) list += " " + m;
      throw IoError("incomplete sweep: missing" + list);
    }
  }

  const fs::path adir = fs::path(store_dir) / "analysis";
  fs::create_directories(adir);

  if (all || do_sweep)
    write_sweep_summary((adir / "sweep.csv").string(), batches);
  if (all || do_violin)
    write_violin_csv((adir / "violin.csv").string(), batches);
  if (all || do_distributions)
    write_distribution_summary((adir / "distributions.csv").string(), batches);
  if (all || do_correlations) {
    write_regression_files((adir / "points_aspl.csv").string(),
                           (adir / "correlation.csv").string(), batches,
                           false);
    // Same points annotated with both metrics; regression against LSPL.
    write_regression_files((adir / "points_lspl.csv").string(),
                           (adir / "correlation_lspl.csv").string(), batches,
                           true);
  }

  if (all || do_sensitivity) {
    std::vector<SensitivityRow> rows;
    bool any_params = false;
    for (const LoadedBatch& lb : store.batches) {
      ExperimentConfig cfg = lb.config;
      if (threshold_set) cfg.sensitivity_threshold = threshold_override;
      if (repeats_set) cfg.sensitivity_repeats = repeats_override;
      if (per_stimulus) cfg.sensitivity_per_stimulus = true;
      Network net = build_network(lb.spec);
      std::vector<std::vector<double>> snapshots;
      for (const LoadedRun& lr : lb.runs) {
        if (!lr.kept || lr.step1_final_accuracy <= cfg.sensitivity_threshold)
          continue;
        const std::string path = lb.params_path(lr.run_index, true);
        if (path.empty()) continue;
        load_params_file(path, net);
        snapshots.push_back(net.params());
      }
      if (snapshots.empty()) continue;
      any_params = true;
      std::vector<const std::vector<double>*> pool;
      pool.reserve(snapshots.size());
      for (const auto& s : snapshots) pool.push_back(&s);
      for (SensitivityRow& r :
           sensitivity_rows(lb.model, lb.environment, lb.spec, lb.first, cfg, pool))
        rows.push_back(std::move(r));
    }
    if (do_sensitivity && !any_params)
      throw IoError("incomplete store: no step-1 parameter snapshots for "
                    "sensitivity analysis");
    if (any_params)
      write_sensitivity_csv((adir / "sensitivity.csv").string(), rows);
  }

  std::cout << "analysis written to " << adir.string() << "\n";
  return 0;
}

int cmd_reproduce(const std::string& figure, const std::string& out_arg,
                  const std::string& model_list, const RunFlags& flags) {
  if (std::find(kFigureIds.begin(), kFigureIds.end(), figure) ==
      kFigureIds.end()) {
    std::string ids;
    for (const std::string& id : kFigureIds) ids += " " + id;
    throw ValidationError("unknown figure id '" + figure + "'; expected one of" +
                          ids);
  }
  const std::string out =
      out_arg.empty() ? (fs::path("results") / figure).string() : out_arg;
  const ExperimentConfig cfg = resolve_config(flags, true);

  ManifestInfo manifest;
  manifest.command = "reproduce";
  manifest.figure = figure;
  manifest.master_seed = cfg.training.master_seed;
  manifest.config_hash = config_hash_hex(cfg);

  if (figure == "table1") {
    fs::create_directories(out);
    const std::vector<CanonicalRegime> catalog = enumerate_unique_regimes(4, 8);
    write_catalog_csv((fs::path(out) / "catalog.csv").string(), catalog);
    // Group connected classes by (aspl, lspl); disconnected classes pool
    // into one terminal row.
    std::ostringstream t;
    t << "aspl,lspl,count\n";
    std::size_t i = 0;
    while (i < catalog.size() && catalog[i].metrics.connected) {
      std::size_t j = i;
      while (j < catalog.size() && catalog[j].metrics.connected &&
             catalog[j].metrics.path_length_sum == catalog[i].metrics.path_length_sum &&
             catalog[j].metrics.longest == catalog[i].metrics.longest)
        ++j;
      t << csv_num(catalog[i].metrics.aspl()) << ','
        << catalog[i].metrics.longest << ',' << (j - i) << "\n";
      i = j;
    }
    t << "inf,inf," << (catalog.size() - i) << "\n";
    write_text((fs::path(out) / "table1.csv").string(), t.str());
    write_manifest(out, manifest);
    std::cout << "table written to " << out << "\n";
    return 0;
  }

  std::vector<std::string> models =
      model_list.empty() ? kDisplayTrio : parse_model_list(model_list);
  if (model_list.empty() && (figure == "fig10" || figure == "fig11"))
    models = kModelOrder;  // regressions cover every architecture

  std::vector<EnvCase> cases;
  bool sensitivity = false;
  if (figure == "fig2") {
    cases = preset_cases({"multi2"});
  } else if (figure == "fig3") {
    cases = preset_cases({"multi2", "multi3-poor", "multi3-rich"});
  } else if (figure == "fig5" || figure == "fig7") {
    cases = preset_cases({"multi4-middle"});
  } else if (figure == "fig6") {
    cases = preset_cases({"multi4-poor", "multi4-middle", "multi4-rich",
                          "multi4-ctd1", "multi4-ctd2", "multi4-dtd1",
                          "multi4-dtd2"});
  } else if (figure == "fig8" || figure == "fig9" || figure == "fig10" ||
             figure == "fig11") {
    cases = sweep_cases();
  } else if (figure == "fig12") {
    cases = preset_cases({"multi4-poor", "multi4-middle", "multi4-rich"});
    sensitivity = true;
  } else {  // fig13
    cases = preset_cases(
        {"multi4-ctd1", "multi4-ctd2", "multi4-dtd1", "multi4-dtd2"});
    sensitivity = true;
  }

  const std::vector<CompletedBatch> done = execute_jobs(
      make_jobs(cases, models, cfg), cfg, out, sensitivity, manifest);

  const fs::path od(out);
  if (figure == "fig2" || figure == "fig5")
    write_curves_summary((od / (figure + "_curves.csv")).string(), done);
  if (figure == "fig3" || figure == "fig6")
    write_env_summary((od / (figure + "_summary.csv")).string(), done);
  if (figure == "fig7") {
    write_taskwise_summary((od / "fig7_generalization.csv").string(), done, true);
    write_taskwise_summary((od / "fig7_stability.csv").string(), done, false);
  }
  if (figure == "fig8")
    write_sweep_summary((od / "fig8_sweep.csv").string(), done);
  if (figure == "fig9") {
    write_violin_csv((od / "fig9_violin.csv").string(), done);
    write_distribution_summary((od / "fig9_summary.csv").string(), done);
  }
  if (figure == "fig10")
    write_regression_files((od / "fig10_points.csv").string(),
                           (od / "fig10_regression.csv").string(), done, false);
  if (figure == "fig11")
    write_regression_files((od / "fig11_points.csv").string(),
                           (od / "fig11_regression.csv").string(), done, true);
  if (sensitivity) {
    std::vector<SensitivityRow> rows;
    for (const CompletedBatch& b : done)
      for (SensitivityRow& r : batch_sensitivity(b, cfg))
        rows.push_back(std::move(r));
    write_sensitivity_csv((od / (figure + "_sensitivity.csv")).string(), rows);
  }
  return finish_store(out, manifest);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-task cognitive flexibility laboratory"};
  app.set_version_flag("--version", std::string(kCodeVersion));
  app.require_subcommand(1);

  // enumerate-regimes
  auto* enumerate = app.add_subcommand(
      "enumerate-regimes", "catalog unique task regimes up to cue symmetry");
  int en_n = 4;
  int en_tasks = 8;
  std::string en_out = "catalog.csv";
  enumerate->add_option("-n,--n", en_n, "sensory/motor dimensions")
      ->default_val(4);
  enumerate->add_option("-t,--tasks", en_tasks, "tasks per regime")
      ->default_val(8);
  enumerate->add_option("-o,--out", en_out, "catalog CSV path")
      ->default_val("catalog.csv");

  // describe-model
  auto* describe = app.add_subcommand("describe-model",
                                      "print wiring, widths, and parameters");
  std::string dm_model;
  int dm_n = 0;
  std::string dm_env;
  std::string dm_widths;
  bool dm_override = false;
  describe->add_option("model", dm_model, "mlp_1|mlp_2|gate_1|gate_2|concat_1|concat_2")
      ->required();
  describe->add_option("-n,--n", dm_n, "environment dimensionality");
  describe->add_option("--env", dm_env, "environment preset");
  describe->add_option("--widths", dm_widths, "comma-separated hidden widths");
  describe->add_flag("--allow-capacity-override", dm_override,
                     "accept widths off the capacity table");

  // train
  auto* train = app.add_subcommand("train", "run the two-step protocol");
  std::string tr_env;
  std::string tr_regime1;
  std::string tr_regime2;
  std::string tr_models = "mlp_2,gate_2,concat_2";
  std::string tr_out = "results/train";
  RunFlags tr_flags;
  train->add_option("--env", tr_env,
                    "environment preset or multi4-middle-sweep");
  train->add_option("--regime1", tr_regime1, "first-regime matrix file");
  train->add_option("--regime2", tr_regime2,
                    "second-regime matrix file (default: complement)");
  train->add_option("--models", tr_models, "comma-separated model list");
  train->add_option("-o,--out", tr_out, "output store directory");
  add_run_flags(train, tr_flags, false);

  // analyze
  auto* analyze = app.add_subcommand("analyze",
                                     "post-hoc analysis over a result store");
  std::string an_store;
  bool an_sens = false;
  bool an_corr = false;
  bool an_sweep = false;
  bool an_violin = false;
  bool an_dist = false;
  double an_threshold = 0;
  bool an_threshold_set = false;
  int an_repeats = 0;
  bool an_repeats_set = false;
  bool an_per_stimulus = false;
  analyze->add_option("store", an_store, "result store directory")->required();
  analyze->add_flag("--sensitivity", an_sens, "cue-sensitivity table only");
  analyze->add_flag("--correlations", an_corr, "connectivity regressions only");
  analyze->add_flag("--sweep", an_sweep, "ordered sweep table only");
  analyze->add_flag("--violin", an_violin, "per-run violin source only");
  analyze->add_flag("--distributions", an_dist, "distribution summaries only");
  analyze->add_option("--sensitivity-threshold", an_threshold,
                      "override stored step-1 accuracy gate")
      ->each([&an_threshold_set](const std::string&) { an_threshold_set = true; });
  analyze->add_option("--repeats", an_repeats,
                      "override stored presentation repeats")
      ->each([&an_repeats_set](const std::string&) { an_repeats_set = true; });
  analyze->add_flag("--per-stimulus", an_per_stimulus,
                    "cosine per stimulus, then average");

  // reproduce
  auto* reproduce = app.add_subcommand(
      "reproduce", "figure and table pipelines at desk or full scale");
  std::string rp_figure;
  std::string rp_out;
  std::string rp_models;
  RunFlags rp_flags;
  reproduce->add_option("figure", rp_figure,
                        "fig2 fig3 fig5 fig6 fig7 fig8 fig9 fig10 fig11 "
                        "fig12 fig13 table1")
      ->required();
  reproduce->add_option("-o,--out", rp_out,
                        "output directory (default results/<figure>)");
  reproduce->add_option("--models", rp_models,
                        "override the figure's model list");
  add_run_flags(reproduce, rp_flags, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (enumerate->parsed())
      return cmd_enumerate(en_n, en_tasks, en_out);
    if (describe->parsed())
      return cmd_describe(dm_model, dm_n, dm_env, dm_widths, dm_override);
    if (train->parsed())
      return cmd_train(tr_env, tr_regime1, tr_regime2, tr_models, tr_out,
                       tr_flags);
    if (analyze->parsed())
      return cmd_analyze(an_store, an_sens, an_corr, an_sweep, an_violin,
                         an_dist, an_threshold, an_threshold_set, an_repeats,
                         an_repeats_set, an_per_stimulus);
    if (reproduce->parsed())
      return cmd_reproduce(rp_figure, rp_out, rp_models, rp_flags);
    throw ValidationError("no subcommand given");
  } catch (const InsufficientRunsError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
