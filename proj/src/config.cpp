#include "cogflex/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "cogflex/errors.hpp"

namespace cogflex {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

long long parse_int(const std::string& key, const std::string& value,
                    long long lo, long long hi) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &pos);
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "': '" + value +
                          "' is not an integer");
  }
  if (pos != value.size())
    throw ValidationError("config key '" + key + "': '" + value +
                          "' is not an integer");
  if (v < lo || v > hi)
    throw ValidationError("config key '" + key + "': " + value +
                          " is out of range [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &pos);
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "': '" + value +
                          "' is not an unsigned integer");
  }
  if (pos != value.size() || value[0] == '-')
    throw ValidationError("config key '" + key + "': '" + value +
                          "' is not an unsigned integer");
  return v;
}

double parse_real(const std::string& key, const std::string& value, double lo,
                  double hi) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "': '" + value +
                          "' is not a number");
  }
  if (pos != value.size())
    throw ValidationError("config key '" + key + "': '" + value +
                          "' is not a number");
  if (!(v >= lo && v <= hi))
    throw ValidationError("config key '" + key + "': " + value +
                          " is out of range");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on")
    return true;
  if (value == "false" || value == "0" || value == "no" || value == "off")
    return false;
  throw ValidationError("config key '" + key + "': '" + value +
                        "' is not a boolean");
}

std::vector<int> parse_width_list(const std::string& key,
                                  const std::string& value) {
  std::vector<int> widths;
  std::string item;
  std::stringstream ss(value);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty())
      throw ValidationError("config key '" + key + "': empty width entry");
    widths.push_back(static_cast<int>(parse_int(key, item, 1, 1 << 20)));
  }
  if (widths.empty())
    throw ValidationError("config key '" + key + "': no widths given");
  return widths;
}

const char* kModelNames[] = {"mlp_1",    "mlp_2",    "gate_1",
                             "gate_2",   "concat_1", "concat_2"};

std::string real_repr(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void apply_config_value(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value) {
  TrainingConfig& t = cfg.training;
  if (key == "master_seed") {
    t.master_seed = parse_u64(key, value);
  } else if (key == "batch_size") {
    t.batch_size = static_cast<int>(parse_int(key, value, 1, 1 << 20));
  } else if (key == "trials_per_task") {
    t.trials_per_task = static_cast<int>(parse_int(key, value, 1, 1 << 24));
  } else if (key == "eval_trials_per_task") {
    t.eval_trials_per_task = static_cast<int>(parse_int(key, value, 1, 1 << 24));
  } else if (key == "max_epochs") {
    t.max_epochs = static_cast<int>(parse_int(key, value, 1, 1 << 20));
  } else if (key == "early_stop_streak") {
    t.early_stop_streak = static_cast<int>(parse_int(key, value, 1, 1 << 20));
  } else if (key == "runs_kept") {
    t.runs_kept = static_cast<int>(parse_int(key, value, 1, 1 << 20));
  } else if (key == "runs_launched") {
    t.runs_launched = static_cast<int>(parse_int(key, value, 1, 1 << 20));
  } else if (key == "keep_threshold") {
    t.keep_threshold = parse_real(key, value, 0.0, 1.0);
  } else if (key == "stimulus_sampling") {
    t.sampling = parse_stimulus_sampling(value);
  } else if (key == "adam_carryover") {
    t.adam_carryover = parse_bool(key, value);
  } else if (key == "allow_regime_overlap") {
    t.allow_regime_overlap = parse_bool(key, value);
  } else if (key == "adam_lr") {
    t.adam.lr = parse_real(key, value, 1e-12, 10.0);
  } else if (key == "adam_beta1") {
    t.adam.beta1 = parse_real(key, value, 0.0, 1.0 - 1e-9);
  } else if (key == "adam_beta2") {
    t.adam.beta2 = parse_real(key, value, 0.0, 1.0 - 1e-9);
  } else if (key == "adam_epsilon") {
    t.adam.eps = parse_real(key, value, 1e-15, 1.0);
  } else if (key == "jobs") {
    t.jobs = static_cast<int>(parse_int(key, value, 1, 4096));
  } else if (key == "sensitivity_threshold") {
    cfg.sensitivity_threshold = parse_real(key, value, 0.0, 1.0);
  } else if (key == "sensitivity_repeats") {
    cfg.sensitivity_repeats = static_cast<int>(parse_int(key, value, 1, 1 << 20));
  } else if (key == "sensitivity_per_stimulus") {
    cfg.sensitivity_per_stimulus = parse_bool(key, value);
  } else if (key == "allow_capacity_override") {
    cfg.allow_capacity_override = parse_bool(key, value);
  } else if (key.rfind("widths_", 0) == 0) {
    const std::string model = key.substr(7);
    bool known = false;
    for (const char* m : kModelNames) known = known || model == m;
    if (!known)
      throw ValidationError("config key '" + key + "': unknown model '" +
                            model + "'");
    cfg.model_widths[model] = parse_width_list(key, value);
  } else {
    throw ValidationError("unknown config key '" + key + "'");
  }
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin,
                                   const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  std::set<std::string> seen;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError(origin + ":" + std::to_string(lineno) +
                            ": expected key=value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ValidationError(origin + ":" + std::to_string(lineno) +
                            ": empty key");
    if (!seen.insert(key).second)
      throw ValidationError(origin + ":" + std::to_string(lineno) +
                            ": duplicate key '" + key + "'");
    apply_config_value(cfg, key, value);
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path,
                                   const ExperimentConfig& base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path, base);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys = {
      "master_seed",        "batch_size",
      "trials_per_task",    "eval_trials_per_task",
      "max_epochs",         "early_stop_streak",
      "runs_kept",          "runs_launched",
      "keep_threshold",     "stimulus_sampling",
      "adam_carryover",     "allow_regime_overlap",
      "adam_lr",            "adam_beta1",
      "adam_beta2",         "adam_epsilon",
      "jobs",               "sensitivity_threshold",
      "sensitivity_repeats", "sensitivity_per_stimulus",
      "allow_capacity_override"};
  for (const char* m : kModelNames) keys.push_back(std::string("widths_") + m);
  std::sort(keys.begin(), keys.end());
  return keys;
}

std::string canonical_config(const ExperimentConfig& cfg) {
  const TrainingConfig& t = cfg.training;
  std::map<std::string, std::string> kv;
  kv["master_seed"] = std::to_string(t.master_seed);
  kv["batch_size"] = std::to_string(t.batch_size);
  kv["trials_per_task"] = std::to_string(t.trials_per_task);
  kv["eval_trials_per_task"] = std::to_string(t.eval_trials_per_task);
  kv["max_epochs"] = std::to_string(t.max_epochs);
  kv["early_stop_streak"] = std::to_string(t.early_stop_streak);
  kv["runs_kept"] = std::to_string(t.runs_kept);
  kv["runs_launched"] = std::to_string(t.runs_launched);
  kv["keep_threshold"] = real_repr(t.keep_threshold);
  kv["stimulus_sampling"] = to_string(t.sampling);
  kv["adam_carryover"] = t.adam_carryover ? "true" : "false";
  kv["allow_regime_overlap"] = t.allow_regime_overlap ? "true" : "false";
  kv["adam_lr"] = real_repr(t.adam.lr);
  kv["adam_beta1"] = real_repr(t.adam.beta1);
  kv["adam_beta2"] = real_repr(t.adam.beta2);
  kv["adam_epsilon"] = real_repr(t.adam.eps);
  kv["jobs"] = std::to_string(t.jobs);
  kv["sensitivity_threshold"] = real_repr(cfg.sensitivity_threshold);
  kv["sensitivity_repeats"] = std::to_string(cfg.sensitivity_repeats);
  kv["sensitivity_per_stimulus"] =
      cfg.sensitivity_per_stimulus ? "true" : "false";
  kv["allow_capacity_override"] =
      cfg.allow_capacity_override ? "true" : "false";
  for (const auto& [model, widths] : cfg.model_widths) {
    std::string joined;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      if (i) joined.push_back(',');
      joined += std::to_string(widths[i]);
    }
    kv["widths_" + model] = joined;
  }
  std::string out;
  for (const auto& [k, v] : kv) {
    out += k;
    out.push_back('=');
    out += v;
    out.push_back('\n');
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash_hex(const ExperimentConfig& cfg) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_config(cfg))));
  return buf;
}

ModelSpec configured_model_spec(const ExperimentConfig& cfg,
                                const std::string& name, TaskStructure s) {
  ModelSpec spec = default_model_spec(name, s);
  const auto it = cfg.model_widths.find(name);
  if (it != cfg.model_widths.end()) spec.layer_widths = it->second;
  validate_model_spec(spec, cfg.allow_capacity_override);
  return spec;
}

}  // namespace cogflex
