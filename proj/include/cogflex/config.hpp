#pragma once

#include <map>
#include <string>
#include <vector>

#include "cogflex/models.hpp"
#include "cogflex/protocol.hpp"

namespace cogflex {

// Everything a training or reproduction pipeline needs beyond the
// environment and model list. Populated from defaults, then an optional
// key=value config file, then command-line flags.
struct ExperimentConfig {
  TrainingConfig training;
  double sensitivity_threshold = 0.98;  // step-1 accuracy gate for analysis runs
  int sensitivity_repeats = 1;
  bool sensitivity_per_stimulus = false;
  bool allow_capacity_override = false;
  // Per-model hidden width overrides, keyed by model name ("gate_1", ...).
  std::map<std::string, std::vector<int>> model_widths;
};

// One key=value assignment; unknown keys and malformed values raise
// ValidationError. Recognized keys are listed in config_keys().
void apply_config_value(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value);

// Plain-text config: one key=value per line, '#' comments, blank lines
// ignored, duplicate keys rejected. `base` supplies the values the file
// leaves unset.
ExperimentConfig parse_config_file(const std::string& path,
                                   const ExperimentConfig& base = {});
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin = "<config>",
                                   const ExperimentConfig& base = {});

std::vector<std::string> config_keys();

// Canonical serialization of every effective value, sorted by key. The
// config hash in result manifests is FNV-1a 64 over this text.
std::string canonical_config(const ExperimentConfig& cfg);
std::string config_hash_hex(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(const std::string& text);

// Model spec for `name`, honoring width overrides and the capacity
// override flag.
ModelSpec configured_model_spec(const ExperimentConfig& cfg,
                                const std::string& name, TaskStructure s);

}  // namespace cogflex
