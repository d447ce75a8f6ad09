#pragma once

#include <string>
#include <vector>

#include "cogflex/nn_core.hpp"
#include "cogflex/task_env.hpp"

namespace cogflex {

enum class ModelKind { Mlp, Gate, Concat };

ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind kind);

// "mlp_1" .. "concat_2".
struct ModelName {
  ModelKind kind;
  int variant;
};
ModelName parse_model_name(const std::string& name);
std::string model_name(ModelKind kind, int variant);

// Expected hidden capacity per (kind, variant, environment size):
// total hidden units and hidden layer count.
struct CapacityRow {
  int hidden_units = 0;
  int hidden_layers = 0;
};
CapacityRow expected_capacity(ModelKind kind, int variant, int n);

// A concrete architecture. layer_widths lists hidden dense widths in
// pipeline order. MLPs: plain stack over the full 6n input. Gate/concat:
// layer_widths[0] is Dense1 (the cue layer, split into A of width 2n and B);
// for n >= 3 layer_widths[1] is the dense between the two attention stages
// (variant 1 pins it at 2: the bottleneck); remaining entries follow the
// second attention stage. Multi-2 has no dense between the stages.
struct ModelSpec {
  ModelKind kind = ModelKind::Mlp;
  int variant = 1;
  TaskStructure structure;
  std::vector<int> layer_widths;
  bool bottleneck = false;
};

// Built-in widths matching the capacity table; n in {2, 3, 4}.
ModelSpec default_model_spec(ModelKind kind, int variant, TaskStructure s);
ModelSpec default_model_spec(const std::string& name, TaskStructure s);

// Structural wiring checks always run; capacity totals are enforced for
// n in {2, 3, 4} unless allow_capacity_override.
void validate_model_spec(const ModelSpec& spec, bool allow_capacity_override = false);

Network build_network(const ModelSpec& spec);

// Layers whose activations the sensitivity analysis reads: Dense1A/Dense1B
// (the A and B halves of Dense1) plus later hidden denses for attention
// nets; Dense1..DenseN for MLPs.
std::vector<std::string> analysis_taps(const ModelSpec& spec);

// Human-readable wiring, widths, and parameter counts.
std::string describe_model(const ModelSpec& spec);

}  // namespace cogflex
