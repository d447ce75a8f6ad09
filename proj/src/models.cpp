#include "cogflex/models.hpp"

#include <numeric>
#include <sstream>

#include "cogflex/errors.hpp"

namespace cogflex {

ModelKind parse_model_kind(const std::string& name) {
  if (name == "mlp") return ModelKind::Mlp;
  if (name == "gate") return ModelKind::Gate;
  if (name == "concat") return ModelKind::Concat;
  throw ValidationError("unknown model kind '" + name + "'");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Mlp: return "mlp";
    case ModelKind::Gate: return "gate";
    case ModelKind::Concat: return "concat";
  }
  throw ValidationError("bad model kind");
}

ModelName parse_model_name(const std::string& name) {
  const std::size_t sep = name.rfind('_');
  if (sep == std::string::npos) {
    throw ValidationError("model name '" + name + "' must look like kind_variant");
  }
  const std::string variant = name.substr(sep + 1);
  if (variant != "1" && variant != "2") {
    throw ValidationError("model variant in '" + name + "' must be 1 or 2");
  }
  return ModelName{parse_model_kind(name.substr(0, sep)), variant == "1" ? 1 : 2};
}

std::string model_name(ModelKind kind, int variant) {
  return to_string(kind) + "_" + std::to_string(variant);
}

CapacityRow expected_capacity(ModelKind kind, int variant, int n) {
  if (variant != 1 && variant != 2) {
    throw ValidationError("model variant must be 1 or 2");
  }
  // hidden units, hidden layers: [n - 2][variant - 1]
  static constexpr CapacityRow kMlp[3][2] = {
      {{14, 2}, {18, 3}}, {{36, 3}, {42, 4}}, {{48, 3}, {56, 4}}};
  static constexpr CapacityRow kAttention[3][2] = {
      {{10, 2}, {12, 3}}, {{12, 3}, {18, 3}}, {{26, 3}, {36, 3}}};
  if (n < 2 || n > 4) {
    throw ValidationError("no built-in capacity row for n = " + std::to_string(n));
  }
  return kind == ModelKind::Mlp ? kMlp[n - 2][variant - 1]
                                : kAttention[n - 2][variant - 1];
}

ModelSpec default_model_spec(ModelKind kind, int variant, TaskStructure s) {
  ModelSpec spec;
  spec.kind = kind;
  spec.variant = variant;
  spec.structure = s;
  spec.bottleneck = kind != ModelKind::Mlp && variant == 1;
  if (variant != 1 && variant != 2) {
    throw ValidationError("model variant must be 1 or 2");
  }
  if (s.n < 2 || s.n > 4) {
    throw ValidationError("no built-in widths for n = " + std::to_string(s.n) +
                          "; provide layer widths explicitly");
  }
  if (kind == ModelKind::Mlp) {
    // Total units from the capacity table, spread as evenly as possible with
    // larger layers first.
    const CapacityRow row = expected_capacity(kind, variant, s.n);
    spec.layer_widths.resize(row.hidden_layers);
    const int base = row.hidden_units / row.hidden_layers;
    const int extra = row.hidden_units % row.hidden_layers;
    for (int i = 0; i < row.hidden_layers; ++i) {
      spec.layer_widths[i] = base + (i < extra ? 1 : 0);
    }
  } else {
    // Dense1 = A (2n) + B; B matches the stream gated by the second
    // attention stage; leftover budget goes to the layer after it.
    switch (s.n * 10 + variant) {
      case 21: spec.layer_widths = {8, 2}; break;        // A=4 B=4, Dense2 out
      case 22: spec.layer_widths = {8, 2, 2}; break;     // A=4 B=4
      case 31: spec.layer_widths = {8, 2, 2}; break;     // A=6 B=2, Dense2 mid
      case 32: spec.layer_widths = {10, 4, 4}; break;    // A=6 B=4
      case 41: spec.layer_widths = {10, 2, 14}; break;   // A=8 B=2
      case 42: spec.layer_widths = {16, 8, 12}; break;   // A=8 B=8
    }
  }
  return spec;
}

ModelSpec default_model_spec(const std::string& name, TaskStructure s) {
  const ModelName m = parse_model_name(name);
  return default_model_spec(m.kind, m.variant, s);
}

void validate_model_spec(const ModelSpec& spec, bool allow_capacity_override) {
  const int n = spec.structure.n;
  if (spec.variant != 1 && spec.variant != 2) {
    throw ValidationError("model variant must be 1 or 2");
  }
  if (spec.layer_widths.empty()) {
    throw ValidationError("model needs at least one hidden layer");
  }
  for (int w : spec.layer_widths) {
    if (w < 1) throw ValidationError("hidden layer widths must be positive");
  }

  if (spec.kind != ModelKind::Mlp) {
    const int w1 = spec.layer_widths[0];
    const int split_b = w1 - 2 * n;
    if (spec.layer_widths.size() < 2) {
      throw ValidationError("attention models need a dense layer after the "
                            "second attention stage");
    }
    if (split_b < 1) {
      throw ValidationError("Dense1 width " + std::to_string(w1) +
                            " leaves no units for B (A takes 2n = " +
                            std::to_string(2 * n) + ")");
    }
    if (spec.kind == ModelKind::Gate) {
      // B multiplies the second-stage stream elementwise.
      const int gated = n >= 3 && spec.layer_widths.size() >= 3
                            ? spec.layer_widths[1]
                            : 2 * n;
      if (split_b != gated) {
        throw ValidationError("B width " + std::to_string(split_b) +
                              " cannot gate a stream of width " +
                              std::to_string(gated));
      }
    }
    if (spec.bottleneck != (spec.variant == 1)) {
      throw ValidationError("variant 1 must set bottleneck, variant 2 must not");
    }
    if (spec.variant == 1 && n >= 3 && spec.layer_widths.size() >= 3 &&
        spec.layer_widths[1] != 2) {
      throw ValidationError("variant 1 requires the dense between the "
                            "attention stages to have width 2");
    }
  } else if (spec.bottleneck) {
    throw ValidationError("mlp models do not use the bottleneck flag");
  }

  if (n >= 2 && n <= 4 && !allow_capacity_override) {
    const CapacityRow row = expected_capacity(spec.kind, spec.variant, n);
    const int units =
        std::accumulate(spec.layer_widths.begin(), spec.layer_widths.end(), 0);
    const int layers = static_cast<int>(spec.layer_widths.size());
    if (units != row.hidden_units || layers != row.hidden_layers) {
      throw ValidationError(
          model_name(spec.kind, spec.variant) + " at n = " + std::to_string(n) +
          " needs " + std::to_string(row.hidden_units) + " hidden units in " +
          std::to_string(row.hidden_layers) + " layers, got " +
          std::to_string(units) + " in " + std::to_string(layers));
    }
  }
}

Network build_network(const ModelSpec& spec) {
  // Structural invariants only; the capacity budget is policy, enforced
  // wherever specs are constructed.
  validate_model_spec(spec, true);
  const TaskStructure& s = spec.structure;
  Network net(s.input_width());

  if (spec.kind == ModelKind::Mlp) {
    int prev = net.add_input(0, s.input_width());
    for (std::size_t i = 0; i < spec.layer_widths.size(); ++i) {
      const std::string name = "Dense" + std::to_string(i + 1);
      prev = net.add_dense(prev, spec.layer_widths[i], Activation::Sigmoid, name, name);
    }
    const int logits = net.add_dense(prev, s.output_width(), Activation::Identity, "Out");
    net.finalize(logits);
    return net;
  }

  const int w1 = spec.layer_widths[0];
  const int cue = net.add_input(0, s.cue_width());
  const int stim = net.add_input(s.cue_width(), s.stimulus_width());
  const int dense1 = net.add_dense(cue, w1, Activation::Sigmoid, "Dense1");
  const int a = net.add_slice(dense1, 0, 2 * s.n, "Dense1A");
  const int b = net.add_slice(dense1, 2 * s.n, w1 - 2 * s.n, "Dense1B");

  const bool gate = spec.kind == ModelKind::Gate;
  // First attention stage: the cue component comes first in a concatenation.
  const int att1 = gate ? net.add_multiply(a, stim) : net.add_concat(a, stim);

  int stream = att1;
  std::size_t next_width = 1;
  int dense_index = 2;
  if (s.n >= 3 && spec.layer_widths.size() >= 3) {
    const std::string name = "Dense" + std::to_string(dense_index++);
    stream = net.add_dense(stream, spec.layer_widths[next_width++],
                           Activation::Sigmoid, name, name);
  }
  const int att2 = gate ? net.add_multiply(b, stream) : net.add_concat(b, stream);

  stream = att2;
  while (next_width < spec.layer_widths.size()) {
    const std::string name = "Dense" + std::to_string(dense_index++);
    stream = net.add_dense(stream, spec.layer_widths[next_width++],
                           Activation::Sigmoid, name, name);
  }
  const int logits = net.add_dense(stream, s.output_width(), Activation::Identity, "Out");
  net.finalize(logits);
  return net;
}

std::vector<std::string> analysis_taps(const ModelSpec& spec) {
  std::vector<std::string> taps;
  if (spec.kind == ModelKind::Mlp) {
    for (std::size_t i = 0; i < spec.layer_widths.size(); ++i) {
      taps.push_back("Dense" + std::to_string(i + 1));
    }
  } else {
    taps.push_back("Dense1A");
    taps.push_back("Dense1B");
    for (std::size_t i = 1; i < spec.layer_widths.size(); ++i) {
      taps.push_back("Dense" + std::to_string(i + 1));
    }
  }
  return taps;
}

std::string describe_model(const ModelSpec& spec) {
  validate_model_spec(spec, true);
  const TaskStructure& s = spec.structure;
  const Network net = build_network(spec);

  std::ostringstream out;
  out << model_name(spec.kind, spec.variant) << " on multi-" << s.n
      << " (input " << s.input_width() << ", output " << s.output_width() << ")\n";
  if (spec.kind != ModelKind::Mlp) {
    const int b = spec.layer_widths[0] - 2 * s.n;
    out << "  cue stream: Dense1 width " << spec.layer_widths[0] << " -> A "
        << 2 * s.n << " + B " << b << "\n";
    out << "  stimulus stream: "
        << (spec.kind == ModelKind::Gate ? "gate" : "concat")
        << " with A -> "
        << (s.n >= 3 ? "dense -> second stage with B" : "second stage with B")
        << " -> dense stack\n";
  }
  std::size_t total_params = 0;
  int hidden_units = 0;
  for (const DenseInfo& d : net.dense_layers()) {
    const std::size_t params = static_cast<std::size_t>(d.out) * d.in + d.out;
    total_params += params;
    if (d.act == Activation::Sigmoid) hidden_units += d.out;
    out << "  " << d.name << ": " << d.in << " -> " << d.out
        << (d.act == Activation::Sigmoid ? " (sigmoid)" : " (softmax output)")
        << ", " << params << " params\n";
  }
  out << "  hidden units " << hidden_units << " in "
      << spec.layer_widths.size() << " layers; " << total_params
      << " learnable parameters\n";
  return out.str();
}

}  // namespace cogflex
