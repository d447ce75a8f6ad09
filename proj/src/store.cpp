#include "cogflex/store.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "cogflex/errors.hpp"
#include "cogflex/regime_graph.hpp"
#include "cogflex/version.hpp"

namespace cogflex {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ordered_json parse_json_file(const std::string& path) {
  try {
    return ordered_json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed JSON in '" + path + "': " + e.what());
  }
}

ordered_json aggregate_json(const AggregateStat& s) {
  return ordered_json{{"count", s.count},
                      {"mean", s.mean},
                      {"stddev", s.stddev},
                      {"min", s.min},
                      {"max", s.max}};
}

AggregateStat aggregate_from_json(const ordered_json& j) {
  AggregateStat s;
  s.count = j.at("count").get<int>();
  s.mean = j.at("mean").get<double>();
  s.stddev = j.at("stddev").get<double>();
  s.min = j.at("min").get<double>();
  s.max = j.at("max").get<double>();
  return s;
}

// The canonical key=value lines, as a JSON object (sorted, so stable).
ordered_json config_json(const ExperimentConfig& cfg) {
  ordered_json obj = ordered_json::object();
  std::stringstream ss(canonical_config(cfg));
  std::string line;
  while (std::getline(ss, line)) {
    const std::size_t eq = line.find('=');
    obj[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return obj;
}

ExperimentConfig config_from_json(const ordered_json& obj,
                                  const std::string& origin) {
  ExperimentConfig cfg;
  for (const auto& [key, value] : obj.items()) {
    try {
      apply_config_value(cfg, key, value.get<std::string>());
    } catch (const ValidationError& e) {
      throw IoError(origin + ": bad stored config: " + e.what());
    }
  }
  return cfg;
}

Regime regime_from_string(TaskStructure s, const std::string& text,
                          const std::string& origin) {
  std::vector<std::uint8_t> cells;
  cells.reserve(static_cast<std::size_t>(s.n) * s.n);
  for (char c : text) {
    if (c == '/') continue;
    if (c != '0' && c != '1')
      throw IoError(origin + ": bad regime matrix '" + text + "'");
    cells.push_back(c == '1');
  }
  if (cells.size() != static_cast<std::size_t>(s.n) * s.n)
    throw IoError(origin + ": regime matrix '" + text + "' is not " +
                  std::to_string(s.n) + "x" + std::to_string(s.n));
  return Regime::from_matrix(s, cells);
}

std::string run_param_name(int run_index, bool step1) {
  return "run" + std::to_string(run_index) + (step1 ? "_step1" : "_final") +
         ".json";
}

int find_column(const std::vector<std::string>& header, const std::string& name,
                const std::string& origin) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  throw IoError(origin + ": missing column '" + name + "'");
}

double parse_csv_double(const std::string& cell, const std::string& origin) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw IoError(origin + ": bad numeric cell '" + cell + "'");
  }
}

}  // namespace

std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

void write_manifest(const std::string& root, const ManifestInfo& info) {
  fs::create_directories(root);
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["code_version"] = kCodeVersion;
  j["command"] = info.command;
  j["figure"] = info.figure;
  j["master_seed"] = info.master_seed;
  j["config_hash"] = info.config_hash;
  j["batches"] = info.batches;
  j["failed"] = info.failed;
  write_text_file((fs::path(root) / "manifest.json").string(), j.dump(2) + "\n");
}

ManifestInfo read_manifest(const std::string& root) {
  const std::string path = (fs::path(root) / "manifest.json").string();
  if (!fs::exists(path))
    throw IoError("incomplete store: missing manifest.json in '" + root + "'");
  const ordered_json j = parse_json_file(path);
  ManifestInfo info;
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion)
      throw IoError("unsupported schema_version in '" + path + "'");
    info.command = j.at("command").get<std::string>();
    info.figure = j.at("figure").get<std::string>();
    info.master_seed = j.at("master_seed").get<std::uint64_t>();
    info.config_hash = j.at("config_hash").get<std::string>();
    info.batches = j.at("batches").get<std::vector<std::string>>();
    info.failed = j.at("failed").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest '" + path + "': " + e.what());
  }
  return info;
}

void write_params_file(const std::string& path, const Network& net,
                       const std::vector<double>& params) {
  if (params.size() != net.param_count())
    throw ValidationError("parameter snapshot size mismatch");
  ordered_json tensors = ordered_json::array();
  for (const DenseInfo& d : net.dense_layers()) {
    ordered_json w;
    w["name"] = d.name + "/w";
    w["shape"] = {d.out, d.in};
    w["data"] = std::vector<double>(
        params.begin() + static_cast<std::ptrdiff_t>(d.w_offset),
        params.begin() +
            static_cast<std::ptrdiff_t>(d.w_offset + static_cast<std::size_t>(d.out) * d.in));
    tensors.push_back(std::move(w));
    ordered_json b;
    b["name"] = d.name + "/b";
    b["shape"] = {d.out};
    b["data"] = std::vector<double>(
        params.begin() + static_cast<std::ptrdiff_t>(d.b_offset),
        params.begin() + static_cast<std::ptrdiff_t>(d.b_offset + d.out));
    tensors.push_back(std::move(b));
  }
  ordered_json j;
  j["format"] = "named-tensors";
  j["tensors"] = std::move(tensors);
  write_text_file(path, j.dump() + "\n");
}

void load_params_file(const std::string& path, Network& net) {
  const ordered_json j = parse_json_file(path);
  if (j.value("format", "") != "named-tensors")
    throw IoError("'" + path + "' is not a named-tensor snapshot");
  std::vector<double>& params = net.params();
  std::size_t loaded = 0;
  for (const DenseInfo& d : net.dense_layers()) {
    bool got_w = false;
    bool got_b = false;
    for (const ordered_json& t : j.at("tensors")) {
      const std::string name = t.at("name").get<std::string>();
      const auto data = t.at("data").get<std::vector<double>>();
      const auto shape = t.at("shape").get<std::vector<int>>();
      if (name == d.name + "/w") {
        if (shape != std::vector<int>{d.out, d.in} ||
            data.size() != static_cast<std::size_t>(d.out) * d.in)
          throw IoError("'" + path + "': tensor '" + name + "' shape mismatch");
        std::copy(data.begin(), data.end(), params.begin() + static_cast<std::ptrdiff_t>(d.w_offset));
        got_w = true;
      } else if (name == d.name + "/b") {
        if (shape != std::vector<int>{d.out} ||
            data.size() != static_cast<std::size_t>(d.out))
          throw IoError("'" + path + "': tensor '" + name + "' shape mismatch");
        std::copy(data.begin(), data.end(), params.begin() + static_cast<std::ptrdiff_t>(d.b_offset));
        got_b = true;
      }
    }
    if (!got_w || !got_b)
      throw IoError("'" + path + "': missing tensors for layer '" + d.name + "'");
    loaded += 2;
  }
  if (j.at("tensors").size() != loaded)
    throw IoError("'" + path + "': snapshot holds tensors the network lacks");
}

void write_batch(const std::string& root, const BatchMeta& meta,
                 const BatchResult& result, const ExperimentConfig& cfg) {
  const fs::path dir = fs::path(root) / meta.name;
  fs::create_directories(dir);

  ordered_json model;
  model["name"] = meta.model;
  model["kind"] = to_string(meta.spec.kind);
  model["variant"] = meta.spec.variant;
  model["n"] = meta.spec.structure.n;
  model["layer_widths"] = meta.spec.layer_widths;
  model["bottleneck"] = meta.spec.bottleneck;

  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = meta.name;
  j["environment"] = meta.environment;
  j["model"] = std::move(model);
  j["first_regime"] = matrix_string(meta.first);
  j["second_regime"] = matrix_string(meta.second);
  j["launched"] = static_cast<int>(result.runs.size());
  j["kept"] = result.kept;
  j["generalization"] = aggregate_json(result.generalization);
  j["stability"] = aggregate_json(result.stability);
  j["config"] = config_json(cfg);
  write_text_file((dir / "aggregate.json").string(), j.dump(2) + "\n");

  std::vector<std::uint8_t> kept_mask(result.runs.size(), 0);
  for (int k : result.kept) kept_mask[static_cast<std::size_t>(k)] = 1;

  std::ostringstream runs;
  runs << "run_id,seed,kept,step1_epochs,step1_converged,step1_final_accuracy,"
          "step2_epochs,step2_converged,step2_final_accuracy,generalization,"
          "stability";
  for (const Task& t : meta.second.tasks())
    runs << ",gen_S" << t.sensory << "M" << t.motor;
  for (const Task& t : meta.first.tasks())
    runs << ",stab_S" << t.sensory << "M" << t.motor;
  runs << "\n";
  for (std::size_t i = 0; i < result.runs.size(); ++i) {
    const RunResult& r = result.runs[i];
    runs << r.run_index << ',' << r.seed << ',' << int(kept_mask[i]) << ','
         << r.step1.epochs << ',' << int(r.step1.converged) << ','
         << csv_num(r.step1.final_accuracy) << ',' << r.step2.epochs << ','
         << int(r.step2.converged) << ',' << csv_num(r.step2.final_accuracy)
         << ',' << csv_num(r.generalization.accuracy) << ','
         << csv_num(r.stability.accuracy);
    for (double v : r.generalization.per_task) runs << ',' << csv_num(v);
    for (double v : r.stability.per_task) runs << ',' << csv_num(v);
    runs << "\n";
  }
  write_text_file((dir / "runs.csv").string(), runs.str());

  std::ostringstream curves;
  curves << "run_id,step,epoch,accuracy\n";
  for (const RunResult& r : result.runs) {
    for (std::size_t e = 0; e < r.step1.curve.size(); ++e)
      curves << r.run_index << ",1," << (e + 1) << ','
             << csv_num(r.step1.curve[e]) << "\n";
    for (std::size_t e = 0; e < r.step2.curve.size(); ++e)
      curves << r.run_index << ",2," << (e + 1) << ','
             << csv_num(r.step2.curve[e]) << "\n";
  }
  write_text_file((dir / "curves.csv").string(), curves.str());

  bool any_params = false;
  for (const RunResult& r : result.runs)
    any_params = any_params || !r.final_params.empty() || !r.step1_params.empty();
  if (any_params) {
    const fs::path pdir = dir / "params";
    fs::create_directories(pdir);
    Network net = build_network(meta.spec);
    for (const RunResult& r : result.runs) {
      if (!r.step1_params.empty())
        write_params_file((pdir / run_param_name(r.run_index, true)).string(),
                          net, r.step1_params);
      if (!r.final_params.empty())
        write_params_file((pdir / run_param_name(r.run_index, false)).string(),
                          net, r.final_params);
    }
  }
}

std::string LoadedBatch::params_path(int run_index, bool step1) const {
  const fs::path p = fs::path(dir) / "params" / run_param_name(run_index, step1);
  return fs::exists(p) ? p.string() : std::string();
}

LoadedBatch read_batch(const std::string& dir) {
  LoadedBatch b;
  b.dir = dir;
  const std::string origin = dir;
  const ordered_json j = parse_json_file((fs::path(dir) / "aggregate.json").string());
  try {
    b.name = j.at("name").get<std::string>();
    b.environment = j.at("environment").get<std::string>();
    const ordered_json& model = j.at("model");
    b.model = model.at("name").get<std::string>();
    const ModelName mn = parse_model_name(b.model);
    b.spec.kind = mn.kind;
    b.spec.variant = model.at("variant").get<int>();
    b.spec.structure = TaskStructure(model.at("n").get<int>());
    b.spec.layer_widths = model.at("layer_widths").get<std::vector<int>>();
    b.spec.bottleneck = model.at("bottleneck").get<bool>();
    b.first = regime_from_string(b.spec.structure,
                                 j.at("first_regime").get<std::string>(), origin);
    b.second = regime_from_string(
        b.spec.structure, j.at("second_regime").get<std::string>(), origin);
    b.launched = j.at("launched").get<int>();
    b.kept = j.at("kept").get<std::vector<int>>();
    b.generalization = aggregate_from_json(j.at("generalization"));
    b.stability = aggregate_from_json(j.at("stability"));
    b.config = config_from_json(j.at("config"), origin);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(origin + ": malformed aggregate.json: " + e.what());
  }

  const std::string runs_path = (fs::path(dir) / "runs.csv").string();
  std::ifstream in(runs_path);
  if (!in) throw IoError("incomplete store: missing '" + runs_path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw IoError(runs_path + ": empty runs.csv");
  const std::vector<std::string> header = split_csv_line(line);
  const int c_run = find_column(header, "run_id", runs_path);
  const int c_seed = find_column(header, "seed", runs_path);
  const int c_kept = find_column(header, "kept", runs_path);
  const int c_s1e = find_column(header, "step1_epochs", runs_path);
  const int c_s1c = find_column(header, "step1_converged", runs_path);
  const int c_s1a = find_column(header, "step1_final_accuracy", runs_path);
  const int c_s2e = find_column(header, "step2_epochs", runs_path);
  const int c_s2c = find_column(header, "step2_converged", runs_path);
  const int c_s2a = find_column(header, "step2_final_accuracy", runs_path);
  const int c_gen = find_column(header, "generalization", runs_path);
  const int c_stab = find_column(header, "stability", runs_path);
  std::vector<int> gen_cols;
  std::vector<int> stab_cols;
  for (const Task& t : b.second.tasks())
    gen_cols.push_back(find_column(
        header, "gen_S" + std::to_string(t.sensory) + "M" + std::to_string(t.motor),
        runs_path));
  for (const Task& t : b.first.tasks())
    stab_cols.push_back(find_column(
        header,
        "stab_S" + std::to_string(t.sensory) + "M" + std::to_string(t.motor),
        runs_path));

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw IoError(runs_path + ": row with " + std::to_string(cells.size()) +
                    " cells, expected " + std::to_string(header.size()));
    LoadedRun r;
    r.run_index = static_cast<int>(parse_csv_double(cells[c_run], runs_path));
    r.seed = static_cast<std::uint64_t>(std::stoull(cells[c_seed]));
    r.kept = cells[c_kept] == "1";
    r.step1_epochs = static_cast<int>(parse_csv_double(cells[c_s1e], runs_path));
    r.step1_converged = cells[c_s1c] == "1";
    r.step1_final_accuracy = parse_csv_double(cells[c_s1a], runs_path);
    r.step2_epochs = static_cast<int>(parse_csv_double(cells[c_s2e], runs_path));
    r.step2_converged = cells[c_s2c] == "1";
    r.step2_final_accuracy = parse_csv_double(cells[c_s2a], runs_path);
    r.generalization = parse_csv_double(cells[c_gen], runs_path);
    r.stability = parse_csv_double(cells[c_stab], runs_path);
    for (int c : gen_cols)
      r.gen_per_task.push_back(parse_csv_double(cells[c], runs_path));
    for (int c : stab_cols)
      r.stab_per_task.push_back(parse_csv_double(cells[c], runs_path));
    b.runs.push_back(std::move(r));
  }
  return b;
}

LoadedStore read_store(const std::string& root) {
  LoadedStore store;
  store.manifest = read_manifest(root);
  for (const std::string& name : store.manifest.batches)
    store.batches.push_back(read_batch((fs::path(root) / name).string()));
  return store;
}

}  // namespace cogflex
