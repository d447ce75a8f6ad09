#include "cogflex/regime_graph.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "cogflex/errors.hpp"

namespace cogflex {

CueGraph CueGraph::from_regime(const Regime& regime) {
  CueGraph g;
  g.n = regime.structure().n;
  const int v = g.vertex_count();
  g.adjacency.assign(static_cast<std::size_t>(v) * v, 0);
  for (Task t : regime.tasks()) {
    const int a = t.sensory;
    const int b = g.n + t.motor;
    g.adjacency[static_cast<std::size_t>(a) * v + b] = 1;
    g.adjacency[static_cast<std::size_t>(b) * v + a] = 1;
  }
  return g;
}

int CueGraph::edge_count() const {
  int sum = 0;
  for (std::uint8_t cell : adjacency) sum += cell;
  return sum / 2;
}

double ConnectivityMetrics::aspl() const {
  if (!connected) return std::numeric_limits<double>::infinity();
  return static_cast<double>(path_length_sum) / pair_count;
}

double ConnectivityMetrics::lspl() const {
  if (!connected) return std::numeric_limits<double>::infinity();
  return longest;
}

ConnectivityMetrics connectivity_metrics(const CueGraph& graph) {
  const int v = graph.vertex_count();
  ConnectivityMetrics m;
  m.pair_count = v * (v - 1) / 2;

  std::vector<int> dist(v);
  std::vector<int> queue(v);
  long long ordered_sum = 0;
  int longest = 0;
  for (int src = 0; src < v; ++src) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[src] = 0;
    int head = 0, tail = 0;
    queue[tail++] = src;
    while (head < tail) {
      const int u = queue[head++];
      const std::uint8_t* row = graph.adjacency.data() + static_cast<std::size_t>(u) * v;
      for (int w = 0; w < v; ++w) {
        if (row[w] && dist[w] < 0) {
          dist[w] = dist[u] + 1;
          queue[tail++] = w;
        }
      }
    }
    if (tail != v) {
      m.connected = false;
      m.path_length_sum = 0;
      m.longest = 0;
      return m;
    }
    for (int w = 0; w < v; ++w) {
      ordered_sum += dist[w];
      longest = std::max(longest, dist[w]);
    }
  }
  m.connected = true;
  m.path_length_sum = ordered_sum / 2;
  m.longest = longest;
  return m;
}

namespace {

// Key whose integer order equals lexicographic order of the row-major
// flattened bit string (cell (0,0) most significant).
std::uint64_t lex_key(std::uint64_t mask, int cells) {
  std::uint64_t key = 0;
  for (int i = 0; i < cells; ++i) {
    key |= ((mask >> i) & 1) << (cells - 1 - i);
  }
  return key;
}

// Cell-permutation tables for the full symmetry group: every sensory
// relabeling x motor relabeling x optional cue-type exchange.
std::vector<std::vector<int>> group_cell_maps(int n) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> row_perms;
  do {
    row_perms.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));

  const int cells = n * n;
  std::vector<std::vector<int>> maps;
  maps.reserve(2 * row_perms.size() * row_perms.size());
  for (int transpose = 0; transpose < 2; ++transpose) {
    for (const std::vector<int>& p : row_perms) {
      for (const std::vector<int>& q : row_perms) {
        std::vector<int> map(cells);
        for (int r = 0; r < n; ++r) {
          for (int c = 0; c < n; ++c) {
            const int src = transpose ? p[c] * n + q[r] : p[r] * n + q[c];
            map[r * n + c] = src;
          }
        }
        maps.push_back(std::move(map));
      }
    }
  }
  return maps;
}

std::uint64_t apply_cell_map(std::uint64_t mask, const std::vector<int>& map) {
  std::uint64_t out = 0;
  for (std::size_t i = 0; i < map.size(); ++i) {
    out |= ((mask >> map[i]) & 1) << i;
  }
  return out;
}

std::uint64_t canonical_of(std::uint64_t mask,
                           const std::vector<std::vector<int>>& maps, int cells) {
  std::uint64_t best = mask;
  std::uint64_t best_key = lex_key(mask, cells);
  for (const std::vector<int>& map : maps) {
    const std::uint64_t img = apply_cell_map(mask, map);
    const std::uint64_t key = lex_key(img, cells);
    if (key < best_key) {
      best_key = key;
      best = img;
    }
  }
  return best;
}

bool metrics_less(const CanonicalRegime& a, const CanonicalRegime& b) {
  const int cells = a.structure.task_count();
  if (a.metrics.connected != b.metrics.connected) return a.metrics.connected;
  if (a.metrics.connected) {
    if (a.metrics.path_length_sum != b.metrics.path_length_sum) {
      return a.metrics.path_length_sum < b.metrics.path_length_sum;
    }
    if (a.metrics.longest != b.metrics.longest) {
      return a.metrics.longest < b.metrics.longest;
    }
  }
  return lex_key(a.canonical_mask, cells) < lex_key(b.canonical_mask, cells);
}

}  // namespace

CanonicalRegime canonicalize(const Regime& regime) {
  const TaskStructure& s = regime.structure();
  const std::vector<std::vector<int>> maps = group_cell_maps(s.n);
  const std::uint64_t mask = regime.mask();

  std::unordered_set<std::uint64_t> orbit;
  orbit.insert(mask);
  for (const std::vector<int>& map : maps) orbit.insert(apply_cell_map(mask, map));

  CanonicalRegime out;
  out.structure = s;
  out.canonical_mask = canonical_of(mask, maps, s.task_count());
  out.orbit_size = static_cast<long long>(orbit.size());
  out.metrics = connectivity_metrics(
      CueGraph::from_regime(Regime::from_mask(s, out.canonical_mask)));
  return out;
}

std::vector<CanonicalRegime> enumerate_unique_regimes(int n, int tasks) {
  const TaskStructure s(n);
  const int cells = s.task_count();
  if (tasks < 1 || tasks > cells) {
    throw ValidationError("task count " + std::to_string(tasks) +
                          " out of range [1, " + std::to_string(cells) + "]");
  }
  const std::vector<std::vector<int>> maps = group_cell_maps(n);

  std::unordered_map<std::uint64_t, long long> class_counts;
  std::vector<int> idx(tasks);
  std::iota(idx.begin(), idx.end(), 0);
  for (;;) {
    std::uint64_t mask = 0;
    for (int i : idx) mask |= std::uint64_t{1} << i;
    ++class_counts[canonical_of(mask, maps, cells)];

    int k = tasks - 1;
    while (k >= 0 && idx[k] == cells - tasks + k) --k;
    if (k < 0) break;
    ++idx[k];
    for (int j = k + 1; j < tasks; ++j) idx[j] = idx[j - 1] + 1;
  }

  std::vector<CanonicalRegime> catalog;
  catalog.reserve(class_counts.size());
  for (const auto& [mask, count] : class_counts) {
    CanonicalRegime c;
    c.structure = s;
    c.canonical_mask = mask;
    c.orbit_size = count;
    c.metrics = connectivity_metrics(
        CueGraph::from_regime(Regime::from_mask(s, mask)));
    catalog.push_back(c);
  }
  std::sort(catalog.begin(), catalog.end(), metrics_less);
  return catalog;
}

std::string matrix_string(const Regime& regime) {
  const int n = regime.structure().n;
  const std::vector<std::uint8_t> cells = regime.matrix();
  std::string out;
  for (int r = 0; r < n; ++r) {
    if (r) out.push_back('/');
    for (int c = 0; c < n; ++c) {
      out.push_back(cells[static_cast<std::size_t>(r) * n + c] ? '1' : '0');
    }
  }
  return out;
}

void write_catalog_csv(const std::string& path,
                       const std::vector<CanonicalRegime>& catalog) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write catalog file '" + path + "'");
  out << "regime_id,canonical_matrix,connected,aspl,lspl,orbit_size\n";
  char buf[64];
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    const CanonicalRegime& c = catalog[i];
    out << (i + 1) << ',' << matrix_string(c.regime()) << ','
        << (c.metrics.connected ? 1 : 0) << ',';
    if (c.metrics.connected) {
      std::snprintf(buf, sizeof buf, "%.10g", c.metrics.aspl());
      out << buf << ',' << c.metrics.longest;
    } else {
      out << "inf,inf";
    }
    out << ',' << c.orbit_size << "\n";
  }
  if (!out.good()) throw IoError("failed writing catalog file '" + path + "'");
}

}  // namespace cogflex
