#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cogflex/task_env.hpp"

namespace cogflex {

// Bipartite cue graph of a regime: vertices 0..n-1 are sensory cues,
// n..2n-1 motor cues, one edge per task.
struct CueGraph {
  int n = 0;
  std::vector<std::uint8_t> adjacency;  // (2n)^2 row-major, symmetric

  static CueGraph from_regime(const Regime& regime);

  int vertex_count() const { return 2 * n; }
  bool edge(int u, int v) const {
    return adjacency[static_cast<std::size_t>(u) * vertex_count() + v] != 0;
  }
  int edge_count() const;
};

// Shortest-path structure over all unordered vertex pairs. For a connected
// graph aspl() is path_length_sum / pair_count exactly; a disconnected graph
// (isolated vertices included) reports +infinity for both metrics.
struct ConnectivityMetrics {
  bool connected = false;
  long long path_length_sum = 0;  // meaningful only when connected
  int pair_count = 0;             // C(2n, 2)
  int longest = 0;                // meaningful only when connected

  double aspl() const;
  double lspl() const;
};

ConnectivityMetrics connectivity_metrics(const CueGraph& graph);

// Canonical form of a regime under relabeling of sensory cues, relabeling of
// motor cues, and exchanging the two cue types (group size 2 * (n!)^2).
// The canonical representative minimizes the row-major flattened bit string
// in lexicographic order.
struct CanonicalRegime {
  TaskStructure structure;
  std::uint64_t canonical_mask = 0;  // bit (sensory * n + motor)
  long long orbit_size = 0;          // distinct task sets in the class
  ConnectivityMetrics metrics;

  Regime regime() const { return Regime::from_mask(structure, canonical_mask); }
};

CanonicalRegime canonicalize(const Regime& regime);

// All canonical classes of T-task regimes over an n x n structure, sorted by
// (aspl, lspl, canonical form) with disconnected classes last. Orbit sizes
// sum to C(n^2, T).
std::vector<CanonicalRegime> enumerate_unique_regimes(int n, int tasks);

// catalog.csv: regime_id,canonical_matrix,connected,aspl,lspl,orbit_size with
// the matrix as row-major bits ('/' between rows) and "inf" when disconnected.
void write_catalog_csv(const std::string& path,
                       const std::vector<CanonicalRegime>& catalog);

std::string matrix_string(const Regime& regime);

}  // namespace cogflex
