#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "rcnet/random.hpp"

namespace rcnet {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class GraphKind { RandomAsym, RandomSym, WattsStrogatz };

enum class Symmetry { Symmetric, Asymmetric };

/// The five reservoir configurations: connectivity symmetry/structure
/// followed by weight symmetry.
enum class ConfigKind { RA, RSA, RSS, WSA, WSS };

inline constexpr ConfigKind kAllConfigKinds[] = {
    ConfigKind::RA, ConfigKind::RSA, ConfigKind::RSS, ConfigKind::WSA,
    ConfigKind::WSS};

std::string_view to_string(ConfigKind kind);
/// Parses "R-A", "RS-A", "RS-S", "WS-A" or "WS-S".
ConfigKind parse_config_kind(std::string_view name);
GraphKind graph_kind(ConfigKind kind);
Symmetry weight_symmetry(ConfigKind kind);
/// True for the Watts-Strogatz kinds, whose construction depends on p.
bool uses_rewiring(ConfigKind kind);

/// Directed edge `source -> target`; stored at matrix entry (target, source).
struct Edge {
  int target;
  int source;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Binary adjacency without self-loops. Entry (i, j) = 1 means node j feeds
/// node i. Edges are kept sorted row-major.
class ConnectivityMatrix {
 public:
  ConnectivityMatrix(int size, GraphKind kind, std::vector<Edge> edges);

  int size() const noexcept { return size_; }
  GraphKind kind() const noexcept { return kind_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::size_t nnz() const noexcept { return edges_.size(); }
  bool contains(int target, int source) const;
  bool is_symmetric() const;
  double density() const;
  Eigen::MatrixXd to_dense() const;

  friend bool operator==(const ConnectivityMatrix&,
                         const ConnectivityMatrix&) = default;

 private:
  int size_;
  GraphKind kind_;
  std::vector<Edge> edges_;
};

/// Real weights living on a connectivity support.
struct WeightMatrix {
  SparseMatrix entries;
  Symmetry symmetry;
};

struct ReservoirTopology {
  ConnectivityMatrix connectivity;
  WeightMatrix weights;
  SparseMatrix matrix;  // composed and scaled
  ConfigKind kind;
  double rho_target;
  double raw_radius;  // spectral radius before scaling

  int size() const noexcept { return connectivity.size(); }
};

struct DegreeHistogram {
  std::map<int, int> in_counts;
  std::map<int, int> out_counts;
};

/// Ring-lattice degree used for Watts-Strogatz graphs: round(density * n),
/// rounded down to the next even number.
int watts_strogatz_degree(int n, double density);

/// Builds the adjacency for `kind`. `rewire_p` is used only by the
/// Watts-Strogatz construction.
ConnectivityMatrix build_connectivity(GraphKind kind, int n, double density,
                                      double rewire_p, Rng& rng);

/// Ring lattice of even degree k with per-edge rewiring probability p.
ConnectivityMatrix build_watts_strogatz(int n, int k, double p, Rng& rng);

WeightMatrix build_weight_matrix(const ConnectivityMatrix& a,
                                 Symmetry symmetry, Rng& rng);

/// Hadamard product of connectivity and weights, scaled to `rho_target`.
ReservoirTopology compose_reservoir(const ConnectivityMatrix& a,
                                    const WeightMatrix& wc, double rho_target,
                                    ConfigKind kind);

/// Largest eigenvalue modulus, from a dense eigenvalue solve.
double spectral_radius(const Eigen::MatrixXd& m);
double spectral_radius(const SparseMatrix& m);

DegreeHistogram degree_distribution(const ConnectivityMatrix& a);

struct TopologyRequest {
  ConfigKind kind = ConfigKind::RA;
  int n = 1024;
  double density = 0.008;
  double rewire_p = 1.0;
  double rho_target = 1.25;
};

/// Full construction pipeline with separate streams for connectivity and
/// weights.
ReservoirTopology make_topology(const TopologyRequest& request,
                                std::uint64_t connectivity_seed,
                                std::uint64_t weight_seed);

/// Writes `i j w` triplets (0-based) preceded by a `#` header line.
void write_triplets(std::ostream& out, const ReservoirTopology& topology,
                    std::uint64_t seed, double density);

}  // namespace rcnet
