#include "rcnet/topology.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>

#include <Eigen/Eigenvalues>
#include <lapacke.h>

#include "rcnet/errors.hpp"

namespace rcnet {

std::string_view to_string(ConfigKind kind) {
  switch (kind) {
    case ConfigKind::RA: return "R-A";
    case ConfigKind::RSA: return "RS-A";
    case ConfigKind::RSS: return "RS-S";
    case ConfigKind::WSA: return "WS-A";
    case ConfigKind::WSS: return "WS-S";
  }
  return "?";
}

ConfigKind parse_config_kind(std::string_view name) {
  for (ConfigKind k : kAllConfigKinds) {
    if (to_string(k) == name) return k;
  }
  throw ParameterError("unknown topology kind '" + std::string(name) + "'");
}

GraphKind graph_kind(ConfigKind kind) {
  switch (kind) {
    case ConfigKind::RA: return GraphKind::RandomAsym;
    case ConfigKind::RSA:
    case ConfigKind::RSS: return GraphKind::RandomSym;
    case ConfigKind::WSA:
    case ConfigKind::WSS: return GraphKind::WattsStrogatz;
  }
  return GraphKind::RandomAsym;
}

Symmetry weight_symmetry(ConfigKind kind) {
  return (kind == ConfigKind::RSS || kind == ConfigKind::WSS)
             ? Symmetry::Symmetric
             : Symmetry::Asymmetric;
}

bool uses_rewiring(ConfigKind kind) {
  return graph_kind(kind) == GraphKind::WattsStrogatz;
}

ConnectivityMatrix::ConnectivityMatrix(int size, GraphKind kind,
                                       std::vector<Edge> edges)
    : size_(size), kind_(kind), edges_(std::move(edges)) {
  if (size_ < 1) throw ParameterError("connectivity size must be positive");
  std::sort(edges_.begin(), edges_.end());
  for (const Edge& e : edges_) {
    if (e.target < 0 || e.target >= size_ || e.source < 0 ||
        e.source >= size_)
      throw ContractError("edge index out of range");
    if (e.target == e.source)
      throw ContractError("self-loops are not allowed");
  }
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
    throw ContractError("duplicate edge");
}

bool ConnectivityMatrix::contains(int target, int source) const {
  return std::binary_search(edges_.begin(), edges_.end(),
                            Edge{target, source});
}

bool ConnectivityMatrix::is_symmetric() const {
  return std::all_of(edges_.begin(), edges_.end(), [this](const Edge& e) {
    return contains(e.source, e.target);
  });
}

double ConnectivityMatrix::density() const {
  return static_cast<double>(edges_.size()) /
         (static_cast<double>(size_) * size_);
}

Eigen::MatrixXd ConnectivityMatrix::to_dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size_, size_);
  for (const Edge& e : edges_) m(e.target, e.source) = 1.0;
  return m;
}

namespace {

void check_density(double density) {
  if (!(density > 0.0 && density < 1.0))
    throw ParameterError("density must lie in (0, 1)");
}

// Rejection sampling of distinct positions; uniform over subsets because each
// accepted position is uniform over those not yet taken.
std::vector<Edge> sample_directed(int n, std::size_t count, Rng& rng) {
  const auto n64 = static_cast<std::uint64_t>(n);
  std::set<Edge> chosen;
  while (chosen.size() < count) {
    const std::uint64_t idx = uniform_index(rng, n64 * n64);
    const int row = static_cast<int>(idx / n64);
    const int col = static_cast<int>(idx % n64);
    if (row == col) continue;
    chosen.insert(Edge{row, col});
  }
  return {chosen.begin(), chosen.end()};
}

std::vector<Edge> sample_undirected(int n, std::size_t pairs, Rng& rng) {
  const auto n64 = static_cast<std::uint64_t>(n);
  std::set<Edge> chosen;  // stored with target < source
  while (chosen.size() < pairs) {
    const std::uint64_t idx = uniform_index(rng, n64 * n64);
    const int row = static_cast<int>(idx / n64);
    const int col = static_cast<int>(idx % n64);
    if (row >= col) continue;
    chosen.insert(Edge{row, col});
  }
  std::vector<Edge> edges;
  edges.reserve(2 * pairs);
  for (const Edge& e : chosen) {
    edges.push_back(e);
    edges.push_back(Edge{e.source, e.target});
  }
  return edges;
}

}  // namespace

int watts_strogatz_degree(int n, double density) {
  const auto k = static_cast<long long>(std::llround(density * n));
  return static_cast<int>(k - (k % 2));
}

ConnectivityMatrix build_watts_strogatz(int n, int k, double p, Rng& rng) {
  if (n < 2) throw ParameterError("node count must be at least 2");
  if (k < 2 || k % 2 != 0 || k >= n)
    throw ParameterError("Watts-Strogatz degree k=" + std::to_string(k) +
                         " must be even with 2 <= k < n");
  if (!(p >= 0.0 && p <= 1.0))
    throw ParameterError("rewiring probability must lie in [0, 1]");

  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  std::vector<int> degree(n, k);
  for (int u = 0; u < n; ++u) {
    for (int j = 1; j <= k / 2; ++j) {
      const int v = (u + j) % n;
      adj[u][v] = adj[v][u] = 1;
    }
  }

  // Lattice edges are visited by offset first, then by node, so rewired edges
  // of earlier passes are never revisited.
  for (int j = 1; j <= k / 2; ++j) {
    for (int u = 0; u < n; ++u) {
      const int v = (u + j) % n;
      if (!adj[u][v]) continue;  // already rewired away from the other end
      if (uniform01(rng) >= p) continue;
      if (degree[u] >= n - 1)
        throw ConstructionError("no free rewiring target for node " +
                                std::to_string(u));
      int w = 0;
      do {
        w = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n)));
      } while (w == u || adj[u][w]);
      adj[u][v] = adj[v][u] = 0;
      adj[u][w] = adj[w][u] = 1;
      --degree[v];
      ++degree[w];
    }
  }

  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(n) * k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (adj[i][j]) edges.push_back(Edge{i, j});
  return ConnectivityMatrix(n, GraphKind::WattsStrogatz, std::move(edges));
}

ConnectivityMatrix build_connectivity(GraphKind kind, int n, double density,
                                      double rewire_p, Rng& rng) {
  if (n < 2) throw ParameterError("node count must be at least 2");
  check_density(density);
  const double positions = static_cast<double>(n) * n;
  switch (kind) {
    case GraphKind::RandomAsym: {
      const auto count = static_cast<std::size_t>(std::llround(density * positions));
      if (count > static_cast<std::size_t>(n) * (n - 1))
        throw ParameterError("density exceeds the off-diagonal capacity");
      return ConnectivityMatrix(n, kind, sample_directed(n, count, rng));
    }
    case GraphKind::RandomSym: {
      const auto pairs = static_cast<std::size_t>(std::floor(density * positions / 2.0));
      if (pairs > static_cast<std::size_t>(n) * (n - 1) / 2)
        throw ParameterError("density exceeds the off-diagonal capacity");
      return ConnectivityMatrix(n, kind, sample_undirected(n, pairs, rng));
    }
    case GraphKind::WattsStrogatz:
      return build_watts_strogatz(n, watts_strogatz_degree(n, density),
                                  rewire_p, rng);
  }
  throw ParameterError("unknown graph kind");
}

WeightMatrix build_weight_matrix(const ConnectivityMatrix& a,
                                 Symmetry symmetry, Rng& rng) {
  if (symmetry == Symmetry::Symmetric && !a.is_symmetric())
    throw ParameterError(
        "symmetric weights require a symmetric connectivity matrix");

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(a.nnz());
  for (const Edge& e : a.edges()) {
    if (symmetry == Symmetry::Symmetric) {
      if (e.target > e.source) continue;
      const double w = uniform(rng, -0.5, 0.5);
      triplets.emplace_back(e.target, e.source, w);
      triplets.emplace_back(e.source, e.target, w);
    } else {
      triplets.emplace_back(e.target, e.source, uniform(rng, -0.5, 0.5));
    }
  }
  SparseMatrix m(a.size(), a.size());
  m.setFromTriplets(triplets.begin(), triplets.end());
  return WeightMatrix{std::move(m), symmetry};
}

double spectral_radius(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw ContractError("matrix must be square");
  if (!m.allFinite()) throw InputError("matrix has non-finite entries");
  if (m.size() == 0) return 0.0;
  if (m == m.transpose()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        m, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
  }
  // LAPACK's blocked Hessenberg QR is an order of magnitude faster than
  // Eigen's EigenSolver at N_r = 1024.
  Eigen::MatrixXd work = m;
  const auto n = static_cast<lapack_int>(m.rows());
  Eigen::VectorXd re(n);
  Eigen::VectorXd im(n);
  const lapack_int info =
      LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, work.data(), n, re.data(),
                    im.data(), nullptr, 1, nullptr, 1);
  if (info != 0)
    throw InputError("eigenvalue iteration did not converge (info=" +
                     std::to_string(info) + ")");
  double radius = 0.0;
  for (lapack_int i = 0; i < n; ++i) radius = std::max(radius, std::hypot(re(i), im(i)));
  return radius;
}

double spectral_radius(const SparseMatrix& m) {
  return spectral_radius(Eigen::MatrixXd(m));
}

ReservoirTopology compose_reservoir(const ConnectivityMatrix& a,
                                    const WeightMatrix& wc, double rho_target,
                                    ConfigKind kind) {
  if (wc.entries.rows() != a.size() || wc.entries.cols() != a.size())
    throw ContractError("connectivity and weight matrices differ in size");
  if (!(rho_target > 0.0))
    throw ParameterError("target spectral radius must be positive");

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(a.nnz());
  for (const Edge& e : a.edges())
    triplets.emplace_back(e.target, e.source,
                          wc.entries.coeff(e.target, e.source));
  SparseMatrix w(a.size(), a.size());
  w.setFromTriplets(triplets.begin(), triplets.end());

  const double raw = spectral_radius(w);
  if (!(raw > 0.0))
    throw NormalizationError(
        "cannot normalize a reservoir matrix with spectral radius 0", raw);
  w *= rho_target / raw;
  return ReservoirTopology{a, wc, std::move(w), kind, rho_target, raw};
}

DegreeHistogram degree_distribution(const ConnectivityMatrix& a) {
  std::vector<int> in(a.size(), 0);
  std::vector<int> out(a.size(), 0);
  for (const Edge& e : a.edges()) {
    ++in[e.target];
    ++out[e.source];
  }
  DegreeHistogram h;
  for (int d : in) ++h.in_counts[d];
  for (int d : out) ++h.out_counts[d];
  return h;
}

ReservoirTopology make_topology(const TopologyRequest& request,
                                std::uint64_t connectivity_seed,
                                std::uint64_t weight_seed) {
  Rng connectivity_rng(connectivity_seed);
  Rng weight_rng(weight_seed);
  const ConnectivityMatrix a =
      build_connectivity(graph_kind(request.kind), request.n, request.density,
                         request.rewire_p, connectivity_rng);
  const WeightMatrix wc =
      build_weight_matrix(a, weight_symmetry(request.kind), weight_rng);
  return compose_reservoir(a, wc, request.rho_target, request.kind);
}

void write_triplets(std::ostream& out, const ReservoirTopology& topology,
                    std::uint64_t seed, double density) {
  out << "# kind=" << to_string(topology.kind) << " seed=" << seed
      << " density=" << density << " rho=" << topology.rho_target
      << " n=" << topology.size() << '\n';
  out << std::setprecision(17);
  for (int i = 0; i < topology.matrix.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(topology.matrix, i); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

}  // namespace rcnet
