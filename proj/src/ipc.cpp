#include "rcnet/ipc.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <utility>

#include <Eigen/Cholesky>

#include "rcnet/errors.hpp"

namespace rcnet {

MultiIndex::MultiIndex(std::vector<Term> terms) : terms_(std::move(terms)) {
  std::sort(terms_.begin(), terms_.end());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (terms_[i].degree < 1) throw ParameterError("stored degrees must be >= 1");
    if (terms_[i].delay < 0) throw ParameterError("delays must be >= 0");
    if (i > 0 && terms_[i].delay == terms_[i - 1].delay)
      throw ParameterError("a delay may carry only one Legendre factor");
    total_degree_ += terms_[i].degree;
  }
}

int MultiIndex::max_delay() const noexcept {
  return terms_.empty() ? 0 : terms_.back().delay;
}

std::string MultiIndex::delays_string() const {
  std::string s;
  for (const Term& t : terms_) {
    if (!s.empty()) s += ';';
    s += std::to_string(t.delay);
  }
  return s;
}

std::string MultiIndex::degrees_string() const {
  std::string s;
  for (const Term& t : terms_) {
    if (!s.empty()) s += ';';
    s += std::to_string(t.degree);
  }
  return s;
}

IpcSchedule IpcSchedule::paper() {
  IpcSchedule s;
  s.pairs = {{1, 2000}, {2, 300}, {3, 50}, {4, 30}, {5, 15}};
  s.n_inputs = 900000;
  return s;
}

IpcSchedule IpcSchedule::desk() {
  IpcSchedule s;
  s.pairs = {{1, 500}, {2, 100}, {3, 30}};
  s.n_inputs = 100000;
  return s;
}

int IpcSchedule::max_delay() const {
  int j = 0;
  for (const ScheduleEntry& e : pairs) j = std::max(j, e.max_delay);
  return j;
}

std::size_t IpcSchedule::first_recorded() const {
  return static_cast<std::size_t>(std::max(washout, max_delay()));
}

void IpcSchedule::validate() const {
  if (pairs.empty()) throw ParameterError("IPC schedule has no (d, J) pairs");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].degree < 1) throw ParameterError("IPC degrees must be >= 1");
    if (pairs[i].max_delay <= 0) throw ParameterError("IPC max delay must be > 0");
    if (i > 0 && pairs[i].degree <= pairs[i - 1].degree)
      throw ParameterError("IPC degrees must be strictly increasing");
  }
  if (washout < 0) throw ParameterError("IPC washout must be nonnegative");
  if (n_inputs <= static_cast<std::size_t>(max_delay() + washout))
    throw ParameterError("IPC input count must exceed max delay + washout");
  if (!(threshold >= 0.0)) throw ParameterError("IPC threshold must be >= 0");
  if (!(gamma >= 0.0)) throw ParameterError("IPC gamma must be >= 0");
  if (batch_size < 1 || block_rows < 1)
    throw ParameterError("IPC batch and block sizes must be positive");
}

double legendre_eval(int alpha, double xi) {
  if (alpha < 0) throw ParameterError("Legendre degree must be nonnegative");
  if (alpha == 0) return 1.0;
  double prev = 1.0;
  double cur = xi;
  for (int a = 1; a < alpha; ++a) {
    const double next = ((2.0 * a + 1.0) * xi * cur - a * prev) / (a + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

void legendre_table(double xi, std::span<double> out) {
  if (out.empty()) return;
  out[0] = 1.0;
  if (out.size() == 1) return;
  out[1] = xi;
  for (std::size_t a = 1; a + 1 < out.size(); ++a) {
    const double ad = static_cast<double>(a);
    out[a + 1] = ((2.0 * ad + 1.0) * xi * out[a] - ad * out[a - 1]) / (ad + 1.0);
  }
}

namespace {

void partitions_rec(int remaining, int max_part, std::vector<int>& cur,
                    std::vector<std::vector<int>>& out) {
  if (remaining == 0) {
    out.push_back(cur);
    return;
  }
  for (int p = std::min(remaining, max_part); p >= 1; --p) {
    cur.push_back(p);
    partitions_rec(remaining - p, p, cur, out);
    cur.pop_back();
  }
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

std::uint64_t factorial(std::uint64_t n) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 2; i <= n; ++i) r *= i;
  return r;
}

}  // namespace

std::vector<std::vector<int>> integer_partitions(int d) {
  if (d < 1) throw ParameterError("partition target must be >= 1");
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  partitions_rec(d, d, cur, out);
  return out;
}

std::vector<MultiIndex> enumerate_multi_indices(int d, int max_delay) {
  if (max_delay < 0) throw ParameterError("max delay must be >= 0");
  std::vector<MultiIndex> out;
  const int slots = max_delay + 1;
  for (std::vector<int> parts : integer_partitions(d)) {
    const int q = static_cast<int>(parts.size());
    if (q > slots) continue;
    std::sort(parts.begin(), parts.end());
    std::vector<int> delays(static_cast<std::size_t>(q));
    std::iota(delays.begin(), delays.end(), 0);
    while (true) {
      std::vector<int> perm = parts;
      do {
        std::vector<MultiIndex::Term> terms;
        terms.reserve(perm.size());
        for (int i = 0; i < q; ++i) terms.push_back({delays[i], perm[i]});
        out.emplace_back(std::move(terms));
      } while (std::next_permutation(perm.begin(), perm.end()));

      // Next q-combination of [0, slots) in lexicographic order.
      int i = q - 1;
      while (i >= 0 && delays[i] == slots - q + i) --i;
      if (i < 0) break;
      ++delays[i];
      for (int j = i + 1; j < q; ++j) delays[j] = delays[j - 1] + 1;
    }
  }
  return out;
}

std::vector<PartitionCount> count_basis_by_partition(int d, int max_delay) {
  if (max_delay < 0) throw ParameterError("max delay must be >= 0");
  std::vector<PartitionCount> out;
  for (const std::vector<int>& parts : integer_partitions(d)) {
    std::map<int, std::uint64_t> multiplicities;
    for (int p : parts) ++multiplicities[p];
    std::uint64_t orderings = factorial(parts.size());
    for (const auto& [part, m] : multiplicities) orderings /= factorial(m);
    const std::uint64_t placements =
        binomial(static_cast<std::uint64_t>(max_delay) + 1, parts.size());
    out.push_back({parts, orderings, placements, orderings * placements});
  }
  return out;
}

std::uint64_t count_basis(int d, int max_delay) {
  std::uint64_t total = 0;
  for (const PartitionCount& c : count_basis_by_partition(d, max_delay)) total += c.count;
  return total;
}

std::vector<double> basis_target(const MultiIndex& n, std::span<const double> xi,
                                 std::size_t first) {
  if (first < static_cast<std::size_t>(n.max_delay()))
    throw ContractError("target start precedes the required input history");
  if (xi.size() <= first) throw ContractError("input series too short for the basis");
  std::vector<double> out(xi.size() - first, 1.0);
  for (std::size_t k = first; k < xi.size(); ++k) {
    double v = 1.0;
    for (const MultiIndex::Term& t : n.terms())
      v *= legendre_eval(t.degree, xi[k - static_cast<std::size_t>(t.delay)]);
    out[k - first] = v;
  }
  return out;
}

std::vector<double> basis_target(const MultiIndex& n, std::span<const double> xi) {
  return basis_target(n, xi, static_cast<std::size_t>(n.max_delay()));
}

double capacity(const Eigen::MatrixXd& states, std::span<const double> target,
                double gamma) {
  if (static_cast<std::size_t>(states.rows()) != target.size())
    throw ContractError("state rows and target length differ");
  if (!(gamma >= 0.0)) throw ParameterError("gamma must be nonnegative");
  const Eigen::Map<const Eigen::VectorXd> y(target.data(),
                                            static_cast<Eigen::Index>(target.size()));
  const double power = y.squaredNorm();
  if (!(power > 0.0)) throw InputError("target has zero power");

  Eigen::MatrixXd normal = states.transpose() * states;
  normal.diagonal().array() += gamma;
  Eigen::LLT<Eigen::MatrixXd> llt(normal);
  if (llt.info() != Eigen::Success)
    throw SolverError("normal matrix is not positive definite; use gamma > 0");
  const Eigen::VectorXd w = llt.solve(states.transpose() * y);
  const double sse = (y - states * w).squaredNorm();
  return std::clamp(1.0 - sse / power, 0.0, 1.0);
}

namespace {

struct TargetColumn {
  const MultiIndex* index;
  std::size_t shift;  // cyclic shift of the target over the record
};

// Provides the recorded reservoir states in time blocks, either from a cached
// matrix or by re-running the reservoir for every pass.
class StateSource {
 public:
  StateSource(const EchoStateNetwork& esn, std::span<const double> xi,
              std::size_t first, std::size_t rows, std::size_t block_rows,
              bool streaming)
      : esn_(esn), xi_(xi), first_(first), rows_(rows),
        block_rows_(block_rows), streaming_(streaming) {
    if (!streaming_) {
      cached_.resize(static_cast<Eigen::Index>(rows_), esn_.size());
      run([&](std::size_t offset, const Eigen::MatrixXd& block) {
        cached_.middleRows(static_cast<Eigen::Index>(offset), block.rows()) = block;
      });
    }
  }

  template <class F>
  void for_each_block(F&& f) const {
    if (streaming_) {
      run(f);
      return;
    }
    for (std::size_t off = 0; off < rows_; off += block_rows_) {
      const auto len = static_cast<Eigen::Index>(std::min(block_rows_, rows_ - off));
      f(off, cached_.middleRows(static_cast<Eigen::Index>(off), len));
    }
  }

 private:
  template <class F>
  void run(F&& f) const {
    ReservoirState r = ReservoirState::Zero(esn_.size());
    for (std::size_t k = 0; k < first_; ++k) esn_.advance(r, xi_[k]);
    Eigen::MatrixXd block;
    for (std::size_t off = 0; off < rows_; off += block_rows_) {
      const std::size_t len = std::min(block_rows_, rows_ - off);
      block.resize(static_cast<Eigen::Index>(len), esn_.size());
      for (std::size_t t = 0; t < len; ++t) {
        esn_.advance(r, xi_[first_ + off + t]);
        block.row(static_cast<Eigen::Index>(t)) = r.transpose();
      }
      f(off, std::as_const(block));
    }
  }

  const EchoStateNetwork& esn_;
  std::span<const double> xi_;
  std::size_t first_;
  std::size_t rows_;
  std::size_t block_rows_;
  bool streaming_;
  Eigen::MatrixXd cached_;
};

class CapacityEvaluator {
 public:
  CapacityEvaluator(const StateSource& source,
                    const std::vector<std::vector<double>>& legendre,
                    std::size_t first, std::size_t rows, int n_r, double gamma)
      : source_(source), legendre_(legendre), first_(first), rows_(rows),
        n_r_(n_r), gamma_(gamma) {
    Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(n_r, n_r);
    source_.for_each_block([&](std::size_t, const auto& block) {
      normal.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose());
    });
    normal.diagonal().array() += gamma;
    llt_.compute(normal.selfadjointView<Eigen::Lower>());
    if (llt_.info() != Eigen::Success)
      throw SolverError("IPC normal matrix is not positive definite; use gamma > 0");
  }

  std::vector<double> evaluate(std::span<const TargetColumn> columns) const {
    const auto nb = static_cast<Eigen::Index>(columns.size());
    Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(n_r_, nb);
    Eigen::VectorXd power = Eigen::VectorXd::Zero(nb);
    Eigen::MatrixXd targets;
    source_.for_each_block([&](std::size_t offset, const auto& block) {
      const Eigen::Index len = block.rows();
      targets.resize(len, nb);
      for (Eigen::Index j = 0; j < nb; ++j)
        fill_column(columns[static_cast<std::size_t>(j)], offset, targets.col(j));
      cross.noalias() += block.transpose() * targets;
      power += targets.colwise().squaredNorm().transpose();
    });

    // With (G + gamma I) w = b the residual energy is y'y - w'b - gamma w'w,
    // so the capacity needs only w'b and w'w.
    const Eigen::MatrixXd w = llt_.solve(cross);
    std::vector<double> out(columns.size());
    for (Eigen::Index j = 0; j < nb; ++j) {
      if (!(power(j) > 0.0)) {
        out[static_cast<std::size_t>(j)] = 0.0;
        continue;
      }
      const double explained =
          w.col(j).dot(cross.col(j)) + gamma_ * w.col(j).squaredNorm();
      out[static_cast<std::size_t>(j)] = std::clamp(explained / power(j), 0.0, 1.0);
    }
    return out;
  }

 private:
  template <class Column>
  void fill_column(const TargetColumn& c, std::size_t offset, Column&& col) const {
    const auto len = static_cast<std::size_t>(col.size());
    const auto& terms = c.index->terms();
    if (terms.empty()) {
      col.setOnes();
      return;
    }
    std::size_t row = (offset + c.shift) % rows_;
    for (std::size_t t = 0; t < len;) {
      // Contiguous run up to the wrap point of the cyclic shift.
      const std::size_t run = std::min(len - t, rows_ - row);
      double* out = &col(static_cast<Eigen::Index>(t));
      const double* f0 = legendre_[static_cast<std::size_t>(terms[0].degree)].data() +
                         first_ + row - static_cast<std::size_t>(terms[0].delay);
      for (std::size_t i = 0; i < run; ++i) out[i] = f0[i];
      for (std::size_t m = 1; m < terms.size(); ++m) {
        const double* f = legendre_[static_cast<std::size_t>(terms[m].degree)].data() +
                          first_ + row - static_cast<std::size_t>(terms[m].delay);
        for (std::size_t i = 0; i < run; ++i) out[i] *= f[i];
      }
      t += run;
      row = 0;
    }
  }

  const StateSource& source_;
  const std::vector<std::vector<double>>& legendre_;
  std::size_t first_;
  std::size_t rows_;
  int n_r_;
  double gamma_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

double surrogate_threshold(const CapacityEvaluator& evaluator,
                           const std::vector<std::vector<MultiIndex>>& bases,
                           std::size_t rows) {
  constexpr int kShifts = 10;
  constexpr double kSafety = 1.2;
  std::vector<TargetColumn> columns;
  for (const auto& degree_bases : bases) {
    if (degree_bases.empty()) continue;
    for (int s = 1; s <= kShifts; ++s)
      columns.push_back({&degree_bases.front(),
                         rows * static_cast<std::size_t>(s) / (kShifts + 1)});
  }
  const std::vector<double> caps = evaluator.evaluate(columns);
  return kSafety * *std::max_element(caps.begin(), caps.end());
}

}  // namespace

CapacityProfile compute_ipc(const EchoStateNetwork& esn,
                            const IpcSchedule& schedule, Rng& rng) {
  schedule.validate();
  const std::size_t first = schedule.first_recorded();
  const std::size_t rows = schedule.n_inputs;
  const std::size_t length = first + rows;
  const auto n_r = static_cast<std::size_t>(esn.size());
  const auto block_rows = static_cast<std::size_t>(schedule.block_rows);
  const auto batch = static_cast<std::size_t>(schedule.batch_size);

  int max_degree = 0;
  for (const ScheduleEntry& e : schedule.pairs) max_degree = std::max(max_degree, e.degree);

  const std::size_t working = sizeof(double) *
      (length * (static_cast<std::size_t>(max_degree) + 2) +
       std::min(block_rows, rows) * (batch + n_r) + n_r * (n_r + 2 * batch));
  const std::size_t cached = schedule.streaming ? 0 : sizeof(double) * rows * n_r;
  if (working + cached > schedule.memory_budget_bytes) {
    throw ResourceError(
        "IPC memory plan of " + std::to_string((working + cached) >> 20) +
        " MiB exceeds the budget of " +
        std::to_string(schedule.memory_budget_bytes >> 20) + " MiB" +
        (schedule.streaming ? std::string()
                            : std::string("; enable block-streaming mode")));
  }

  std::vector<double> xi(length);
  for (double& v : xi) v = uniform(rng, -1.0, 1.0);

  std::vector<std::vector<double>> legendre(
      static_cast<std::size_t>(max_degree) + 1, std::vector<double>(length));
  std::vector<double> row(static_cast<std::size_t>(max_degree) + 1);
  for (std::size_t k = 0; k < length; ++k) {
    legendre_table(xi[k], row);
    for (std::size_t a = 0; a < row.size(); ++a) legendre[a][k] = row[a];
  }

  const StateSource source(esn, xi, first, rows, block_rows, schedule.streaming);
  const CapacityEvaluator evaluator(source, legendre, first, rows, esn.size(),
                                    schedule.gamma);

  std::vector<std::vector<MultiIndex>> bases;
  for (const ScheduleEntry& e : schedule.pairs)
    bases.push_back(enumerate_multi_indices(e.degree, e.max_delay));

  CapacityProfile profile;
  profile.threshold_used = schedule.threshold_mode == ThresholdMode::Surrogate
                               ? surrogate_threshold(evaluator, bases, rows)
                               : schedule.threshold;

  for (std::size_t d = 0; d < schedule.pairs.size(); ++d) {
    const int degree = schedule.pairs[d].degree;
    const std::vector<MultiIndex>& indices = bases[d];
    std::vector<BasisCapacity> all;
    all.reserve(indices.size());
    std::vector<TargetColumn> columns;
    for (std::size_t start = 0; start < indices.size(); start += batch) {
      const std::size_t end = std::min(indices.size(), start + batch);
      columns.clear();
      for (std::size_t i = start; i < end; ++i) columns.push_back({&indices[i], 0});
      const std::vector<double> caps = evaluator.evaluate(columns);
      for (std::size_t i = start; i < end; ++i) {
        double c = caps[i - start];
        if (c < profile.threshold_used) c = 0.0;
        all.push_back({indices[i], c});
      }
    }

    double sum = 0.0;
    for (const BasisCapacity& b : all) sum += b.capacity;
    profile.per_degree[degree] = sum;
    profile.n_bases_evaluated[degree] = indices.size();

    const std::size_t keep = std::min(schedule.top_per_degree, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep),
                      all.end(), [](const BasisCapacity& a, const BasisCapacity& b) {
                        if (a.capacity != b.capacity) return a.capacity > b.capacity;
                        return a.index < b.index;
                      });
    all.resize(keep);
    profile.top[degree] = std::move(all);
  }

  for (const auto& [degree, value] : profile.per_degree) profile.total += value;
  return profile;
}

void write_capacity_dump(std::ostream& out, const CapacityProfile& profile) {
  out << "degree,delays,degrees,capacity\n" << std::setprecision(17);
  for (const auto& [degree, entries] : profile.top)
    for (const BasisCapacity& b : entries)
      out << degree << ',' << b.index.delays_string() << ','
          << b.index.degrees_string() << ',' << b.capacity << '\n';
  if (!out) throw IoError("failed to write capacity dump");
}

}  // namespace rcnet
