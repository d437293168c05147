#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rcnet/random.hpp"
#include "rcnet/reservoir.hpp"

namespace rcnet {

/// Legendre degree assigned to each delay of the input history. Only nonzero
/// degrees are stored, ordered by delay.
class MultiIndex {
 public:
  struct Term {
    int delay;
    int degree;
    friend auto operator<=>(const Term&, const Term&) = default;
  };

  MultiIndex() = default;
  explicit MultiIndex(std::vector<Term> terms);

  const std::vector<Term>& terms() const noexcept { return terms_; }
  int total_degree() const noexcept { return total_degree_; }
  int max_delay() const noexcept;
  bool empty() const noexcept { return terms_.empty(); }

  /// `0;3;7` style renderings for the capacity dump.
  std::string delays_string() const;
  std::string degrees_string() const;

  friend auto operator<=>(const MultiIndex& a, const MultiIndex& b) {
    return a.terms_ <=> b.terms_;
  }
  friend bool operator==(const MultiIndex& a, const MultiIndex& b) {
    return a.terms_ == b.terms_;
  }

 private:
  std::vector<Term> terms_;
  int total_degree_ = 0;
};

struct ScheduleEntry {
  int degree;
  int max_delay;
};

enum class ThresholdMode { Fixed, Surrogate };

struct IpcSchedule {
  std::vector<ScheduleEntry> pairs;
  std::size_t n_inputs = 900000;  // recorded states M
  double threshold = 1e-4;
  ThresholdMode threshold_mode = ThresholdMode::Fixed;
  int washout = 500;
  double gamma = 1e-9;
  bool streaming = false;
  std::size_t memory_budget_bytes = std::size_t{2} << 30;
  int batch_size = 128;       // targets per GEMM
  int block_rows = 8192;      // time rows per accumulation block
  std::size_t top_per_degree = 100;

  /// {(1,2000),(2,300),(3,50),(4,30),(5,15)} with M = 9e5.
  static IpcSchedule paper();
  /// {(1,500),(2,100),(3,30)} with M = 1e5.
  static IpcSchedule desk();

  int max_delay() const;
  /// First recorded input index; every target has its full history there.
  std::size_t first_recorded() const;
  void validate() const;
};

struct BasisCapacity {
  MultiIndex index;
  double capacity;
};

struct CapacityProfile {
  std::map<int, double> per_degree;
  double total = 0.0;
  std::map<int, std::size_t> n_bases_evaluated;
  double threshold_used = 0.0;
  std::map<int, std::vector<BasisCapacity>> top;  // descending capacity
};

/// P_alpha(xi) by Bonnet's recursion.
double legendre_eval(int alpha, double xi);

/// Fills out[0..out.size()) with P_0(xi) .. P_{n-1}(xi).
void legendre_table(double xi, std::span<double> out);

/// Partitions of d into positive parts, each in nonincreasing order.
std::vector<std::vector<int>> integer_partitions(int d);

/// Every distinguishable placement of every partition of d onto distinct
/// delays in [0, J].
std::vector<MultiIndex> enumerate_multi_indices(int d, int max_delay);

struct PartitionCount {
  std::vector<int> parts;
  std::uint64_t multiplicity;  // distinguishable orderings of the parts
  std::uint64_t placements;    // C(J+1, q)
  std::uint64_t count;         // multiplicity * placements
};

std::vector<PartitionCount> count_basis_by_partition(int d, int max_delay);

/// Closed-form number of basis functions of total degree d with delays <= J.
std::uint64_t count_basis(int d, int max_delay);

/// Product of Legendre factors over `xi`, one value per time index
/// k in [first, xi.size()). `first` must be at least the largest delay.
std::vector<double> basis_target(const MultiIndex& n, std::span<const double> xi,
                                 std::size_t first);
std::vector<double> basis_target(const MultiIndex& n, std::span<const double> xi);

/// Reconstruction capacity of a ridge-regression linear estimator fitted and
/// evaluated on the same record. Rows of `states` are aligned with `target`.
double capacity(const Eigen::MatrixXd& states, std::span<const double> target,
                double gamma);

/// Drives `esn` with i.i.d. uniform inputs on [-1, 1] drawn from `rng` and
/// evaluates every basis of the schedule.
CapacityProfile compute_ipc(const EchoStateNetwork& esn,
                            const IpcSchedule& schedule, Rng& rng);

/// Per-basis CSV `degree,delays,degrees,capacity` of the retained top bases.
void write_capacity_dump(std::ostream& out, const CapacityProfile& profile);

}  // namespace rcnet
