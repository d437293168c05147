#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rcnet/ipc.hpp"
#include "rcnet/mackey_glass.hpp"
#include "rcnet/metrics.hpp"
#include "rcnet/reservoir.hpp"
#include "rcnet/topology.hpp"

namespace rcnet {

enum class SeedRole : std::uint64_t {
  Connectivity = 1,
  Weights = 2,
  Input = 3,
  Series = 4,
  IpcInput = 5,
  EchoProbe = 6,
};

/// Deterministic 64-bit seed for one random stream of one ensemble member.
/// An absent kind or p is hashed as its own distinct value.
std::uint64_t derive_seed(std::uint64_t base_seed, std::optional<ConfigKind> kind,
                          std::optional<double> p, std::uint64_t member,
                          SeedRole role);

enum class OutputFormat { Csv, Json };

struct ExperimentConfig {
  std::vector<ConfigKind> kinds{std::begin(kAllConfigKinds), std::end(kAllConfigKinds)};
  std::vector<double> ws_p_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  /// Rewiring probability used for WS kinds when the grid is not swept.
  double ws_default_p = 1.0;
  bool sweep_p = false;
  bool score_open = true;
  bool score_closed = true;
  int ensemble_size = 100;
  int ipc_ensemble_size = 40;
  std::uint64_t base_seed = 1;
  bool shared_series = false;
  double lambda1 = kMackeyGlassLyapunov;
  double nmse_threshold = kNmseThreshold;
  ReservoirConfig reservoir;
  MackeyGlassParams mackey_glass;
  IpcSchedule ipc = IpcSchedule::paper();
  std::string output_path;
  OutputFormat format = OutputFormat::Csv;
  int threads = 1;

  void validate() const;
};

/// Reduced preset: N_r = 128, M = 1e5, d <= 3, ten members per ensemble.
/// Density is scaled up so the mean degree matches the current N_r.
void apply_desk_scale(ExperimentConfig& cfg);

/// Loads an INI-style file (top-level keys plus [reservoir], [mackey_glass]
/// and [ipc] sections) over the defaults in `cfg`.
void load_config(const std::filesystem::path& path, ExperimentConfig& cfg);
void load_config(std::istream& in, ExperimentConfig& cfg);

nlohmann::json to_json(const ExperimentConfig& cfg);

inline constexpr int kMaxIpcDegree = 5;

/// One ensemble member. Metrics that were not computed stay empty.
struct ResultRow {
  ConfigKind kind = ConfigKind::RA;
  std::optional<double> p;
  int member = 0;
  std::uint64_t seed = 0;  // connectivity seed
  std::optional<double> mse_open;
  std::optional<double> mse_closed;
  std::optional<double> t_vp;
  std::optional<double> t_vp_setmax;
  std::optional<double> esp_gap;
  std::optional<double> ipc_total;
  std::vector<std::optional<double>> ipc_degree =
      std::vector<std::optional<double>>(kMaxIpcDegree);
  bool diverged = false;
  double wall_time = 0.0;  // seconds; excluded from equality

  friend bool operator==(const ResultRow& a, const ResultRow& b);
};

struct AggregateRow {
  ConfigKind kind = ConfigKind::RA;
  std::optional<double> p;
  std::string metric;
  double median = 0.0;
  double mad = 0.0;
  std::size_t n = 0;

  friend bool operator==(const AggregateRow&, const AggregateRow&) = default;
};

struct ResultsTable {
  std::vector<ResultRow> rows;
  std::vector<AggregateRow> aggregates;

  /// Median/MAD per (kind, p, metric) over the rows that carry the metric.
  void recompute_aggregates();
  const AggregateRow* find(ConfigKind kind, std::optional<double> p,
                           const std::string& metric) const;

  friend bool operator==(const ResultsTable&, const ResultsTable&) = default;
};

/// Metric names in aggregate rows, in output order.
const std::vector<std::string>& metric_names();

/// Runs `fn(i)` for i in [0, n) on `threads` workers. Exceptions from a task
/// are rethrown after all workers finish.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn);

/// Topology, input matrix and ground truth of one member, then open- and
/// closed-loop scores.
ResultRow run_member(const ExperimentConfig& cfg, ConfigKind kind,
                     std::optional<double> p, int member);

/// Total and per-degree IPC of one member.
ResultRow run_ipc_member(const ExperimentConfig& cfg, ConfigKind kind,
                         std::optional<double> p, int member);

/// (kind, p) pairs visited by the benchmark: random kinds once, WS kinds at
/// every grid value when sweeping and at ws_default_p otherwise.
std::vector<std::pair<ConfigKind, std::optional<double>>> benchmark_cells(
    const ExperimentConfig& cfg);

ResultsTable run_benchmark(const ExperimentConfig& cfg);
ResultsTable run_ipc_suite(const ExperimentConfig& cfg);

/// Appends the rows of `extra` and recomputes aggregates.
void merge_into(ResultsTable& table, const ResultsTable& extra);

/// CSV writes rows to `path` and aggregates to `<stem>_aggregates.csv` next
/// to it. JSON writes rows, aggregates and the resolved config to `path`.
void emit_results(const ResultsTable& table, const ExperimentConfig& cfg,
                  const std::filesystem::path& path, OutputFormat format);

std::filesystem::path aggregates_path(const std::filesystem::path& rows_path);

void write_rows_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_aggregates_csv(std::ostream& out,
                          const std::vector<AggregateRow>& aggregates);
std::vector<ResultRow> read_rows_csv(std::istream& in);
std::vector<AggregateRow> read_aggregates_csv(std::istream& in);
/// Reads a table written by emit_results in CSV format.
ResultsTable read_results_csv(const std::filesystem::path& path);
ResultsTable read_results_json(const std::filesystem::path& path);

/// Full-precision decimal rendering; infinities as `inf` / `-inf`.
std::string format_double(double v);

}  // namespace rcnet
