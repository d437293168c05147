#include "rcnet/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "rcnet/errors.hpp"

namespace rcnet {

// ---------------------------------------------------------------------------
// Seeds

std::uint64_t derive_seed(std::uint64_t base_seed, std::optional<ConfigKind> kind,
                          std::optional<double> p, std::uint64_t member,
                          SeedRole role) {
  // Absent fields hash to values no present field can take.
  const std::uint64_t kind_word =
      kind ? static_cast<std::uint64_t>(*kind) + 1 : 0xffffULL;
  const std::uint64_t p_word =
      p ? std::bit_cast<std::uint64_t>(*p) : 0x7ff8dead0000beefULL;
  std::uint64_t h = mix64(base_seed);
  h = mix64(h ^ mix64(kind_word + 0x100));
  h = mix64(h ^ mix64(p_word));
  h = mix64(h ^ mix64(member + 0x10000));
  h = mix64(h ^ mix64(static_cast<std::uint64_t>(role) + 0x1000000));
  return h;
}

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
  if (ensemble_size < 1 || ipc_ensemble_size < 1)
    throw ParameterError("ensemble sizes must be at least 1");
  if (kinds.empty()) throw ParameterError("no topology kinds selected");
  for (double p : ws_p_grid)
    if (!(p >= 0.0 && p <= 1.0))
      throw ParameterError("rewiring probabilities must lie in [0, 1]");
  if (!(ws_default_p >= 0.0 && ws_default_p <= 1.0))
    throw ParameterError("rewiring probabilities must lie in [0, 1]");
  if (threads < 1) throw ParameterError("thread count must be at least 1");
  if (!(lambda1 > 0.0) || !(nmse_threshold > 0.0))
    throw ParameterError("lambda1 and the NMSE threshold must be positive");
  reservoir.validate();
  mackey_glass.validate();
  ipc.validate();
}

void apply_desk_scale(ExperimentConfig& cfg) {
  // Density 0.008 leaves about one edge per node at N_r = 128, too sparse for
  // a ring lattice; keep the mean degree of the full-size reservoir instead.
  cfg.reservoir.density *= static_cast<double>(cfg.reservoir.n_r) / 128.0;
  cfg.reservoir.n_r = 128;
  const IpcSchedule desk = IpcSchedule::desk();
  cfg.ipc.pairs = desk.pairs;
  cfg.ipc.n_inputs = desk.n_inputs;
  cfg.ensemble_size = 10;
  cfg.ipc_ensemble_size = 10;
}

namespace {

std::string joined(const std::vector<std::string>& inputs) {
  std::string s;
  for (const std::string& part : inputs) {
    if (!part.empty() && part.front() == '#') break;  // trailing comment
    if (!s.empty()) s += ',';
    s += part;
  }
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur.erase(0, cur.find_first_not_of(" \t"));
    cur.erase(cur.find_last_not_of(" \t") + 1);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ParameterError("config key '" + key + "' expects a number, got '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d))
    throw ParameterError("config key '" + key + "' expects an integer, got '" + v + "'");
  return static_cast<long long>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ParameterError("config key '" + key + "' expects a boolean, got '" + v + "'");
}

std::vector<ScheduleEntry> parse_schedule(const std::string& key, const std::string& v) {
  std::vector<ScheduleEntry> out;
  for (const std::string& pair : split(v, ',')) {
    const auto colon = pair.find(':');
    if (colon == std::string::npos)
      throw ParameterError("config key '" + key + "' expects d:J pairs");
    out.push_back({static_cast<int>(to_int(key, pair.substr(0, colon))),
                   static_cast<int>(to_int(key, pair.substr(colon + 1)))});
  }
  return out;
}

void apply_key(ExperimentConfig& cfg, const std::string& section,
               const std::string& name, const std::string& v) {
  const std::string key = section.empty() ? name : section + "." + name;
  ReservoirConfig& r = cfg.reservoir;
  MackeyGlassParams& mg = cfg.mackey_glass;
  IpcSchedule& ipc = cfg.ipc;
  if (section.empty()) {
    if (name == "base_seed") cfg.base_seed = std::stoull(v);
    else if (name == "ensemble_size") cfg.ensemble_size = static_cast<int>(to_int(key, v));
    else if (name == "ipc_ensemble_size") cfg.ipc_ensemble_size = static_cast<int>(to_int(key, v));
    else if (name == "threads") cfg.threads = static_cast<int>(to_int(key, v));
    else if (name == "shared_series") cfg.shared_series = to_bool(key, v);
    else if (name == "sweep_p") cfg.sweep_p = to_bool(key, v);
    else if (name == "ws_default_p") cfg.ws_default_p = to_double(key, v);
    else if (name == "lambda1") cfg.lambda1 = to_double(key, v);
    else if (name == "nmse_threshold") cfg.nmse_threshold = to_double(key, v);
    else if (name == "kinds") {
      cfg.kinds.clear();
      for (const std::string& k : split(v, ',')) cfg.kinds.push_back(parse_config_kind(k));
    } else if (name == "ws_p_grid") {
      cfg.ws_p_grid.clear();
      for (const std::string& p : split(v, ',')) cfg.ws_p_grid.push_back(to_double(key, p));
    } else throw ParameterError("unknown config key '" + key + "'");
  } else if (section == "reservoir") {
    if (name == "n_r") r.n_r = static_cast<int>(to_int(key, v));
    else if (name == "epsilon") r.epsilon = to_double(key, v);
    else if (name == "rho_opt") r.rho_opt = to_double(key, v);
    else if (name == "gamma") r.gamma = to_double(key, v);
    else if (name == "n0") r.n0 = static_cast<int>(to_int(key, v));
    else if (name == "n1") r.n1 = static_cast<int>(to_int(key, v));
    else if (name == "n2") r.n2 = static_cast<int>(to_int(key, v));
    else if (name == "input_scale") r.input_scale = to_double(key, v);
    else if (name == "density") r.density = to_double(key, v);
    else if (name == "dense_products") r.dense_products = to_bool(key, v);
    else throw ParameterError("unknown config key '" + key + "'");
  } else if (section == "mackey_glass") {
    if (name == "a") mg.a = to_double(key, v);
    else if (name == "b") mg.b = to_double(key, v);
    else if (name == "q") mg.q = static_cast<int>(to_int(key, v));
    else if (name == "tau") mg.tau = to_double(key, v);
    else if (name == "dt") mg.dt = to_double(key, v);
    else if (name == "transient_steps") mg.transient_steps = static_cast<long>(to_int(key, v));
    else if (name == "target_step") mg.target_step = to_double(key, v);
    else if (name == "history_lo") mg.history_lo = to_double(key, v);
    else if (name == "history_hi") mg.history_hi = to_double(key, v);
    else throw ParameterError("unknown config key '" + key + "'");
  } else if (section == "ipc") {
    if (name == "schedule") ipc.pairs = parse_schedule(key, v);
    else if (name == "n_inputs") ipc.n_inputs = static_cast<std::size_t>(to_int(key, v));
    else if (name == "threshold") ipc.threshold = to_double(key, v);
    else if (name == "threshold_mode") {
      if (v == "fixed") ipc.threshold_mode = ThresholdMode::Fixed;
      else if (v == "surrogate") ipc.threshold_mode = ThresholdMode::Surrogate;
      else throw ParameterError("config key '" + key + "' expects fixed|surrogate");
    } else if (name == "washout") ipc.washout = static_cast<int>(to_int(key, v));
    else if (name == "gamma") ipc.gamma = to_double(key, v);
    else if (name == "streaming") ipc.streaming = to_bool(key, v);
    else if (name == "memory_budget_mb")
      ipc.memory_budget_bytes = static_cast<std::size_t>(to_int(key, v)) << 20;
    else if (name == "batch_size") ipc.batch_size = static_cast<int>(to_int(key, v));
    else if (name == "block_rows") ipc.block_rows = static_cast<int>(to_int(key, v));
    else throw ParameterError("unknown config key '" + key + "'");
  } else {
    throw ParameterError("unknown config section '" + section + "'");
  }
}

}  // namespace

void load_config(std::istream& in, ExperimentConfig& cfg) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::Error& e) {
    throw ParameterError(std::string("malformed config: ") + e.what());
  }
  for (const CLI::ConfigItem& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    if (item.parents.size() > 1)
      throw ParameterError("config sections nest at most one level: " + item.fullname());
    const std::string section = item.parents.empty() ? "" : item.parents.front();
    std::string value = joined(item.inputs);
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    apply_key(cfg, section, item.name, value);
  }
}

void load_config(const std::filesystem::path& path, ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  load_config(in, cfg);
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  std::vector<std::string> kinds;
  for (ConfigKind k : cfg.kinds) kinds.emplace_back(to_string(k));
  j["kinds"] = kinds;
  j["ws_p_grid"] = cfg.ws_p_grid;
  j["ws_default_p"] = cfg.ws_default_p;
  j["sweep_p"] = cfg.sweep_p;
  j["score_open"] = cfg.score_open;
  j["score_closed"] = cfg.score_closed;
  j["ensemble_size"] = cfg.ensemble_size;
  j["ipc_ensemble_size"] = cfg.ipc_ensemble_size;
  j["base_seed"] = cfg.base_seed;
  j["shared_series"] = cfg.shared_series;
  j["lambda1"] = cfg.lambda1;
  j["nmse_threshold"] = cfg.nmse_threshold;
  j["threads"] = cfg.threads;
  const ReservoirConfig& r = cfg.reservoir;
  j["reservoir"] = {{"n_r", r.n_r},         {"epsilon", r.epsilon},
                    {"rho_opt", r.rho_opt}, {"gamma", r.gamma},
                    {"n0", r.n0},           {"n1", r.n1},
                    {"n2", r.n2},           {"input_scale", r.input_scale},
                    {"density", r.density}, {"dense_products", r.dense_products}};
  const MackeyGlassParams& mg = cfg.mackey_glass;
  j["mackey_glass"] = {{"a", mg.a},
                       {"b", mg.b},
                       {"q", mg.q},
                       {"tau", mg.tau},
                       {"dt", mg.dt},
                       {"transient_steps", mg.transient_steps},
                       {"target_step", mg.target_step},
                       {"history_lo", mg.history_lo},
                       {"history_hi", mg.history_hi}};
  nlohmann::json schedule = nlohmann::json::array();
  for (const ScheduleEntry& e : cfg.ipc.pairs)
    schedule.push_back({{"degree", e.degree}, {"max_delay", e.max_delay}});
  j["ipc"] = {{"schedule", schedule},
              {"n_inputs", cfg.ipc.n_inputs},
              {"threshold", cfg.ipc.threshold},
              {"threshold_mode",
               cfg.ipc.threshold_mode == ThresholdMode::Fixed ? "fixed" : "surrogate"},
              {"washout", cfg.ipc.washout},
              {"gamma", cfg.ipc.gamma},
              {"streaming", cfg.ipc.streaming}};
  return j;
}

// ---------------------------------------------------------------------------
// Tables

bool operator==(const ResultRow& a, const ResultRow& b) {
  return a.kind == b.kind && a.p == b.p && a.member == b.member &&
         a.seed == b.seed && a.mse_open == b.mse_open &&
         a.mse_closed == b.mse_closed && a.t_vp == b.t_vp &&
         a.t_vp_setmax == b.t_vp_setmax && a.esp_gap == b.esp_gap &&
         a.ipc_total == b.ipc_total && a.ipc_degree == b.ipc_degree &&
         a.diverged == b.diverged;
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n{"mse_open", "mse_closed", "t_vp", "t_vp_setmax",
                               "esp_gap", "ipc_total"};
    for (int d = 1; d <= kMaxIpcDegree; ++d) n.push_back("ipc_d" + std::to_string(d));
    return n;
  }();
  return names;
}

namespace {

std::optional<double> metric_of(const ResultRow& r, std::size_t index) {
  switch (index) {
    case 0: return r.mse_open;
    case 1: return r.mse_closed;
    case 2: return r.t_vp;
    case 3: return r.t_vp_setmax;
    case 4: return r.esp_gap;
    case 5: return r.ipc_total;
    default: return r.ipc_degree[index - 6];
  }
}

// Grouping key; absent p sorts first.
struct CellKey {
  ConfigKind kind;
  std::optional<double> p;
  friend bool operator<(const CellKey& a, const CellKey& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.p < b.p;
  }
};

}  // namespace

void ResultsTable::recompute_aggregates() {
  aggregates.clear();
  std::map<CellKey, std::vector<const ResultRow*>> cells;
  for (const ResultRow& r : rows) cells[{r.kind, r.p}].push_back(&r);
  const auto& names = metric_names();
  for (const auto& [key, members] : cells) {
    for (std::size_t m = 0; m < names.size(); ++m) {
      std::vector<double> xs;
      for (const ResultRow* r : members)
        if (const auto v = metric_of(*r, m)) xs.push_back(*v);
      if (xs.empty()) continue;
      const EnsembleStat s = median_mad(xs);
      aggregates.push_back({key.kind, key.p, names[m], s.median, s.mad, s.n_samples});
    }
  }
}

const AggregateRow* ResultsTable::find(ConfigKind kind, std::optional<double> p,
                                       const std::string& metric) const {
  for (const AggregateRow& a : aggregates)
    if (a.kind == kind && a.p == p && a.metric == metric) return &a;
  return nullptr;
}

void merge_into(ResultsTable& table, const ResultsTable& extra) {
  table.rows.insert(table.rows.end(), extra.rows.begin(), extra.rows.end());
  table.recompute_aggregates();
}

// ---------------------------------------------------------------------------
// Execution

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1 || n <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
}

std::vector<std::pair<ConfigKind, std::optional<double>>> benchmark_cells(
    const ExperimentConfig& cfg) {
  std::vector<std::pair<ConfigKind, std::optional<double>>> cells;
  for (ConfigKind kind : cfg.kinds) {
    if (!uses_rewiring(kind)) {
      cells.emplace_back(kind, std::nullopt);
    } else if (cfg.sweep_p) {
      for (double p : cfg.ws_p_grid) cells.emplace_back(kind, p);
    } else {
      cells.emplace_back(kind, cfg.ws_default_p);
    }
  }
  return cells;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ReservoirTopology member_topology(const ExperimentConfig& cfg, ConfigKind kind,
                                  std::optional<double> p, int member) {
  TopologyRequest req;
  req.kind = kind;
  req.n = cfg.reservoir.n_r;
  req.density = cfg.reservoir.density;
  req.rewire_p = p.value_or(cfg.ws_default_p);
  req.rho_target = cfg.reservoir.rho_opt;
  const auto m = static_cast<std::uint64_t>(member);
  return make_topology(req,
                       derive_seed(cfg.base_seed, kind, p, m, SeedRole::Connectivity),
                       derive_seed(cfg.base_seed, kind, p, m, SeedRole::Weights));
}

InputMatrix member_input(const ExperimentConfig& cfg, ConfigKind kind,
                         std::optional<double> p, int member) {
  Rng rng(derive_seed(cfg.base_seed, kind, p, static_cast<std::uint64_t>(member),
                      SeedRole::Input));
  return init_input_matrix(cfg.reservoir.n_r, 1, cfg.reservoir.input_scale, rng);
}

// Ground truth depends only on the member index, so all kinds of one member
// are scored against the same record.
TimeSeries member_series(const ExperimentConfig& cfg, int member) {
  const std::uint64_t m = cfg.shared_series ? 0 : static_cast<std::uint64_t>(member);
  Rng rng(derive_seed(cfg.base_seed, std::nullopt, std::nullopt, m, SeedRole::Series));
  const ReservoirConfig& r = cfg.reservoir;
  const auto length = static_cast<std::size_t>(r.n0 + r.n1 + r.n2 + 1);
  return rescale(generate_mackey_glass(cfg.mackey_glass, length, rng)).series;
}

}  // namespace

ResultRow run_member(const ExperimentConfig& cfg, ConfigKind kind,
                     std::optional<double> p, int member) {
  const auto started = std::chrono::steady_clock::now();
  ResultRow row;
  row.kind = kind;
  row.p = p;
  row.member = member;
  row.seed = derive_seed(cfg.base_seed, kind, p, static_cast<std::uint64_t>(member),
                         SeedRole::Connectivity);
  const ReservoirConfig& rc = cfg.reservoir;

  try {
    const ReservoirTopology topology = member_topology(cfg, kind, p, member);
    const EchoStateNetwork esn(topology, member_input(cfg, kind, p, member), rc.epsilon,
                               rc.dense_products);
    const TimeSeries truth = member_series(cfg, member);
    const std::span<const double> drive(truth.values);

    Rng probe(derive_seed(cfg.base_seed, kind, p, static_cast<std::uint64_t>(member),
                          SeedRole::EchoProbe));
    ReservoirState other(esn.size());
    for (Eigen::Index i = 0; i < other.size(); ++i) other(i) = uniform(probe, -1.0, 1.0);
    row.esp_gap = echo_state_gap(esn, drive, rc.n0, ReservoirState::Zero(esn.size()), other);

    const StateCollection train = collect_states(esn, drive, rc);
    const TrainedReadout readout = train_readout(train.states, train.targets, rc.gamma);
    const std::size_t start = static_cast<std::size_t>(rc.n0 + rc.n1);
    const auto n2 = static_cast<std::size_t>(rc.n2);
    const std::span<const double> window = drive.subspan(start + 1, n2);

    if (cfg.score_open) {
      const Eigen::VectorXd pred =
          predict_open_loop(readout, esn, train.final_state, drive, start, rc.n2);
      row.mse_open = mse({pred.data(), n2}, window);
      if (!std::isfinite(*row.mse_open)) {
        row.mse_open = kInf;
        row.diverged = true;
      }
    }

    if (cfg.score_closed) {
      const std::size_t scored = std::max<std::size_t>(1, n2 / 4);
      try {
        const Eigen::VectorXd pred = predict_closed_loop(
            readout, esn, train.final_state, drive[start], rc.n2);
        const std::span<const double> pspan(pred.data(), n2);
        row.mse_closed = mse(pspan.first(scored), window.first(scored));
        const std::vector<double> nmse = nmse_series(pspan, window, variance(window));
        const double dt = cfg.mackey_glass.target_step;
        row.t_vp = valid_prediction_time(nmse, cfg.lambda1, dt, cfg.nmse_threshold);
        row.t_vp_setmax =
            valid_prediction_time_setmax(nmse, cfg.lambda1, dt, cfg.nmse_threshold);
        if (!std::isfinite(*row.mse_closed)) {
          row.mse_closed = kInf;
          row.diverged = true;
        }
      } catch (const DivergenceError&) {
        row.mse_closed = kInf;
        row.t_vp = 0.0;
        row.t_vp_setmax = 0.0;
        row.diverged = true;
      }
    }
  } catch (const IoError&) {
    throw;
  } catch (const DivergenceError&) {
    row.diverged = true;
    if (cfg.score_open) row.mse_open = kInf;
    if (cfg.score_closed) {
      row.mse_closed = kInf;
      row.t_vp = 0.0;
      row.t_vp_setmax = 0.0;
    }
  } catch (const SolverError&) {
    row.diverged = true;
    if (cfg.score_open) row.mse_open = kInf;
    if (cfg.score_closed) {
      row.mse_closed = kInf;
      row.t_vp = 0.0;
      row.t_vp_setmax = 0.0;
    }
  }
  row.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return row;
}

ResultRow run_ipc_member(const ExperimentConfig& cfg, ConfigKind kind,
                         std::optional<double> p, int member) {
  const auto started = std::chrono::steady_clock::now();
  ResultRow row;
  row.kind = kind;
  row.p = p;
  row.member = member;
  row.seed = derive_seed(cfg.base_seed, kind, p, static_cast<std::uint64_t>(member),
                         SeedRole::Connectivity);
  const ReservoirTopology topology = member_topology(cfg, kind, p, member);
  const EchoStateNetwork esn(topology, member_input(cfg, kind, p, member),
                             cfg.reservoir.epsilon, cfg.reservoir.dense_products);
  Rng rng(derive_seed(cfg.base_seed, kind, p, static_cast<std::uint64_t>(member),
                      SeedRole::IpcInput));
  const CapacityProfile profile = compute_ipc(esn, cfg.ipc, rng);
  row.ipc_total = profile.total;
  for (const auto& [degree, value] : profile.per_degree)
    if (degree >= 1 && degree <= kMaxIpcDegree)
      row.ipc_degree[static_cast<std::size_t>(degree - 1)] = value;
  row.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return row;
}

namespace {

template <class RunFn>
ResultsTable run_grid(const ExperimentConfig& cfg,
                      const std::vector<std::pair<ConfigKind, std::optional<double>>>& cells,
                      int members, RunFn run) {
  const std::size_t total = cells.size() * static_cast<std::size_t>(members);
  ResultsTable table;
  table.rows.resize(total);
  // Each task writes only its own slot, so the row order is fixed by task
  // identity and independent of completion order.
  parallel_for(total, cfg.threads, [&](std::size_t i) {
    const auto& [kind, p] = cells[i / static_cast<std::size_t>(members)];
    const int member = static_cast<int>(i % static_cast<std::size_t>(members));
    table.rows[i] = run(cfg, kind, p, member);
  });
  table.recompute_aggregates();
  return table;
}

}  // namespace

ResultsTable run_benchmark(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_grid(cfg, benchmark_cells(cfg), cfg.ensemble_size, run_member);
}

ResultsTable run_ipc_suite(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_grid(cfg, benchmark_cells(cfg), cfg.ipc_ensemble_size, run_ipc_member);
}

// ---------------------------------------------------------------------------
// Serialization

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

const char* kRowHeader =
    "kind,p,member,seed,mse_open,mse_closed,t_vp,t_vp_setmax,esp_gap,ipc_total,"
    "ipc_d1,ipc_d2,ipc_d3,ipc_d4,ipc_d5,diverged,wall_time";
const char* kAggregateHeader = "kind,p,metric,median,mad,n";

std::string cell(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

std::optional<double> parse_cell(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw IoError("malformed numeric cell '" + s + "'");
  }
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

void expect_header(std::istream& in, const char* header) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("missing CSV header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw IoError("unexpected CSV header '" + line + "'");
}

nlohmann::json json_number(const std::optional<double>& v) {
  if (!v) return nullptr;
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  return *v;
}

std::optional<double> from_json_number(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  if (j.is_string()) return parse_cell(j.get<std::string>());
  return j.get<double>();
}

}  // namespace

void write_rows_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kRowHeader << '\n';
  for (const ResultRow& r : rows) {
    out << to_string(r.kind) << ',' << cell(r.p) << ',' << r.member << ',' << r.seed
        << ',' << cell(r.mse_open) << ',' << cell(r.mse_closed) << ',' << cell(r.t_vp)
        << ',' << cell(r.t_vp_setmax) << ',' << cell(r.esp_gap) << ','
        << cell(r.ipc_total);
    for (const auto& d : r.ipc_degree) out << ',' << cell(d);
    out << ',' << (r.diverged ? 1 : 0) << ',' << format_double(r.wall_time) << '\n';
  }
}

void write_aggregates_csv(std::ostream& out,
                          const std::vector<AggregateRow>& aggregates) {
  out << kAggregateHeader << '\n';
  for (const AggregateRow& a : aggregates)
    out << to_string(a.kind) << ',' << cell(a.p) << ',' << a.metric << ','
        << format_double(a.median) << ',' << format_double(a.mad) << ',' << a.n << '\n';
}

std::vector<ResultRow> read_rows_csv(std::istream& in) {
  expect_header(in, kRowHeader);
  std::vector<ResultRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = csv_fields(line);
    if (f.size() != 17) throw IoError("row has " + std::to_string(f.size()) + " fields");
    ResultRow r;
    r.kind = parse_config_kind(f[0]);
    r.p = parse_cell(f[1]);
    r.member = std::stoi(f[2]);
    r.seed = std::stoull(f[3]);
    r.mse_open = parse_cell(f[4]);
    r.mse_closed = parse_cell(f[5]);
    r.t_vp = parse_cell(f[6]);
    r.t_vp_setmax = parse_cell(f[7]);
    r.esp_gap = parse_cell(f[8]);
    r.ipc_total = parse_cell(f[9]);
    for (int d = 0; d < kMaxIpcDegree; ++d)
      r.ipc_degree[static_cast<std::size_t>(d)] = parse_cell(f[10 + static_cast<std::size_t>(d)]);
    r.diverged = f[15] == "1";
    r.wall_time = std::stod(f[16]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<AggregateRow> read_aggregates_csv(std::istream& in) {
  expect_header(in, kAggregateHeader);
  std::vector<AggregateRow> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = csv_fields(line);
    if (f.size() != 6) throw IoError("aggregate row has " + std::to_string(f.size()) + " fields");
    out.push_back({parse_config_kind(f[0]), parse_cell(f[1]), f[2], std::stod(f[3]),
                   std::stod(f[4]), static_cast<std::size_t>(std::stoull(f[5]))});
  }
  return out;
}

std::filesystem::path aggregates_path(const std::filesystem::path& rows_path) {
  std::filesystem::path p = rows_path;
  p.replace_filename(rows_path.stem().string() + "_aggregates.csv");
  return p;
}

void emit_results(const ResultsTable& table, const ExperimentConfig& cfg,
                  const std::filesystem::path& path, OutputFormat format) {
  if (format == OutputFormat::Csv) {
    std::ofstream rows(path);
    if (!rows) throw IoError("cannot write " + path.string());
    write_rows_csv(rows, table.rows);
    const auto agg_path = aggregates_path(path);
    std::ofstream agg(agg_path);
    if (!agg) throw IoError("cannot write " + agg_path.string());
    write_aggregates_csv(agg, table.aggregates);
    if (!rows || !agg) throw IoError("write failed for " + path.string());
    return;
  }

  nlohmann::json j;
  j["config"] = to_json(cfg);
  j["rows"] = nlohmann::json::array();
  for (const ResultRow& r : table.rows) {
    nlohmann::json degrees = nlohmann::json::array();
    for (const auto& d : r.ipc_degree) degrees.push_back(json_number(d));
    j["rows"].push_back({{"kind", to_string(r.kind)},
                         {"p", json_number(r.p)},
                         {"member", r.member},
                         {"seed", r.seed},
                         {"mse_open", json_number(r.mse_open)},
                         {"mse_closed", json_number(r.mse_closed)},
                         {"t_vp", json_number(r.t_vp)},
                         {"t_vp_setmax", json_number(r.t_vp_setmax)},
                         {"esp_gap", json_number(r.esp_gap)},
                         {"ipc_total", json_number(r.ipc_total)},
                         {"ipc_degree", degrees},
                         {"diverged", r.diverged},
                         {"wall_time", r.wall_time}});
  }
  j["aggregates"] = nlohmann::json::array();
  for (const AggregateRow& a : table.aggregates)
    j["aggregates"].push_back({{"kind", to_string(a.kind)},
                               {"p", json_number(a.p)},
                               {"metric", a.metric},
                               {"median", json_number(a.median)},
                               {"mad", json_number(a.mad)},
                               {"n", a.n}});
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setw(2) << j << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

ResultsTable read_results_csv(const std::filesystem::path& path) {
  ResultsTable t;
  std::ifstream rows(path);
  if (!rows) throw IoError("cannot open " + path.string());
  t.rows = read_rows_csv(rows);
  std::ifstream agg(aggregates_path(path));
  if (!agg) throw IoError("cannot open " + aggregates_path(path).string());
  t.aggregates = read_aggregates_csv(agg);
  return t;
}

ResultsTable read_results_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
  ResultsTable t;
  for (const auto& jr : j.at("rows")) {
    ResultRow r;
    r.kind = parse_config_kind(jr.at("kind").get<std::string>());
    r.p = from_json_number(jr.at("p"));
    r.member = jr.at("member").get<int>();
    r.seed = jr.at("seed").get<std::uint64_t>();
    r.mse_open = from_json_number(jr.at("mse_open"));
    r.mse_closed = from_json_number(jr.at("mse_closed"));
    r.t_vp = from_json_number(jr.at("t_vp"));
    r.t_vp_setmax = from_json_number(jr.at("t_vp_setmax"));
    r.esp_gap = from_json_number(jr.at("esp_gap"));
    r.ipc_total = from_json_number(jr.at("ipc_total"));
    for (std::size_t d = 0; d < r.ipc_degree.size(); ++d)
      r.ipc_degree[d] = from_json_number(jr.at("ipc_degree").at(d));
    r.diverged = jr.at("diverged").get<bool>();
    r.wall_time = jr.at("wall_time").get<double>();
    t.rows.push_back(std::move(r));
  }
  for (const auto& ja : j.at("aggregates"))
    t.aggregates.push_back({parse_config_kind(ja.at("kind").get<std::string>()),
                            from_json_number(ja.at("p")), ja.at("metric").get<std::string>(),
                            *from_json_number(ja.at("median")),
                            *from_json_number(ja.at("mad")), ja.at("n").get<std::size_t>()});
  return t;
}

}  // namespace rcnet
