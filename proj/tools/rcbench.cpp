// rcbench: ensemble benchmarks of reservoir topologies on Mackey-Glass
// forecasting, plus information processing capacity.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rcnet/errors.hpp"
#include "rcnet/experiment.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> ensemble;
  std::string out;
  std::string format = "csv";
  std::optional<int> threads;
  bool desk = false;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "INI config file")->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "base seed");
  sub->add_option("--ensemble", o.ensemble, "members per (kind, p) cell")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", o.out, "output path");
  sub->add_option("--format", o.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  sub->add_flag("--desk-scale", o.desk, "N_r=128, M=1e5, d<=3, ten members");
}

rcnet::ExperimentConfig resolve(const Options& o) {
  rcnet::ExperimentConfig cfg;
  // Preset first so an explicit config file can still override it.
  if (o.desk) rcnet::apply_desk_scale(cfg);
  if (!o.config.empty()) rcnet::load_config(o.config, cfg);
  if (o.seed) cfg.base_seed = *o.seed;
  if (o.ensemble) {
    cfg.ensemble_size = *o.ensemble;
    cfg.ipc_ensemble_size = *o.ensemble;
  }
  if (o.threads) cfg.threads = *o.threads;
  cfg.format = o.format == "json" ? rcnet::OutputFormat::Json : rcnet::OutputFormat::Csv;
  cfg.output_path = o.out;
  return cfg;
}

std::filesystem::path output_for(const rcnet::ExperimentConfig& cfg, const char* stem) {
  if (!cfg.output_path.empty()) return cfg.output_path;
  return std::string(stem) + (cfg.format == rcnet::OutputFormat::Json ? ".json" : ".csv");
}

void report(const rcnet::ResultsTable& t, const std::filesystem::path& path) {
  std::size_t diverged = 0;
  for (const auto& r : t.rows) diverged += r.diverged ? 1 : 0;
  std::fprintf(stderr, "%zu rows (%zu diverged) -> %s\n", t.rows.size(), diverged,
               path.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reservoir topology benchmarks"};
  app.require_subcommand(1);
  Options o;
  auto* open = app.add_subcommand("bench-open", "open-loop MSE per kind");
  auto* closed = app.add_subcommand("bench-closed", "closed-loop MSE and T_vp per kind");
  auto* ipc = app.add_subcommand("ipc", "information processing capacity per kind");
  auto* sweep = app.add_subcommand("sweep-p", "WS rewiring-probability sweep");
  auto* all = app.add_subcommand("all", "benchmark, sweep and IPC in one table");
  for (auto* sub : {open, closed, ipc, sweep, all}) add_common(sub, o);
  CLI11_PARSE(app, argc, argv);

  try {
    rcnet::ExperimentConfig cfg = resolve(o);
    rcnet::ResultsTable table;
    const char* stem = "results";
    if (open->parsed()) {
      cfg.score_closed = false;
      stem = "bench_open";
      table = rcnet::run_benchmark(cfg);
    } else if (closed->parsed()) {
      cfg.score_open = false;
      stem = "bench_closed";
      table = rcnet::run_benchmark(cfg);
    } else if (ipc->parsed()) {
      stem = "ipc";
      table = rcnet::run_ipc_suite(cfg);
    } else if (sweep->parsed()) {
      std::vector<rcnet::ConfigKind> ws;
      for (auto k : cfg.kinds)
        if (rcnet::uses_rewiring(k)) ws.push_back(k);
      cfg.kinds = ws;
      cfg.sweep_p = true;
      cfg.score_closed = false;
      stem = "sweep_p";
      table = rcnet::run_benchmark(cfg);
    } else {
      cfg.sweep_p = true;
      table = rcnet::run_benchmark(cfg);
      rcnet::ExperimentConfig icfg = cfg;
      icfg.sweep_p = false;
      rcnet::merge_into(table, rcnet::run_ipc_suite(icfg));
    }
    const auto path = output_for(cfg, stem);
    rcnet::emit_results(table, cfg, path, cfg.format);
    report(table, path);
  } catch (const rcnet::Error& e) {
    std::fprintf(stderr, "rcbench: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "rcbench: unexpected failure: %s\n", e.what());
    return 3;
  }
  return 0;
}
