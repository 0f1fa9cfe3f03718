// mrsav: long-time statistics experiments for the mean-reverting SAV schemes.
//
// Exit codes: 0 success, 1 usage or config error, 2 invariant failure, 3 I/O error.
// The default output directory is $MRSAV_OUTPUT_ROOT, else ./mrsav-out.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mrsav/experiments/commands.hpp"
#include "mrsav/simd/kernels.hpp"

using namespace mrsav;
using namespace mrsav::experiments;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInvariant = 2, kIo = 3 };

struct Globals {
  std::string config;
  int jobs = 1;
  std::string output;
  std::optional<std::uint64_t> seed;
  double checkpoint_interval = 0.0;
  std::string resume;
  std::optional<std::uint64_t> halt_at_step;
  std::vector<std::string> sets;
  bool quiet = false;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : "-"; }

void print_table(const Table& t) {
  std::printf("%-10s %-14s %-9s %-14s %-9s\n", t.param_name.c_str(), "js", "order_js", "tv", "order_tv");
  for (const auto& r : t.rows)
    std::printf("%-10s %-14.6e %-9s %-14.6e %-9s\n", num(r.param).c_str(), r.js, opt(r.order_js).c_str(),
                r.tv, opt(r.order_tv).c_str());
}

int dispatch(const std::string& cmd, const ExperimentConfig& cfg, const CommandOptions& opts) {
  if (cmd == "run") {
    const RunArtifacts a = cmd_run(cfg, opts);
    if (a.halted) {
      std::printf("halted at step %llu of %llu; checkpoint %s\n", static_cast<unsigned long long>(a.steps),
                  static_cast<unsigned long long>(a.target_steps), a.checkpoint_path.string().c_str());
      return kOk;
    }
    std::printf("steps %llu  mean %.10g  variance %.10g  max|q-1| tail %.3e  min B %.17g  %.3g s\n",
                static_cast<unsigned long long>(a.steps), a.moments.mean(), a.moments.variance(),
                a.max_q_drift_tail, a.min_b_factor, a.wall_seconds);
    return kOk;
  }
  if (cmd == "make-reference") {
    const ReferenceArtifacts a = cmd_make_reference(cfg, opts);
    std::printf("%s\n", a.prob_path.string().c_str());
    return kOk;
  }
  if (cmd == "table-terminal-time") return print_table(cmd_table_terminal_time(cfg, opts)), kOk;
  if (cmd == "table-bins") return print_table(cmd_table_bins(cfg, opts)), kOk;
  if (cmd == "table-dt") return print_table(cmd_table_dt(cfg, opts)), kOk;
  if (cmd == "table-initial-data") return print_table(cmd_table_initial_data(cfg, opts)), kOk;
  if (cmd == "compare-orders") {
    const ComparisonReport r = cmd_compare_orders(cfg, opts);
    std::printf("%-6s %-14s %-14s %-14s %-14s\n", "scheme", "mean_entry_T", "var_entry_T", "mean", "variance");
    for (const auto& s : r.schemes)
      std::printf("%-6s %-14s %-14s %-14.8g %-14.8g\n", s.scheme.c_str(), opt(s.mean_entry_T).c_str(),
                  opt(s.variance_entry_T).c_str(), s.final_mean, s.final_variance);
    return kOk;
  }
  if (cmd == "check-invariants") {
    const InvariantReport r = cmd_check_invariants(cfg, opts);
    for (const auto& x : r.results) {
      nlohmann::json j{{"invariant", x.name}, {"pass", x.pass}, {"value", x.value}};
      j["threshold"] = x.threshold ? nlohmann::json(*x.threshold) : nlohmann::json();
      if (!x.detail.empty()) j["detail"] = x.detail;
      std::cout << j.dump() << "\n";
    }
    std::cout << nlohmann::json{{"all_pass", r.all_pass()}}.dump() << std::endl;
    return r.all_pass() ? kOk : kInvariant;
  }
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-reverting SAV integrators and long-time statistics on Lorenz 96", "mrsav"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mrsav 0.1.0");

  Globals g;
  app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--jobs", g.jobs, "parallel runs within a table command")->check(CLI::PositiveNumber);
  app.add_option("--output", g.output, "output directory (default $MRSAV_OUTPUT_ROOT or ./mrsav-out)");
  app.add_option("--seed", g.seed, "RNG seed for initial data");
  app.add_option("--checkpoint-interval", g.checkpoint_interval, "seconds between checkpoints of `run`")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--resume", g.resume, "resume `run` from a checkpoint")->check(CLI::ExistingFile);
  app.add_option("--halt-at-step", g.halt_at_step, "stop `run` after this many steps, leaving a checkpoint");
  app.add_option("--set", g.sets, "override a config value, section.key=value (repeatable)");
  app.add_flag("-q,--quiet", g.quiet, "no progress log on stderr");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"run", "one trajectory: histogram, moments, diagnostics"},
      {"make-reference", "long reference run, stored under a content-addressed name"},
      {"table-terminal-time", "distance to the reference versus terminal time T"},
      {"table-bins", "distance versus histogram bin count"},
      {"table-dt", "distance versus time step"},
      {"table-initial-data", "distance between runs from perturbed initial data"},
      {"compare-orders", "entry times of first- and second-order schemes"},
      {"check-invariants", "model, solver, energy and auxiliary-variable checks"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(g.config);
    for (const auto& s : g.sets) cfg.set(s);
    if (g.seed) cfg.run.seed = *g.seed;
    cfg.validate();

    CommandOptions opts;
    opts.output_dir = resolve_output_dir(cfg, g.output);
    opts.jobs = g.jobs;
    opts.checkpoint_interval = g.checkpoint_interval;
    if (!g.resume.empty()) opts.resume = g.resume;
    opts.halt_at_step = g.halt_at_step;
    opts.log = g.quiet ? nullptr : &std::cerr;
    if (!g.quiet) std::cerr << "mrsav " << cmd << " [" << simd::active().name << "] -> " << opts.output_dir.string() << "\n";
    return dispatch(cmd, cfg, opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const MissingReference& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InvariantFailure& e) {
    std::cerr << "invariant failure: " << e.what() << "\n";
    return kInvariant;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kInvariant;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  }
}
