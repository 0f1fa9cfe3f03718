#include "mrsav/experiments/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <ostream>
#include <thread>

#include "mrsav/experiments/checkpoint.hpp"
#include "mrsav/experiments/trajectory.hpp"
#include "mrsav/prob_io.hpp"
#include "mrsav/rng.hpp"
#include "mrsav/simd/kernels.hpp"

namespace mrsav::experiments {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kToolVersion = "0.1.0";

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

json provenance(const ExperimentConfig& cfg) {
  return {{"tool", "mrsav"},
          {"version", kToolVersion},
          {"config_hash", hex64(cfg.hash())},
          {"config", cfg.to_json()},
          {"simd", simd::active().name},
          {"rng", Rng::kAlgorithm},
          {"sampling", "every step"}};
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void log_line(const CommandOptions& opts, const std::string& s) {
  if (opts.log) *opts.log << s << std::endl;
}

/// Runs f(0..n-1) on up to `jobs` threads; results are ordered by index.
template <class F>
auto parallel_map(int jobs, std::size_t n, F f) -> std::vector<decltype(f(std::size_t{0}))> {
  using R = decltype(f(std::size_t{0}));
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(f(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::shared_ptr<const DampedDrivenModel> shared_model(const ExperimentConfig& cfg) {
  return std::make_shared<const DampedDrivenModel>(cfg.build_model());
}

void check_tails(const StreamingHistogram& h, const ExperimentConfig& cfg, const std::string& what) {
  if (h.tail_fraction() > cfg.histogram.max_tail_fraction)
    throw InvariantFailure(what + ": " + fmt(100.0 * h.tail_fraction()) +
                           "% of samples fell outside [" + fmt(h.lo()) + ", " + fmt(h.hi()) +
                           "]; widen the histogram range");
}

/// Brings two distributions to a common resolution by coarsening the finer.
std::pair<ProbVector, ProbVector> align(const ProbVector& a, const ProbVector& b) {
  if (a.lo() != b.lo() || a.hi() != b.hi())
    throw InvalidArgument("distributions cover different ranges");
  if (a.size() == b.size()) return {a, b};
  if (a.size() > b.size()) {
    if (a.size() % b.size()) throw InvalidArgument("bin counts are not multiples of each other");
    return {coarsen(a, a.size() / b.size()), b};
  }
  if (b.size() % a.size()) throw InvalidArgument("bin counts are not multiples of each other");
  return {a, coarsen(b, b.size() / a.size())};
}

TableRow distance_row(double param, const ProbVector& p, const ProbVector& q) {
  const auto [a, b] = align(p, q);
  TableRow r;
  r.param = param;
  r.js = js_divergence(a, b);
  r.tv = tv_distance(a, b);
  return r;
}

std::string opt_csv(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

void write_table(const Table& t, const ExperimentConfig& cfg, const CommandOptions& opts) {
  if (cfg.wants_format("csv")) {
    std::string s = t.param_name + ",js,order_js,tv,order_tv\n";
    for (const auto& r : t.rows)
      s += fmt(r.param) + "," + fmt(r.js) + "," + opt_csv(r.order_js) + "," + fmt(r.tv) + "," +
           opt_csv(r.order_tv) + "\n";
    write_text(opts.output_dir / (t.name + ".csv"), s);
  }
  if (cfg.wants_format("json")) {
    json rows = json::array();
    for (const auto& r : t.rows)
      rows.push_back({{t.param_name, r.param},
                      {"js", r.js},
                      {"order_js", opt_json(r.order_js)},
                      {"tv", r.tv},
                      {"order_tv", opt_json(r.order_tv)}});
    json j = t.provenance;
    j["table"] = t.name;
    j["rows"] = rows;
    write_json(opts.output_dir / (t.name + ".json"), j);
  }
  write_json(opts.output_dir / (t.name + "_config.json"), cfg.to_json());
}

}  // namespace

void fill_orders(Table& t) {
  std::vector<std::pair<double, double>> js, tv;
  for (const auto& r : t.rows) {
    js.emplace_back(r.param, r.js);
    tv.emplace_back(r.param, r.tv);
  }
  const auto oj = observed_order(js);
  const auto ot = observed_order(tv);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    t.rows[i].order_js = i == 0 ? std::nullopt : oj[i - 1];
    t.rows[i].order_tv = i == 0 ? std::nullopt : ot[i - 1];
  }
}

// ---------------------------------------------------------------------------
// run

RunArtifacts cmd_run(const ExperimentConfig& cfg, const CommandOptions& opts) {
  cfg.validate();
  ensure_dir(opts.output_dir);
  write_json(opts.output_dir / "run_config.json", cfg.to_json());

  CoordinateRun run(shared_model(cfg), run_spec(cfg));
  Rng rng(cfg.run.seed);
  const std::uint64_t hash = cfg.hash();
  const fs::path ck_path = opts.output_dir / "checkpoint.bin";

  if (opts.resume) {
    Checkpoint ck = read_checkpoint(*opts.resume);
    if (ck.config_hash != hash)
      throw ConfigError("--resume", "checkpoint belongs to config " + hex64(ck.config_hash) +
                                        ", current config is " + hex64(hash));
    run.restore(ck);
    rng.set_state(ck.rng_state);
    log_line(opts, "resumed at step " + std::to_string(run.steps_done()));
  }

  const std::uint64_t stop =
      opts.halt_at_step ? std::min(*opts.halt_at_step, run.target_steps()) : run.target_steps();
  constexpr std::uint64_t kChunk = 1u << 16;
  auto last_ck = std::chrono::steady_clock::now();
  while (run.steps_done() < stop) {
    run.advance_to(std::min(stop, run.steps_done() + kChunk));
    if (opts.checkpoint_interval > 0.0) {
      const auto now = std::chrono::steady_clock::now();
      if (std::chrono::duration<double>(now - last_ck).count() >= opts.checkpoint_interval) {
        write_checkpoint(ck_path, run.checkpoint(hash, rng.state()));
        last_ck = now;
      }
    }
  }

  RunArtifacts a;
  a.steps = run.steps_done();
  a.target_steps = run.target_steps();
  a.halted = !run.finished();
  a.histogram = run.histogram();
  a.moments = run.moments();
  a.max_q_drift_tail = run.max_q_drift_tail();
  a.max_u_norm = run.max_u_norm();
  a.min_b_factor = run.min_b_factor();
  a.wall_seconds = run.wall_seconds();

  if (a.halted || opts.checkpoint_interval > 0.0) {
    write_checkpoint(ck_path, run.checkpoint(hash, rng.state()));
    a.checkpoint_path = ck_path;
  }
  if (a.halted) {
    log_line(opts, "halted at step " + std::to_string(a.steps) + "; resume with --resume " +
                       ck_path.string());
    return a;
  }

  check_tails(a.histogram, cfg, "run");
  const auto& h = a.histogram;
  if (cfg.wants_format("csv")) {
    const ProbVector p = h.normalize(cfg.histogram.include_tails);
    std::string s = "bin_center,count,probability\n";
    for (std::size_t i = 0; i < h.bins(); ++i)
      s += fmt(p.bin_center(i)) + "," + std::to_string(h.counts()[i]) + "," + fmt(p[i]) + "\n";
    write_text(opts.output_dir / "run_histogram.csv", s);
  }
  if (cfg.wants_format("bin"))
    write_prob_binary(opts.output_dir / "run_histogram.prob", h.normalize(cfg.histogram.include_tails));

  json j = provenance(cfg);
  j["steps"] = a.steps;
  j["T"] = cfg.run.T;
  j["dt"] = cfg.scheme.dt;
  j["wall_seconds"] = a.wall_seconds;
  j["steps_per_second"] = a.wall_seconds > 0 ? static_cast<double>(a.steps) / a.wall_seconds : 0.0;
  j["max_q_drift_tail"] = a.max_q_drift_tail;
  j["max_u_norm"] = a.max_u_norm;
  j["min_b_factor"] = a.min_b_factor;
  j["mean"] = a.moments.mean();
  j["variance"] = a.moments.variance();
  j["samples"] = a.moments.count();
  j["histogram"] = {{"bins", h.bins()}, {"lo", h.lo()}, {"hi", h.hi()}, {"under", h.under()},
                    {"over", h.over()}, {"total", h.total()}};
  write_json(opts.output_dir / "run_summary.json", j);
  log_line(opts, "run: " + std::to_string(a.steps) + " steps in " + fmt(a.wall_seconds) + " s");
  return a;
}

// ---------------------------------------------------------------------------
// references

ExperimentConfig reference_config(const ExperimentConfig& cfg) {
  ExperimentConfig r;
  r.model = cfg.model;
  r.scheme = cfg.scheme;
  r.scheme.dt = cfg.reference.dt;
  r.run = cfg.run;
  r.run.T = cfg.reference.T;
  r.run.perturbation_pct = RunConfig{}.perturbation_pct;
  r.histogram = cfg.histogram;
  r.histogram.bins = cfg.reference.bins;
  r.histogram.max_tail_fraction = HistogramConfig{}.max_tail_fraction;
  // Tables, reference and output sections stay at their defaults so the hash
  // depends only on what shapes the trajectory.
  return r;
}

fs::path reference_path(const ExperimentConfig& cfg, const fs::path& out) {
  if (!cfg.reference.path.empty()) return cfg.reference.path;
  return out / ("ref-" + hex64(reference_config(cfg).hash()) + ".prob");
}

ReferenceArtifacts cmd_make_reference(const ExperimentConfig& cfg, const CommandOptions& opts) {
  cfg.validate();
  ensure_dir(opts.output_dir);
  const ExperimentConfig rc = reference_config(cfg);
  CoordinateRun run(shared_model(rc), run_spec(rc));
  run.run_to_end();
  check_tails(run.histogram(), cfg, "reference");

  ReferenceArtifacts a;
  a.hash = rc.hash();
  a.distribution = run.histogram().normalize(cfg.histogram.include_tails);
  a.moments = run.moments();
  a.prob_path = opts.output_dir / ("ref-" + hex64(a.hash) + ".prob");
  a.meta_path = fs::path(a.prob_path).replace_extension(".json");
  write_prob_binary(a.prob_path, a.distribution);
  if (cfg.wants_format("csv"))
    write_prob_csv(fs::path(a.prob_path).replace_extension(".csv"), a.distribution);

  json j = provenance(rc);
  j["reference_hash"] = hex64(a.hash);
  j["T"] = rc.run.T;
  j["dt"] = rc.scheme.dt;
  j["bins"] = rc.histogram.bins;
  j["lo"] = rc.histogram.lo;
  j["hi"] = rc.histogram.hi;
  j["coordinate_index"] = rc.histogram.coordinate_index;
  j["samples"] = a.moments.count();
  j["mean"] = a.moments.mean();
  j["variance"] = a.moments.variance();
  j["m2"] = a.moments.m2();
  j["tail_fraction"] = run.histogram().tail_fraction();
  j["wall_seconds"] = run.wall_seconds();
  write_json(a.meta_path, j);
  log_line(opts, "reference written to " + a.prob_path.string());
  return a;
}

ReferenceArtifacts load_reference(const ExperimentConfig& cfg, const fs::path& out) {
  ReferenceArtifacts a;
  a.prob_path = reference_path(cfg, out);
  if (!fs::exists(a.prob_path))
    throw MissingReference("no reference at " + a.prob_path.string() +
                           "; build it first with `mrsav make-reference` using the same config");
  a.distribution = read_prob_binary(a.prob_path);
  a.meta_path = fs::path(a.prob_path).replace_extension(".json");
  a.hash = reference_config(cfg).hash();
  if (fs::exists(a.meta_path)) {
    const json j = read_json(a.meta_path);
    if (j.contains("samples") && j.contains("mean") && j.contains("m2"))
      a.moments = RunningMoments::restore(j["samples"].get<std::uint64_t>(), j["mean"].get<double>(),
                                          j["m2"].get<double>());
  }
  return a;
}

// ---------------------------------------------------------------------------
// tables

Table cmd_table_terminal_time(const ExperimentConfig& cfg, const CommandOptions& opts) {
  cfg.validate();
  ensure_dir(opts.output_dir);
  const ReferenceArtifacts ref = load_reference(cfg, opts.output_dir);
  auto ladder = cfg.tables.T_ladder;
  if (ladder.empty()) throw ConfigError("tables.T_ladder", "is empty");

  RunSpec spec = run_spec(cfg);
  spec.T = *std::max_element(ladder.begin(), ladder.end());
  CoordinateRun run(shared_model(cfg), spec);

  Table t{"table_terminal_time", "T", {}, provenance(cfg)};
  for (double T : ladder) {
    run.advance_to(step_count(T, spec.params.dt));
    check_tails(run.histogram(), cfg, "terminal-time run");
    const ProbVector p = run.histogram().normalize(cfg.histogram.include_tails);
    t.rows.push_back(distance_row(T, p, ref.distribution));
    log_line(opts, "T=" + fmt(T) + " js=" + fmt(t.rows.back().js) + " tv=" + fmt(t.rows.back().tv));
  }
  fill_orders(t);
  t.provenance["reference"] = ref.prob_path.string();
  t.provenance["wall_seconds"] = run.wall_seconds();
  write_table(t, cfg, opts);
  return t;
}

DistanceReport bin_resolution_distance(const ProbVector& full, const ProbVector& smoothed,
                                       std::size_t bins) {
  if (bins == 0 || full.size() % bins != 0)
    throw InvalidArgument(std::to_string(bins) + " bins do not divide the " +
                          std::to_string(full.size()) + "-bin reference");
  const std::size_t factor = full.size() / bins;
  return compare(refine(coarsen(full, factor), factor), smoothed);
}

Table cmd_table_bins(const ExperimentConfig& cfg, const CommandOptions& opts) {
  cfg.validate();
  ensure_dir(opts.output_dir);
  const ReferenceArtifacts ref = load_reference(cfg, opts.output_dir);
  const ProbVector& full = ref.distribution;
  for (auto n : cfg.tables.bin_ladder)
    if (full.size() % n != 0)
      throw ConfigError("tables.bin_ladder", std::to_string(n) + " does not divide the reference's " +
                                                  std::to_string(full.size()) + " bins");
  const ProbVector smoothed = moving_average(full, cfg.tables.moving_average_window);
  Table t{"table_bins", "N", {}, provenance(cfg)};
  for (auto n : cfg.tables.bin_ladder) {
    const DistanceReport d = bin_resolution_distance(full, smoothed, n);
    t.rows.push_back(TableRow{static_cast<double>(n), d.js, std::nullopt, d.tv, std::nullopt});
  }
  fill_orders(t);
  t.provenance["reference"] = ref.prob_path.string();
  t.provenance["moving_average_window"] = cfg.tables.moving_average_window;
  write_table(t, cfg, opts);
  return t;
}

Table cmd_table_dt(const ExperimentConfig& cfg, const CommandOptions& opts) {
  cfg.validate();
  ensure_dir(opts.output_dir);
  const auto& ladder = cfg.tables.dt_ladder;
  if (ladder.empty()) throw ConfigError("tables.dt_ladder", "is empty");
  const double ref_dt = cfg.tables.dt_reference > 0.0 ? cfg.tables.dt_reference
                                                      : *std::min_element(ladder.begin(), ladder.end());
  std::vector<double> dts = ladder;
  const bool ref_in_ladder = std::find(dts.begin(), dts.end(), ref_dt) != dts.end();
  if (!ref_in_ladder) dts.push_back(ref_dt);

  auto model = shared_model(cfg);
  const auto hists = parallel_map(opts.jobs, dts.size(), [&](std::size_t i) {
    RunSpec spec = run_spec(cfg);
    spec.params.dt = dts[i];
    spec.T = cfg.tables.dt_T;
    CoordinateRun run(model, spec);
    run.run_to_end();
    check_tails(run.histogram(), cfg, "dt=" + fmt(dts[i]) + " run");
    return run.histogram().normalize(cfg.histogram.include_tails);
  });
  const ProbVector& ref = hists.back();
  const std::size_t ref_idx = ref_in_ladder ? static_cast<std::size_t>(
                                                  std::find(dts.begin(), dts.end(), ref_dt) - dts.begin())
                                            : dts.size() - 1;
  Table t{"table_dt", "dt", {}, provenance(cfg)};
  for (std::size_t i = 0; i < ladder.size(); ++i)
    t.rows.push_back(distance_row(ladder[i], hists[i], hists[ref_idx]));
  (void)ref;
  fill_orders(t);
  t.provenance["reference_dt"] = ref_dt;
  t.provenance["T"] = cfg.tables.dt_T;
  write_table(t, cfg, opts);
  return t;
}

Table cmd_table_initial_data(const ExperimentConfig& cfg, const CommandOptions& opts) {
  cfg.validate();
  ensure_dir(opts.output_dir);
  auto ladder = cfg.tables.T_ladder;
  if (ladder.empty()) throw ConfigError("tables.T_ladder", "is empty");
  const double T_max = *std::max_element(ladder.begin(), ladder.end());
  auto model = shared_model(cfg);

  const auto snapshots = parallel_map(opts.jobs, 2, [&](std::size_t which) {
    RunSpec spec = run_spec(cfg);
    spec.u0 = initial_state(cfg, which == 1);
    spec.T = T_max;
    CoordinateRun run(model, spec);
    std::vector<ProbVector> out;
    for (double T : ladder) {
      run.advance_to(step_count(T, spec.params.dt));
      check_tails(run.histogram(), cfg, which ? "perturbed run" : "base run");
      out.push_back(run.histogram().normalize(cfg.histogram.include_tails));
    }
    return out;
  });
  Table t{"table_initial_data", "T", {}, provenance(cfg)};
  for (std::size_t i = 0; i < ladder.size(); ++i)
    t.rows.push_back(distance_row(ladder[i], snapshots[0][i], snapshots[1][i]));
  fill_orders(t);
  json u0 = initial_state(cfg, false), u1 = initial_state(cfg, true);
  t.provenance["initial_state"] = u0;
  t.provenance["perturbed_initial_state"] = u1;
  write_table(t, cfg, opts);
  return t;
}

// ---------------------------------------------------------------------------
// compare-orders

ComparisonReport cmd_compare_orders(const ExperimentConfig& cfg, const CommandOptions& opts) {
  cfg.validate();
  ensure_dir(opts.output_dir);
  if (!cfg.reference.mean || !cfg.reference.variance)
    throw MissingReference("compare-orders needs reference.mean and reference.variance");
  ComparisonReport rep;
  rep.threshold = cfg.tables.threshold;
  rep.reference_mean = *cfg.reference.mean;
  rep.reference_variance = *cfg.reference.variance;
  rep.T = cfg.tables.compare_T;
  auto model = shared_model(cfg);

  const SchemeOrder orders[2] = {SchemeOrder::BackwardEuler, SchemeOrder::Bdf2};
  rep.schemes = parallel_map(opts.jobs, 2, [&](std::size_t i) {
    RunSpec spec = run_spec(cfg);
    spec.params.order = orders[i];
    spec.T = rep.T;
    CoordinateRun run(model, spec);
    EntryTracker mean_tr(rep.reference_mean, rep.threshold);
    EntryTracker var_tr(rep.reference_variance, rep.threshold);
    run.set_sample_hook([&](double t, const RunningMoments& m) {
      mean_tr.observe(t, m.mean());
      var_tr.observe(t, m.variance());
    });
    run.run_to_end();
    SchemeComparison c;
    c.scheme = to_string(orders[i]);
    c.dt = spec.params.dt;
    c.mean_entry_T = mean_tr.entry_time();
    c.variance_entry_T = var_tr.entry_time();
    c.final_mean = run.moments().mean();
    c.final_variance = run.moments().variance();
    return c;
  });

  if (cfg.wants_format("csv")) {
    std::string s = "scheme,dt,mean_entry_T,variance_entry_T,final_mean,final_variance\n";
    for (const auto& c : rep.schemes)
      s += c.scheme + "," + fmt(c.dt) + "," + opt_csv(c.mean_entry_T) + "," + opt_csv(c.variance_entry_T) +
           "," + fmt(c.final_mean) + "," + fmt(c.final_variance) + "\n";
    write_text(opts.output_dir / "compare_orders.csv", s);
  }
  json j = provenance(cfg);
  j["threshold"] = rep.threshold;
  j["reference_mean"] = rep.reference_mean;
  j["reference_variance"] = rep.reference_variance;
  j["T"] = rep.T;
  j["criterion"] = "first T after which the relative error stays below the threshold";
  for (const auto& c : rep.schemes)
    j["schemes"].push_back({{"scheme", c.scheme},
                            {"dt", c.dt},
                            {"mean_entry_T", opt_json(c.mean_entry_T)},
                            {"variance_entry_T", opt_json(c.variance_entry_T)},
                            {"final_mean", c.final_mean},
                            {"final_variance", c.final_variance}});
  write_json(opts.output_dir / "compare_orders.json", j);
  write_json(opts.output_dir / "compare_orders_config.json", cfg.to_json());
  return rep;
}

}  // namespace mrsav::experiments
