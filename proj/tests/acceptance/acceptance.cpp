// Acceptance suite. One line per criterion:
//   [PASS] <n> <name>: <measurements> (<seconds> s, budget <seconds> s)
// Exit status is the number of failed criteria (0 when all pass).
//
//   acceptance [--work DIR] [--only 1,4,7]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mrsav/energy.hpp"
#include "mrsav/experiments/commands.hpp"
#include "mrsav/experiments/trajectory.hpp"
#include "mrsav/rng.hpp"
#include "mrsav/simd/kernels.hpp"
#include "mrsav/statistics.hpp"

using namespace mrsav;
using namespace mrsav::experiments;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

fs::path g_work = "acceptance-work";

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------

Outcome skew_symmetry() {
  double worst = 0.0;
  Rng rng(20240601);
  for (int J : {5, 8, 40}) {
    const auto m = lorenz96_model(J, -12.0);
    StateVector u(static_cast<std::size_t>(J));
    for (int s = 0; s < 10000; ++s) {
      for (auto& x : u) x = rng.uniform(-15.0, 15.0);
      const StateVector n = eval_nonlinear(m, u);
      double d = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) d += n[i] * u[i];
      const double un = norm(u);
      worst = std::max(worst, std::fabs(d) / std::max(1.0, un * un * un));
    }
  }
  return {worst <= 1e-12, fmt("max |N(u).u|/max(1,|u|^3) = %.3e over 3 x 1e4 samples (tol 1e-12)", worst)};
}

Outcome unconditional_stability() {
  const auto m = lorenz96_model(5, -12.0);
  const std::uint64_t steps = 1000000;
  bool ok = true;
  std::string detail;
  Rng rng(99);
  for (double dt : {1.0, 0.25, 1.0 / 64.0, 1.0 / 1024.0}) {
    SchemeParams p;
    p.dt = dt;
    StateVector u0(5);
    for (auto& x : u0) x = rng.uniform(-1.0, 1.0);
    const double n0 = norm(u0);
    for (auto& x : u0) x *= 1e3 / n0;
    const EnergyConstants ec = EnergyConstants::from(m, p);
    PairState s = init_pair(u0, InitMode::Refined, m, p);
    Stepper st(m, p);
    double e = discrete_energy(s, ec, dt);
    const double radius = ec.state_norm_bound(e);
    double sup_u = norm(s.u_curr);
    std::uint64_t violations = 0;
    const double grow = 1.0 + ec.beta * dt, src = ec.envelope_source(dt);
    for (std::uint64_t i = 0; i < steps; ++i) {
      st.advance(s);
      const double e2 = discrete_energy(s, ec, dt);
      // (1 + beta k) E^{n+1} <= E^n + source, with an 8-ulp allowance for rounding.
      if (grow * e2 > (e + src) * (1.0 + 8.0 * 0x1.0p-52)) ++violations;
      sup_u = std::max(sup_u, norm(s.u_curr));
      e = e2;
    }
    const bool pass = violations == 0 && sup_u < radius;
    ok = ok && pass;
    detail += fmt("dt=%g: %llu violations, sup|u|=%.4g < %.4g; ", dt, static_cast<unsigned long long>(violations),
                  sup_u, radius);
  }
  return {ok, detail + "1e6 steps each from |u0|=1e3"};
}

Outcome order_of_accuracy() {
  const auto m = lorenz96_model(5, -12.0);
  const StateVector u0{2.0, -1.0, 0.5, 3.0, -2.5};
  auto solve = [&](SchemeOrder o, InitMode mode, double dt) {
    SchemeParams p;
    p.dt = dt;
    p.order = o;
    PairState s = init_pair(u0, mode, m, p);
    Stepper st(m, p);
    const auto total = static_cast<std::uint64_t>(std::llround(1.0 / dt));
    while (s.step_index < total) st.advance(s);
    return s.u_curr;
  };
  auto slope = [&](SchemeOrder o, InitMode mode) {
    const StateVector ref = solve(o, mode, 0x1.0p-20);
    std::vector<std::pair<double, double>> e;
    for (int k = 8; k <= 12; ++k) {
      const double dt = std::ldexp(1.0, -k);
      const StateVector u = solve(o, mode, dt);
      double d = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) d += (u[i] - ref[i]) * (u[i] - ref[i]);
      e.emplace_back(dt, std::sqrt(d));
    }
    return fitted_slope(e);
  };
  const double refined = slope(SchemeOrder::Bdf2, InitMode::Refined);
  const double crude = slope(SchemeOrder::Bdf2, InitMode::Crude);
  const double be = slope(SchemeOrder::BackwardEuler, InitMode::Refined);
  const bool ok = std::fabs(refined - 2.0) <= 0.2 && crude <= 1.3 && std::fabs(be - 1.0) <= 0.2;
  return {ok, fmt("BDF2 refined %.3f (2.0 +- 0.2), BDF2 crude %.3f (<= 1.3), BE %.3f (1.0 +- 0.2)", refined, crude, be)};
}

Outcome mean_reversion() {
  const ExperimentConfig cfg;
  const auto m = cfg.build_model();
  const StateVector u0 = initial_state(cfg);
  std::vector<double> drift;
  for (int k : {8, 9, 10}) {
    SchemeParams p = cfg.scheme_params();
    p.dt = std::ldexp(1.0, -k);
    PairState s = init_pair(u0, InitMode::Refined, m, p);
    Stepper st(m, p);
    const auto burn = static_cast<std::uint64_t>(std::llround(50.0 / p.dt));
    const auto end = static_cast<std::uint64_t>(std::llround(100.0 / p.dt));
    double mx = 0.0;
    while (s.step_index < end) {
      st.advance(s);
      if (s.step_index >= burn) mx = std::max(mx, std::fabs(s.q_curr - 1.0));
    }
    drift.push_back(mx);
  }
  const double r1 = drift[0] / drift[1], r2 = drift[1] / drift[2];
  const bool ok = r1 >= 1.6 && r1 <= 2.5 && r2 >= 1.6 && r2 <= 2.5;
  return {ok, fmt("max|q-1| on [50,100]: %.3e, %.3e, %.3e; halving ratios %.2f, %.2f (band [1.6, 2.5])", drift[0],
                  drift[1], drift[2], r1, r2)};
}

Outcome b_factor() {
  const ExperimentConfig cfg;
  const auto m = cfg.build_model();
  const SchemeParams p = cfg.scheme_params();
  PairState s = init_pair(initial_state(cfg), InitMode::Refined, m, p);
  Stepper st(m, p);
  const std::uint64_t steps = step_count(1000.0, p.dt);
  double min_b = std::numeric_limits<double>::infinity();
  std::uint64_t below = 0;
  for (std::uint64_t i = 0; i < steps; ++i) {
    const double b = st.advance(s).b_factor;
    if (b < 1.0) ++below;
    min_b = std::min(min_b, b);
  }
  return {below == 0, fmt("min B^n = %.17g over %llu steps, %llu below 1", min_b,
                          static_cast<unsigned long long>(steps), static_cast<unsigned long long>(below))};
}

ProbVector random_prob(Rng& rng, std::size_t n) {
  std::vector<double> w(n);
  for (auto& x : w) x = rng.uniform01() < 0.2 ? 0.0 : rng.uniform01();
  w[0] += 0.05;
  return ProbVector::from_weights(w, 0.0, 1.0);
}

Outcome statistics_axioms() {
  Rng rng(6);
  const int cases = 1000;
  std::map<std::string, int> failures;
  const double ln2 = std::log(2.0);
  for (int c = 0; c < cases; ++c) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform01() * 300);
    const ProbVector p = random_prob(rng, n), q = random_prob(rng, n), r = random_prob(rng, n);
    const double js = js_divergence(p, q);
    if (std::fabs(js - js_divergence(q, p)) > 1e-14) ++failures["js symmetry"];
    if (!(js >= 0.0 && js <= ln2 + 1e-14)) ++failures["js range"];
    if (tv_distance(p, r) > tv_distance(p, q) + tv_distance(q, r) + 1e-15) ++failures["tv triangle"];
    const double kl = kl_divergence(p, q);
    if (std::isfinite(kl) && tv_distance(p, q) > std::sqrt(kl / 2.0) + 1e-15) ++failures["pinsker"];
    // Pinsker on pairs with guaranteed absolute continuity, so the check is never vacuous.
    const ProbVector s = ProbVector::from_weights(std::vector<double>(n, 1.0), 0.0, 1.0);
    const double kls = kl_divergence(p, s);
    if (!std::isfinite(kls) || tv_distance(p, s) > std::sqrt(kls / 2.0) + 1e-15) ++failures["pinsker"];

    const std::size_t f = 1 + static_cast<std::size_t>(rng.uniform01() * 5);
    std::vector<double> w(f * (1 + static_cast<std::size_t>(rng.uniform01() * 50)));
    for (auto& x : w) x = rng.uniform01();
    const ProbVector big = ProbVector::from_weights(w, 0.0, 1.0);
    const ProbVector small = coarsen(big, f);
    double m1 = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) m1 += big[i];
    double m2 = 0.0;
    for (std::size_t i = 0; i < small.size(); ++i) m2 += small[i];
    if (std::fabs(m1 - m2) > 1e-14) ++failures["coarsen mass"];

    StreamingHistogram all(-3, 3, 23), a(-3, 3, 23), b(-3, 3, 23), cc(-3, 3, 23);
    std::vector<double> xs(1 + static_cast<std::size_t>(rng.uniform01() * 500));
    for (auto& x : xs) x = rng.uniform(-4, 4);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      all.push(xs[i]);
      (i % 3 == 0 ? a : i % 3 == 1 ? b : cc).push(xs[i]);
    }
    StreamingHistogram left = a, right = b;
    left.merge(b);
    left.merge(cc);
    right.merge(cc);
    StreamingHistogram other = a;
    other.merge(right);
    if (!(left == all) || !(other == all)) ++failures["histogram merge"];

    RunningMoments mo;
    for (double x : xs) mo.push(x);
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double var = ss / static_cast<double>(xs.size());
    if (std::fabs(mo.mean() - mean) > 1e-10 * std::max(std::fabs(mean), 1e-3) ||
        std::fabs(mo.variance() - var) > 1e-10 * std::max(var, 1e-12))
      ++failures["moments"];
  }
  std::string detail = fmt("%d random cases per axiom", cases);
  for (const auto& [k, v] : failures) detail += fmt("; %s failed %d", k.c_str(), v);
  return {failures.empty(), detail};
}

Outcome terminal_time() {
  ExperimentConfig cfg;
  CommandOptions o;
  o.output_dir = g_work / "terminal-time";
  fs::create_directories(o.output_dir);
  if (!fs::exists(reference_path(cfg, o.output_dir))) cmd_make_reference(cfg, o);
  const Table t = cmd_table_terminal_time(cfg, o);
  double js = 0.0, tv = 0.0;
  int n = 0;
  std::string rows;
  for (const auto& r : t.rows) {
    rows += fmt("%g:%.3e/%.3e ", r.param, r.js, r.tv);
    if (!r.order_js || !r.order_tv) continue;
    js += *r.order_js;
    tv += *r.order_tv;
    ++n;
  }
  if (n == 0) return {false, "no orders"};
  js /= n;
  tv /= n;
  const bool ok = tv >= 0.35 && tv <= 0.65 && js >= 0.75 && js <= 1.25;
  return {ok, fmt("mean TV order %.3f (band [0.35, 0.65]), mean JS order %.3f (band [0.75, 1.25]); T:js/tv ", tv, js) + rows};
}

Outcome moments() {
  ExperimentConfig cfg;
  cfg.run.T = 1e5;
  auto model = std::make_shared<const DampedDrivenModel>(cfg.build_model());
  CoordinateRun run(model, run_spec(cfg));
  run.run_to_end();
  const double mean = run.moments().mean(), var = run.moments().variance();
  const double em = std::fabs(mean / -2.3079 - 1.0), ev = std::fabs(var / 22.354 - 1.0);
  return {em <= 0.05 && ev <= 0.05,
          fmt("mean %.6f (rel err %.4f vs -2.3079), variance %.5f (rel err %.4f vs 22.354), band 0.05", mean, em, var, ev)};
}

Outcome scheme_comparison() {
  ExperimentConfig cfg;
  cfg.tables.threshold = 0.01;
  CommandOptions o;
  o.output_dir = g_work / "compare-orders";
  const ComparisonReport r = cmd_compare_orders(cfg, o);
  const auto& be = r.schemes[0];
  const auto& bdf2 = r.schemes[1];
  // A scheme that never settles within the run has an entry time beyond T.
  const double inf = std::numeric_limits<double>::infinity();
  const double t_be = be.mean_entry_T.value_or(inf), t_bdf2 = bdf2.mean_entry_T.value_or(inf);
  return {std::isfinite(t_bdf2) && t_bdf2 < t_be,
          fmt("mean entry T: BDF2 %g, BE %g (run length %g; final means %.5f / %.5f)", t_bdf2, t_be, r.T,
              bdf2.final_mean, be.final_mean)};
}

Outcome determinism() {
  ExperimentConfig cfg;
  CommandOptions a, b, h;
  a.output_dir = g_work / "det-a";
  b.output_dir = g_work / "det-b";
  h.output_dir = g_work / "det-halt";
  const RunArtifacts x = cmd_run(cfg, a);
  const RunArtifacts y = cmd_run(cfg, b);
  h.halt_at_step = x.steps / 2;
  const RunArtifacts half = cmd_run(cfg, h);
  CommandOptions r = h;
  r.halt_at_step.reset();
  r.resume = half.checkpoint_path;
  const RunArtifacts z = cmd_run(cfg, r);
  auto same = [](const RunArtifacts& p, const RunArtifacts& q) {
    const auto pc = p.histogram.counts(), qc = q.histogram.counts();
    return pc.size() == qc.size() && std::memcmp(pc.data(), qc.data(), pc.size() * sizeof(pc[0])) == 0 &&
           p.histogram == q.histogram && p.moments == q.moments;
  };
  const bool repeat = same(x, y), resume = half.halted && same(x, z);
  return {repeat && resume, fmt("repeated run identical: %s; halted at %llu and resumed identical: %s (%llu steps)",
                                repeat ? "yes" : "no", static_cast<unsigned long long>(half.steps),
                                resume ? "yes" : "no", static_cast<unsigned long long>(x.steps))};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--work") && i + 1 < argc) {
      g_work = argv[++i];
    } else if (!std::strcmp(argv[i], "--only") && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
    } else {
      std::fprintf(stderr, "usage: %s [--work DIR] [--only 1,2,...]\n", argv[0]);
      return 64;
    }
  }
  fs::create_directories(g_work);

  const std::vector<Criterion> criteria{
      {1, "skew-symmetry", 1, skew_symmetry},
      {2, "unconditional stability", 30, unconditional_stability},
      {3, "order of accuracy", 120, order_of_accuracy},
      {4, "mean reversion", 60, mean_reversion},
      {5, "B^n >= 1", 10, b_factor},
      {6, "statistics axioms", 30, statistics_axioms},
      {7, "terminal-time convergence", 45 * 60, terminal_time},
      {8, "moments", 15 * 60, moments},
      {9, "scheme comparison", 30 * 60, scheme_comparison},
      {10, "determinism and checkpointing", 60, determinism},
  };

  std::printf("kernels: %s\n", simd::active().name);
  std::fflush(stdout);
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs <= c.budget_seconds;
    const bool pass = o.pass && in_budget;
    if (!pass) ++failed;
    std::printf("[%s] %d %s: %s (%.2f s, budget %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                secs, c.budget_seconds, in_budget ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failed;
}
