#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include "mrsav/energy.hpp"
#include "mrsav/experiments/commands.hpp"
#include "mrsav/experiments/trajectory.hpp"
#include "mrsav/rng.hpp"

namespace mrsav::experiments {

namespace {

constexpr std::size_t kSamples = 10000;
constexpr double kSampleRadius = 15.0;
constexpr double kEnvelopeNorm = 1e3;
constexpr std::uint64_t kEnvelopeSteps = 200000;
constexpr double kChaoticT = 100.0;
constexpr std::uint64_t kResidualSteps = 1000;
constexpr double kQDriftConstant = 50.0;

InvariantResult result(std::string name, bool pass, double value, std::optional<double> threshold,
                       std::string detail = {}) {
  return InvariantResult{std::move(name), pass, value, threshold, std::move(detail)};
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void envelope_checks(const DampedDrivenModel& model, const SchemeParams& params,
                     const ExperimentConfig& cfg, InvariantReport& rep) {
  Rng rng(cfg.run.seed ^ 0x5851f42d4c957f2dull);
  StateVector u0(model.dim());
  for (auto& x : u0) x = rng.uniform(-1.0, 1.0);
  const double n0 = norm(u0);
  for (auto& x : u0) x *= kEnvelopeNorm / n0;

  const EnergyConstants ec = EnergyConstants::from(model, params);
  try {
    PairState s = init_pair(u0, cfg.scheme.init_mode, model, params);
    Stepper stepper(model, params);
    const double e1 = discrete_energy(s, ec, params.dt);
    const double sup_bound = ec.state_norm_bound(e1);
    double e_prev = e1, sup_u = norm(s.u_curr), worst = 0.0;
    std::uint64_t violations = 0, first_violation = 0;
    for (std::uint64_t n = 0; n < kEnvelopeSteps; ++n) {
      stepper.advance(s);
      const double e_next = discrete_energy(s, ec, params.dt);
      if (!ec.envelope_holds(e_prev, e_next, params.dt)) {
        if (!violations) first_violation = s.step_index;
        ++violations;
      }
      const double rhs = e_prev + ec.envelope_source(params.dt);
      worst = std::max(worst, (1.0 + ec.beta * params.dt) * e_next / rhs);
      sup_u = std::max(sup_u, norm(s.u_curr));
      e_prev = e_next;
    }
    rep.results.push_back(result("energy_envelope", violations == 0, worst, 1.0,
                                 violations ? std::to_string(violations) + " violations, first at step " +
                                                  std::to_string(first_violation)
                                            : std::to_string(kEnvelopeSteps) + " steps from |u0| = 1e3"));
    rep.results.push_back(result("state_bound", sup_u <= sup_bound, sup_u, sup_bound,
                                 "sup |u^n| against sqrt((E^1 + R^2) / C_l)"));
  } catch (const DivergenceError& e) {
    rep.results.push_back(result("energy_envelope", false, e.energy(), 1.0, e.what()));
    rep.results.push_back(result("state_bound", false, 0.0, std::nullopt, "run diverged"));
  }
}

void trajectory_checks(const DampedDrivenModel& model, const SchemeParams& params,
                       const ExperimentConfig& cfg, InvariantReport& rep) {
  const std::uint64_t steps = step_count(kChaoticT, params.dt);
  const std::uint64_t tail_start = steps - steps / 10;
  try {
    PairState s = init_pair(initial_state(cfg), cfg.scheme.init_mode, model, params);
    Stepper stepper(model, params);
    double min_b = std::numeric_limits<double>::infinity(), q_tail = 0.0, worst_res = 0.0;
    PairState before;
    for (std::uint64_t n = 0; n < steps; ++n) {
      const bool probe = n < kResidualSteps;
      if (probe) before = s;
      const StepInfo info = stepper.advance(s);
      min_b = std::min(min_b, info.b_factor);
      if (n >= tail_start) q_tail = std::max(q_tail, std::fabs(s.q_curr - 1.0));
      if (probe) {
        const ImplicitResidual r = implicit_residual(before, s, model, params);
        worst_res = std::max({worst_res, r.u_residual / std::max(r.u_scale, 1e-300),
                              r.q_residual / std::max(r.q_scale, 1e-300)});
      }
    }
    rep.results.push_back(result("b_factor", min_b >= 1.0, min_b, 1.0, "min B^n over T = 100"));
    const double q_bound = kQDriftConstant * params.dt;
    rep.results.push_back(result("q_drift", q_tail <= q_bound, q_tail, q_bound,
                                 "max |q^n - 1| over the final 10% of T = 100"));
    rep.results.push_back(result("implicit_residual", worst_res <= 1e-10, worst_res, 1e-10,
                                 "relative residual of the implicit equations, first " +
                                     std::to_string(kResidualSteps) + " steps"));
  } catch (const DivergenceError& e) {
    for (const char* name : {"b_factor", "q_drift", "implicit_residual"})
      rep.results.push_back(result(name, false, 0.0, std::nullopt, e.what()));
  }
}

}  // namespace

InvariantReport cmd_check_invariants(const ExperimentConfig& cfg, const CommandOptions& opts) {
  cfg.validate();
  InvariantReport rep;
  const DampedDrivenModel model = cfg.build_model();
  SchemeParams params = cfg.scheme_params();
  params.order = SchemeOrder::Bdf2;

  const AssumptionReport a = check_assumptions(model, kSamples, kSampleRadius, cfg.run.seed);
  const double anorm = std::max(model.damping().max_abs(), 1.0);
  rep.results.push_back(result("skew_symmetry", a.skew_ok(1e-12), a.max_skew_residual, 1e-12,
                               "max |N(u).u| / max(1, |u|^3) over 1e4 samples in the radius-15 cube"));
  rep.results.push_back(result("coercivity", a.coercivity_ok(model.coercivity(), anorm),
                               a.min_coercivity_ratio, model.coercivity(), "min u.Au / |u|^2"));
  rep.results.push_back(result("damping_symmetry", a.symmetry_ok(anorm), a.symmetry_defect,
                               1e-12 * anorm));
  rep.results.push_back(result("lipschitz", std::isfinite(a.lipschitz_estimate), a.lipschitz_estimate,
                               std::nullopt, "local estimate, informational"));

  {
    const LinearSolveCache cache = make_cache(model, params);
    Rng rng(cfg.run.seed + 1);
    StateVector x(model.dim());
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      for (auto& v : x) v = rng.uniform(-kSampleRadius, kSampleRadius);
      worst = std::max(worst, cache.identity_residual(x));
    }
    rep.results.push_back(result("linear_solve_identity", worst <= 1e-12, worst, 1e-12));
  }

  {
    Rng rng(cfg.run.seed + 2);
    StateVector w1(model.dim()), w2(model.dim());
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      for (auto& v : w1) v = rng.uniform(-1.0, 1.0);
      for (auto& v : w2) v = rng.uniform(-1.0, 1.0);
      const double w = norm(w1) * norm(w1) + norm(w2) * norm(w2);
      const double g = g_norm_sq(w1, w2);
      const double slack = 1e-14 * w;
      worst = std::max({worst, EnergyConstants::kLower * w - g - slack, g - EnergyConstants::kUpper * w - slack});
    }
    rep.results.push_back(result("g_norm_sandwich", worst <= 0.0, worst, 0.0,
                                 "C_l |W|^2 <= |W|_G^2 <= C_u |W|^2 over 1e3 blocks"));
  }

  envelope_checks(model, params, cfg, rep);
  trajectory_checks(model, params, cfg, rep);

  if (!opts.output_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(opts.output_dir, ec);
    nlohmann::json j;
    j["all_pass"] = rep.all_pass();
    j["config"] = cfg.to_json();
    j["config_hash"] = hex64(cfg.hash());
    for (const auto& r : rep.results)
      j["invariants"].push_back({{"name", r.name},
                                 {"pass", r.pass},
                                 {"value", r.value},
                                 {"threshold", r.threshold ? nlohmann::json(*r.threshold) : nlohmann::json()},
                                 {"detail", r.detail}});
    std::ofstream os(opts.output_dir / "invariants.json");
    if (!os) throw IoError("cannot write " + (opts.output_dir / "invariants.json").string());
    os << j.dump(2) << "\n";
  }
  return rep;
}

}  // namespace mrsav::experiments
