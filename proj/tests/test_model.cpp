#include <doctest.h>

#include <cmath>
#include <cstring>

#include "mrsav/error.hpp"
#include "mrsav/model.hpp"
#include "mrsav/rng.hpp"

using namespace mrsav;

namespace {

// Direct transcription of the periodic Lorenz 96 tendency, independent of the kernels.
StateVector l96_oracle(const StateVector& u) {
  const long long J = static_cast<long long>(u.size());
  auto at = [&](long long j) { return u[static_cast<std::size_t>(((j % J) + J) % J)]; };
  StateVector n(u.size());
  for (long long j = 0; j < J; ++j) n[static_cast<std::size_t>(j)] = -(at(j + 1) - at(j - 2)) * at(j - 1);
  return n;
}

double dot(const StateVector& a, const StateVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

DampedDrivenModel zero_nonlinear(DenseMatrix a) {
  const std::size_t n = a.size();
  return DampedDrivenModel(std::move(a), [](std::span<const double>, std::span<double> out) {
    for (auto& x : out) x = 0.0;
  }, StateVector(n, 0.0));
}

}  // namespace

TEST_CASE("lorenz96 construction") {
  const auto m = lorenz96_model(5, -12.0);
  CHECK(m.dim() == 5);
  CHECK(m.coercivity() == 1.0);
  CHECK(m.kind() == NonlinearKind::Lorenz96);
  for (double f : m.forcing()) CHECK(f == -12.0);
  CHECK(m.forcing_sup() == doctest::Approx(12.0 * std::sqrt(5.0)).epsilon(1e-15));
  CHECK(m.damping().is_diagonal());
  CHECK(m.damping().symmetry_defect() == 0.0);
  CHECK_THROWS_AS(lorenz96_model(3, -12.0), DimensionError);
  CHECK_NOTHROW(lorenz96_model(4, 8.0));
}

TEST_CASE("lorenz96 nonlinear hand values") {
  const auto m = lorenz96_model(5, -12.0);
  const StateVector u{1, 1, 0, 0, 0};
  const StateVector n = eval_nonlinear(m, u);
  CHECK(n == StateVector{0, 0, 1, 0, 0});
  CHECK(dot(n, u) == 0.0);
  CHECK(eval_nonlinear(m, StateVector(5, 0.0)) == StateVector(5, 0.0));
  CHECK(eval_nonlinear(m, StateVector{1, 0, 0, 0, 0}) == StateVector(5, 0.0));
  CHECK_THROWS_AS(eval_nonlinear(m, StateVector(4, 1.0)), DimensionError);
}

TEST_CASE("lorenz96 matches the direct formula and is skew") {
  Rng rng(11);
  for (int J : {4, 5, 8, 13, 40}) {
    const auto m = lorenz96_model(J, -12.0);
    for (int s = 0; s < 200; ++s) {
      StateVector u(static_cast<std::size_t>(J));
      for (auto& x : u) x = rng.uniform(-15.0, 15.0);
      const StateVector n = eval_nonlinear(m, u);
      const StateVector o = l96_oracle(u);
      for (std::size_t i = 0; i < u.size(); ++i) CHECK(n[i] == o[i]);
      const double un = std::sqrt(dot(u, u));
      CHECK(std::fabs(dot(n, u)) <= 1e-12 * std::max(1.0, un * un * un));
    }
  }
}

TEST_CASE("translation covariance") {
  Rng rng(3);
  for (int J : {5, 8, 40}) {
    const auto m = lorenz96_model(J, -12.0);
    StateVector u(static_cast<std::size_t>(J));
    for (auto& x : u) x = rng.uniform(-15.0, 15.0);
    StateVector r(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) r[(i + 1) % u.size()] = u[i];
    const StateVector nu = eval_nonlinear(m, u), nr = eval_nonlinear(m, r);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(std::fabs(nr[(i + 1) % u.size()] - nu[i]) <= 1e-14 * std::max(1.0, std::fabs(nu[i])));
  }
}

TEST_CASE("nonlinear evaluation is deterministic") {
  const auto m = lorenz96_model(40, 8.0);
  Rng rng(5);
  StateVector u(40);
  for (auto& x : u) x = rng.uniform(-15.0, 15.0);
  const StateVector a = eval_nonlinear(m, u), b = eval_nonlinear(m, u);
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("wrap_site maps 1-based periodic indices") {
  CHECK(wrap_site(1, 5) == 0);
  CHECK(wrap_site(5, 5) == 4);
  CHECK(wrap_site(6, 5) == 0);
  CHECK(wrap_site(0, 5) == 4);
  CHECK(wrap_site(-1, 5) == 3);
}

TEST_CASE("check_assumptions on lorenz96") {
  const auto m = lorenz96_model(5, -12.0);
  const AssumptionReport r = check_assumptions(m, 10000, 15.0, 1);
  CHECK(r.samples == 10000);
  CHECK(r.skew_ok(1e-12));
  CHECK(r.min_coercivity_ratio >= 1.0 - 1e-10);
  CHECK(r.coercivity_ok(m.coercivity(), 1.0));
  CHECK(r.symmetry_ok(1.0));
  CHECK(r.lipschitz_estimate > 0.0);
  CHECK_THROWS_AS(check_assumptions(m, 0, 15.0, 1), InvalidArgument);
  CHECK_THROWS_AS(check_assumptions(m, 10, 0.0, 1), InvalidArgument);
}

TEST_CASE("faulty nonlinearity is flagged") {
  const auto m = lorenz96_faulty_model(5, -12.0);
  CHECK_FALSE(check_assumptions(m, 1000, 15.0, 1).skew_ok(1e-12));
}

TEST_CASE("damping 2I has coercivity 2") {
  const auto m = zero_nonlinear(DenseMatrix::identity(4, 2.0));
  CHECK(m.coercivity() == doctest::Approx(2.0).epsilon(1e-14));
  const AssumptionReport r = check_assumptions(m, 1000, 15.0, 2);
  CHECK(r.min_coercivity_ratio == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(r.coercivity_ok(m.coercivity(), 2.0));
}

TEST_CASE("non-symmetric damping is flagged") {
  DenseMatrix a = DenseMatrix::identity(3, 2.0);
  a(0, 1) = 0.5;
  const auto m = zero_nonlinear(a);
  CHECK(m.damping().symmetry_defect() == 0.5);
  CHECK_FALSE(check_assumptions(m, 100, 1.0, 1).symmetry_ok(m.damping().max_abs()));
}

TEST_CASE("invalid models are rejected") {
  auto n = [](std::span<const double>, std::span<double> out) { for (auto& x : out) x = 0.0; };
  CHECK_THROWS_AS(DampedDrivenModel(DenseMatrix::identity(3), n, StateVector(2, 0.0)), DimensionError);
  CHECK_THROWS_AS(DampedDrivenModel(DenseMatrix::identity(2, -1.0), n, StateVector(2, 0.0)), InvalidArgument);
  CHECK_THROWS_AS(DampedDrivenModel(DenseMatrix::identity(2), n, StateVector{1.0, NAN}), InvalidArgument);
}

TEST_CASE("dense matrix helpers") {
  DenseMatrix a(2);
  a(0, 0) = 1;
  a(0, 1) = 2;
  a(1, 0) = 3;
  a(1, 1) = -4;
  CHECK_FALSE(a.is_diagonal());
  CHECK(a.max_abs() == 4.0);
  CHECK(a.symmetry_defect() == 1.0);
  StateVector out(2);
  a.multiply(StateVector{1, 1}, out);
  CHECK(out == StateVector{3, -1});
}
