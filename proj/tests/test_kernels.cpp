#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "mrsav/rng.hpp"
#include "mrsav/simd/kernels.hpp"

using namespace mrsav;
using namespace mrsav::simd;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double r = 20.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-r, r);
  return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("scalar kernels on small inputs") {
  const Kernels& k = scalar_kernels();
  const double x[] = {1, 2, 3}, y[] = {4, -5, 6};
  CHECK(k.dot(x, y, 3) == 12.0);
  CHECK(k.sum_abs_diff(x, y, 3) == 3.0 + 7.0 + 3.0);
  double out[3];
  k.axpby(2.0, x, -1.0, y, out, 3);
  CHECK(out[0] == -2.0);
  CHECK(out[1] == 9.0);
  CHECK(out[2] == 0.0);
  k.mul(x, y, out, 3);
  CHECK(out[1] == -10.0);
}

TEST_CASE("l96 kernel hand values") {
  const Kernels& k = scalar_kernels();
  const double u[] = {1, 1, 0, 0, 0};
  double out[5];
  k.l96_nonlinear(u, out, 5);
  const double expect[] = {0, 0, 1, 0, 0};
  for (int i = 0; i < 5; ++i) CHECK(out[i] == expect[i]);
}

TEST_CASE("dispatch names and availability") {
  CHECK(isa_available(Isa::Scalar));
  CHECK(&kernels(Isa::Scalar) == &scalar_kernels());
  CHECK(isa_name(Isa::Avx2) == "avx2");
  const auto isas = available_isas();
  REQUIRE(!isas.empty());
  CHECK(isas.front() == Isa::Scalar);
  CHECK(isa_available(active().isa));
}

TEST_CASE("every available variant matches the scalar reference") {
  const Kernels& ref = scalar_kernels();
  Rng rng(7);
  for (Isa isa : available_isas()) {
    const Kernels& k = kernels(isa);
    CAPTURE(k.name);
    for (std::size_t n : {1u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 40u, 63u, 64000u}) {
      CAPTURE(n);
      const auto x = random_vec(rng, n), y = random_vec(rng, n);
      std::vector<double> a(n), b(n);

      ref.axpby(1.25, x.data(), -0.75, y.data(), a.data(), n);
      k.axpby(1.25, x.data(), -0.75, y.data(), b.data(), n);
      CHECK(bitwise_equal(a, b));

      ref.mul(x.data(), y.data(), a.data(), n);
      k.mul(x.data(), y.data(), b.data(), n);
      CHECK(bitwise_equal(a, b));

      if (n >= 4) {
        ref.l96_nonlinear(x.data(), a.data(), n);
        k.l96_nonlinear(x.data(), b.data(), n);
        CHECK(bitwise_equal(a, b));
      }

      // Reductions differ only by summation order.
      double abs_sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) abs_sum += std::fabs(x[i] * y[i]);
      CHECK(std::fabs(ref.dot(x.data(), y.data(), n) - k.dot(x.data(), y.data(), n)) <=
            4.0 * static_cast<double>(n) * 1.2e-16 * abs_sum);
      const double sad = ref.sum_abs_diff(x.data(), y.data(), n);
      CHECK(std::fabs(sad - k.sum_abs_diff(x.data(), y.data(), n)) <= 4.0 * static_cast<double>(n) * 1.2e-16 * sad);
    }
  }
}

TEST_CASE("in-place axpby is allowed") {
  for (Isa isa : available_isas()) {
    std::vector<double> x{1, 2, 3, 4, 5, 6}, y{6, 5, 4, 3, 2, 1};
    kernels(isa).axpby(2.0, x.data(), 1.0, y.data(), y.data(), x.size());
    CHECK(y == std::vector<double>{8, 9, 10, 11, 12, 13});
  }
}
