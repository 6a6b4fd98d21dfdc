#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "phasecert/kernels.hpp"

using namespace phasecert::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& gen, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(gen);
  return v;
}

bool close(double a, double b, double scale) { return std::abs(a - b) <= 1e-13 * std::max(1.0, scale); }

}  // namespace

TEST_CASE("scalar kernels are always available") {
  REQUIRE(kernels_for(Isa::Scalar) != nullptr);
  CHECK(name(Isa::Scalar) == "scalar");
  CHECK(cpu_supports(Isa::Scalar));
  const auto& set = active();
  CHECK((set.isa == Isa::Scalar || set.isa == Isa::Avx2));
}

TEST_CASE("scalar reference values") {
  const KernelSet& k = *kernels_for(Isa::Scalar);
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  CHECK(k.dot(a.data(), b.data(), 3) == 32.0);
  const std::vector<double> cd{1.0, 0.0}, sd{0.0, 1.0};
  CHECK(k.interference_mean(cd.data(), sd.data(), 2, 1.0, 0.0, 1.0) == doctest::Approx(0.75));
  const std::vector<double> theta{3.0, -3.0, 0.5};
  std::vector<double> out(2);
  k.wrap_differences(theta.data(), 3, out.data());
  CHECK(out[0] == doctest::Approx(2 * std::numbers::pi - 6.0));
  CHECK(out[1] == doctest::Approx(3.5 - 2 * std::numbers::pi));
}

TEST_CASE("vector kernels agree with the scalar reference") {
  const KernelSet* scalar = kernels_for(Isa::Scalar);
  const KernelSet* avx2 = kernels_for(Isa::Avx2);
  if (avx2 == nullptr) {
    MESSAGE("AVX2 kernels unavailable on this machine; equivalence not exercised");
    return;
  }
  std::mt19937_64 gen(17);
  for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 64u, 255u, 1000u}) {
    CAPTURE(n);
    const auto a = random_vector(n, gen, -1, 1);
    const auto b = random_vector(n, gen, -1, 1);
    const auto y = random_vector(n, gen, 0, 1);
    const auto w = random_vector(n, gen, 0.5, 2);
    CHECK(close(scalar->dot(a.data(), b.data(), n), avx2->dot(a.data(), b.data(), n), n));

    std::vector<double> cd(n), sd(n);
    const auto delta = random_vector(n, gen, -3.14, 3.14);
    for (std::size_t i = 0; i < n; ++i) cd[i] = std::cos(delta[i]), sd[i] = std::sin(delta[i]);
    CHECK(close(scalar->interference_mean(cd.data(), sd.data(), n, 0.3, 0.95, 0.9),
                avx2->interference_mean(cd.data(), sd.data(), n, 0.3, 0.95, 0.9), 1));

    for (const double* weights : {static_cast<const double*>(nullptr), w.data()}) {
      const auto m1 = scalar->sinusoid_moments(a.data(), b.data(), y.data(), weights, n);
      const auto m2 = avx2->sinusoid_moments(a.data(), b.data(), y.data(), weights, n);
      CHECK(close(m1.w, m2.w, n));
      CHECK(close(m1.c, m2.c, n));
      CHECK(close(m1.s, m2.s, n));
      CHECK(close(m1.cc, m2.cc, n));
      CHECK(close(m1.ss, m2.ss, n));
      CHECK(close(m1.cs, m2.cs, n));
      CHECK(close(m1.y, m2.y, n));
      CHECK(close(m1.yc, m2.yc, n));
      CHECK(close(m1.ys, m2.ys, n));
      CHECK(close(m1.yy, m2.yy, n));
      CHECK(close(scalar->sinusoid_residual_ss(a.data(), b.data(), y.data(), weights, n, 0.5, 0.1, -0.2),
                  avx2->sinusoid_residual_ss(a.data(), b.data(), y.data(), weights, n, 0.5, 0.1, -0.2), n));
    }

    const auto theta = random_vector(n + 1, gen, -20, 20);
    std::vector<double> o1(n), o2(n);
    scalar->wrap_differences(theta.data(), n + 1, o1.data());
    avx2->wrap_differences(theta.data(), n + 1, o2.data());
    CHECK(o1 == o2);
  }
}

TEST_CASE("span helpers use the active set") {
  const std::vector<double> a{1, 2}, b{3, 4};
  CHECK(dot(a, b) == 11.0);
  const std::vector<double> y{1, 1};
  CHECK(sinusoid_moments(a, b, y).w == 2.0);
}
