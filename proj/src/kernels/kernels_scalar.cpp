#include <cmath>

#include "kernels_internal.hpp"

namespace phasecert::kernels::detail {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

double interference_mean(const double* cos_d, const double* sin_d, std::size_t n, double cos_phi, double sin_phi,
                         double contrast) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += cos_d[i] * cos_phi - sin_d[i] * sin_phi;
  return 0.5 * (1.0 + contrast * sum / static_cast<double>(n));
}

SinusoidMoments sinusoid_moments(const double* c, const double* s, const double* y, const double* w,
                                 std::size_t n) {
  SinusoidMoments m;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w ? w[i] : 1.0;
    m.w += wi;
    m.c += wi * c[i];
    m.s += wi * s[i];
    m.cc += wi * c[i] * c[i];
    m.ss += wi * s[i] * s[i];
    m.cs += wi * c[i] * s[i];
    m.y += wi * y[i];
    m.yc += wi * y[i] * c[i];
    m.ys += wi * y[i] * s[i];
    m.yy += wi * y[i] * y[i];
  }
  return m;
}

double sinusoid_residual_ss(const double* c, const double* s, const double* y, const double* w, std::size_t n,
                            double offset, double a, double b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - offset - a * c[i] - b * s[i];
    sum += (w ? w[i] : 1.0) * r * r;
  }
  return sum;
}

void wrap_differences(const double* theta, std::size_t n, double* out) {
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double x = theta[i + 1] - theta[i];
    const double turns = std::ceil((x - kPi) / kTwoPi);
    out[i] = x - kTwoPi * turns;
  }
}

}  // namespace

const KernelSet kScalarKernels{
    Isa::Scalar, dot, interference_mean, sinusoid_moments, sinusoid_residual_ss, wrap_differences,
};

}  // namespace phasecert::kernels::detail
