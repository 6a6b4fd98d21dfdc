// Built with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <cmath>

#include "kernels_internal.hpp"

namespace phasecert::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

double interference_mean(const double* cos_d, const double* sin_d, std::size_t n, double cos_phi, double sin_phi,
                         double contrast) {
  const __m256d vc = _mm256_set1_pd(cos_phi);
  const __m256d vs = _mm256_set1_pd(sin_phi);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d term = _mm256_fmsub_pd(_mm256_loadu_pd(cos_d + i), vc, _mm256_mul_pd(_mm256_loadu_pd(sin_d + i), vs));
    acc = _mm256_add_pd(acc, term);
  }
  double sum = hsum(acc);
  for (; i < n; ++i) sum += cos_d[i] * cos_phi - sin_d[i] * sin_phi;
  return 0.5 * (1.0 + contrast * sum / static_cast<double>(n));
}

SinusoidMoments sinusoid_moments(const double* c, const double* s, const double* y, const double* w,
                                 std::size_t n) {
  __m256d aw = _mm256_setzero_pd(), ac = aw, as = aw, acc = aw, ass = aw, acs = aw, ay = aw, ayc = aw, ays = aw,
          ayy = aw;
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vw = w ? _mm256_loadu_pd(w + i) : one;
    const __m256d vc = _mm256_loadu_pd(c + i);
    const __m256d vs = _mm256_loadu_pd(s + i);
    const __m256d vy = _mm256_loadu_pd(y + i);
    const __m256d wc = _mm256_mul_pd(vw, vc);
    const __m256d ws = _mm256_mul_pd(vw, vs);
    const __m256d wy = _mm256_mul_pd(vw, vy);
    aw = _mm256_add_pd(aw, vw);
    ac = _mm256_add_pd(ac, wc);
    as = _mm256_add_pd(as, ws);
    acc = _mm256_fmadd_pd(wc, vc, acc);
    ass = _mm256_fmadd_pd(ws, vs, ass);
    acs = _mm256_fmadd_pd(wc, vs, acs);
    ay = _mm256_add_pd(ay, wy);
    ayc = _mm256_fmadd_pd(wy, vc, ayc);
    ays = _mm256_fmadd_pd(wy, vs, ays);
    ayy = _mm256_fmadd_pd(wy, vy, ayy);
  }
  SinusoidMoments m{hsum(aw), hsum(ac), hsum(as), hsum(acc), hsum(ass),
                    hsum(acs), hsum(ay), hsum(ayc), hsum(ays), hsum(ayy)};
  for (; i < n; ++i) {
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
  const __m256d voff = _mm256_set1_pd(offset);
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_sub_pd(_mm256_loadu_pd(y + i), voff);
    r = _mm256_fnmadd_pd(va, _mm256_loadu_pd(c + i), r);
    r = _mm256_fnmadd_pd(vb, _mm256_loadu_pd(s + i), r);
    const __m256d wr = w ? _mm256_mul_pd(_mm256_loadu_pd(w + i), r) : r;
    acc = _mm256_fmadd_pd(wr, r, acc);
  }
  double sum = hsum(acc);
  for (; i < n; ++i) {
    const double r = y[i] - offset - a * c[i] - b * s[i];
    sum += (w ? w[i] : 1.0) * r * r;
  }
  return sum;
}

void wrap_differences(const double* theta, std::size_t n, double* out) {
  if (n < 2) return;
  const std::size_t count = n - 1;
  const __m256d pi = _mm256_set1_pd(kPi);
  const __m256d two_pi = _mm256_set1_pd(kTwoPi);
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    const __m256d x = _mm256_sub_pd(_mm256_loadu_pd(theta + i + 1), _mm256_loadu_pd(theta + i));
    const __m256d turns = _mm256_ceil_pd(_mm256_div_pd(_mm256_sub_pd(x, pi), two_pi));
    // Separate multiply and subtract so the result matches the scalar path exactly.
    _mm256_storeu_pd(out + i, _mm256_sub_pd(x, _mm256_mul_pd(two_pi, turns)));
  }
  for (; i < count; ++i) {
    const double x = theta[i + 1] - theta[i];
    const double turns = std::ceil((x - kPi) / kTwoPi);
    out[i] = x - kTwoPi * turns;
  }
}

}  // namespace

const KernelSet kAvx2Kernels{
    Isa::Avx2, dot, interference_mean, sinusoid_moments, sinusoid_residual_ss, wrap_differences,
};

}  // namespace phasecert::kernels::detail
