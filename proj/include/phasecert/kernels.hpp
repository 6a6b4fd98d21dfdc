#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference version and,
// on x86-64, an AVX2/FMA version; the set in use is picked once at runtime
// from the CPU features, or forced with PHASECERT_ISA=scalar|avx2.
//
// Reductions in the vector versions are reassociated, so results agree with
// the scalar reference to rounding, not bit-for-bit. wrap_differences is
// element-wise and matches exactly.

#include <cstddef>
#include <span>
#include <string_view>

namespace phasecert::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view name(Isa isa);

/// Weighted sums over samples (c_i, s_i, y_i) with weights w_i.
struct SinusoidMoments {
  double w = 0, c = 0, s = 0, cc = 0, ss = 0, cs = 0, y = 0, yc = 0, ys = 0, yy = 0;
};

struct KernelSet {
  Isa isa;
  /// sum a_i b_i
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// mean_i 1/2 (1 + contrast (cos_d_i cos_phi - sin_d_i sin_phi)), n > 0
  double (*interference_mean)(const double* cos_d, const double* sin_d, std::size_t n, double cos_phi,
                              double sin_phi, double contrast);
  /// `w` may be null for unit weights.
  SinusoidMoments (*sinusoid_moments)(const double* c, const double* s, const double* y, const double* w,
                                      std::size_t n);
  /// sum_i w_i (y_i - offset - a c_i - b s_i)^2; `w` may be null.
  double (*sinusoid_residual_ss)(const double* c, const double* s, const double* y, const double* w,
                                 std::size_t n, double offset, double a, double b);
  /// out_i = wrap(theta_{i+1} - theta_i) onto (-pi, pi]; writes n - 1 values.
  void (*wrap_differences)(const double* theta, std::size_t n, double* out);
};

bool cpu_supports(Isa isa);

/// Kernel set for `isa`, or nullptr when the build or the CPU lacks it.
const KernelSet* kernels_for(Isa isa);

/// The set selected for this process.
const KernelSet& active();

// Span conveniences over active().
double dot(std::span<const double> a, std::span<const double> b);
SinusoidMoments sinusoid_moments(std::span<const double> c, std::span<const double> s, std::span<const double> y,
                                 std::span<const double> w = {});

}  // namespace phasecert::kernels
