#pragma once

// Partially phase-randomized coherent states on a truncated photon-number
// basis, and fidelities between them.

#include <complex>
#include <variant>

#include <Eigen/Dense>

namespace phasecert {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

/// Photon-number basis |0>, ..., |n_max> of a single optical mode.
struct SingleModeBasis {
  int n_max = 0;
  int dim() const { return n_max + 1; }
  bool operator==(const SingleModeBasis&) const = default;
};

/// Two time-bin modes (fast F, slow S), truncated by total photon number.
/// States |M-m>_F |m>_S with M <= n_max_total, ordered by M then m.
struct TwoModeTimeBinBasis {
  int n_max_total = 0;
  int dim() const { return (n_max_total + 1) * (n_max_total + 2) / 2; }
  /// Position of |fast>_F |slow>_S; requires fast + slow <= n_max_total.
  int index(int fast, int slow) const;
  bool operator==(const TwoModeTimeBinBasis&) const = default;
};

using FockBasis = std::variant<SingleModeBasis, TwoModeTimeBinBasis>;

int basis_dim(const FockBasis& basis);

/// Hermitian operator on a truncated Fock basis. Density matrices carry the
/// analytically known probability mass lost to truncation; they are never
/// renormalized.
class FockOperator {
 public:
  FockOperator(FockBasis basis, ComplexMatrix entries, double truncated_mass = 0.0);

  const FockBasis& basis() const { return basis_; }
  const ComplexMatrix& matrix() const { return entries_; }
  int dim() const { return static_cast<int>(entries_.rows()); }
  double truncated_mass() const { return truncated_mass_; }
  double trace() const { return entries_.trace().real(); }

  bool is_hermitian(double tol = 1e-12) const;
  /// True when every imaginary part is exactly zero.
  bool is_real() const;

 private:
  FockBasis basis_;
  ComplexMatrix entries_;
  double truncated_mass_;
};

/// Gaussian law of the pulse phase, or the uniform (fully randomized) limit.
class PhaseDistribution {
 public:
  /// Throws InvalidArgument for sigma < 0 or non-finite values. theta0 is
  /// stored wrapped to (-pi, pi].
  static PhaseDistribution gaussian(double theta0, double sigma);
  static PhaseDistribution uniform();

  bool is_uniform() const { return uniform_; }
  double theta0() const { return theta0_; }
  /// Infinity for the uniform limit.
  double sigma() const;

  /// Same spread, central phase moved to `theta0`.
  PhaseDistribution with_center(double theta0) const;

 private:
  PhaseDistribution(double theta0, double sigma, bool uniform)
      : theta0_(theta0), sigma_(sigma), uniform_(uniform) {}
  double theta0_ = 0.0;
  double sigma_ = 0.0;
  bool uniform_ = false;
};

/// Wraps an angle to (-pi, pi].
double wrap_phase(double radians);

struct StateSpec {
  double amplitude = 0.0;  // mean photon number is amplitude^2
  PhaseDistribution phase = PhaseDistribution::uniform();
  int n_max = 16;
};

/// <exp(i k theta)> under `phase`: exp(-k^2 sigma^2 / 2 + i k theta0).
Complex gaussian_phase_factor(int k, const PhaseDistribution& phase);

/// log(n!) from a cumulative table; exact summation, no gamma function.
double log_factorial(int n);

/// Poisson(mean) probability mass above n_max.
double poisson_tail(double mean, int n_max);

/// Builders store entries below 1e-150 in magnitude as exact zeros.
FockOperator build_single_mode_state(const StateSpec& spec);

/// Diagonal Poisson mixture, the uniform-phase state written out directly.
FockOperator build_phase_randomized_state(double mean_photon_number, int n_max);

/// Z-basis time-bin state: equal mixture of the pulse in F or in S.
FockOperator build_rho_Z(double mu, const PhaseDistribution& phase, int n_max_total);

/// X-basis time-bin state: equal mixture of |a>|a> and |a>|-a>, a^2 = mu/2.
/// The X state is the phase reference, so only the spread of `phase` is used.
FockOperator build_rho_X(double mu, const PhaseDistribution& phase, int n_max_total);

/// Hermitian square root of a positive semidefinite matrix. Eigenvalues
/// down to -1e-10 (relative to the spectral radius) are clamped to zero.
ComplexMatrix matrix_sqrt_psd(const ComplexMatrix& a);
FockOperator matrix_sqrt_psd(const FockOperator& a);

/// Uhlmann fidelity Tr sqrt(sqrt(rho) tau sqrt(rho)).
double uhlmann_fidelity(const FockOperator& rho, const FockOperator& tau);
double uhlmann_fidelity(const ComplexMatrix& rho, const ComplexMatrix& tau);

}  // namespace phasecert
