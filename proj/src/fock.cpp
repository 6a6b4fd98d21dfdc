#include "phasecert/fock.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "phasecert/error.hpp"

namespace phasecert {

namespace {

constexpr double kPi = std::numbers::pi;

// exp(-k^2 sigma^2 / 2 + i k theta0) for k in [-n_max, n_max], offset by n_max.
std::vector<Complex> phase_factor_table(const PhaseDistribution& phase, int n_max) {
  std::vector<Complex> table(2 * n_max + 1);
  for (int k = -n_max; k <= n_max; ++k) table[k + n_max] = gaussian_phase_factor(k, phase);
  return table;
}

// e^{-|a|^2/2} a^n / sqrt(n!) for n = 0..n_max, a >= 0.
std::vector<double> coherent_amplitudes(double a, int n_max) {
  std::vector<double> c(n_max + 1, 0.0);
  if (a == 0.0) {
    c[0] = 1.0;
    return c;
  }
  const double log_a = std::log(a);
  for (int n = 0; n <= n_max; ++n) {
    c[n] = std::exp(-0.5 * a * a + n * log_a - 0.5 * log_factorial(n));
  }
  return c;
}

void require_finite_nonnegative(double value, const char* name) {
  if (!std::isfinite(value) || value < 0.0) {
    throw InvalidArgument(std::string(name) + " must be finite and >= 0, got " + std::to_string(value));
  }
}

void require_cutoff(int n_max) {
  if (n_max < 1) throw InvalidArgument("photon-number cutoff must be >= 1");
}

double max_abs(const ComplexMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

void require_hermitian(const ComplexMatrix& a, const char* what) {
  if (a.rows() != a.cols()) throw InvalidArgument(std::string(what) + ": matrix is not square");
  const double scale = std::max(1.0, max_abs(a));
  if ((a - a.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvalidArgument(std::string(what) + ": matrix is not Hermitian");
  }
}

bool all_real(const ComplexMatrix& a) { return (a.imag().array() == 0.0).all(); }

// Eigenvalues below -1e-10 relative to the spectral radius are an error;
// smaller negative values are floating-point noise and become zero.
template <typename Vector>
Vector clamp_spectrum(const Vector& eig, const char* what) {
  const double radius = std::max(1.0, eig.cwiseAbs().maxCoeff());
  if (eig.size() > 0 && eig.minCoeff() < -1e-10 * radius) {
    throw InvalidArgument(std::string(what) + ": matrix is not positive semidefinite (eigenvalue " +
                          std::to_string(eig.minCoeff()) + ")");
  }
  return eig.cwiseMax(0.0);
}

template <typename Matrix>
Matrix sqrt_psd_impl(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success) throw ConvergenceError("eigendecomposition failed");
  const auto root = clamp_spectrum(solver.eigenvalues(), "matrix_sqrt_psd").cwiseSqrt().eval();
  return solver.eigenvectors() * root.asDiagonal() * solver.eigenvectors().adjoint();
}

// With rho = U diag(r) U^H and tau = V diag(t) V^H, the fidelity is the sum
// of singular values of diag(sqrt r) U^H V diag(sqrt t). Taking singular
// values of this graded product keeps tiny contributions accurate, where
// square roots of eigenvalues of sqrt(rho) tau sqrt(rho) would not.
template <typename Matrix>
double fidelity_impl(const Matrix& rho, const Matrix& tau) {
  Eigen::SelfAdjointEigenSolver<Matrix> rho_solver(rho);
  Eigen::SelfAdjointEigenSolver<Matrix> tau_solver(tau);
  if (rho_solver.info() != Eigen::Success || tau_solver.info() != Eigen::Success) {
    throw ConvergenceError("eigendecomposition failed");
  }
  const auto r = clamp_spectrum(rho_solver.eigenvalues(), "uhlmann_fidelity").cwiseSqrt().eval();
  const auto t = clamp_spectrum(tau_solver.eigenvalues(), "uhlmann_fidelity").cwiseSqrt().eval();
  const Matrix product =
      r.asDiagonal() * (rho_solver.eigenvectors().adjoint() * tau_solver.eigenvectors()) * t.asDiagonal();
  Eigen::JacobiSVD<Matrix> svd(product);
  return svd.singularValues().sum();
}

// Entries this small cannot affect any metric at double precision, but left in
// place they drive later products into subnormal arithmetic.
void flush_negligible(ComplexMatrix& m) {
  constexpr double kFloor = 1e-150;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    Complex& z = m.data()[i];
    z = {std::abs(z.real()) < kFloor ? 0.0 : z.real(), std::abs(z.imag()) < kFloor ? 0.0 : z.imag()};
  }
}

}  // namespace

int TwoModeTimeBinBasis::index(int fast, int slow) const {
  const int total = fast + slow;
  if (fast < 0 || slow < 0 || total > n_max_total) {
    throw InvalidArgument("two-mode index out of range");
  }
  return total * (total + 1) / 2 + slow;
}

int basis_dim(const FockBasis& basis) {
  return std::visit([](const auto& b) { return b.dim(); }, basis);
}

FockOperator::FockOperator(FockBasis basis, ComplexMatrix entries, double truncated_mass)
    : basis_(basis), entries_(std::move(entries)), truncated_mass_(truncated_mass) {
  if (entries_.rows() != basis_dim(basis_) || entries_.cols() != basis_dim(basis_)) {
    throw InvalidArgument("operator shape does not match its basis");
  }
}

bool FockOperator::is_hermitian(double tol) const {
  return (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool FockOperator::is_real() const { return all_real(entries_); }

double wrap_phase(double radians) {
  // Maps onto (-pi, pi]; pi itself is kept.
  return radians - 2.0 * kPi * std::ceil((radians - kPi) / (2.0 * kPi));
}

PhaseDistribution PhaseDistribution::gaussian(double theta0, double sigma) {
  if (!std::isfinite(theta0)) throw InvalidArgument("theta0 must be finite");
  require_finite_nonnegative(sigma, "sigma");
  return {wrap_phase(theta0), sigma, false};
}

PhaseDistribution PhaseDistribution::uniform() { return {0.0, 0.0, true}; }

double PhaseDistribution::sigma() const {
  return uniform_ ? std::numeric_limits<double>::infinity() : sigma_;
}

PhaseDistribution PhaseDistribution::with_center(double theta0) const {
  if (uniform_) return uniform();
  return gaussian(theta0, sigma_);
}

Complex gaussian_phase_factor(int k, const PhaseDistribution& phase) {
  if (k == 0) return {1.0, 0.0};
  if (phase.is_uniform()) return {0.0, 0.0};
  const double kk = static_cast<double>(k);
  const double magnitude = std::exp(-0.5 * kk * kk * phase.sigma() * phase.sigma());
  if (phase.theta0() == 0.0) return {magnitude, 0.0};
  // Integer multiples of pi are common; keep them exactly real.
  if (phase.theta0() == kPi) return {(k % 2 == 0) ? magnitude : -magnitude, 0.0};
  return std::polar(magnitude, kk * phase.theta0());
}

double log_factorial(int n) {
  if (n < 0) throw InvalidArgument("log_factorial of a negative number");
  static const std::array<double, 256> table = [] {
    std::array<double, 256> t{};
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] + std::log(static_cast<double>(i));
    return t;
  }();
  if (static_cast<std::size_t>(n) < table.size()) return table[n];
  double value = table.back();
  for (int i = static_cast<int>(table.size()); i <= n; ++i) value += std::log(static_cast<double>(i));
  return value;
}

double poisson_tail(double mean, int n_max) {
  require_finite_nonnegative(mean, "mean photon number");
  if (mean == 0.0 || n_max < 0) return n_max < 0 ? 1.0 : 0.0;
  // P(X > n) = P(n + 1, mean), the regularized lower incomplete gamma.
  return boost::math::gamma_p(static_cast<double>(n_max) + 1.0, mean);
}

FockOperator build_single_mode_state(const StateSpec& spec) {
  require_finite_nonnegative(spec.amplitude, "amplitude");
  require_cutoff(spec.n_max);
  const int n = spec.n_max;
  const auto c = coherent_amplitudes(spec.amplitude, n);
  const auto factor = phase_factor_table(spec.phase, n);
  ComplexMatrix rho(n + 1, n + 1);
  for (int m = 0; m <= n; ++m) {
    for (int k = 0; k <= n; ++k) rho(m, k) = c[m] * c[k] * factor[m - k + n];
  }
  flush_negligible(rho);
  return {SingleModeBasis{n}, std::move(rho), poisson_tail(spec.amplitude * spec.amplitude, n)};
}

FockOperator build_phase_randomized_state(double mean_photon_number, int n_max) {
  require_finite_nonnegative(mean_photon_number, "mean photon number");
  require_cutoff(n_max);
  const auto c = coherent_amplitudes(std::sqrt(mean_photon_number), n_max);
  ComplexMatrix rho = ComplexMatrix::Zero(n_max + 1, n_max + 1);
  for (int m = 0; m <= n_max; ++m) rho(m, m) = c[m] * c[m];
  return {SingleModeBasis{n_max}, std::move(rho), poisson_tail(mean_photon_number, n_max)};
}

FockOperator build_rho_Z(double mu, const PhaseDistribution& phase, int n_max_total) {
  require_finite_nonnegative(mu, "mu");
  require_cutoff(n_max_total);
  const TwoModeTimeBinBasis basis{n_max_total};
  const int n = n_max_total;
  const auto c = coherent_amplitudes(std::sqrt(mu), n);
  const auto factor = phase_factor_table(phase, n);
  ComplexMatrix rho = ComplexMatrix::Zero(basis.dim(), basis.dim());
  for (int m = 0; m <= n; ++m) {
    for (int k = 0; k <= n; ++k) {
      const Complex entry = 0.5 * c[m] * c[k] * factor[m - k + n];
      rho(basis.index(m, 0), basis.index(k, 0)) += entry;  // pulse in the fast bin
      rho(basis.index(0, m), basis.index(0, k)) += entry;  // pulse in the slow bin
    }
  }
  flush_negligible(rho);
  return {basis, std::move(rho), poisson_tail(mu, n)};
}

FockOperator build_rho_X(double mu, const PhaseDistribution& phase, int n_max_total) {
  require_finite_nonnegative(mu, "mu");
  require_cutoff(n_max_total);
  const TwoModeTimeBinBasis basis{n_max_total};
  const int n = n_max_total;
  const auto c = coherent_amplitudes(std::sqrt(0.5 * mu), n);
  const auto factor = phase_factor_table(phase.with_center(0.0), n);

  struct Level {
    int fast, slow;
  };
  std::vector<Level> levels(basis.dim());
  for (int total = 0; total <= n; ++total) {
    for (int slow = 0; slow <= total; ++slow) levels[basis.index(total - slow, slow)] = {total - slow, slow};
  }

  ComplexMatrix rho = ComplexMatrix::Zero(basis.dim(), basis.dim());
  for (int i = 0; i < basis.dim(); ++i) {
    const auto [f1, s1] = levels[i];
    for (int j = 0; j < basis.dim(); ++j) {
      const auto [f2, s2] = levels[j];
      // |a>|a> and |a>|-a> interfere constructively only for even slow-mode
      // photon-number differences.
      if ((s1 - s2) % 2 != 0) continue;
      const int dM = (f1 + s1) - (f2 + s2);
      rho(i, j) = c[f1] * c[s1] * c[f2] * c[s2] * factor[dM + n];
    }
  }
  flush_negligible(rho);
  return {basis, std::move(rho), poisson_tail(mu, n)};
}

ComplexMatrix matrix_sqrt_psd(const ComplexMatrix& a) {
  require_hermitian(a, "matrix_sqrt_psd");
  if (all_real(a)) return sqrt_psd_impl<Eigen::MatrixXd>(a.real()).cast<Complex>();
  return sqrt_psd_impl<ComplexMatrix>(0.5 * (a + a.adjoint()));
}

FockOperator matrix_sqrt_psd(const FockOperator& a) {
  return {a.basis(), matrix_sqrt_psd(a.matrix())};
}

double uhlmann_fidelity(const ComplexMatrix& rho, const ComplexMatrix& tau) {
  if (rho.rows() != tau.rows() || rho.cols() != tau.cols()) {
    throw InvalidArgument("uhlmann_fidelity: dimension mismatch");
  }
  require_hermitian(rho, "uhlmann_fidelity");
  require_hermitian(tau, "uhlmann_fidelity");
  if (all_real(rho) && all_real(tau)) {
    return fidelity_impl<Eigen::MatrixXd>(rho.real(), tau.real());
  }
  return fidelity_impl<ComplexMatrix>(0.5 * (rho + rho.adjoint()), 0.5 * (tau + tau.adjoint()));
}

double uhlmann_fidelity(const FockOperator& rho, const FockOperator& tau) {
  if (!(rho.basis() == tau.basis())) throw InvalidArgument("uhlmann_fidelity: operators live on different bases");
  return uhlmann_fidelity(rho.matrix(), tau.matrix());
}

}  // namespace phasecert
