#include "phasecert/security.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "phasecert/discrimination.hpp"
#include "phasecert/error.hpp"

namespace phasecert {

std::vector<double> SigmaGrid::points() const {
  if (!(step > 0.0) || !std::isfinite(step)) throw InvalidArgument("sigma grid step must be positive");
  if (!(min >= 0.0) || !(max >= min) || !std::isfinite(max)) {
    throw InvalidArgument("sigma grid needs 0 <= min <= max");
  }
  // Index-based so 0.1 steps do not accumulate rounding.
  const auto count = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) values[i] = min + static_cast<double>(i) * step;
  return values;
}

CoinImbalanceResult coin_imbalance(double mu, const PhaseDistribution& phase, int n_max) {
  const FockOperator rho_x = build_rho_X(mu, phase, n_max);
  const FockOperator rho_z = build_rho_Z(mu, phase, n_max);
  const double fidelity = uhlmann_fidelity(rho_x, rho_z);
  return {std::clamp(0.5 * (1.0 - fidelity), 0.0, 0.5), mu, phase.theta0(), phase.sigma(), n_max};
}

CoinImbalanceResult coin_imbalance(double mu, double theta0, double sigma, int n_max) {
  return coin_imbalance(mu, PhaseDistribution::gaussian(theta0, sigma), n_max);
}

double loss_adjusted_imbalance(double delta, double eta, double mu) {
  if (!(eta > 0.0) || eta > 1.0) throw InvalidArgument("transmittance must lie in (0, 1]");
  if (!(mu > 0.0)) throw InvalidArgument("mean photon number must be positive");
  return delta / (eta * mu);
}

double decoy_distinguishability(double mu, double nu, const PhaseDistribution& phase, int n_max) {
  if (!(mu >= 0.0) || !(nu >= 0.0)) throw InvalidArgument("mean photon numbers must be >= 0");
  const FockOperator signal = build_single_mode_state({std::sqrt(0.5 * mu), phase, n_max});
  const FockOperator decoy = build_single_mode_state({std::sqrt(0.5 * nu), phase.with_center(0.0), n_max});
  return std::clamp(0.5 * (1.0 - uhlmann_fidelity(signal, decoy)), 0.0, 0.5);
}

double decoy_distinguishability(double mu, double nu, double theta0, double sigma, int n_max) {
  return decoy_distinguishability(mu, nu, PhaseDistribution::gaussian(theta0, sigma), n_max);
}

std::string to_string(SecurityMetric metric) {
  switch (metric) {
    case SecurityMetric::CoinImbalance:
      return "coin_imbalance";
    case SecurityMetric::DecoyDistinguishability:
      return "decoy_distinguishability";
    case SecurityMetric::DiscriminationPC:
      return "discrimination_pc";
  }
  return "unknown";
}

double relative_deviation(double value, double asymptote) {
  const double diff = std::abs(value - asymptote);
  if (diff == 0.0) return 0.0;
  if (asymptote == 0.0) return std::numeric_limits<double>::infinity();
  return diff / std::abs(asymptote);
}

TargetVisibility find_convergence_sigma(const std::function<double(double)>& metric, double asymptote,
                                        double rel_tol, const SigmaGrid& grid) {
  if (!(rel_tol > 0.0)) throw InvalidArgument("rel_tol must be positive");
  TargetVisibility target;
  target.rel_tol = rel_tol;
  target.asymptote = asymptote;
  for (double sigma : grid.points()) {
    const double value = metric(sigma);
    target.sweep.push_back({sigma, value, relative_deviation(value, asymptote)});
  }
  // Walk back from the top of the grid to the start of the converged tail.
  std::size_t first = target.sweep.size();
  while (first > 0 && target.sweep[first - 1].relative_deviation <= rel_tol) --first;
  if (first == target.sweep.size()) {
    std::ostringstream msg;
    msg << "metric does not come within " << rel_tol << " of its asymptote on sigma <= " << grid.max;
    throw ConvergenceError(msg.str());
  }
  target.sigma_star = target.sweep[first].sigma;
  target.visibility_star = std::exp(-0.5 * target.sigma_star * target.sigma_star);
  return target;
}

TargetVisibility find_convergence_sigma_grid_end(const std::function<double(double)>& metric, double rel_tol,
                                                 const SigmaGrid& grid) {
  return find_convergence_sigma(metric, metric(grid.points().back()), rel_tol, grid);
}

TargetVisibility coin_imbalance_target(double mu, double theta0, int n_max, double rel_tol, const SigmaGrid& grid) {
  const double asymptote = coin_imbalance(mu, PhaseDistribution::uniform(), n_max).delta;
  auto target = find_convergence_sigma(
      [&](double sigma) { return coin_imbalance(mu, theta0, sigma, n_max).delta; }, asymptote, rel_tol, grid);
  target.metric = SecurityMetric::CoinImbalance;
  target.params = {{"mu", mu}, {"theta0", theta0}, {"n_max", n_max}};
  return target;
}

TargetVisibility decoy_target(double mu, double nu, double theta0, int n_max, double rel_tol, const SigmaGrid& grid) {
  const double asymptote = decoy_distinguishability(mu, nu, PhaseDistribution::uniform(), n_max);
  auto target = find_convergence_sigma(
      [&](double sigma) { return decoy_distinguishability(mu, nu, theta0, sigma, n_max); }, asymptote, rel_tol,
      grid);
  target.metric = SecurityMetric::DecoyDistinguishability;
  target.params = {{"mu", mu}, {"nu", nu}, {"theta0", theta0}, {"n_max", n_max}};
  return target;
}

TargetVisibility discrimination_target(double mu, double nu, double theta0, double p_inc, int n_max,
                                       double rel_tol, const SigmaGrid& grid) {
  const auto signal_uniform = build_phase_randomized_state(0.5 * mu, n_max);
  const auto decoy_uniform = build_phase_randomized_state(0.5 * nu, n_max);
  const Eigen::VectorXd p1 = signal_uniform.matrix().diagonal().real();
  const Eigen::VectorXd p2 = decoy_uniform.matrix().diagonal().real();
  const double asymptote =
      diagonal_baseline({p1.data(), static_cast<std::size_t>(p1.size())},
                        {p2.data(), static_cast<std::size_t>(p2.size())}, 0.5, p_inc)
          .p_correct_conditional;
  auto metric = [&](double sigma) {
    const auto phase = PhaseDistribution::gaussian(theta0, sigma);
    const auto rho1 = build_single_mode_state({std::sqrt(0.5 * mu), phase, n_max});
    const auto rho2 = build_single_mode_state({std::sqrt(0.5 * nu), phase.with_center(0.0), n_max});
    return optimize_povm(rho1, rho2, 0.5, p_inc).p_correct_conditional;
  };
  auto target = find_convergence_sigma(metric, asymptote, rel_tol, grid);
  target.metric = SecurityMetric::DiscriminationPC;
  target.params = {{"mu", mu}, {"nu", nu}, {"theta0", theta0}, {"p_inc", p_inc}, {"n_max", n_max}};
  return target;
}

const TargetVisibility& TargetTable::coin_imbalance(double mu, double theta0) {
  const auto key = std::make_tuple(0, mu, wrap_phase(theta0), 0.0);
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    it = cache_.emplace(key, coin_imbalance_target(mu, theta0, n_max_, rel_tol_, grid_)).first;
  }
  return it->second;
}

const TargetVisibility& TargetTable::coin_imbalance_strictest(double mu) {
  const auto& aligned = coin_imbalance(mu, 0.0);
  const auto& opposed = coin_imbalance(mu, std::numbers::pi);
  return aligned.visibility_star <= opposed.visibility_star ? aligned : opposed;
}

const TargetVisibility& TargetTable::decoy(double mu, double nu, double theta0) {
  const auto key = std::make_tuple(1, mu, nu, wrap_phase(theta0));
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    it = cache_.emplace(key, decoy_target(mu, nu, theta0, n_max_, rel_tol_, grid_)).first;
  }
  return it->second;
}

}  // namespace phasecert
