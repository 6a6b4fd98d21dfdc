#pragma once

// Security metrics of partially phase-randomized sources and the target
// visibilities they imply.

#include <functional>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "phasecert/fock.hpp"

namespace phasecert {

/// Evenly spaced sigma values min, min + step, ..., up to max inclusive.
struct SigmaGrid {
  double min = 0.0;
  double max = 8.0;
  double step = 0.1;

  /// Throws InvalidArgument on a non-positive step or min > max.
  std::vector<double> points() const;
};

struct CoinImbalanceResult {
  double delta = 0.0;  // (1 - F(rho_X, rho_Z)) / 2
  double mu = 0.0;
  double theta0 = 0.0;
  double sigma = 0.0;  // infinity for the uniform-phase limit
  int n_max = 0;
};

/// Quantum-coin imbalance between the X- and Z-basis time-bin states.
CoinImbalanceResult coin_imbalance(double mu, const PhaseDistribution& phase, int n_max = 16);
CoinImbalanceResult coin_imbalance(double mu, double theta0, double sigma, int n_max = 16);

/// Imbalance re-scaled for channel transmittance eta: delta / (eta * mu).
double loss_adjusted_imbalance(double delta, double eta, double mu);

/// (1 - F(rho_1, rho_2)) / 2 between single-mode signal (mean mu / 2, central
/// phase theta0) and decoy (mean nu / 2, central phase 0) fast components.
double decoy_distinguishability(double mu, double nu, const PhaseDistribution& phase, int n_max = 16);
double decoy_distinguishability(double mu, double nu, double theta0, double sigma, int n_max = 16);

enum class SecurityMetric { CoinImbalance, DecoyDistinguishability, DiscriminationPC };

std::string to_string(SecurityMetric metric);

struct SweepPoint {
  double sigma = 0.0;
  double value = 0.0;
  double relative_deviation = 0.0;
};

struct TargetVisibility {
  SecurityMetric metric = SecurityMetric::CoinImbalance;
  std::map<std::string, double> params;
  double sigma_star = 0.0;
  double visibility_star = 1.0;  // exp(-sigma_star^2 / 2)
  double rel_tol = 1e-2;
  double asymptote = 0.0;
  std::vector<SweepPoint> sweep;
};

/// |value - asymptote| / |asymptote|; an exact match counts as zero even
/// when the asymptote is zero.
double relative_deviation(double value, double asymptote);

/// Smallest grid sigma from which every remaining grid point stays within
/// `rel_tol` of `asymptote`. Throws ConvergenceError when none qualifies.
TargetVisibility find_convergence_sigma(const std::function<double(double)>& metric, double asymptote,
                                        double rel_tol = 1e-2, const SigmaGrid& grid = {});

/// As above, with the asymptote taken as the metric at the grid's upper end.
TargetVisibility find_convergence_sigma_grid_end(const std::function<double(double)>& metric,
                                                 double rel_tol = 1e-2, const SigmaGrid& grid = {});

/// Coin-imbalance convergence against the uniform-phase asymptote.
TargetVisibility coin_imbalance_target(double mu, double theta0, int n_max = 16, double rel_tol = 1e-2,
                                       const SigmaGrid& grid = {});

/// Signal/decoy distinguishability convergence against the uniform-phase asymptote.
TargetVisibility decoy_target(double mu, double nu, double theta0, int n_max = 16, double rel_tol = 1e-2,
                              const SigmaGrid& grid = {});

/// Convergence of the optimized conditional probability of a correct
/// signal/decoy decision towards its diagonal (uniform-phase) value.
TargetVisibility discrimination_target(double mu, double nu, double theta0, double p_inc, int n_max = 16,
                                       double rel_tol = 1e-2, const SigmaGrid& grid = {});

/// Memoized targets keyed by their parameters. Not thread-safe.
class TargetTable {
 public:
  explicit TargetTable(int n_max = 16, double rel_tol = 1e-2, SigmaGrid grid = {})
      : n_max_(n_max), rel_tol_(rel_tol), grid_(grid) {}

  const TargetVisibility& coin_imbalance(double mu, double theta0);
  /// The stricter (smaller-visibility) of the theta0 = 0 and theta0 = pi targets.
  const TargetVisibility& coin_imbalance_strictest(double mu);
  const TargetVisibility& decoy(double mu, double nu, double theta0);

 private:
  int n_max_;
  double rel_tol_;
  SigmaGrid grid_;
  std::map<std::tuple<int, double, double, double>, TargetVisibility> cache_;
};

}  // namespace phasecert
