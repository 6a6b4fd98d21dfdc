#pragma once

// Three-outcome discrimination of a signal state from a decoy state with a
// fixed probability of inconclusive outcomes.

#include <span>
#include <vector>

#include "phasecert/fock.hpp"

namespace phasecert {

/// {inconclusive, "state is rho_1", "state is rho_2"} on a shared basis.
struct Povm {
  FockOperator inconclusive;
  FockOperator first;
  FockOperator second;

  /// Largest |entry| of Pi_0 + Pi_1 + Pi_2 - 1.
  double completeness_error() const;
  /// Smallest eigenvalue over the three elements.
  double min_eigenvalue() const;
  /// Hermitian, eigenvalues >= -tol, completeness within tol.
  bool is_valid(double tol = 1e-8) const;
};

struct PovmEvaluation {
  double p_correct = 0.0;        // p Tr(rho_1 Pi_1) + (1 - p) Tr(rho_2 Pi_2)
  double p_inconclusive = 0.0;   // Tr(rho Pi_0), rho = p rho_1 + (1 - p) rho_2
  double p_error = 0.0;          // p Tr(rho_1 Pi_2) + (1 - p) Tr(rho_2 Pi_1)
};

/// Throws InvalidArgument on mismatched dimensions, p outside [0, 1], or a
/// POVM violating completeness/positivity at 1e-8.
PovmEvaluation evaluate_povm(const Povm& povm, const FockOperator& rho1, const FockOperator& rho2, double p);

struct OptimizerOptions {
  /// Target bound on the duality gap of P_C at termination.
  double tol = 1e-9;
  /// Cap on Newton steps over the whole run.
  int max_iter = 10000;
};

struct DiscriminationResult {
  Povm povm;
  double p_correct = 0.0;
  /// p_correct / (1 - p_inc_achieved): correct decisions among conclusive ones.
  double p_correct_conditional = 0.0;
  double p_inc_achieved = 0.0;
  double p_inc_requested = 0.0;
  double prior_p = 0.5;
  double duality_gap = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Maximizes P_C over all POVMs with Tr(rho Pi_0) = p_inc. On failure to
/// reach `tol` the best feasible iterate is returned with converged = false.
DiscriminationResult optimize_povm(const FockOperator& rho1, const FockOperator& rho2, double p, double p_inc,
                                   const OptimizerOptions& options = {});

/// Per-photon-number outcome weights of a diagonal POVM.
struct DiagonalAssignment {
  double inconclusive = 0.0;
  double first = 0.0;
  double second = 0.0;
};

struct DiagonalBaseline {
  double p_correct = 0.0;
  double p_correct_conditional = 0.0;
  std::vector<DiagonalAssignment> assignment;
};

/// Exact optimum of P_C over POVMs diagonal in photon number, given the
/// photon-number distributions of both states. Throws InvalidArgument when
/// p_inc exceeds the available probability mass.
DiagonalBaseline diagonal_baseline(std::span<const double> rho1_diag, std::span<const double> rho2_diag, double p,
                                   double p_inc);

/// |<alpha_1|alpha_2>| for real amplitudes a1, a2 and relative phase theta0.
double usd_overlap(double a1, double a2, double theta0);

}  // namespace phasecert
