#pragma once

// Reference computations for the tests. These deliberately avoid the
// library's own construction paths: states are built by integrating pure
// coherent-state projectors over the phase law, fidelities go through an SVD,
// ODEs through fixed-step RK4, and the diagonal LP through vertex enumeration.

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace oracle {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

/// Weights on an equispaced phase grid over (-pi, pi] approximating a wrapped
/// Gaussian of centre theta0 and spread sigma. sigma = 0 gives one node.
struct PhaseQuadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};
PhaseQuadrature wrapped_gaussian(double theta0, double sigma, int points = 4096);

/// Truncated coherent-state amplitudes e^{-a^2/2} a^n e^{i n theta} / sqrt(n!).
std::vector<Complex> coherent_vector(double amplitude, double theta, int n_max);

Matrix single_mode_state(double amplitude, const PhaseQuadrature& q, int n_max);
/// Two-mode states on the total-photon-number basis ordered by (M, slow).
Matrix rho_z(double mu, const PhaseQuadrature& q, int n_max);
Matrix rho_x(double mu, const PhaseQuadrature& q, int n_max);

/// Tr|sqrt(rho) sqrt(tau)| from singular values.
double fidelity_svd(const Matrix& rho, const Matrix& tau);

/// sum_n sqrt(p_n q_n).
double bhattacharyya(const std::vector<double>& p, const std::vector<double>& q);

std::vector<double> poisson(double mean, int n_max);

/// Classical RK4 for dy/dt = f(t, y) from 0 to t_end.
double rk4(const std::function<double(double, double)>& f, double y0, double t_end, int steps);

/// Optimum of the diagonal three-outcome LP found by enumerating every vertex:
/// a set of fully inconclusive photon numbers plus at most one fractional one.
double diagonal_lp_exhaustive(const std::vector<double>& r1, const std::vector<double>& r2, double p,
                              double p_inc);

/// Validates `doc` against the subset of JSON Schema used in schemas/:
/// type, enum, required, properties, additionalProperties (bool), items,
/// minItems, maxItems, minimum, maximum, exclusiveMinimum, pattern.
/// Returns the list of violations (empty when valid).
std::vector<std::string> validate_schema(const nlohmann::json& schema, const nlohmann::json& doc);

nlohmann::json load_json(const std::string& path);

/// Random Hermitian PSD matrix A A^H with Gaussian entries.
Matrix random_psd(int dim, unsigned seed, bool real = false);

}  // namespace oracle
