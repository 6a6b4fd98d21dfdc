#include "phasecert/discrimination.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include "phasecert/error.hpp"
#include "phasecert/kernels.hpp"

namespace phasecert {

namespace {

// Re Tr(A B) for Hermitian A, B: a plain dot product over the interleaved
// real/imaginary storage.
double real_trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  const auto n = static_cast<std::size_t>(2 * a.size());
  return kernels::active().dot(reinterpret_cast<const double*>(a.data()), reinterpret_cast<const double*>(b.data()),
                               n);
}

double min_eigenvalue_of(const ComplexMatrix& m) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

void require_density_matrix(const FockOperator& rho, const char* name) {
  if (!rho.is_hermitian(1e-10)) throw InvalidArgument(std::string(name) + " is not Hermitian");
  if (min_eigenvalue_of(rho.matrix()) < -1e-10) {
    throw InvalidArgument(std::string(name) + " is not positive semidefinite");
  }
}

void require_probability(double value, const char* name) {
  if (!(value >= 0.0 && value <= 1.0)) throw InvalidArgument(std::string(name) + " must lie in [0, 1]");
}

double clamp_noise(double value) {
  if (value < 0.0 && value > -1e-10) return 0.0;
  if (value > 1.0 && value < 1.0 + 1e-10) return 1.0;
  return value;
}

// Orthonormal coordinates of Hermitian matrices under <X, Y> = Re Tr(X Y):
// diagonal entries, sqrt(2) Re X_kl and (complex case) sqrt(2) Im X_kl, k < l.
class HermitianCoordinates {
 public:
  HermitianCoordinates(int dim, bool complex) : dim_(dim) {
    for (int k = 0; k < dim; ++k) elements_.push_back({k, k, Kind::Diagonal});
    for (int k = 0; k < dim; ++k) {
      for (int l = k + 1; l < dim; ++l) {
        elements_.push_back({k, l, Kind::Symmetric});
        if (complex) elements_.push_back({k, l, Kind::Antisymmetric});
      }
    }
  }

  int size() const { return static_cast<int>(elements_.size()); }

  Eigen::VectorXd encode(const ComplexMatrix& x) const {
    Eigen::VectorXd v(size());
    for (int a = 0; a < size(); ++a) {
      const auto& e = elements_[a];
      switch (e.kind) {
        case Kind::Diagonal:
          v[a] = x(e.k, e.k).real();
          break;
        case Kind::Symmetric:
          v[a] = kSqrt2 * x(e.k, e.l).real();
          break;
        case Kind::Antisymmetric:
          v[a] = kSqrt2 * x(e.k, e.l).imag();
          break;
      }
    }
    return v;
  }

  ComplexMatrix decode(const Eigen::Ref<const Eigen::VectorXd>& v) const {
    ComplexMatrix x = ComplexMatrix::Zero(dim_, dim_);
    for (int a = 0; a < size(); ++a) {
      const auto& e = elements_[a];
      switch (e.kind) {
        case Kind::Diagonal:
          x(e.k, e.k) = v[a];
          break;
        case Kind::Symmetric:
          x(e.k, e.l) += Complex(v[a] / kSqrt2, 0.0);
          x(e.l, e.k) += Complex(v[a] / kSqrt2, 0.0);
          break;
        case Kind::Antisymmetric:
          x(e.k, e.l) += Complex(0.0, v[a] / kSqrt2);
          x(e.l, e.k) -= Complex(0.0, v[a] / kSqrt2);
          break;
      }
    }
    return x;
  }

  // Hessian of -log det at a point with inverse P, added into `out`:
  // out_ab += Re Tr(P B_a P B_b), using Tr(P E_ij P E_kl) = P_li P_jk.
  void add_logdet_hessian(const ComplexMatrix& p, Eigen::Ref<Eigen::MatrixXd> out) const {
    const int n = size();
    std::vector<Terms> terms(n);
    for (int a = 0; a < n; ++a) terms[a] = terms_of(elements_[a]);
    for (int a = 0; a < n; ++a) {
      for (int b = a; b < n; ++b) {
        Complex sum = 0.0;
        for (int t = 0; t < terms[a].count; ++t) {
          const auto& ta = terms[a].entries[t];
          for (int u = 0; u < terms[b].count; ++u) {
            const auto& tb = terms[b].entries[u];
            sum += ta.coeff * tb.coeff * p(tb.col, ta.row) * p(ta.col, tb.row);
          }
        }
        out(a, b) += sum.real();
        if (a != b) out(b, a) += sum.real();
      }
    }
  }

 private:
  enum class Kind { Diagonal, Symmetric, Antisymmetric };
  struct Element {
    int k, l;
    Kind kind;
  };
  struct Entry {
    int row, col;
    Complex coeff;
  };
  struct Terms {
    Entry entries[2];
    int count = 0;
  };

  static Terms terms_of(const Element& e) {
    const double h = 1.0 / kSqrt2;
    switch (e.kind) {
      case Kind::Diagonal:
        return {{{e.k, e.k, 1.0}, {0, 0, 0.0}}, 1};
      case Kind::Symmetric:
        return {{{e.k, e.l, h}, {e.l, e.k, h}}, 2};
      case Kind::Antisymmetric:
        return {{{e.k, e.l, Complex(0.0, h)}, {e.l, e.k, Complex(0.0, -h)}}, 2};
    }
    return {};
  }

  static constexpr double kSqrt2 = 1.41421356237309504880;
  int dim_;
  std::vector<Element> elements_;
};

struct BarrierPoint {
  ComplexMatrix first, second, inconclusive;
};

// log det of a Hermitian matrix, or nullopt when it is not positive definite.
std::optional<double> log_det_pd(const ComplexMatrix& m) {
  Eigen::LLT<ComplexMatrix> llt(0.5 * (m + m.adjoint()));
  if (llt.info() != Eigen::Success) return std::nullopt;
  const auto diag = llt.matrixL().toDenseMatrix().diagonal().real();
  if ((diag.array() <= 0.0).any()) return std::nullopt;
  return 2.0 * diag.array().log().sum();
}

// Orthonormal columns spanning the eigenvectors of rho above 1e-15 of its
// largest eigenvalue. Real states keep real vectors.
ComplexMatrix support_basis(const ComplexMatrix& rho, bool complex) {
  ComplexMatrix vectors;
  Eigen::VectorXd values;
  if (complex) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(0.5 * (rho + rho.adjoint()));
    vectors = solver.eigenvectors();
    values = solver.eigenvalues();
  } else {
    const Eigen::MatrixXd real = rho.real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (real + real.transpose()));
    vectors = solver.eigenvectors().cast<Complex>();
    values = solver.eigenvalues();
  }
  const double cutoff = 1e-15 * values.maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    if (values[k] > cutoff) keep.push_back(k);
  }
  ComplexMatrix basis(rho.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) basis.col(static_cast<Eigen::Index>(j)) = vectors.col(keep[j]);
  return basis;
}

ComplexMatrix hermitian_inverse(const ComplexMatrix& m) {
  Eigen::LLT<ComplexMatrix> llt(0.5 * (m + m.adjoint()));
  ComplexMatrix inv = llt.solve(ComplexMatrix::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.adjoint());
}

// Log-barrier path following for
//   max Tr(R1 Pi1) + Tr(R2 Pi2)  s.t.  Pi1, Pi2, 1 - Pi1 - Pi2 > 0,
//                                      Tr(rho (Pi1 + Pi2)) = Tr(rho) - p_inc.
// Every iterate is strictly feasible, so positivity and completeness hold
// throughout; the equality is kept by projecting Newton steps onto it.
class BarrierSolver {
 public:
  BarrierSolver(const ComplexMatrix& r1, const ComplexMatrix& r2, const ComplexMatrix& rho, bool complex)
      : coords_(static_cast<int>(r1.rows()), complex), dim_(static_cast<int>(r1.rows())) {
    const int n = coords_.size();
    objective_.resize(2 * n);
    objective_ << coords_.encode(r1), coords_.encode(r2);
    constraint_.resize(2 * n);
    const Eigen::VectorXd rho_coords = coords_.encode(rho);
    constraint_ << rho_coords, rho_coords;
  }

  struct Outcome {
    Eigen::VectorXd x;
    double gap = 0.0;
    int newton_steps = 0;
    bool converged = false;
  };

  Outcome run(const Eigen::VectorXd& start, double gap_tol, int max_steps) const {
    const double barrier_dim = 3.0 * dim_;
    Outcome out;
    out.x = start;
    out.gap = std::numeric_limits<double>::infinity();
    double t = 1.0, centered_t = 0.0, growth = 20.0;
    while (true) {
      Eigen::VectorXd trial = out.x;
      const auto decrement = center(trial, t, max_steps, out.newton_steps);
      if (decrement) {
        out.x = std::move(trial);
        // Suboptimality bound for a near-central point.
        out.gap = (barrier_dim + *decrement) / t;
        if (out.gap <= gap_tol) {
          out.converged = true;
          return out;
        }
        centered_t = t;
        t *= growth;
        continue;
      }
      // Retry from the last centered point with a gentler increase of t.
      if (centered_t == 0.0 || out.newton_steps >= max_steps) return out;
      growth = std::sqrt(growth);
      if (growth < 1.2) return out;
      t = centered_t * growth;
    }
  }

  BarrierPoint point(const Eigen::VectorXd& x) const {
    const int n = coords_.size();
    BarrierPoint pt;
    pt.first = coords_.decode(x.head(n));
    pt.second = coords_.decode(x.tail(n));
    pt.inconclusive = ComplexMatrix::Identity(dim_, dim_) - pt.first - pt.second;
    return pt;
  }

  Eigen::VectorXd encode(const ComplexMatrix& first, const ComplexMatrix& second) const {
    Eigen::VectorXd x(2 * coords_.size());
    x << coords_.encode(first), coords_.encode(second);
    return x;
  }

 private:
  std::optional<double> value(const Eigen::VectorXd& x, double t) const {
    const BarrierPoint pt = point(x);
    double total = -t * objective_.dot(x);
    for (const ComplexMatrix* m : {&pt.first, &pt.second, &pt.inconclusive}) {
      const auto ld = log_det_pd(*m);
      if (!ld) return std::nullopt;
      total -= *ld;
    }
    return total;
  }

  // Newton's method with the equality constraint. Returns the final Newton
  // decrement, or nullopt if the step budget runs out or the linear algebra
  // breaks down.
  std::optional<double> center(Eigen::VectorXd& x, double t, int max_steps, int& steps) const {
    const int n = coords_.size();
    double previous = std::numeric_limits<double>::infinity();
    for (;;) {
      if (steps >= max_steps) return std::nullopt;
      const BarrierPoint pt = point(x);
      const ComplexMatrix p1 = hermitian_inverse(pt.first);
      const ComplexMatrix p2 = hermitian_inverse(pt.second);
      const ComplexMatrix p0 = hermitian_inverse(pt.inconclusive);
      const Eigen::VectorXd c0 = coords_.encode(p0);

      Eigen::VectorXd grad(2 * n);
      grad << -t * objective_.head(n) - coords_.encode(p1) + c0, -t * objective_.tail(n) - coords_.encode(p2) + c0;

      Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(2 * n, 2 * n);
      Eigen::MatrixXd k0 = Eigen::MatrixXd::Zero(n, n);
      coords_.add_logdet_hessian(p0, k0);
      coords_.add_logdet_hessian(p1, hess.topLeftCorner(n, n));
      coords_.add_logdet_hessian(p2, hess.bottomRightCorner(n, n));
      hess.topLeftCorner(n, n) += k0;
      hess.bottomRightCorner(n, n) += k0;
      hess.topRightCorner(n, n) = k0;
      hess.bottomLeftCorner(n, n) = k0;

      Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
      if (ldlt.info() != Eigen::Success) return std::nullopt;
      const Eigen::VectorXd u = ldlt.solve(grad);
      const Eigen::VectorXd v = ldlt.solve(constraint_);
      const double denom = constraint_.dot(v);
      if (!(denom > 0.0)) return std::nullopt;
      const double w = -constraint_.dot(u) / denom;
      Eigen::VectorXd dx = -u - w * v;
      // Remove any drift off the equality left by rounding.
      dx -= constraint_ * (constraint_.dot(dx) / constraint_.squaredNorm());

      const double decrement = std::max(0.0, -grad.dot(dx));
      ++steps;
      if (!std::isfinite(decrement)) return std::nullopt;
      if (decrement <= 1e-12) return decrement;
      // Rounding floor: the decrement has stopped shrinking.
      if (decrement < 1e-6 && decrement >= 0.5 * previous) return decrement;
      previous = decrement;

      if (decrement < 0.0625) {
        // Quadratic convergence region; a full step is feasible in exact
        // arithmetic, so only positivity needs checking.
        double s = 1.0;
        while (s > 1e-14 && !value(x + s * dx, t)) s *= 0.5;
        if (s <= 1e-14) return std::nullopt;
        x += s * dx;
        continue;
      }

      const auto current = value(x, t);
      if (!current) return std::nullopt;
      double s = 1.0;
      bool moved = false;
      while (s > 1e-10) {
        const Eigen::VectorXd trial = x + s * dx;
        const auto next = value(trial, t);
        if (next && *next <= *current - 0.25 * s * decrement) {
          x = trial;
          moved = true;
          break;
        }
        s *= 0.5;
      }
      if (!moved) {
        // Damped Newton step; decreases a self-concordant barrier whenever
        // the function values are too large to resolve the decrease.
        const double damped = 1.0 / (1.0 + std::sqrt(decrement));
        if (!value(x + damped * dx, t)) return std::nullopt;
        x += damped * dx;
      }
    }
  }

  HermitianCoordinates coords_;
  int dim_;
  Eigen::VectorXd objective_;
  Eigen::VectorXd constraint_;
};

Povm make_povm(const FockBasis& basis, const ComplexMatrix& inconclusive, const ComplexMatrix& first,
               const ComplexMatrix& second) {
  auto herm = [](const ComplexMatrix& m) -> ComplexMatrix { return 0.5 * (m + m.adjoint()); };
  return {FockOperator(basis, herm(inconclusive)), FockOperator(basis, herm(first)),
          FockOperator(basis, herm(second))};
}

DiscriminationResult finish(Povm povm, const FockOperator& rho1, const FockOperator& rho2, double p, double p_inc) {
  DiscriminationResult result{std::move(povm)};
  const ComplexMatrix rho = p * rho1.matrix() + (1.0 - p) * rho2.matrix();
  result.p_correct = clamp_noise(p * real_trace_product(rho1.matrix(), result.povm.first.matrix()) +
                                 (1.0 - p) * real_trace_product(rho2.matrix(), result.povm.second.matrix()));
  result.p_inc_achieved = clamp_noise(real_trace_product(rho, result.povm.inconclusive.matrix()));
  result.p_inc_requested = p_inc;
  result.prior_p = p;
  const double conclusive = 1.0 - result.p_inc_achieved;
  result.p_correct_conditional = conclusive > 0.0 ? std::min(1.0, result.p_correct / conclusive) : 0.0;
  return result;
}

}  // namespace

double Povm::completeness_error() const {
  const auto n = inconclusive.dim();
  return (inconclusive.matrix() + first.matrix() + second.matrix() - ComplexMatrix::Identity(n, n))
      .cwiseAbs()
      .maxCoeff();
}

double Povm::min_eigenvalue() const {
  return std::min({min_eigenvalue_of(inconclusive.matrix()), min_eigenvalue_of(first.matrix()),
                   min_eigenvalue_of(second.matrix())});
}

bool Povm::is_valid(double tol) const {
  if (!(inconclusive.basis() == first.basis()) || !(first.basis() == second.basis())) return false;
  for (const FockOperator* e : {&inconclusive, &first, &second}) {
    if (!e->is_hermitian(tol)) return false;
  }
  return completeness_error() <= tol && min_eigenvalue() >= -tol;
}

PovmEvaluation evaluate_povm(const Povm& povm, const FockOperator& rho1, const FockOperator& rho2, double p) {
  require_probability(p, "prior p");
  if (!(rho1.basis() == rho2.basis()) || !(povm.first.basis() == rho1.basis())) {
    throw InvalidArgument("evaluate_povm: POVM and states must share a basis");
  }
  if (!povm.is_valid(1e-8)) throw InvalidArgument("evaluate_povm: POVM violates completeness or positivity");
  const ComplexMatrix rho = p * rho1.matrix() + (1.0 - p) * rho2.matrix();
  PovmEvaluation eval;
  eval.p_correct = clamp_noise(p * real_trace_product(rho1.matrix(), povm.first.matrix()) +
                               (1.0 - p) * real_trace_product(rho2.matrix(), povm.second.matrix()));
  eval.p_inconclusive = clamp_noise(real_trace_product(rho, povm.inconclusive.matrix()));
  eval.p_error = clamp_noise(p * real_trace_product(rho1.matrix(), povm.second.matrix()) +
                             (1.0 - p) * real_trace_product(rho2.matrix(), povm.first.matrix()));
  return eval;
}

DiscriminationResult optimize_povm(const FockOperator& rho1, const FockOperator& rho2, double p, double p_inc,
                                   const OptimizerOptions& options) {
  if (!(rho1.basis() == rho2.basis())) throw InvalidArgument("optimize_povm: states must share a basis");
  require_density_matrix(rho1, "rho1");
  require_density_matrix(rho2, "rho2");
  require_probability(p, "prior p");
  if (!(p_inc >= 0.0 && p_inc < 1.0)) throw InvalidArgument("p_inc must lie in [0, 1)");
  if (!(options.tol > 0.0) || options.max_iter < 1) throw InvalidArgument("optimizer options out of range");

  const int dim = rho1.dim();
  const ComplexMatrix identity = ComplexMatrix::Identity(dim, dim);
  const ComplexMatrix zero = ComplexMatrix::Zero(dim, dim);
  const ComplexMatrix rho = p * rho1.matrix() + (1.0 - p) * rho2.matrix();
  const double mass = rho.trace().real();

  if (p_inc > mass * (1.0 + 1e-12)) {
    throw InvalidArgument("p_inc exceeds the probability mass of the truncated states");
  }
  if (p_inc >= mass * (1.0 - 1e-12)) {
    auto result = finish(make_povm(rho1.basis(), identity, zero, zero), rho1, rho2, p, p_inc);
    result.converged = true;
    return result;
  }
  if (p_inc == 0.0) {
    // No inconclusive outcome: Helstrom measurement on the positive part.
    const ComplexMatrix diff = p * rho1.matrix() - (1.0 - p) * rho2.matrix();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(0.5 * (diff + diff.adjoint()));
    const Eigen::VectorXd positive = (solver.eigenvalues().array() > 0.0).cast<double>();
    const ComplexMatrix first =
        solver.eigenvectors() * positive.cast<Complex>().asDiagonal() * solver.eigenvectors().adjoint();
    auto result = finish(make_povm(rho1.basis(), zero, first, identity - first), rho1, rho2, p, p_inc);
    result.converged = true;
    return result;
  }

  // Solve on the support of rho; its orthogonal complement carries no
  // probability and is assigned to the inconclusive outcome.
  const bool complex = !(rho1.is_real() && rho2.is_real());
  const ComplexMatrix support = support_basis(rho, complex);
  const int rank = static_cast<int>(support.cols());
  const ComplexMatrix r1 = support.adjoint() * (p * rho1.matrix()) * support;
  const ComplexMatrix r2 = support.adjoint() * ((1.0 - p) * rho2.matrix()) * support;
  const ComplexMatrix r = r1 + r2;
  const BarrierSolver solver(r1, r2, r, complex);
  const double share = std::min(1.0, p_inc / r.trace().real());
  const ComplexMatrix reduced_identity = ComplexMatrix::Identity(rank, rank);
  const Eigen::VectorXd start =
      solver.encode(0.5 * (1.0 - share) * reduced_identity, 0.5 * (1.0 - share) * reduced_identity);
  const auto outcome = solver.run(start, options.tol, options.max_iter);
  const BarrierPoint reduced = solver.point(outcome.x);
  const ComplexMatrix first = support * reduced.first * support.adjoint();
  const ComplexMatrix second = support * reduced.second * support.adjoint();
  const BarrierPoint pt{first, second, identity - first - second};

  auto result = finish(make_povm(rho1.basis(), pt.inconclusive, pt.first, pt.second), rho1, rho2, p, p_inc);
  result.iterations = outcome.newton_steps;
  result.duality_gap = outcome.gap;
  result.converged = outcome.converged && std::abs(result.p_inc_achieved - p_inc) <= 1e-6;
  return result;
}

DiagonalBaseline diagonal_baseline(std::span<const double> rho1_diag, std::span<const double> rho2_diag, double p,
                                   double p_inc) {
  if (rho1_diag.size() != rho2_diag.size() || rho1_diag.empty()) {
    throw InvalidArgument("diagonal_baseline: distributions must have equal, nonzero length");
  }
  require_probability(p, "prior p");
  require_probability(p_inc, "p_inc");
  const std::size_t n = rho1_diag.size();
  std::vector<double> mass(n), best(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(rho1_diag[k] >= 0.0) || !(rho2_diag[k] >= 0.0)) {
      throw InvalidArgument("diagonal_baseline: probabilities must be >= 0");
    }
    mass[k] = p * rho1_diag[k] + (1.0 - p) * rho2_diag[k];
    best[k] = std::max(p * rho1_diag[k], (1.0 - p) * rho2_diag[k]);
  }
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  if (p_inc > total * (1.0 + 1e-12)) throw InvalidArgument("p_inc exceeds the available probability mass");

  // Fractional knapsack: spend the inconclusive budget where the conclusive
  // payoff per unit of probability mass is smallest.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ra = mass[a] > 0.0 ? best[a] / mass[a] : 2.0;
    const double rb = mass[b] > 0.0 ? best[b] / mass[b] : 2.0;
    return ra < rb;
  });

  DiagonalBaseline out;
  out.assignment.resize(n);
  double budget = std::min(p_inc, total);
  for (std::size_t k : order) {
    if (budget <= 0.0 || mass[k] <= 0.0) break;
    const double w = std::min(1.0, budget / mass[k]);
    out.assignment[k].inconclusive = w;
    budget -= w * mass[k];
  }
  for (std::size_t k = 0; k < n; ++k) {
    auto& a = out.assignment[k];
    const double conclusive = 1.0 - a.inconclusive;
    if (p * rho1_diag[k] >= (1.0 - p) * rho2_diag[k]) {
      a.first = conclusive;
    } else {
      a.second = conclusive;
    }
    out.p_correct += conclusive * best[k];
  }
  out.p_correct_conditional = p_inc < 1.0 ? std::min(1.0, out.p_correct / (1.0 - p_inc)) : 0.0;
  return out;
}

double usd_overlap(double a1, double a2, double theta0) {
  if (!(a1 >= 0.0) || !(a2 >= 0.0)) throw InvalidArgument("amplitudes must be >= 0");
  return std::exp(-0.5 * (a1 * a1 + a2 * a2) + a1 * a2 * std::cos(theta0));
}

}  // namespace phasecert
