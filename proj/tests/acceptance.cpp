// Acceptance suite: one line per criterion, "PASS" or "FAIL" followed by the
// measured quantities. Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "phasecert/discrimination.hpp"
#include "phasecert/fringe.hpp"
#include "phasecert/laser.hpp"
#include "phasecert/security.hpp"

using namespace phasecert;

namespace {

constexpr double kPi = std::numbers::pi;

namespace tol {
constexpr double kSigmaThreshold = 0.2;
constexpr double kRelTol = 1e-2;
constexpr double kOracle = 1e-6;
constexpr double kTruncation = 1e-3;
constexpr double kUsdPc = 0.999;
constexpr double kPovmInvariant = 1e-8;
constexpr double kPInc = 1e-6;
constexpr double kDiagonalOracle = 1e-3;
constexpr double kMonotone = 1e-8;
constexpr double kPovmSeconds = 300.0;
constexpr double kThresholdSeconds = 60.0;
constexpr double kTurnOff = 1.0;
constexpr double kNetCurrent = 0.1;
constexpr double kSigmaRecovery = 0.05;
constexpr double kVisibility534 = 0.05;
constexpr double kNoiseFloor = 0.004;
}  // namespace tol

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[x] ";
    }
    detail << what << "; ";
  }
};

std::string num(double v, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double round_sig2(double v) {
  const double scale = std::pow(10.0, std::floor(std::log10(v)) - 1);
  return std::round(v / scale) * scale;
}

Outcome sigma_thresholds() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  struct Case {
    double mu, theta0, expected;
    const char* label;
  };
  for (const Case c : {Case{0.01, kPi, 2.6, "mu=0.01 theta0=pi"}, Case{0.01, 0.0, 2.9, "mu=0.01 theta0=0"},
                       Case{0.09, kPi, 2.9, "mu=0.09 theta0=pi"}, Case{0.09, 0.0, 3.2, "mu=0.09 theta0=0"}}) {
    const auto t = coin_imbalance_target(c.mu, c.theta0, 16, tol::kRelTol);
    o.require(std::abs(t.sigma_star - c.expected) <= tol::kSigmaThreshold + 1e-9,
              std::string(c.label) + ": sigma*=" + num(t.sigma_star, 3) + " vs " + num(c.expected, 2));
  }
  const double elapsed = seconds_since(start);
  o.require(elapsed < tol::kThresholdSeconds, "runtime " + num(elapsed, 3) + " s");
  return o;
}

Outcome visibility_conversions() {
  Outcome o;
  for (const auto [sigma, printed] : {std::pair{2.6, 0.034}, {2.9, 0.015}, {3.2, 0.006}, {2.5, 0.044}}) {
    const double v = sigma_to_visibility(sigma);
    o.require(std::abs(round_sig2(v) - printed) < 1e-12, "sigma=" + num(sigma, 2) + " -> " + num(v, 4));
  }
  return o;
}

Outcome decoy_convergence() {
  Outcome o;
  const double asymptote = decoy_distinguishability(0.5, 0.1, PhaseDistribution::uniform());
  double worst = 0.0;
  for (double sigma : SigmaGrid{}.points()) {
    if (sigma <= 2.5 + 1e-9) continue;
    worst = std::max(worst, relative_deviation(decoy_distinguishability(0.5, 0.1, kPi, sigma), asymptote));
  }
  o.require(worst < tol::kRelTol, "max relative deviation for sigma>2.5 = " + num(worst, 3));
  const double bhattacharyya = 0.5 * (1.0 - oracle::bhattacharyya(oracle::poisson(0.25, 16), oracle::poisson(0.05, 16)));
  o.require(std::abs(asymptote - bhattacharyya) < tol::kOracle,
            "asymptote " + num(asymptote, 10) + " vs oracle " + num(bhattacharyya, 10));
  const double at_grid_end = decoy_distinguishability(0.5, 0.1, kPi, 8.0);
  o.require(std::abs(at_grid_end - bhattacharyya) < tol::kOracle, "sigma=8 value " + num(at_grid_end, 10));
  return o;
}

Outcome truncation_convergence() {
  Outcome o;
  double worst = 0.0;
  std::string where;
  const auto track = [&](double a, double b, const std::string& label) {
    const double rel = std::abs(a - b) / std::abs(b);
    if (rel > worst) worst = rel, where = label;
  };
  const std::vector<PhaseDistribution> phases = [] {
    std::vector<PhaseDistribution> v;
    for (double theta0 : {0.0, kPi}) {
      for (double sigma : {0.0, 0.5, 1.0, 2.0, 3.0, 5.0}) v.push_back(PhaseDistribution::gaussian(theta0, sigma));
    }
    v.push_back(PhaseDistribution::uniform());
    return v;
  }();
  for (double mu : {0.01, 0.09, 0.25, 0.5}) {
    for (const auto& phase : phases) {
      const std::string label = "mu=" + num(mu, 2) + " theta0=" + num(phase.theta0(), 3) + " sigma=" + num(phase.sigma(), 2);
      track(coin_imbalance(mu, phase, 8).delta, coin_imbalance(mu, phase, 16).delta, "coin " + label);
      track(decoy_distinguishability(mu, 0.2 * mu, phase, 8), decoy_distinguishability(mu, 0.2 * mu, phase, 16),
            "decoy " + label);
    }
  }
  o.require(worst < tol::kTruncation, "worst relative change " + num(worst, 3) + " at " + where);
  return o;
}

Outcome povm_suite() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  struct Set {
    double p_inc, theta0;
  };
  const std::vector<double> sigmas = SigmaGrid{0.0, 6.0, 0.25}.points();
  double worst_completeness = 0.0, worst_eigen = 0.0, worst_p_inc = 0.0, worst_rise = 0.0;
  int converged = 0, total = 0;
  for (const Set set : {Set{0.983, 0.0}, Set{0.983, kPi}, Set{0.712, kPi}}) {
    double previous = 2.0;
    for (double sigma : sigmas) {
      const auto phase = PhaseDistribution::gaussian(set.theta0, sigma);
      const auto rho1 = build_single_mode_state({0.5, phase, 16});
      const auto rho2 = build_single_mode_state({std::sqrt(0.05), phase.with_center(0.0), 16});
      const auto r = optimize_povm(rho1, rho2, 0.5, set.p_inc);
      ++total;
      worst_completeness = std::max(worst_completeness, r.povm.completeness_error());
      worst_eigen = std::min(worst_eigen, r.povm.min_eigenvalue());
      if (r.converged) {
        ++converged;
        worst_p_inc = std::max(worst_p_inc, std::abs(r.p_inc_achieved - set.p_inc));
      }
      worst_rise = std::max(worst_rise, r.p_correct_conditional - previous);
      previous = r.p_correct_conditional;

      const std::string label = "p_inc=" + num(set.p_inc, 3) + " theta0=" + num(set.theta0, 3);
      if (sigma == 0.0 && set.theta0 == 0.0 && set.p_inc == 0.983) {
        o.require(r.p_correct_conditional >= tol::kUsdPc,
                  "(a) sigma=0 " + label + ": P_C=" + num(r.p_correct_conditional, 10));
      }
      if (sigma == 6.0) {
        std::vector<double> d1(rho1.dim()), d2(rho2.dim());
        for (int n = 0; n < rho1.dim(); ++n) d1[n] = rho1.matrix()(n, n).real(), d2[n] = rho2.matrix()(n, n).real();
        const double lp = oracle::diagonal_lp_exhaustive(d1, d2, 0.5, set.p_inc) / (1.0 - set.p_inc);
        o.require(std::abs(r.p_correct_conditional - lp) < tol::kDiagonalOracle,
                  "(c) sigma=6 " + label + ": P_C=" + num(r.p_correct_conditional, 8) + " vs LP " + num(lp, 8));
      }
    }
  }
  o.require(worst_completeness <= tol::kPovmInvariant && worst_eigen >= -tol::kPovmInvariant &&
                worst_p_inc <= tol::kPInc,
            "(b) completeness " + num(worst_completeness, 2) + ", min eigenvalue " + num(worst_eigen, 2) +
                ", p_inc error " + num(worst_p_inc, 2) + " over " + std::to_string(converged) + "/" +
                std::to_string(total) + " converged");
  o.require(worst_rise <= tol::kMonotone, "(d) largest increase with sigma " + num(worst_rise, 2));
  const double elapsed = seconds_since(start);
  o.require(elapsed < tol::kPovmSeconds, "runtime " + num(elapsed, 3) + " s");
  return o;
}

Outcome laser_numbers() {
  Outcome o;
  const auto drive = [](double lambda) {
    return DriveConfig{73.3, 9.5 * (1.0 + lambda) + 0.5 * 73.3, 9.5, 10.0, 0.0};
  };
  const double off_033 = turn_off_duration(drive(-0.33));
  const double off_16 = turn_off_duration(drive(-1.6));
  o.require(std::abs(off_033 - 13.0) <= tol::kTurnOff, "turn-off at -0.33: " + num(off_033) + " ps");
  o.require(std::abs(off_16 - 30.0) <= tol::kTurnOff, "turn-off at -1.6: " + num(off_16) + " ps");
  const double tau_033 = effective_photon_lifetime(-0.33, 3.0);
  const double tau_16 = effective_photon_lifetime(-1.6, 3.0);
  o.require(tau_033 >= 9.0 && tau_033 <= 10.0, "tau_eff at -0.33: " + num(tau_033) + " ps");
  const double net = net_current(92.3, -1.0);
  o.require(std::abs(net - 73.3) <= tol::kNetCurrent, "net current " + num(net) + " mA");
  o.require(tau_16 < off_16, "-1.6: tau_eff " + num(tau_16) + " < turn-off");
  o.require(!(tau_033 < off_033), "-0.33: tau_eff not below turn-off");
  return o;
}

Outcome round_trip() {
  Outcome o;
  const auto points = default_phase_points();
  for (double sigma : {0.5, 1.12, 2.0}) {
    AmziOptions options;
    options.accumulations = 10000;
    const auto train = simulate_phase_train(GaussianWalk{sigma, 0.0}, required_train_length(points.size(), 10000), 1);
    const double recovered = visibility_to_sigma(fit_fringe(simulate_amzi_fringe(train, points, options)).visibility);
    o.require(std::abs(recovered - sigma) <= tol::kSigmaRecovery * sigma,
              "sigma " + num(sigma, 3) + " -> " + num(recovered, 4));
  }
  AmziOptions noisy;
  noisy.snr_db = 17.0;
  noisy.seed = 1;
  const auto train = simulate_phase_train(GaussianWalk{1.12, 0.0}, required_train_length(points.size(), 256), 1);
  const double theta = fit_fringe(simulate_amzi_fringe(train, points, noisy)).visibility;
  o.require(std::abs(theta - 0.534) <= tol::kVisibility534, "256 acc, 17 dB, seed 1: visibility " + num(theta));
  return o;
}

Outcome noise_floor() {
  Outcome o;
  const double sigma = visibility_to_sigma(0.004);
  const auto points = default_phase_points();
  std::vector<double> extrema, fitted, abs_error;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    AmziOptions options;
    options.snr_db = 17.0;
    options.seed = seed;
    const auto train = simulate_phase_train(GaussianWalk{sigma, 0.0}, required_train_length(points.size(), 256), seed);
    const auto data = simulate_amzi_fringe(train, points, options);
    extrema.push_back(estimate_visibility_extrema(data).raw);
    fitted.push_back(estimate_visibility_fit(data).raw);
    abs_error.push_back(std::abs(fitted.back() - 0.004));
  }
  const auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
  };
  const double m_extrema = median(extrema), m_fit = median(fitted), m_err = median(abs_error);
  o.require(m_extrema > m_fit, "median extrema " + num(m_extrema) + " > median fit " + num(m_fit));
  o.require(m_err >= tol::kNoiseFloor, "median |fit - 0.004| = " + num(m_err));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 coin-imbalance sigma thresholds", sigma_thresholds},
      {"2 target visibility conversions", visibility_conversions},
      {"3 decoy distinguishability convergence", decoy_convergence},
      {"4 truncation convergence n_max 8 vs 16", truncation_convergence},
      {"5 POVM optimization suite", povm_suite},
      {"6 laser drive numbers", laser_numbers},
      {"7 simulate-fit round trip", round_trip},
      {"8 single-trace noise floor", noise_floor},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome = check();
    failed += outcome.pass ? 0 : 1;
    std::printf("%s  criterion %s  (%.1f s)  %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(), seconds_since(start),
                outcome.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
