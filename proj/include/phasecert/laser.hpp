#pragma once

// Gain-switched laser drive, the below-threshold window it opens each
// period, and Monte Carlo pulse-phase trains seen through a one-period
// delay interferometer.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "phasecert/fringe.hpp"

namespace phasecert {

/// Sinusoidal drive I_DC + (I_pp / 2) sin(2 pi f t + phi_LD).
struct DriveConfig {
  double i_pp_ma = 0.0;
  double i_dc_ma = 0.0;
  double i_th_ma = 0.0;
  double f_ghz = 0.0;
  double phi_ld_rad = 0.0;

  /// Throws InvalidArgument unless i_pp, i_th and f are positive and finite.
  void validate() const;
  double i_min_ma() const { return i_dc_ma - 0.5 * i_pp_ma; }
  double period_ps() const { return 1000.0 / f_ghz; }

  /// Parses a flat JSON object with the keys i_pp_ma, i_dc_ma, i_th_ma,
  /// f_ghz and optionally phi_ld_rad. Unknown, missing or non-numeric keys
  /// raise DataError naming every offending key.
  static DriveConfig from_json(std::string_view text);
};

DriveConfig load_drive_config(const std::string& path);

/// Peak-to-peak current after a modulation response of `response_db`.
double net_current(double nominal_i_pp_ma, double response_db);

/// Lambda = (I_min - I_th) / I_th.
double normalized_min_excitation(const DriveConfig& drive);

/// Time per period spent below threshold, in ps.
double turn_off_duration(const DriveConfig& drive);

/// -tau_ph / lambda for lambda < 0; +infinity otherwise.
double effective_photon_lifetime(double lambda_norm, double tau_ph_ps);

struct LaserDynamicsParams {
  double tau_ph_ps = 3.0;
  double n_sp = 0.0;  // photons per ps
  /// Scale k in (Gamma g - 1 / tau_ph) tau_ph = k Lambda.
  double modal_gain_proxy = 1.0;

  void validate() const;
};

/// Solution of dS/dt = (k Lambda / tau_ph) S + n_sp at time t >= 0, floored at 0.
double decay_photon_density(double s0, double lambda_norm, const LaserDynamicsParams& params, double t_ps);

/// Per-pulse phase theta_{n+1} = wrap(theta_n + delta_n), delta_n ~ N(theta0, sigma^2).
struct GaussianWalk {
  double sigma = 0.0;
  double theta0 = 0.0;
};

/// Independent phases, uniform on (-pi, pi].
struct UniformRandom {};

using PhaseModel = std::variant<GaussianWalk, UniformRandom>;

std::string describe(const PhaseModel& model);

struct PulseTrain {
  std::vector<double> phases;
  PhaseModel model;
  std::uint64_t seed = 0;
};

/// Deterministic in (model, length, seed). Throws for length < 2 or sigma < 0.
PulseTrain simulate_phase_train(const PhaseModel& model, std::size_t length, std::uint64_t seed);

struct AmziOptions {
  int accumulations = 256;
  /// 10 log10(0.5 / noise_rms) per fringe point; no noise when unset.
  std::optional<double> snr_db;
  std::uint64_t seed = 0;
  /// Contrast of the interferometer itself.
  double instrument_visibility = 1.0;
  /// Amplitude-imbalance factor on the interference term.
  double contrast_factor = 1.0;
};

/// `count` evenly spaced phases on [0, 2 pi).
std::vector<double> default_phase_points(std::size_t count = 32);

/// Pulses needed for `points` fringe points of `accumulations` pairs each.
std::size_t required_train_length(std::size_t points, int accumulations);

/// Each phase point averages 1/2 (1 + c cos(delta_n + phi)) over its own block
/// of `accumulations` consecutive pulse pairs (taken cyclically when the train
/// is short), c = instrument_visibility * contrast_factor. Gaussian noise is
/// added, negative values are clipped, and the result is rescaled to mean 0.5.
FringeDataset simulate_amzi_fringe(const PulseTrain& train, std::span<const double> phase_points,
                                   const AmziOptions& options = {});

struct MeasuredVisibility {
  double lambda_norm;
  double visibility;
};

/// Visibility measured against normalized minimum excitation for the 10 GHz
/// gain-switched source, as published.
std::span<const MeasuredVisibility> measured_visibility_reference();

}  // namespace phasecert
