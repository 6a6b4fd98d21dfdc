#include "phasecert/laser.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "phasecert/error.hpp"
#include "phasecert/fock.hpp"
#include "phasecert/kernels.hpp"
#include "phasecert/random.hpp"

namespace phasecert {

namespace {

constexpr double kPi = std::numbers::pi;

bool positive_finite(double x) { return x > 0.0 && std::isfinite(x); }

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) out += (out.empty() ? "" : ", ") + item;
  return out;
}

constexpr std::array<MeasuredVisibility, 6> kMeasured{{
    {2.6, 0.93},
    {0.074, 0.534},
    {-0.33, 0.188},
    {-0.76, 0.08},
    {-1.2, 0.022},
    {-1.6, 0.004},
}};

}  // namespace

void DriveConfig::validate() const {
  std::vector<std::string> bad;
  if (!positive_finite(i_pp_ma)) bad.emplace_back("i_pp_ma");
  if (!positive_finite(i_th_ma)) bad.emplace_back("i_th_ma");
  if (!positive_finite(f_ghz)) bad.emplace_back("f_ghz");
  if (!std::isfinite(i_dc_ma)) bad.emplace_back("i_dc_ma");
  if (!std::isfinite(phi_ld_rad)) bad.emplace_back("phi_ld_rad");
  if (!bad.empty()) throw InvalidArgument("drive parameters out of range: " + join(bad));
}

DriveConfig DriveConfig::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("drive config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw DataError("drive config must be a JSON object");

  const std::set<std::string> required{"i_pp_ma", "i_dc_ma", "i_th_ma", "f_ghz"};
  const std::set<std::string> optional{"phi_ld_rad"};
  std::vector<std::string> unknown, missing, not_numeric;
  for (const auto& [key, value] : doc.items()) {
    if (!required.count(key) && !optional.count(key)) {
      unknown.push_back(key);
    } else if (!value.is_number()) {
      not_numeric.push_back(key);
    }
  }
  for (const auto& key : required) {
    if (!doc.contains(key)) missing.push_back(key);
  }
  if (!unknown.empty() || !missing.empty() || !not_numeric.empty()) {
    std::vector<std::string> parts;
    if (!unknown.empty()) parts.push_back("unknown keys: " + join(unknown));
    if (!missing.empty()) parts.push_back("missing keys: " + join(missing));
    if (!not_numeric.empty()) parts.push_back("non-numeric keys: " + join(not_numeric));
    std::string msg = "invalid drive config (";
    for (std::size_t i = 0; i < parts.size(); ++i) msg += (i ? "; " : "") + parts[i];
    throw DataError(msg + ")");
  }

  DriveConfig drive;
  drive.i_pp_ma = doc["i_pp_ma"].get<double>();
  drive.i_dc_ma = doc["i_dc_ma"].get<double>();
  drive.i_th_ma = doc["i_th_ma"].get<double>();
  drive.f_ghz = doc["f_ghz"].get<double>();
  drive.phi_ld_rad = doc.value("phi_ld_rad", 0.0);
  try {
    drive.validate();
  } catch (const InvalidArgument& e) {
    throw DataError(e.what());
  }
  return drive;
}

DriveConfig load_drive_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open drive config " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return DriveConfig::from_json(text.str());
}

double net_current(double nominal_i_pp_ma, double response_db) {
  if (!positive_finite(nominal_i_pp_ma)) throw InvalidArgument("nominal current must be positive");
  return nominal_i_pp_ma * std::pow(10.0, response_db / 10.0);
}

double normalized_min_excitation(const DriveConfig& drive) {
  drive.validate();
  return (drive.i_min_ma() - drive.i_th_ma) / drive.i_th_ma;
}

double turn_off_duration(const DriveConfig& drive) {
  drive.validate();
  const double half_swing = 0.5 * drive.i_pp_ma;
  if (drive.i_min_ma() >= drive.i_th_ma) return 0.0;
  if (drive.i_dc_ma + half_swing <= drive.i_th_ma) return drive.period_ps();
  const double x = (drive.i_th_ma - drive.i_dc_ma) / half_swing;
  return (2.0 * kPi - 2.0 * std::acos(x)) / (2.0 * kPi) * drive.period_ps();
}

double effective_photon_lifetime(double lambda_norm, double tau_ph_ps) {
  if (!positive_finite(tau_ph_ps)) throw InvalidArgument("photon lifetime must be positive");
  if (!(lambda_norm < 0.0)) return std::numeric_limits<double>::infinity();
  return -tau_ph_ps / lambda_norm;
}

void LaserDynamicsParams::validate() const {
  if (!positive_finite(tau_ph_ps)) throw InvalidArgument("tau_ph must be positive");
  if (!(n_sp >= 0.0) || !std::isfinite(n_sp)) throw InvalidArgument("n_sp must be >= 0");
  if (!std::isfinite(modal_gain_proxy)) throw InvalidArgument("modal gain proxy must be finite");
}

double decay_photon_density(double s0, double lambda_norm, const LaserDynamicsParams& params, double t_ps) {
  params.validate();
  if (!(s0 >= 0.0)) throw InvalidArgument("initial photon density must be >= 0");
  if (!(t_ps >= 0.0)) throw InvalidArgument("time must be >= 0");
  const double rate = params.modal_gain_proxy * lambda_norm / params.tau_ph_ps;
  const double x = rate * t_ps;
  // n_sp (e^{x} - 1) / rate, written so that rate -> 0 is smooth.
  const double source = x == 0.0 ? params.n_sp * t_ps : params.n_sp * t_ps * std::expm1(x) / x;
  return std::max(0.0, s0 * std::exp(x) + source);
}

std::string describe(const PhaseModel& model) {
  if (const auto* walk = std::get_if<GaussianWalk>(&model)) {
    std::ostringstream out;
    out << "gaussian_walk(sigma=" << walk->sigma << ", theta0=" << walk->theta0 << ")";
    return out.str();
  }
  return "uniform_random";
}

PulseTrain simulate_phase_train(const PhaseModel& model, std::size_t length, std::uint64_t seed) {
  if (length < 2) throw InvalidArgument("a pulse train needs at least 2 pulses");
  Rng rng(seed);
  PulseTrain train{std::vector<double>(length), model, seed};
  if (const auto* walk = std::get_if<GaussianWalk>(&model)) {
    if (!(walk->sigma >= 0.0) || !std::isfinite(walk->sigma) || !std::isfinite(walk->theta0)) {
      throw InvalidArgument("Gaussian walk needs finite sigma >= 0 and finite theta0");
    }
    double theta = 0.0;
    train.phases[0] = theta;
    for (std::size_t n = 1; n < length; ++n) {
      theta = wrap_phase(theta + walk->theta0 + walk->sigma * rng.normal());
      train.phases[n] = theta;
    }
  } else {
    for (auto& theta : train.phases) theta = kPi - 2.0 * kPi * rng.uniform();
  }
  return train;
}

std::vector<double> default_phase_points(std::size_t count) {
  if (count < 4) throw InvalidArgument("at least 4 phase points are needed");
  std::vector<double> points(count);
  for (std::size_t j = 0; j < count; ++j) points[j] = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(count);
  return points;
}

std::size_t required_train_length(std::size_t points, int accumulations) {
  if (accumulations < 1) throw InvalidArgument("accumulations must be >= 1");
  return points * static_cast<std::size_t>(accumulations) + 1;
}

FringeDataset simulate_amzi_fringe(const PulseTrain& train, std::span<const double> phase_points,
                                   const AmziOptions& options) {
  if (options.accumulations < 1) throw InvalidArgument("accumulations must be >= 1");
  const auto acc = static_cast<std::size_t>(options.accumulations);
  if (train.phases.size() < acc + 1) throw InvalidArgument("pulse train is shorter than accumulations + 1");
  if (phase_points.empty()) throw InvalidArgument("no phase points");
  if (!(options.instrument_visibility > 0.0) || options.instrument_visibility > 1.0) {
    throw InvalidArgument("instrument visibility must lie in (0, 1]");
  }
  if (!(options.contrast_factor >= 0.0) || options.contrast_factor > 1.0) {
    throw InvalidArgument("contrast factor must lie in [0, 1]");
  }
  if (options.snr_db && !std::isfinite(*options.snr_db)) throw InvalidArgument("SNR must be finite");

  const auto& k = kernels::active();
  const std::size_t pairs = train.phases.size() - 1;
  std::vector<double> delta(pairs);
  k.wrap_differences(train.phases.data(), train.phases.size(), delta.data());

  // Cyclic extension so every block is contiguous.
  std::vector<double> cos_d(pairs + acc), sin_d(pairs + acc);
  for (std::size_t i = 0; i < pairs + acc; ++i) {
    cos_d[i] = std::cos(delta[i % pairs]);
    sin_d[i] = std::sin(delta[i % pairs]);
  }

  const double contrast = options.instrument_visibility * options.contrast_factor;
  const double noise_rms = options.snr_db ? 0.5 * std::pow(10.0, -*options.snr_db / 10.0) : 0.0;
  Rng noise(options.seed, 1);

  std::vector<FringeSample> samples(phase_points.size());
  double total = 0.0;
  for (std::size_t j = 0; j < phase_points.size(); ++j) {
    const std::size_t start = (j * acc) % pairs;
    const double phi = phase_points[j];
    double value = k.interference_mean(cos_d.data() + start, sin_d.data() + start, acc, std::cos(phi),
                                       std::sin(phi), contrast);
    if (options.snr_db) value += noise_rms * noise.normal();
    samples[j] = {phi, std::max(0.0, value), std::nullopt};
    total += samples[j].intensity;
  }
  if (!(total > 0.0)) throw DataError("simulated fringe has no intensity");
  const double scale = 0.5 * static_cast<double>(samples.size()) / total;
  for (auto& s : samples) s.intensity *= scale;
  return FringeDataset(std::move(samples), Normalization::MeanHalf);
}

std::span<const MeasuredVisibility> measured_visibility_reference() { return kMeasured; }

}  // namespace phasecert
