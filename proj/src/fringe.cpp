#include "phasecert/fringe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "phasecert/error.hpp"
#include "phasecert/fock.hpp"
#include "phasecert/kernels.hpp"

namespace phasecert {

namespace {

constexpr double kPi = std::numbers::pi;

struct Columns {
  std::vector<double> c, s, y, w;
  bool weighted = false;
};

Columns columns_of(const FringeDataset& data) {
  Columns cols;
  const std::size_t n = data.size();
  cols.c.resize(n);
  cols.s.resize(n);
  cols.y.resize(n);
  cols.weighted = data.has_errors();
  if (cols.weighted) cols.w.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& sample = data.samples()[i];
    cols.c[i] = std::cos(sample.phase);
    cols.s[i] = std::sin(sample.phase);
    cols.y[i] = sample.intensity;
    if (cols.weighted) cols.w[i] = 1.0 / (*sample.intensity_err * *sample.intensity_err);
  }
  return cols;
}

// Best A for the model A (1 + cos(phi + phi0)) at fixed phi0, and the
// resulting weighted residual sum of squares.
// Derivative (up to a positive factor at the optimum) of the profiled fit
// quality N^2 / D for I = A (1 + cos(phi + phi0)), with N = sum w y g and
// D = sum w g^2, g = 1 + cos(phi + phi0).
double boundary_slope(const kernels::SinusoidMoments& m, double phi0) {
  const double cp = std::cos(phi0), sp = std::sin(phi0);
  const double num = m.y + cp * m.yc - sp * m.ys;
  const double den = m.w + 2 * cp * m.c - 2 * sp * m.s + cp * cp * m.cc - 2 * cp * sp * m.cs + sp * sp * m.ss;
  const double dnum = -sp * m.yc - cp * m.ys;
  const double dden = -2 * sp * m.c - 2 * cp * m.s - 2 * cp * sp * m.cc - 2 * (cp * cp - sp * sp) * m.cs +
                      2 * sp * cp * m.ss;
  return 2 * dnum * den - num * dden;
}

struct BoundaryFit {
  double amplitude;
  double rss;
};

BoundaryFit boundary_fit(const Columns& cols, double phi0) {
  const double cp = std::cos(phi0), sp = std::sin(phi0);
  double gy = 0.0, gg = 0.0, yy = 0.0;
  for (std::size_t i = 0; i < cols.y.size(); ++i) {
    const double w = cols.weighted ? cols.w[i] : 1.0;
    const double g = 1.0 + cols.c[i] * cp - cols.s[i] * sp;
    gy += w * g * cols.y[i];
    gg += w * g * g;
    yy += w * cols.y[i] * cols.y[i];
  }
  if (gg <= 0.0) return {0.0, yy};
  return {gy / gg, std::max(0.0, yy - gy * gy / gg)};
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& text, std::size_t row, std::size_t line, const char* column) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (text.empty() || used != text.size() || !std::isfinite(value)) {
    std::ostringstream msg;
    msg << "row " << row << " (line " << line << "): " << column << " is not a finite number: '" << text << "'";
    throw DataError(msg.str());
  }
  return value;
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

}  // namespace

FringeDataset::FringeDataset(std::vector<FringeSample> samples, Normalization normalization)
    : samples_(std::move(samples)), normalization_(normalization) {
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    const auto where = "sample " + std::to_string(i + 1) + ": ";
    if (!std::isfinite(s.phase) || !std::isfinite(s.intensity)) throw DataError(where + "non-finite value");
    if (s.intensity < 0.0) throw DataError(where + "negative intensity");
    if (s.intensity_err && (!std::isfinite(*s.intensity_err) || *s.intensity_err < 0.0)) {
      throw DataError(where + "intensity_err must be finite and >= 0");
    }
  }
  if (normalization_ == Normalization::MeanHalf && !samples_.empty()) {
    const double mean = mean_intensity();
    if (std::abs(mean - 0.5) > 0.05 * 0.5) {
      throw DataError("MeanHalf data must average 0.5 within 5%, got " + format_double(mean));
    }
  }
}

double FringeDataset::phase_span() const {
  if (samples_.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(samples_.begin(), samples_.end(),
                                            [](const auto& a, const auto& b) { return a.phase < b.phase; });
  return hi->phase - lo->phase;
}

bool FringeDataset::has_errors() const {
  return !samples_.empty() && std::all_of(samples_.begin(), samples_.end(), [](const FringeSample& s) {
    return s.intensity_err && *s.intensity_err > 0.0;
  });
}

double FringeDataset::mean_intensity() const {
  if (samples_.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : samples_) sum += s.intensity;
  return sum / static_cast<double>(samples_.size());
}

void FringeDataset::require_fittable() const {
  if (samples_.size() < 4) throw DataError("a fringe fit needs at least 4 samples");
  if (phase_span() < 2.0 * kPi / 3.0 - 1e-12) throw DataError("samples must span at least 2 pi / 3 of phase");
}

FringeFit fit_fringe(const FringeDataset& data) {
  data.require_fittable();
  const Columns cols = columns_of(data);
  const std::size_t n = data.size();
  const auto m = kernels::sinusoid_moments(cols.c, cols.s, cols.y, cols.weighted ? cols.w : std::span<const double>{});

  // Linear in (A, a, b) for I = A + a cos(phi) + b sin(phi).
  Eigen::Matrix3d normal;
  normal << m.w, m.c, m.s, m.c, m.cc, m.cs, m.s, m.cs, m.ss;
  const Eigen::Vector3d rhs(m.y, m.yc, m.ys);
  const Eigen::FullPivLU<Eigen::Matrix3d> lu(normal);
  if (!lu.isInvertible()) throw DataError("fringe samples do not determine a sinusoid");
  const Eigen::Vector3d beta = lu.solve(rhs);
  const Eigen::Matrix3d normal_inv = lu.inverse();

  const double amplitude = beta[0];
  if (!(amplitude > 0.0)) throw DataError("fitted mean intensity is not positive");

  FringeFit fit;
  fit.samples = n;
  double a = beta[1], b = beta[2];
  double radius = std::hypot(a, b);
  fit.amplitude_A = amplitude;
  fit.visibility = radius / amplitude;
  fit.phi0 = wrap_phase(std::atan2(-b, a));

  if (fit.visibility > 1.0) {
    const auto rss_at = [&](double phi0) { return boundary_fit(cols, phi0).rss; };
    constexpr int kCoarse = 720;
    double best_phi = 0.0, best_rss = rss_at(0.0);
    for (int k = 1; k < kCoarse; ++k) {
      const double phi = -kPi + 2.0 * kPi * k / kCoarse;
      const double rss = rss_at(phi);
      if (rss < best_rss) best_rss = rss, best_phi = phi;
    }
    const double h = 2.0 * kPi / kCoarse;
    double phi_opt = boost::math::tools::brent_find_minima(rss_at, best_phi - h, best_phi + h, 52).first;
    const auto slope = [&](double phi0) { return boundary_slope(m, phi0); };
    if (slope(phi_opt - h) > 0.0 && slope(phi_opt + h) < 0.0) {
      std::uintmax_t iterations = 100;
      const auto bracket = boost::math::tools::toms748_solve(slope, phi_opt - h, phi_opt + h,
                                                             boost::math::tools::eps_tolerance<double>(52), iterations);
      phi_opt = 0.5 * (bracket.first + bracket.second);
    }
    const BoundaryFit boundary = boundary_fit(cols, phi_opt);
    if (!(boundary.amplitude > 0.0)) throw ConvergenceError("boundary fringe fit did not converge");
    fit.amplitude_A = boundary.amplitude;
    fit.visibility = 1.0;
    fit.phi0 = wrap_phase(phi_opt);
    fit.at_boundary = true;
    a = boundary.amplitude * std::cos(fit.phi0);
    b = -boundary.amplitude * std::sin(fit.phi0);
    radius = boundary.amplitude;
  }

  const double rss = kernels::active().sinusoid_residual_ss(cols.c.data(), cols.s.data(), cols.y.data(),
                                                            cols.weighted ? cols.w.data() : nullptr, n,
                                                            fit.amplitude_A, a, b);
  fit.residual_rms = std::sqrt(rss / m.w);

  const double dof = static_cast<double>(n) - 3.0;
  const Eigen::Matrix3d cov = (rss / dof) * normal_inv;
  Eigen::Vector3d grad;
  if (radius > 0.0) {
    grad << -fit.visibility / fit.amplitude_A, a / (fit.amplitude_A * radius), b / (fit.amplitude_A * radius);
    fit.visibility_stderr = std::sqrt(std::max(0.0, grad.dot(cov * grad)));
  } else {
    fit.visibility_stderr = std::sqrt(std::max(0.0, 0.5 * (cov(1, 1) + cov(2, 2)))) / fit.amplitude_A;
  }
  const boost::math::students_t dist(dof);
  const double t = boost::math::quantile(dist, 0.975);
  fit.ci95_low = std::clamp(fit.visibility - t * fit.visibility_stderr, 0.0, 1.0);
  fit.ci95_high = std::clamp(fit.visibility + t * fit.visibility_stderr, 0.0, 1.0);
  return fit;
}

double visibility_from_extrema(double i_max, double i_min) {
  if (!(i_min >= 0.0) || !(i_max >= i_min) || !(i_max > 0.0)) {
    throw InvalidArgument("extrema need i_max >= i_min >= 0 and i_max > 0");
  }
  return (i_max - i_min) / (i_max + i_min);
}

VisibilityEstimate correct_visibility(double raw, double reference, VisibilityMethod method) {
  if (!(reference > 0.0) || reference > 1.0) throw InvalidArgument("reference visibility must lie in (0, 1]");
  if (!(raw >= 0.0) || raw > 1.0) throw InvalidArgument("raw visibility must lie in [0, 1]");
  return {raw, std::min(raw / reference, 1.0), method, reference};
}

VisibilityEstimate estimate_visibility_extrema(const FringeDataset& data, double reference) {
  if (data.size() < 2) throw DataError("extrema need at least 2 samples");
  const auto [lo, hi] = std::minmax_element(data.samples().begin(), data.samples().end(),
                                            [](const auto& a, const auto& b) { return a.intensity < b.intensity; });
  return correct_visibility(visibility_from_extrema(hi->intensity, lo->intensity), reference,
                            VisibilityMethod::Extrema);
}

VisibilityEstimate estimate_visibility_fit(const FringeDataset& data, double reference) {
  return correct_visibility(fit_fringe(data).visibility, reference, VisibilityMethod::Fit);
}

double visibility_to_sigma(double theta) {
  if (!(theta > 0.0) || theta > 1.0) throw InvalidArgument("visibility must lie in (0, 1]");
  return std::sqrt(-2.0 * std::log(theta));
}

double sigma_to_visibility(double sigma) {
  if (!(sigma >= 0.0)) throw InvalidArgument("sigma must be >= 0");
  return std::exp(-0.5 * sigma * sigma);
}

std::string to_string(VisibilityMethod method) { return method == VisibilityMethod::Fit ? "fit" : "extrema"; }

std::string to_string(Normalization normalization) {
  return normalization == Normalization::MeanHalf ? "mean_half" : "raw";
}

FringeDataset read_fringe_csv(std::istream& in, Normalization normalization) {
  std::string line;
  std::size_t line_no = 0;
  bool with_errors = false;
  bool have_header = false;
  std::vector<FringeSample> samples;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    const auto fields = split_commas(line);
    if (!have_header) {
      if (fields.size() == 2 && fields[0] == "phase_rad" && fields[1] == "intensity") {
        with_errors = false;
      } else if (fields.size() == 3 && fields[0] == "phase_rad" && fields[1] == "intensity" &&
                 fields[2] == "intensity_err") {
        with_errors = true;
      } else {
        throw DataError("line " + std::to_string(line_no) +
                        ": expected header 'phase_rad,intensity' or 'phase_rad,intensity,intensity_err'");
      }
      have_header = true;
      continue;
    }
    const std::size_t row = samples.size() + 1;
    const std::size_t expected = with_errors ? 3 : 2;
    if (fields.size() != expected) {
      std::ostringstream msg;
      msg << "row " << row << " (line " << line_no << "): expected " << expected << " fields, got " << fields.size();
      throw DataError(msg.str());
    }
    FringeSample sample;
    sample.phase = parse_number(fields[0], row, line_no, "phase_rad");
    sample.intensity = parse_number(fields[1], row, line_no, "intensity");
    if (sample.intensity < 0.0) {
      throw DataError("row " + std::to_string(row) + " (line " + std::to_string(line_no) +
                      "): intensity must be >= 0");
    }
    if (with_errors) {
      sample.intensity_err = parse_number(fields[2], row, line_no, "intensity_err");
      if (*sample.intensity_err < 0.0) {
        throw DataError("row " + std::to_string(row) + " (line " + std::to_string(line_no) +
                        "): intensity_err must be >= 0");
      }
    }
    samples.push_back(sample);
  }
  if (!have_header) throw DataError("empty fringe CSV");
  return FringeDataset(std::move(samples), normalization);
}

FringeDataset read_fringe_csv_file(const std::string& path, Normalization normalization) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return read_fringe_csv(in, normalization);
}

void write_fringe_csv(std::ostream& out, const FringeDataset& data) {
  const bool with_errors = std::any_of(data.samples().begin(), data.samples().end(),
                                       [](const FringeSample& s) { return s.intensity_err.has_value(); });
  out << (with_errors ? "phase_rad,intensity,intensity_err\n" : "phase_rad,intensity\n");
  for (const auto& s : data.samples()) {
    out << format_double(s.phase) << ',' << format_double(s.intensity);
    if (with_errors) out << ',' << format_double(s.intensity_err.value_or(0.0));
    out << '\n';
  }
}

}  // namespace phasecert
