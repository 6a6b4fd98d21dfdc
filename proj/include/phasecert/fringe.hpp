#pragma once

// Visibility of interference fringes: estimation from (phase, intensity)
// samples, correction for the interferometer's own contrast, and the
// Gaussian relation between visibility and phase spread.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace phasecert {

enum class Normalization { Raw, MeanHalf };

struct FringeSample {
  double phase = 0.0;  // radians
  double intensity = 0.0;
  std::optional<double> intensity_err;
};

class FringeDataset {
 public:
  /// Throws DataError on non-finite values, negative intensities or errors,
  /// or MeanHalf data whose mean intensity is not 0.5 within 5%.
  explicit FringeDataset(std::vector<FringeSample> samples, Normalization normalization = Normalization::Raw);

  const std::vector<FringeSample>& samples() const { return samples_; }
  Normalization normalization() const { return normalization_; }
  std::size_t size() const { return samples_.size(); }
  /// max(phase) - min(phase).
  double phase_span() const;
  /// True when every sample carries a positive intensity_err.
  bool has_errors() const;
  double mean_intensity() const;

  /// Throws DataError unless there are >= 4 samples spanning >= 2 pi / 3.
  void require_fittable() const;

 private:
  std::vector<FringeSample> samples_;
  Normalization normalization_;
};

/// Least-squares fit of I(phi) = A (1 + visibility cos(phi + phi0)).
struct FringeFit {
  double amplitude_A = 0.0;
  double visibility = 0.0;
  double phi0 = 0.0;  // wrapped to (-pi, pi]
  double ci95_low = 0.0;
  double ci95_high = 0.0;
  double visibility_stderr = 0.0;
  double residual_rms = 0.0;
  std::size_t samples = 0;
  /// True when the unconstrained optimum had visibility > 1 and the fit was
  /// redone on the boundary.
  bool at_boundary = false;
};

/// Samples with error bars are weighted by 1 / err^2. The 95% interval uses
/// the linearized covariance scaled by the residual variance and Student's t
/// with n - 3 degrees of freedom, clipped to [0, 1].
FringeFit fit_fringe(const FringeDataset& data);

/// (i_max - i_min) / (i_max + i_min).
double visibility_from_extrema(double i_max, double i_min);

enum class VisibilityMethod { Extrema, Fit };

struct VisibilityEstimate {
  double raw = 0.0;
  double corrected = 0.0;  // min(raw / reference_visibility, 1)
  VisibilityMethod method = VisibilityMethod::Fit;
  double reference_visibility = 1.0;
};

VisibilityEstimate correct_visibility(double raw, double reference, VisibilityMethod method = VisibilityMethod::Fit);

/// Visibility from the largest and smallest sample intensity, then corrected.
VisibilityEstimate estimate_visibility_extrema(const FringeDataset& data, double reference = 1.0);
VisibilityEstimate estimate_visibility_fit(const FringeDataset& data, double reference = 1.0);

/// sqrt(-2 ln theta) for theta in (0, 1].
double visibility_to_sigma(double theta);
/// exp(-sigma^2 / 2) for sigma >= 0.
double sigma_to_visibility(double sigma);

std::string to_string(VisibilityMethod method);
std::string to_string(Normalization normalization);

/// CSV with header `phase_rad,intensity[,intensity_err]`. Errors name the
/// offending data row and file line.
FringeDataset read_fringe_csv(std::istream& in, Normalization normalization = Normalization::Raw);
FringeDataset read_fringe_csv_file(const std::string& path, Normalization normalization = Normalization::Raw);
void write_fringe_csv(std::ostream& out, const FringeDataset& data);

}  // namespace phasecert
