#pragma once

// Subcommands of the `phasecert` tool. Each command is a plain function from
// options to rendered output so it can be exercised without a process.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "phasecert/security.hpp"

namespace phasecert::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 2, kData = 3, kNonConvergence = 4 };

enum class Format { Csv, Json };

struct GlobalOptions {
  std::optional<std::string> out;
  std::uint64_t seed = 0;
  int n_max = 16;
  std::optional<Format> format;
};

struct CommandResult {
  std::string contents;
  /// Side outputs written next to --out as `<out><suffix>`.
  std::vector<std::pair<std::string, std::string>> side_files;
  std::vector<std::string> messages;
  nlohmann::json parameters = nlohmann::json::object();
  int exit_code = kSuccess;
};

struct CoinImbalanceOptions {
  double mu = 0.0;
  double theta0 = 3.14159265358979323846;
  SigmaGrid grid;
  double rel_tol = 1e-2;
};

struct DecoyOptions {
  double mu = 0.5;
  double nu = 0.1;
  double theta0 = 3.14159265358979323846;
  SigmaGrid grid;
  double rel_tol = 1e-2;
};

struct PovmSet {
  double p_inc = 0.0;
  double theta0 = 0.0;
};

/// The three operating points of the published appendix figure.
std::vector<PovmSet> default_povm_sets();

struct PovmOptions {
  double mu = 0.5;
  double nu = 0.1;
  double prior = 0.5;
  std::vector<PovmSet> sets = default_povm_sets();
  SigmaGrid grid{0.0, 6.0, 0.25};
  double tol = 1e-9;
  int max_iter = 10000;
};

struct FitOptions {
  std::string input;
  double reference_visibility = 0.95;
  bool mean_half = false;
};

struct SimulateOptions {
  std::string config;
  std::string model = "gaussian";  // gaussian | uniform
  double sigma = 0.0;
  double theta0 = 0.0;
  int accumulations = 256;
  std::optional<double> snr_db;
  double instrument_visibility = 0.95;
  double contrast_factor = 1.0;
  int points = 32;
  double tau_ph_ps = 3.0;
};

struct CertifyOptions {
  std::optional<std::string> input;
  std::optional<double> visibility;
  /// The given visibility is already corrected for the instrument.
  bool corrected = false;
  std::optional<double> mu;
  double signal_mu = 0.5;
  double nu = 0.1;
  double decoy_theta0 = 3.14159265358979323846;
  double reference_visibility = 0.95;
  double rel_tol = 1e-2;
};

CommandResult coin_imbalance_command(const CoinImbalanceOptions& options, const GlobalOptions& globals);
CommandResult decoy_command(const DecoyOptions& options, const GlobalOptions& globals);
CommandResult povm_command(const PovmOptions& options, const GlobalOptions& globals);
CommandResult fit_command(const FitOptions& options, const GlobalOptions& globals);
CommandResult simulate_command(const SimulateOptions& options, const GlobalOptions& globals);
CommandResult certify_command(const CertifyOptions& options, const GlobalOptions& globals);

/// Accepts plain radians or multiples of pi: "pi", "-pi", "0.5pi", "pi/2".
double parse_angle(const std::string& text);

/// Full command line without the program name. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string tool_version();

}  // namespace phasecert::cli
