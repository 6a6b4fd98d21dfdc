#include "commands.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "output.hpp"
#include "phasecert/discrimination.hpp"
#include "phasecert/error.hpp"
#include "phasecert/fock.hpp"
#include "phasecert/fringe.hpp"
#include "phasecert/laser.hpp"

#ifndef PHASECERT_VERSION
#define PHASECERT_VERSION "0.0.0"
#endif

namespace phasecert::cli {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double value, int digits = 4) {
  std::ostringstream out;
  out.precision(digits);
  out << value;
  return out.str();
}

void require_nonnegative(double value, const char* name) {
  if (!(value >= 0.0) || !std::isfinite(value)) throw InvalidArgument(std::string(name) + " must be finite and >= 0");
}

nlohmann::json grid_json(const SigmaGrid& grid) {
  return {{"sigma_min", grid.min}, {"sigma_max", grid.max}, {"sigma_step", grid.step}};
}

Format format_or(const GlobalOptions& globals, Format fallback) { return globals.format.value_or(fallback); }

std::string render(const Table& table, const nlohmann::json& summary, Format format) {
  if (format == Format::Json) return dump_json(table_json(table, summary));
  std::ostringstream out;
  write_csv(out, table);
  return out.str();
}

// A sweep evaluated once; the convergence search then reads the cached values.
struct Sweep {
  std::vector<double> sigmas;
  std::map<double, double> values;
};

Sweep evaluate_sweep(const SigmaGrid& grid, const std::function<double(double)>& metric) {
  Sweep sweep;
  sweep.sigmas = grid.points();
  for (double s : sweep.sigmas) sweep.values[s] = metric(s);
  return sweep;
}

std::optional<TargetVisibility> locate_target(const Sweep& sweep, double asymptote, double rel_tol,
                                              const SigmaGrid& grid) {
  try {
    return find_convergence_sigma([&](double s) { return sweep.values.at(s); }, asymptote, rel_tol, grid);
  } catch (const ConvergenceError&) {
    return std::nullopt;
  }
}

nlohmann::json target_summary(const std::string& metric, double asymptote, const std::optional<TargetVisibility>& t) {
  return {{"metric", metric},
          {"asymptote", asymptote},
          {"converged", t.has_value()},
          {"sigma_star", t ? nlohmann::json(t->sigma_star) : nlohmann::json(nullptr)},
          {"visibility_star", t ? nlohmann::json(t->visibility_star) : nlohmann::json(nullptr)}};
}

void report_target(CommandResult& result, const std::optional<TargetVisibility>& target, double rel_tol,
                   const SigmaGrid& grid) {
  if (target) {
    result.messages.push_back("sigma* = " + fmt(target->sigma_star) + ", target visibility = " +
                              fmt(target->visibility_star, 2));
  } else {
    result.messages.push_back("no sigma <= " + fmt(grid.max) + " stays within " + fmt(rel_tol) +
                              " of the asymptote");
    result.exit_code = kNonConvergence;
  }
}

std::pair<FockOperator, FockOperator> signal_and_decoy(double mu, double nu, const PhaseDistribution& phase,
                                                       int n_max) {
  return {build_single_mode_state({std::sqrt(0.5 * mu), phase, n_max}),
          build_single_mode_state({std::sqrt(0.5 * nu), phase.with_center(0.0), n_max})};
}

nlohmann::json fit_json(const FringeFit& fit) {
  return {{"amplitude_A", fit.amplitude_A},
          {"visibility", fit.visibility},
          {"phi0", fit.phi0},
          {"visibility_ci95", {fit.ci95_low, fit.ci95_high}},
          {"visibility_stderr", fit.visibility_stderr},
          {"residual_rms", fit.residual_rms},
          {"samples", fit.samples},
          {"at_boundary", fit.at_boundary}};
}

double sigma_or_inf(double visibility) {
  return visibility > 0.0 ? visibility_to_sigma(visibility) : std::numeric_limits<double>::infinity();
}

}  // namespace

std::string tool_version() { return PHASECERT_VERSION; }

std::vector<PovmSet> default_povm_sets() { return {{0.983, 0.0}, {0.983, kPi}, {0.712, kPi}}; }

double parse_angle(const std::string& text) {
  std::string s;
  for (char ch : text) {
    if (!std::isspace(static_cast<unsigned char>(ch))) s += static_cast<char>(std::tolower(ch));
  }
  const auto number = [&](const std::string& part) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (part.empty() || used != part.size() || !std::isfinite(v)) throw InvalidArgument("invalid angle: " + text);
    return v;
  };
  const auto pos = s.find("pi");
  if (pos == std::string::npos) return number(s);
  std::string coeff = s.substr(0, pos);
  std::string rest = s.substr(pos + 2);
  if (!coeff.empty() && coeff.back() == '*') coeff.pop_back();
  double factor = coeff.empty() ? 1.0 : coeff == "-" ? -1.0 : coeff == "+" ? 1.0 : number(coeff);
  if (!rest.empty()) {
    if (rest[0] != '/') throw InvalidArgument("invalid angle: " + text);
    const double divisor = number(rest.substr(1));
    if (divisor == 0.0) throw InvalidArgument("invalid angle: " + text);
    factor /= divisor;
  }
  return factor * kPi;
}

CommandResult coin_imbalance_command(const CoinImbalanceOptions& o, const GlobalOptions& g) {
  require_nonnegative(o.mu, "mu");
  CommandResult result;
  result.parameters = {{"mu", o.mu}, {"theta0", o.theta0}, {"rel_tol", o.rel_tol}, {"n_max", g.n_max}};
  result.parameters.update(grid_json(o.grid));

  const double asymptote = coin_imbalance(o.mu, PhaseDistribution::uniform(), g.n_max).delta;
  const Sweep sweep =
      evaluate_sweep(o.grid, [&](double s) { return coin_imbalance(o.mu, o.theta0, s, g.n_max).delta; });
  const auto target = locate_target(sweep, asymptote, o.rel_tol, o.grid);

  Table table{{"sigma", "delta", "relative_deviation"}, {}};
  for (double s : sweep.sigmas) {
    const double v = sweep.values.at(s);
    table.add({s, v, relative_deviation(v, asymptote)});
  }
  const auto summary = target_summary("coin_imbalance", asymptote, target);
  result.contents = render(table, summary, format_or(g, Format::Csv));
  report_target(result, target, o.rel_tol, o.grid);
  return result;
}

CommandResult decoy_command(const DecoyOptions& o, const GlobalOptions& g) {
  require_nonnegative(o.mu, "mu");
  require_nonnegative(o.nu, "nu");
  CommandResult result;
  result.parameters = {{"mu", o.mu}, {"nu", o.nu}, {"theta0", o.theta0}, {"rel_tol", o.rel_tol}, {"n_max", g.n_max}};
  result.parameters.update(grid_json(o.grid));

  const double randomized = decoy_distinguishability(o.mu, o.nu, PhaseDistribution::uniform(), g.n_max);
  const double coherent = decoy_distinguishability(o.mu, o.nu, o.theta0, 0.0, g.n_max);
  const Sweep sweep =
      evaluate_sweep(o.grid, [&](double s) { return decoy_distinguishability(o.mu, o.nu, o.theta0, s, g.n_max); });
  const auto target = locate_target(sweep, randomized, o.rel_tol, o.grid);

  Table table{{"sigma", "distinguishability", "relative_deviation", "fully_randomized", "pure_coherent"}, {}};
  for (double s : sweep.sigmas) {
    const double v = sweep.values.at(s);
    table.add({s, v, relative_deviation(v, randomized), randomized, coherent});
  }
  auto summary = target_summary("decoy_distinguishability", randomized, target);
  summary["pure_coherent"] = coherent;
  result.contents = render(table, summary, format_or(g, Format::Csv));
  report_target(result, target, o.rel_tol, o.grid);
  return result;
}

CommandResult povm_command(const PovmOptions& o, const GlobalOptions& g) {
  require_nonnegative(o.mu, "mu");
  require_nonnegative(o.nu, "nu");
  if (o.sets.empty()) throw InvalidArgument("no (p_inc, theta0) sets requested");
  CommandResult result;
  nlohmann::json sets = nlohmann::json::array();
  for (const auto& set : o.sets) sets.push_back({{"p_inc", set.p_inc}, {"theta0", set.theta0}});
  result.parameters = {{"mu", o.mu},     {"nu", o.nu},   {"prior", o.prior},       {"sets", sets},
                       {"tol", o.tol},   {"n_max", g.n_max}, {"max_iter", o.max_iter}};
  result.parameters.update(grid_json(o.grid));

  const auto uniform1 = build_phase_randomized_state(0.5 * o.mu, g.n_max);
  const auto uniform2 = build_phase_randomized_state(0.5 * o.nu, g.n_max);
  const Eigen::VectorXd d1 = uniform1.matrix().diagonal().real();
  const Eigen::VectorXd d2 = uniform2.matrix().diagonal().real();

  Table table{{"kind", "p_inc", "theta0", "sigma", "p_correct", "p_correct_conditional", "p_inc_achieved",
               "duality_gap", "converged", "iterations"},
              {}};
  nlohmann::json per_set = nlohmann::json::array();
  int failures = 0;
  const OptimizerOptions options{o.tol, o.max_iter};
  const auto sigmas = o.grid.points();
  for (const auto& set : o.sets) {
    for (double s : sigmas) {
      const auto [rho1, rho2] = signal_and_decoy(o.mu, o.nu, PhaseDistribution::gaussian(set.theta0, s), g.n_max);
      const auto r = optimize_povm(rho1, rho2, o.prior, set.p_inc, options);
      if (!r.converged) ++failures;
      table.add({std::string("optimized"), set.p_inc, set.theta0, s, r.p_correct, r.p_correct_conditional,
                 r.p_inc_achieved, r.duality_gap, r.converged, static_cast<std::int64_t>(r.iterations)});
    }
    const auto base = diagonal_baseline({d1.data(), static_cast<std::size_t>(d1.size())},
                                        {d2.data(), static_cast<std::size_t>(d2.size())}, o.prior, set.p_inc);
    table.add({std::string("diagonal_baseline"), set.p_inc, set.theta0, std::numeric_limits<double>::infinity(),
               base.p_correct, base.p_correct_conditional, set.p_inc, 0.0, true, std::int64_t{0}});
    per_set.push_back({{"p_inc", set.p_inc},
                       {"theta0", set.theta0},
                       {"usd_overlap", usd_overlap(std::sqrt(0.5 * o.mu), std::sqrt(0.5 * o.nu), set.theta0)},
                       {"diagonal_p_correct", base.p_correct},
                       {"diagonal_p_correct_conditional", base.p_correct_conditional}});
  }
  const nlohmann::json summary{{"sets", per_set}, {"non_converged", failures}};
  result.contents = render(table, summary, format_or(g, Format::Csv));
  if (failures > 0) {
    result.messages.push_back("warning: " + std::to_string(failures) + " optimization(s) did not converge; see the converged column");
  }
  return result;
}

CommandResult fit_command(const FitOptions& o, const GlobalOptions& g) {
  if (o.input.empty()) throw InvalidArgument("an input CSV is required");
  CommandResult result;
  result.parameters = {{"input", o.input}, {"reference_visibility", o.reference_visibility},
                       {"normalization", o.mean_half ? "mean_half" : "raw"}};
  const auto data = read_fringe_csv_file(o.input, o.mean_half ? Normalization::MeanHalf : Normalization::Raw);
  const auto fit = fit_fringe(data);
  const auto corrected = correct_visibility(fit.visibility, o.reference_visibility);
  const auto extrema = estimate_visibility_extrema(data, o.reference_visibility);

  nlohmann::json doc = fit_json(fit);
  doc["normalization"] = to_string(data.normalization());
  doc["raw_visibility"] = corrected.raw;
  doc["corrected_visibility"] = corrected.corrected;
  doc["reference_visibility"] = o.reference_visibility;
  doc["sigma_equivalent_raw"] = number_or_null(sigma_or_inf(corrected.raw));
  doc["sigma_equivalent_corrected"] = number_or_null(sigma_or_inf(corrected.corrected));
  doc["extrema_visibility"] = extrema.raw;

  if (format_or(g, Format::Json) == Format::Json) {
    result.contents = dump_json(doc);
  } else {
    Table table{{"amplitude_A", "visibility", "phi0", "ci95_low", "ci95_high", "visibility_stderr", "residual_rms",
                 "samples", "raw_visibility", "corrected_visibility", "reference_visibility", "sigma_equivalent_raw",
                 "sigma_equivalent_corrected", "extrema_visibility"},
                {}};
    table.add({fit.amplitude_A, fit.visibility, fit.phi0, fit.ci95_low, fit.ci95_high, fit.visibility_stderr,
               fit.residual_rms, static_cast<std::int64_t>(fit.samples), corrected.raw, corrected.corrected,
               o.reference_visibility, sigma_or_inf(corrected.raw), sigma_or_inf(corrected.corrected), extrema.raw});
    result.contents = render(table, {}, Format::Csv);
  }
  result.messages.push_back("visibility = " + fmt(fit.visibility) + " [" + fmt(fit.ci95_low) + ", " +
                            fmt(fit.ci95_high) + "], corrected " + fmt(corrected.corrected));
  return result;
}

CommandResult simulate_command(const SimulateOptions& o, const GlobalOptions& g) {
  if (o.config.empty()) throw InvalidArgument("a drive config is required");
  if (o.points < 4) throw InvalidArgument("at least 4 phase points are required");
  PhaseModel model;
  if (o.model == "gaussian") {
    model = GaussianWalk{o.sigma, o.theta0};
  } else if (o.model == "uniform") {
    model = UniformRandom{};
  } else {
    throw InvalidArgument("model must be 'gaussian' or 'uniform'");
  }
  CommandResult result;
  result.parameters = {{"config", o.config},
                       {"model", o.model},
                       {"sigma", o.sigma},
                       {"theta0", o.theta0},
                       {"accumulations", o.accumulations},
                       {"snr_db", o.snr_db ? nlohmann::json(*o.snr_db) : nlohmann::json(nullptr)},
                       {"instrument_visibility", o.instrument_visibility},
                       {"contrast_factor", o.contrast_factor},
                       {"points", o.points},
                       {"tau_ph_ps", o.tau_ph_ps}};

  const DriveConfig drive = load_drive_config(o.config);
  const double lambda = normalized_min_excitation(drive);
  const double turn_off = turn_off_duration(drive);
  const double lifetime = effective_photon_lifetime(lambda, o.tau_ph_ps);

  const auto phases = default_phase_points(static_cast<std::size_t>(o.points));
  const auto train =
      simulate_phase_train(model, required_train_length(phases.size(), o.accumulations), g.seed);
  AmziOptions amzi;
  amzi.accumulations = o.accumulations;
  amzi.snr_db = o.snr_db;
  amzi.seed = g.seed;
  amzi.instrument_visibility = o.instrument_visibility;
  amzi.contrast_factor = o.contrast_factor;
  const auto data = simulate_amzi_fringe(train, phases, amzi);
  const auto fit = fit_fringe(data);
  const auto corrected = correct_visibility(fit.visibility, o.instrument_visibility);

  const double expected = std::holds_alternative<GaussianWalk>(model)
                              ? o.instrument_visibility * o.contrast_factor * sigma_to_visibility(o.sigma)
                              : 0.0;
  const nlohmann::json derived{
      {"drive",
       {{"i_pp_ma", drive.i_pp_ma},
        {"i_dc_ma", drive.i_dc_ma},
        {"i_th_ma", drive.i_th_ma},
        {"f_ghz", drive.f_ghz},
        {"phi_ld_rad", drive.phi_ld_rad}}},
      {"lambda_norm", lambda},
      {"i_min_ma", drive.i_min_ma()},
      {"turn_off_duration_ps", turn_off},
      {"effective_photon_lifetime_ps", number_or_null(lifetime)},
      {"lifetime_below_turn_off", lifetime < turn_off},
      {"model", describe(model)},
      {"train_length", train.phases.size()},
      {"expected_visibility", expected},
      {"fit", fit_json(fit)},
      {"fitted_visibility", fit.visibility},
      {"corrected_visibility", corrected.corrected},
      {"reference_visibility", o.instrument_visibility}};

  if (format_or(g, Format::Csv) == Format::Json) {
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& s : data.samples()) samples.push_back({{"phase_rad", s.phase}, {"intensity", s.intensity}});
    result.contents = dump_json({{"samples", samples}, {"derived", derived}});
  } else {
    std::ostringstream csv;
    write_fringe_csv(csv, data);
    result.contents = csv.str();
    result.side_files.emplace_back(".derived.json", dump_json(derived));
  }
  result.messages.push_back("Lambda = " + fmt(lambda) + ", turn-off " + fmt(turn_off) + " ps, tau_eff " +
                            (std::isfinite(lifetime) ? fmt(lifetime) + " ps" : std::string("infinite")) +
                            ", fitted visibility " + fmt(fit.visibility));
  return result;
}

CommandResult certify_command(const CertifyOptions& o, const GlobalOptions& g) {
  if (o.input.has_value() == o.visibility.has_value()) {
    throw InvalidArgument("give exactly one of an input CSV or --visibility");
  }
  CommandResult result;
  result.parameters = {{"input", o.input ? nlohmann::json(*o.input) : nlohmann::json(nullptr)},
                       {"visibility", o.visibility ? nlohmann::json(*o.visibility) : nlohmann::json(nullptr)},
                       {"corrected", o.corrected},
                       {"mu", o.mu ? nlohmann::json(*o.mu) : nlohmann::json(nullptr)},
                       {"signal_mu", o.signal_mu},
                       {"nu", o.nu},
                       {"decoy_theta0", o.decoy_theta0},
                       {"reference_visibility", o.reference_visibility},
                       {"rel_tol", o.rel_tol},
                       {"n_max", g.n_max}};

  nlohmann::json doc;
  double raw = 0.0;
  if (o.input) {
    const auto fit = fit_fringe(read_fringe_csv_file(*o.input));
    raw = fit.visibility;
    doc["fit"] = fit_json(fit);
  } else {
    raw = *o.visibility;
  }
  const double corrected =
      o.corrected ? correct_visibility(raw, 1.0).corrected : correct_visibility(raw, o.reference_visibility).corrected;

  TargetTable targets(g.n_max, o.rel_tol);
  nlohmann::json checks = nlohmann::json::array();
  nlohmann::json warnings = nlohmann::json::array();
  bool pass = true;
  const auto add_check = [&](const std::string& name, const TargetVisibility& t) {
    const bool ok = corrected <= t.visibility_star;
    pass = pass && ok;
    checks.push_back({{"name", name},
                      {"target_visibility", t.visibility_star},
                      {"sigma_star", t.sigma_star},
                      {"margin", t.visibility_star - corrected},
                      {"pass", ok},
                      {"parameters", t.params}});
  };
  if (o.mu) {
    require_nonnegative(*o.mu, "mu");
    add_check("coin_imbalance", targets.coin_imbalance_strictest(*o.mu));
  } else {
    warnings.push_back("no --mu given: coin-imbalance check skipped");
  }
  require_nonnegative(o.signal_mu, "signal mu");
  require_nonnegative(o.nu, "nu");
  add_check("decoy", targets.decoy(o.signal_mu, o.nu, o.decoy_theta0));

  doc["verdict"] = pass ? "PASS" : "FAIL";
  doc["visibility_raw"] = raw;
  doc["visibility_corrected"] = corrected;
  doc["reference_visibility"] = o.corrected ? 1.0 : o.reference_visibility;
  doc["sigma_equivalent"] = number_or_null(sigma_or_inf(corrected));
  doc["checks"] = checks;
  doc["warnings"] = warnings;

  if (format_or(g, Format::Json) == Format::Json) {
    result.contents = dump_json(doc);
  } else {
    Table table{{"check", "target_visibility", "sigma_star", "visibility_corrected", "margin", "pass"}, {}};
    for (const auto& c : checks) {
      table.add({c["name"].get<std::string>(), c["target_visibility"].get<double>(), c["sigma_star"].get<double>(),
                 corrected, c["margin"].get<double>(), c["pass"].get<bool>()});
    }
    table.add({std::string("verdict"), Cell{}, Cell{}, corrected, Cell{}, pass});
    result.contents = render(table, {}, Format::Csv);
  }
  for (const auto& w : warnings) result.messages.push_back("warning: " + w.get<std::string>());
  result.messages.push_back(std::string("verdict: ") + (pass ? "PASS" : "FAIL") + " (corrected visibility " +
                            fmt(corrected) + ")");
  return result;
}

namespace {

void add_grid_options(CLI::App* sub, SigmaGrid& grid) {
  sub->add_option("--sigma-min", grid.min, "Smallest sigma of the sweep (rad)")->capture_default_str();
  sub->add_option("--sigma-max", grid.max, "Largest sigma of the sweep (rad)")->capture_default_str();
  sub->add_option("--sigma-step", grid.step, "Sweep step (rad)")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Phase-randomization analysis for gain-switched QKD sources", "phasecert"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions globals;
  std::string out_path, format;
  app.add_option("--out", out_path, "Output file (default: stdout)");
  app.add_option("--seed", globals.seed, "Random seed")->capture_default_str();
  app.add_option("--n-max", globals.n_max, "Photon-number cutoff")->check(CLI::Range(1, 170))->capture_default_str();
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));

  CoinImbalanceOptions coin;
  std::string coin_theta = "pi";
  auto* coin_cmd = app.add_subcommand("coin-imbalance", "Quantum-coin imbalance versus phase spread");
  coin_cmd->add_option("--mu", coin.mu, "Mean photon number per pulse pair")->required();
  coin_cmd->add_option("--theta0", coin_theta, "Central phase (radians or multiples of pi)")->capture_default_str();
  coin_cmd->add_option("--rel-tol", coin.rel_tol, "Convergence tolerance")->capture_default_str();
  add_grid_options(coin_cmd, coin.grid);

  DecoyOptions decoy;
  std::string decoy_theta = "pi";
  auto* decoy_cmd = app.add_subcommand("decoy", "Signal/decoy distinguishability versus phase spread");
  decoy_cmd->add_option("--mu", decoy.mu, "Signal mean photon number")->capture_default_str();
  decoy_cmd->add_option("--nu", decoy.nu, "Decoy mean photon number")->capture_default_str();
  decoy_cmd->add_option("--theta0", decoy_theta, "Central phase")->capture_default_str();
  decoy_cmd->add_option("--rel-tol", decoy.rel_tol, "Convergence tolerance")->capture_default_str();
  add_grid_options(decoy_cmd, decoy.grid);

  PovmOptions povm;
  std::vector<double> povm_p_inc;
  std::vector<std::string> povm_theta;
  auto* povm_cmd = app.add_subcommand("povm", "Optimal signal/decoy discrimination versus phase spread");
  povm_cmd->add_option("--mu", povm.mu, "Signal mean photon number")->capture_default_str();
  povm_cmd->add_option("--nu", povm.nu, "Decoy mean photon number")->capture_default_str();
  povm_cmd->add_option("--prior", povm.prior, "Prior probability of the signal")->capture_default_str();
  povm_cmd->add_option("--p-inc", povm_p_inc, "Inconclusive probabilities");
  povm_cmd->add_option("--theta0", povm_theta, "Central phases, paired with --p-inc");
  povm_cmd->add_option("--tol", povm.tol, "Duality-gap tolerance")->capture_default_str();
  povm_cmd->add_option("--max-iter", povm.max_iter, "Newton step budget per solve")->capture_default_str();
  add_grid_options(povm_cmd, povm.grid);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a fringe CSV");
  fit_cmd->add_option("input", fit.input, "Fringe CSV (phase_rad,intensity[,intensity_err])")->required();
  fit_cmd->add_option("--reference-visibility", fit.reference_visibility, "Interferometer visibility")
      ->capture_default_str();
  fit_cmd->add_flag("--mean-half", fit.mean_half, "Require intensities normalized to mean 0.5");

  SimulateOptions sim;
  double snr_db = 0.0;
  std::string sim_theta = "0";
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a pulse train through the interferometer");
  sim_cmd->add_option("--config", sim.config, "Drive config JSON")->required();
  sim_cmd->add_option("--model", sim.model, "Phase model")->check(CLI::IsMember({"gaussian", "uniform"}))
      ->capture_default_str();
  sim_cmd->add_option("--sigma", sim.sigma, "Phase-walk standard deviation (rad)")->capture_default_str();
  sim_cmd->add_option("--theta0", sim_theta, "Phase-walk mean step")->capture_default_str();
  sim_cmd->add_option("--accumulations", sim.accumulations, "Pulse pairs averaged per phase point")
      ->capture_default_str();
  auto* snr_opt = sim_cmd->add_option("--snr-db", snr_db, "Noise level; noiseless when omitted");
  sim_cmd->add_option("--reference-visibility", sim.instrument_visibility, "Interferometer visibility")
      ->capture_default_str();
  sim_cmd->add_option("--contrast-factor", sim.contrast_factor, "Pulse amplitude-imbalance factor")
      ->capture_default_str();
  sim_cmd->add_option("--points", sim.points, "Phase points over one period")->capture_default_str();
  sim_cmd->add_option("--tau-ph", sim.tau_ph_ps, "Cavity photon lifetime (ps)")->capture_default_str();

  CertifyOptions cert;
  std::string cert_input, cert_theta = "pi";
  double cert_visibility = 0.0, cert_mu = 0.0;
  auto* cert_cmd = app.add_subcommand("certify", "Compare a visibility with the security targets");
  auto* cert_in_opt = cert_cmd->add_option("input", cert_input, "Fringe CSV to fit");
  auto* cert_vis_opt = cert_cmd->add_option("--visibility", cert_visibility, "Fitted visibility");
  cert_in_opt->excludes(cert_vis_opt);
  cert_cmd->add_flag("--corrected", cert.corrected, "The visibility is already instrument-corrected");
  auto* cert_mu_opt = cert_cmd->add_option("--mu", cert_mu, "Mean photon number for the coin-imbalance check");
  cert_cmd->add_option("--signal-mu", cert.signal_mu, "Signal mean photon number")->capture_default_str();
  cert_cmd->add_option("--nu", cert.nu, "Decoy mean photon number")->capture_default_str();
  cert_cmd->add_option("--decoy-theta0", cert_theta, "Signal/decoy relative phase")->capture_default_str();
  cert_cmd->add_option("--reference-visibility", cert.reference_visibility, "Interferometer visibility")
      ->capture_default_str();
  cert_cmd->add_option("--rel-tol", cert.rel_tol, "Convergence tolerance")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  if (!out_path.empty()) globals.out = out_path;
  if (format == "csv") globals.format = Format::Csv;
  if (format == "json") globals.format = Format::Json;

  try {
    CommandResult result;
    std::string command;
    if (coin_cmd->parsed()) {
      command = "coin-imbalance";
      coin.theta0 = parse_angle(coin_theta);
      result = coin_imbalance_command(coin, globals);
    } else if (decoy_cmd->parsed()) {
      command = "decoy";
      decoy.theta0 = parse_angle(decoy_theta);
      result = decoy_command(decoy, globals);
    } else if (povm_cmd->parsed()) {
      command = "povm";
      if (!povm_p_inc.empty() || !povm_theta.empty()) {
        std::vector<double> thetas;
        for (const auto& t : povm_theta) thetas.push_back(parse_angle(t));
        if (povm_p_inc.empty()) povm_p_inc.push_back(0.983);
        if (thetas.empty()) thetas.push_back(0.0);
        const std::size_t n = std::max(povm_p_inc.size(), thetas.size());
        if ((povm_p_inc.size() != n && povm_p_inc.size() != 1) || (thetas.size() != n && thetas.size() != 1)) {
          throw InvalidArgument("--p-inc and --theta0 need equal lengths or a single value");
        }
        povm.sets.clear();
        for (std::size_t i = 0; i < n; ++i) {
          povm.sets.push_back({povm_p_inc[povm_p_inc.size() == 1 ? 0 : i], thetas[thetas.size() == 1 ? 0 : i]});
        }
      }
      result = povm_command(povm, globals);
    } else if (fit_cmd->parsed()) {
      command = "fit";
      result = fit_command(fit, globals);
    } else if (sim_cmd->parsed()) {
      command = "simulate";
      sim.theta0 = parse_angle(sim_theta);
      if (snr_opt->count() > 0) sim.snr_db = snr_db;
      result = simulate_command(sim, globals);
    } else {
      command = "certify";
      if (!cert_input.empty()) cert.input = cert_input;
      if (cert_vis_opt->count() > 0) cert.visibility = cert_visibility;
      if (cert_mu_opt->count() > 0) cert.mu = cert_mu;
      cert.decoy_theta0 = parse_angle(cert_theta);
      result = certify_command(cert, globals);
    }

    RunManifest manifest{command, result.parameters, globals.seed, tool_version(), manifest_timestamp()};
    manifest.parameters["format"] = format.empty() ? nlohmann::json(nullptr) : nlohmann::json(format);
    emit(globals.out, result.contents, out, manifest);
    for (const auto& [suffix, contents] : result.side_files) {
      if (globals.out) {
        emit(*globals.out + suffix, contents, out, manifest);
      } else {
        err << contents;
      }
    }
    std::ostream& log = globals.out ? out : err;
    for (const auto& line : result.messages) log << line << '\n';
    return result.exit_code;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
}

}  // namespace phasecert::cli
