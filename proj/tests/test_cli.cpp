#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "oracles.hpp"
#include "output.hpp"

namespace fs = std::filesystem;
using namespace phasecert::cli;

namespace {

const std::string kSource = PHASECERT_SOURCE_DIR;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("phasecert_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void check_schema(const std::string& schema_name, const nlohmann::json& doc) {
  const auto schema = oracle::load_json(kSource + "/schemas/" + schema_name);
  const auto errors = oracle::validate_schema(schema, doc);
  CAPTURE(schema_name);
  for (const auto& e : errors) CAPTURE(e);
  CHECK(errors.empty());
  if (!errors.empty()) MESSAGE(errors.front());
}

struct EpochGuard {
  EpochGuard() { ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1); }
  ~EpochGuard() { ::unsetenv("SOURCE_DATE_EPOCH"); }
};

}  // namespace

TEST_CASE("angles accept multiples of pi") {
  CHECK(parse_angle("pi") == doctest::Approx(3.141592653589793));
  CHECK(parse_angle("-pi") == doctest::Approx(-3.141592653589793));
  CHECK(parse_angle("0.5pi") == doctest::Approx(1.5707963267948966));
  CHECK(parse_angle("pi/2") == doctest::Approx(1.5707963267948966));
  CHECK(parse_angle("1.25") == 1.25);
  CHECK_THROWS(parse_angle("half"));
}

TEST_CASE("usage errors exit with 2") {
  CHECK(invoke({}).code == kUsage);
  CHECK(invoke({"frobnicate"}).code == kUsage);
  CHECK(invoke({"coin-imbalance"}).code == kUsage);
  CHECK(invoke({"coin-imbalance", "--mu", "-1"}).code == kUsage);
  CHECK(invoke({"--format", "xml", "decoy"}).code == kUsage);
  CHECK(invoke({"certify"}).code == kUsage);
  CHECK(invoke({"--help"}).code == kSuccess);
}

TEST_CASE("data errors exit with 3 and name the row") {
  const auto dir = scratch_dir("data_errors");
  {
    std::ofstream bad(dir / "bad.csv");
    bad << "phase_rad,intensity\n0,0.5\n1,0.6\n2,oops\n";
  }
  const auto r = invoke({"fit", (dir / "bad.csv").string()});
  CHECK(r.code == kData);
  CHECK(r.err.find("row 3") != std::string::npos);
  CHECK(invoke({"fit", (dir / "missing.csv").string()}).code == kData);

  {
    std::ofstream cfg(dir / "drive.json");
    cfg << R"({"i_pp_ma": 73.3, "i_dc": 30.95, "i_th_ma": 9.5, "f_ghz": 10})";
  }
  const auto s = invoke({"simulate", "--config", (dir / "drive.json").string()});
  CHECK(s.code == kData);
  CHECK(s.err.find("i_dc") != std::string::npos);
  CHECK(s.err.find("i_dc_ma") != std::string::npos);
}

TEST_CASE("non-convergence exits with 4") {
  const auto r = invoke({"--n-max", "6", "coin-imbalance", "--mu", "0.01", "--sigma-max", "1", "--sigma-step", "0.5"});
  CHECK(r.code == kNonConvergence);
  CHECK(r.out.rfind("sigma,delta,relative_deviation\n", 0) == 0);
}

TEST_CASE("coin imbalance of vacuum is a zero column") {
  const auto r = invoke({"--n-max", "6", "coin-imbalance", "--mu", "0", "--sigma-max", "1", "--sigma-step", "0.5"});
  CHECK(r.code == kSuccess);
  std::istringstream rows(r.out);
  std::string line;
  std::getline(rows, line);
  CHECK(line == "sigma,delta,relative_deviation");
  int count = 0;
  while (std::getline(rows, line)) {
    CHECK(line.substr(line.find(',') + 1) == "0,0");
    ++count;
  }
  CHECK(count == 3);
}

TEST_CASE("JSON outputs and manifests validate against the shipped schemas") {
  EpochGuard epoch;
  const auto dir = scratch_dir("schemas");
  const auto path = [&](const std::string& name) { return (dir / name).string(); };

  REQUIRE(invoke({"--format", "json", "--n-max", "6", "--out", path("coin.json"), "coin-imbalance", "--mu", "0.01",
                  "--sigma-max", "4", "--sigma-step", "0.5"})
              .code == kSuccess);
  check_schema("table.schema.json", oracle::load_json(path("coin.json")));
  const auto manifest = oracle::load_json(path("coin.json.manifest.json"));
  check_schema("manifest.schema.json", manifest);
  CHECK(manifest["timestamp"] == "2023-11-14T22:13:20Z");
  CHECK(manifest["command"] == "coin-imbalance");

  REQUIRE(invoke({"--format", "json", "--n-max", "6", "--out", path("decoy.json"), "decoy", "--sigma-step", "0.5"})
              .code == kSuccess);
  check_schema("table.schema.json", oracle::load_json(path("decoy.json")));

  REQUIRE(invoke({"--format", "json", "--n-max", "8", "--out", path("povm.json"), "povm", "--p-inc", "0.712",
                  "--theta0", "pi", "--sigma-max", "1", "--sigma-step", "0.5"})
              .code == kSuccess);
  check_schema("table.schema.json", oracle::load_json(path("povm.json")));

  const std::string fringe = kSource + "/data/synthetic_fringe_lambda_m1p2.csv";
  REQUIRE(invoke({"--out", path("fit.json"), "fit", fringe}).code == kSuccess);
  const auto fit = oracle::load_json(path("fit.json"));
  check_schema("fringe_fit.schema.json", fit);
  CHECK(fit["visibility"].get<double>() >= 0.019);
  CHECK(fit["visibility"].get<double>() <= 0.025);

  const std::string drive = kSource + "/data/drive_lambda_m1p6.json";
  REQUIRE(invoke({"--out", path("sim.csv"), "simulate", "--config", drive, "--sigma", "1.12"}).code == kSuccess);
  const auto derived = oracle::load_json(path("sim.csv.derived.json"));
  check_schema("simulate_derived.schema.json", derived);
  check_schema("manifest.schema.json", oracle::load_json(path("sim.csv.derived.json.manifest.json")));
  CHECK(std::abs(derived["lambda_norm"].get<double>() + 1.6) < 0.02);
  CHECK(std::abs(derived["turn_off_duration_ps"].get<double>() - 30.0) < 1.0);

  REQUIRE(invoke({"--format", "json", "--out", path("sim.json"), "simulate", "--config", drive}).code == kSuccess);
  check_schema("simulate_output.schema.json", oracle::load_json(path("sim.json")));

  REQUIRE(invoke({"--n-max", "8", "--out", path("cert.json"), "certify", "--visibility", "0.004", "--corrected",
                  "--mu", "0.01"})
              .code == kSuccess);
  const auto cert = oracle::load_json(path("cert.json"));
  check_schema("certify.schema.json", cert);
  CHECK(cert["verdict"] == "PASS");
}

TEST_CASE("fixed seed gives byte-identical output") {
  EpochGuard epoch;
  const auto dir = scratch_dir("determinism");
  const std::string drive = kSource + "/data/drive_lambda_m0p33.json";
  for (const char* name : {"a.csv", "b.csv"}) {
    REQUIRE(invoke({"--seed", "77", "--out", (dir / name).string(), "simulate", "--config", drive, "--sigma", "0.8",
                    "--snr-db", "17"})
                .code == kSuccess);
  }
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(slurp(dir / "a.csv.derived.json") == slurp(dir / "b.csv.derived.json"));
  CHECK(slurp(dir / "a.csv.manifest.json") == slurp(dir / "b.csv.manifest.json"));
  REQUIRE(invoke({"--seed", "78", "--out", (dir / "c.csv").string(), "simulate", "--config", drive, "--sigma", "0.8",
                  "--snr-db", "17"})
              .code == kSuccess);
  CHECK(slurp(dir / "a.csv") != slurp(dir / "c.csv"));
  for (const auto& entry : fs::directory_iterator(dir)) CHECK(entry.path().string().find(".tmp.") == std::string::npos);
}

TEST_CASE("noiseless simulation recovers the instrument visibility") {
  SimulateOptions o;
  o.config = kSource + "/data/drive_lambda_m1p6.json";
  const auto r = simulate_command(o, GlobalOptions{});
  const auto derived = nlohmann::json::parse(r.side_files.at(0).second);
  CHECK(derived["fitted_visibility"].get<double>() == doctest::Approx(0.95).epsilon(1e-9));
  CHECK(derived["corrected_visibility"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("certify verdicts") {
  GlobalOptions g;
  g.n_max = 8;
  g.format = Format::Json;
  CertifyOptions o;
  o.corrected = true;
  o.mu = 0.01;

  const auto verdict = [&](double theta) {
    o.visibility = theta;
    return nlohmann::json::parse(certify_command(o, g).contents)["verdict"].get<std::string>();
  };
  CHECK(verdict(0.004) == "PASS");
  CHECK(verdict(0.0) == "PASS");
  CHECK(verdict(0.08) == "FAIL");

  bool failed = false;
  for (double theta = 0.1; theta >= 0.0; theta -= 0.0025) {
    const bool pass = verdict(std::max(theta, 0.0)) == "PASS";
    if (pass) failed = true;
    if (failed) CHECK(pass);
  }

  o.mu.reset();
  o.visibility = 0.01;
  const auto doc = nlohmann::json::parse(certify_command(o, g).contents);
  CHECK(doc["checks"].size() == 1);
  CHECK(doc["warnings"].size() == 1);
}

TEST_CASE("CSV writer formats non-finite values") {
  Table t{{"a", "b"}, {}};
  t.add({1.5, std::numeric_limits<double>::infinity()});
  std::ostringstream out;
  write_csv(out, t);
  CHECK(out.str() == "a,b\n1.5,inf\n");
  CHECK(table_json(t, {})["rows"][0][1].is_null());
  CHECK_THROWS(t.add({1.0}));
}
