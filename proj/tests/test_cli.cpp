#include "test_support.hpp"

#include "traceinv/cli.hpp"
#include "traceinv/io.hpp"
#include "traceinv/study.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace traceinv;
using namespace traceinv::testing;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = TRACEINV_SOURCE_DIR;

struct RunResult {
  int code;
  std::string out, err;
};

RunResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "traceinv");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("traceinv_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Study defaults without a seed or SRR file, and a short chain.
fs::path write_small_config(const fs::path& dir) {
  std::ofstream os(dir / "small.ini");
  os << "[hmc]\nn_samples = 300\nn_burnin = 50\n";
  return dir / "small.ini";
}

std::vector<std::vector<double>> numeric_rows(const fs::path& p) {
  const CsvTable t = read_csv(p);
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    rows.emplace_back();
    for (std::size_t c = 0; c < t.header.size(); ++c) rows.back().push_back(t.number(r, c));
  }
  return rows;
}

}  // namespace

TEST_CASE("missing inputs and bad arguments exit with code 2") {
  const fs::path dir = scratch_dir("errors");
  CHECK(run({"simulate", "--config", (dir / "nope.ini").string()}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  // no seed in the config and none on the command line
  CHECK(run({"simulate", "--config", write_small_config(dir).string(), "--out", dir.string()}).code == 2);
  {
    std::ofstream os(dir / "typo.ini");
    os << "[domain]\ngrid_cels = 10\n";
  }
  const RunResult typo = run({"simulate", "--config", (dir / "typo.ini").string(), "--seed", "1"});
  CHECK(typo.code == 2);
  CHECK(typo.err.find("grid_cels") != std::string::npos);
  {
    std::ofstream os(dir / "missing_inv.ini");
    os << "[calibrate]\ninventory = nowhere.csv\n";
  }
  CHECK(run({"calibrate", "--config", (dir / "missing_inv.ini").string(), "--seed", "1"}).code == 2);
  fs::remove_all(dir);
}

TEST_CASE("simulate writes a deterministic four-file dataset") {
  const fs::path dir = scratch_dir("simulate");
  const fs::path cfg = write_small_config(dir);
  REQUIRE(run({"simulate", "--config", cfg.string(), "--seed", "1", "--out", (dir / "a").string()}).code == 0);
  REQUIRE(run({"simulate", "--config", cfg.string(), "--seed", "1", "--out", (dir / "b").string()}).code == 0);
  for (const char* f : {"flux_truth.csv", "mole_truth.csv", "observations.csv", "srr.bin"}) {
    REQUIRE(fs::exists(dir / "a" / f));
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  CHECK(std::distance(fs::directory_iterator(dir / "a"), fs::directory_iterator()) == 4);

  const StudyConfig sc = load_study_config(cfg);
  const Dataset d = read_dataset(sc, dir / "a");
  CHECK(d.flux_truth.size() == 100);
  CHECK(d.mole_truth.size() == 600);
  CHECK(d.z.size() == 500);
  CHECK(d.srr.n_steps() == 100);
  CHECK(d.srr.n_sites() == 6);
  CHECK(d.srr.n_cells() == 100);
  CHECK(slurp(dir / "a" / "flux_truth.csv").rfind("# traceinv ", 0) == 0);
  CHECK(slurp(dir / "a" / "flux_truth.csv").find("seed=1 ") != std::string::npos);

  REQUIRE(run({"simulate", "--config", cfg.string(), "--seed", "2", "--out", (dir / "c").string()}).code == 0);
  CHECK(slurp(dir / "a" / "observations.csv") != slurp(dir / "c" / "observations.csv"));
  fs::remove_all(dir);
}

TEST_CASE("the reference SRR trims the flux domain at 4.3") {
  const StudyConfig cfg = load_study_config(kSource / "configs" / "study.ini");
  const Dataset d = simulate_dataset(cfg, cfg.require_seed());
  const Inference inf = prepare_inference(cfg, d, cfg.resolved_prior());
  CHECK(inf.flux_grid.centroids().col(0).maxCoeff() == doctest::Approx(4.3).epsilon(1e-12));
  for (std::size_t u = 0; u < static_cast<std::size_t>(d.domains.flux_grid.size()); ++u) {
    if (d.domains.flux_grid.centroids()(static_cast<Index>(u), 0) > 4.3 + 1e-9)
      CHECK(std::find(inf.kept_cells.begin(), inf.kept_cells.end(), u) == inf.kept_cells.end());
  }
}

TEST_CASE("estimate, sample, score and predict run end to end") {
  const fs::path dir = scratch_dir("pipeline");
  const fs::path cfg = write_small_config(dir);
  const std::string out = dir.string();
  REQUIRE(run({"simulate", "--config", cfg.string(), "--seed", "3", "--out", (dir / "data").string()}).code == 0);
  const std::string data = (dir / "data").string();
  REQUIRE(run({"estimate", "--config", cfg.string(), "--seed", "3", "--data", data, "--out", out}).code == 0);
  const CsvTable theta = read_csv(dir / "theta.csv");
  CHECK(theta.header == std::vector<std::string>{"sigma2_zeta", "a", "d"});
  CHECK(theta.number(0, 0) > 0.0);
  CHECK(read_csv(dir / "em_trace.csv").rows.size() >= 1);

  REQUIRE(run({"sample", "--config", cfg.string(), "--seed", "3", "--data", data, "--out", out}).code == 0);
  const PosteriorChain chain = read_chain_binary(dir / "chain.bin");
  CHECK(chain.n_retained() == 250);
  CHECK(chain.flux.minCoeff() > 0.0);
  const std::string first_chain = slurp(dir / "chain.bin");
  REQUIRE(run({"sample", "--config", cfg.string(), "--seed", "3", "--data", data, "--out", out}).code == 0);
  CHECK(slurp(dir / "chain.bin") == first_chain);

  REQUIRE(run({"score", "--config", cfg.string(), "--seed", "3", "--data", data, "--out", out}).code == 0);
  const std::string scores = slurp(dir / "scores.txt");
  CHECK(scores.find("S1,f") != std::string::npos);
  CHECK(scores.find("0.3") != std::string::npos);

  REQUIRE(run({"predict", "--config", cfg.string(), "--seed", "3", "--data", data, "--out", out}).code == 0);
  for (const char* f : {"flux_quantiles.csv", "mole_quantiles.csv"}) {
    const CsvTable t = read_csv(dir / f);
    const std::size_t q05 = t.column("q0.05");
    const auto rows = numeric_rows(dir / f);
    CHECK(!rows.empty());
    for (const auto& r : rows)
      for (std::size_t k = q05 + 1; k < q05 + 5; ++k) CHECK(r[k] >= r[k - 1]);
  }

  // a missing chain is an input error
  fs::remove(dir / "chain.bin");
  CHECK(run({"predict", "--config", cfg.string(), "--seed", "3", "--data", data, "--out", out}).code == 2);
  fs::remove_all(dir);
}

TEST_CASE("calibrate on the shipped inventory picks spherical and matches the golden prior file") {
  const fs::path dir = scratch_dir("calibrate");
  const fs::path cfg = kSource / "configs" / "study.ini";
  REQUIRE(run({"calibrate", "--config", cfg.string(), "--out", dir.string()}).code == 0);
  const FluxPriorParams p = read_prior_file(dir / "prior.ini");
  CHECK(p.variogram.model == VariogramModel::spherical);
  CHECK(std::abs(p.variogram.range - 3.3) / 3.3 < 0.25);
  const std::string report = slurp(dir / "calibration_report.txt");
  CHECK(report.find("exponential") != std::string::npos);
  CHECK(report.find("gaussian") != std::string::npos);

  const FluxPriorParams golden = read_prior_file(kSource / "data" / "golden_prior.ini");
  CHECK(p.variogram.model == golden.variogram.model);
  CHECK(p.variogram.nugget == doctest::Approx(golden.variogram.nugget).epsilon(1e-9));
  CHECK(p.variogram.partial_sill == doctest::Approx(golden.variogram.partial_sill).epsilon(1e-9));
  CHECK(p.variogram.range == doctest::Approx(golden.variogram.range).epsilon(1e-9));
  CHECK(p.log_mean == doctest::Approx(golden.log_mean).epsilon(1e-12));

  const fs::path again = dir / "again";
  REQUIRE(run({"calibrate", "--config", cfg.string(), "--out", again.string()}).code == 0);
  CHECK(slurp(dir / "prior.ini") == slurp(again / "prior.ini"));
  fs::remove_all(dir);
}
