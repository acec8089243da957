#pragma once

#include "traceinv/bivariate_moments.hpp"
#include "traceinv/domains.hpp"
#include "traceinv/flux_process.hpp"
#include "traceinv/hmc.hpp"
#include "traceinv/inventory_calibration.hpp"
#include "traceinv/laplace_em.hpp"
#include "traceinv/scoring.hpp"
#include "traceinv/srr.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace traceinv {

/// Settings for the 1D simulation study and its CLI pipeline. Parsed from a
/// sectioned key = value file; relative paths resolve against the file's
/// directory.
struct StudyConfig {
  std::filesystem::path base_dir;
  std::optional<std::uint64_t> seed;
  std::uint64_t config_hash = 0;

  // [domain]
  double grid_first = -9.9;
  double grid_step = 0.2;
  Index grid_cells = 100;
  Index n_steps = 100;
  double step_hours = 2.0;
  std::vector<double> stations{-5.3, -4.5, -3.9, -3.7, -0.1};
  std::vector<double> prediction_sites{0.3};
  /// When positive, the mole grid is the flux grid and this many observation
  /// locations are drawn uniformly (with replacement) from its nodes.
  Index dense_observations = 0;
  double trim_threshold = 0.0;

  // [prior]
  PriorMode prior_mode = PriorMode::density;
  FluxPriorParams prior{{0.0053, 0.80, 3.3, VariogramModel::spherical}, 5.0};
  std::filesystem::path prior_file;  // overrides the inline prior when set

  // [truth]
  DiscrepancyParams theta_true{2500.0, 0.8, 1.0};
  double noise_variance = 10.0;
  PlumeGpParams plume;
  std::filesystem::path srr_file;    // fixed SRR; synthesized from the seed when empty

  // [em]
  DiscrepancyParams theta0{1000.0, 0.2, 0.2};
  EmConfig em;

  // [hmc]
  HmcConfig hmc;
  bool laplace_mass = true;    // false: identity mass in log coordinates
  bool pilot_tune = false;
  int pilot_iterations = 500;

  // [predict]
  std::vector<double> quantiles{0.05, 0.25, 0.5, 0.75, 0.95};
  double interval = 0.90;

  // [calibrate]
  std::filesystem::path inventory;
  int n_bins = 15;
  double max_lag = 0.0;

  std::uint64_t require_seed() const;
  FluxPriorParams resolved_prior() const;
};

/// Config errors name the offending section and key.
StudyConfig parse_study_config(const std::string& text, const std::filesystem::path& base_dir = ".");
StudyConfig load_study_config(const std::filesystem::path& path);

/// Prior parameters file as written by the calibrate command.
FluxPriorParams read_prior_file(const std::filesystem::path& path);
std::string format_prior_file(const FluxPriorParams& params);

struct StudyDomains {
  SpatialGrid flux_grid;
  SpatialGrid mole_grid;
  std::vector<std::size_t> observed_sites;     // mole-grid indices with observations
  std::vector<std::size_t> prediction_sites;   // mole-grid indices without observations
  std::vector<std::vector<Index>> obs_columns; // per time, mole-grid index of each observation
};

/// Flux grid, mole grid (stations then prediction sites, or the flux nodes
/// in the dense variant) and the observation layout. `layout_rng` is used
/// only by the dense variant.
StudyDomains build_domains(const StudyConfig& cfg, Rng& layout_rng);

struct Dataset {
  StudyDomains domains;
  SrrTensor srr;               // over (time, mole grid, full flux grid)
  VectorXd flux_truth;         // full flux grid
  VectorXd mole_truth;         // stacked (t, s)
  VectorXd validation;         // mole_truth plus independent measurement noise
  ObservationIncidence incidence;
  VectorXd z;
};

/// Simulates the study data from `seed` (streams "srr", "flux",
/// "discrepancy", "noise", "layout"). A given `srr` replaces both the
/// configured SRR file and the synthesized one.
Dataset simulate_dataset(const StudyConfig& cfg, std::uint64_t seed, const SrrTensor* srr = nullptr);

/// Loads the SRR named in the config, or synthesizes one from the seed.
SrrTensor study_srr(const StudyConfig& cfg, const StudyDomains& domains, std::uint64_t seed);

void write_dataset(const std::filesystem::path& dir, const Dataset& data, const std::string& meta);
Dataset read_dataset(const StudyConfig& cfg, const std::filesystem::path& dir);

/// Trimmed inference problem for one prior.
struct Inference {
  std::vector<std::size_t> kept_cells;   // indices into the full flux grid
  SpatialGrid flux_grid;                 // trimmed
  std::shared_ptr<const LognormalFluxPrior> prior;
  std::shared_ptr<const InversionProblem> problem;
  VectorXd init_flux;                    // exp(mu + sigma^2 / 2), in the prior's units
  PriorMode mode = PriorMode::density;

  /// Converts draws or modes from the prior's units to flux density.
  VectorXd to_density(const VectorXd& y) const;
  MatrixXd to_density_rows(const MatrixXd& draws) const;
};

Inference prepare_inference(const StudyConfig& cfg, const Dataset& data, const FluxPriorParams& prior);

EmResult estimate_theta(const StudyConfig& cfg, const Inference& inf);

/// HMC configured from `cfg.hmc` with the Laplace mass at `state` and the
/// seed taken from the "hmc" stream of `seed`.
PosteriorChain sample_posterior(const StudyConfig& cfg, const Inference& inf, const InversionState& state,
                                std::uint64_t seed);

struct CoverageResult {
  long hits = 0;
  long total = 0;
  double rate() const { return total > 0 ? static_cast<double>(hits) / static_cast<double>(total) : 0.0; }
};

/// Central `interval` predictive intervals for the noisy observation at each
/// (t, site) in `sites`, from the chain's mole draws plus fresh measurement
/// noise; counted against the dataset's validation values.
CoverageResult predictive_coverage(const Dataset& data, const PosteriorChain& chain, double noise_variance,
                                   double interval, const std::vector<std::size_t>& sites, Rng& rng);

/// S1,f and S2,f on the trimmed cells and S1,m at every prediction site.
ScoreReport score_chain(const Dataset& data, const Inference& inf, const PosteriorChain& chain);

}  // namespace traceinv
