#include "traceinv/study.hpp"

#include "traceinv/errors.hpp"
#include "traceinv/io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace traceinv {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"study", {"seed"}},
      {"domain",
       {"grid_first", "grid_step", "grid_cells", "n_steps", "step_hours", "stations", "prediction_sites",
        "dense_observations", "trim_threshold"}},
      {"prior", {"mode", "model", "nugget", "partial_sill", "range", "log_mean", "file"}},
      {"truth",
       {"sigma2_zeta", "a", "d", "noise_variance", "plume_sigma", "plume_range", "plume_ar", "plume_mean", "srr_file"}},
      {"em", {"sigma2_zeta", "a", "d", "max_iter", "m_step_steps", "tol", "mode_tol", "mode_max_iter"}},
      {"hmc", {"leapfrog_steps", "mass", "step_low", "step_high", "n_samples", "n_burnin", "pilot_tune", "pilot_iterations"}},
      {"predict", {"quantiles", "interval"}},
      {"calibrate", {"inventory", "n_bins", "max_lag"}},
  };
  return keys;
}

std::vector<double> parse_list(const std::string& s, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item.substr(b), &used));
    } catch (const std::exception&) {
      fail(ErrorKind::Config, key + ": not a number list: '" + s + "'");
    }
  }
  return out;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  template <typename T>
  void get(const std::string& key, T& out) const {
    const auto v = tree_.get_optional<std::string>(key);
    if (!v) return;
    std::istringstream is(*v);
    T tmp{};
    is >> tmp;
    if (is.fail() || !(is >> std::ws).eof()) fail(ErrorKind::Config, key + ": cannot parse '" + *v + "'");
    out = tmp;
  }

  void get_bool(const std::string& key, bool& out) const {
    const auto v = tree_.get_optional<std::string>(key);
    if (!v) return;
    if (*v == "true" || *v == "1" || *v == "yes")
      out = true;
    else if (*v == "false" || *v == "0" || *v == "no")
      out = false;
    else
      fail(ErrorKind::Config, key + ": expected true or false, got '" + *v + "'");
  }

  void get_list(const std::string& key, std::vector<double>& out) const {
    const auto v = tree_.get_optional<std::string>(key);
    if (v) out = parse_list(*v, key);
  }

  std::optional<std::string> text(const std::string& key) const {
    const auto v = tree_.get_optional<std::string>(key);
    return v ? std::optional<std::string>(*v) : std::nullopt;
  }

 private:
  const pt::ptree& tree_;
};

}  // namespace

std::uint64_t StudyConfig::require_seed() const {
  if (!seed) fail(ErrorKind::Config, "a seed is required ([study] seed or --seed)");
  return *seed;
}

FluxPriorParams StudyConfig::resolved_prior() const {
  return prior_file.empty() ? prior : read_prior_file(prior_file);
}

StudyConfig parse_study_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorKind::Config, std::string("malformed config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) fail(ErrorKind::Config, "unknown section [" + section + "]");
    if (body.empty() && !body.data().empty()) fail(ErrorKind::Config, "key outside a section: " + section);
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) fail(ErrorKind::Config, "unknown key '" + key + "' in [" + section + "]");
  }

  StudyConfig c;
  c.base_dir = base_dir;
  c.config_hash = fnv1a64(text);
  const Reader r(tree);
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };

  if (const auto s = r.text("study.seed")) {
    std::uint64_t seed = 0;
    r.get("study.seed", seed);
    c.seed = seed;
  }

  r.get("domain.grid_first", c.grid_first);
  r.get("domain.grid_step", c.grid_step);
  r.get("domain.grid_cells", c.grid_cells);
  r.get("domain.n_steps", c.n_steps);
  r.get("domain.step_hours", c.step_hours);
  r.get_list("domain.stations", c.stations);
  r.get_list("domain.prediction_sites", c.prediction_sites);
  r.get("domain.dense_observations", c.dense_observations);
  r.get("domain.trim_threshold", c.trim_threshold);

  if (const auto m = r.text("prior.mode")) {
    if (*m == "density")
      c.prior_mode = PriorMode::density;
    else if (*m == "total_per_cell")
      c.prior_mode = PriorMode::total_per_cell;
    else
      fail(ErrorKind::Config, "prior.mode: expected density or total_per_cell");
  }
  if (const auto m = r.text("prior.model")) {
    try {
      c.prior.variogram.model = parse_variogram_model(*m);
    } catch (const Error& e) {
      fail(ErrorKind::Config, std::string("prior.model: ") + e.what());
    }
  }
  r.get("prior.nugget", c.prior.variogram.nugget);
  r.get("prior.partial_sill", c.prior.variogram.partial_sill);
  r.get("prior.range", c.prior.variogram.range);
  r.get("prior.log_mean", c.prior.log_mean);
  if (const auto f = r.text("prior.file")) c.prior_file = resolve(*f);

  r.get("truth.sigma2_zeta", c.theta_true.sigma2);
  r.get("truth.a", c.theta_true.a);
  r.get("truth.d", c.theta_true.d);
  r.get("truth.noise_variance", c.noise_variance);
  r.get("truth.plume_sigma", c.plume.sigma);
  r.get("truth.plume_range", c.plume.spatial_range);
  r.get("truth.plume_ar", c.plume.temporal_ar);
  r.get("truth.plume_mean", c.plume.mean);
  if (const auto f = r.text("truth.srr_file")) c.srr_file = resolve(*f);

  r.get("em.sigma2_zeta", c.theta0.sigma2);
  r.get("em.a", c.theta0.a);
  r.get("em.d", c.theta0.d);
  r.get("em.max_iter", c.em.max_iter);
  r.get("em.m_step_steps", c.em.m_step_steps);
  r.get("em.tol", c.em.tol);
  r.get("em.mode_tol", c.em.mode.grad_tol);
  r.get("em.mode_max_iter", c.em.mode.max_iter);

  r.get("hmc.leapfrog_steps", c.hmc.leapfrog_steps);
  r.get("hmc.step_low", c.hmc.step_low);
  r.get("hmc.step_high", c.hmc.step_high);
  r.get("hmc.n_samples", c.hmc.n_samples);
  r.get("hmc.n_burnin", c.hmc.n_burnin);
  if (const auto m = r.text("hmc.mass")) {
    if (*m == "laplace")
      c.laplace_mass = true;
    else if (*m == "identity")
      c.laplace_mass = false;
    else
      fail(ErrorKind::Config, "hmc.mass: expected laplace or identity");
  }
  r.get_bool("hmc.pilot_tune", c.pilot_tune);
  r.get("hmc.pilot_iterations", c.pilot_iterations);

  r.get_list("predict.quantiles", c.quantiles);
  r.get("predict.interval", c.interval);

  if (const auto f = r.text("calibrate.inventory")) c.inventory = resolve(*f);
  r.get("calibrate.n_bins", c.n_bins);
  r.get("calibrate.max_lag", c.max_lag);

  // Validation up front so later stages fail fast.
  const auto bad = [](const std::string& m) { fail(ErrorKind::Config, m); };
  if (c.grid_cells < 1 || !(c.grid_step > 0.0)) bad("domain: need grid_cells >= 1 and grid_step > 0");
  if (c.n_steps < 2) bad("domain.n_steps must be at least 2");
  if (c.dense_observations < 0) bad("domain.dense_observations must be nonnegative");
  if (c.dense_observations == 0 && c.stations.empty()) bad("domain.stations is empty");
  if (c.trim_threshold < 0.0) bad("domain.trim_threshold must be nonnegative");
  if (!(c.noise_variance > 0.0)) bad("truth.noise_variance must be positive");
  try {
    c.theta_true.validate();
    c.theta0.validate();
    c.prior.variogram.validate();
    c.hmc.validate(1);
  } catch (const Error& e) {
    bad(e.what());
  }
  if (c.em.max_iter < 1 || c.em.m_step_steps < 1 || !(c.em.tol > 0.0)) bad("em: invalid iteration settings");
  for (double q : c.quantiles)
    if (!(q >= 0.0 && q <= 1.0)) bad("predict.quantiles must lie in [0, 1]");
  if (!(c.interval > 0.0 && c.interval < 1.0)) bad("predict.interval must lie in (0, 1)");
  for (const auto* p : {&c.prior_file, &c.srr_file, &c.inventory})
    if (!p->empty() && !std::filesystem::exists(*p)) bad("referenced file does not exist: " + p->string());
  return c;
}

StudyConfig load_study_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::Config, "cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_study_config(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

FluxPriorParams read_prior_file(const std::filesystem::path& path) {
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorKind::Config, "prior file " + path.string() + ": " + e.message());
  }
  FluxPriorParams p;
  const Reader r(tree);
  const auto model = r.text("prior.model");
  if (!model) fail(ErrorKind::Config, "prior file lacks prior.model");
  p.variogram.model = parse_variogram_model(*model);
  r.get("prior.nugget", p.variogram.nugget);
  r.get("prior.partial_sill", p.variogram.partial_sill);
  r.get("prior.range", p.variogram.range);
  r.get("prior.log_mean", p.log_mean);
  p.variogram.validate();
  return p;
}

std::string format_prior_file(const FluxPriorParams& params) {
  std::ostringstream os;
  os.precision(17);
  os << "[prior]\nmodel = " << to_string(params.variogram.model) << "\nnugget = " << params.variogram.nugget
     << "\npartial_sill = " << params.variogram.partial_sill << "\nrange = " << params.variogram.range
     << "\nlog_mean = " << params.log_mean << "\n";
  return os.str();
}

StudyDomains build_domains(const StudyConfig& cfg, Rng& layout_rng) {
  StudyDomains d;
  d.flux_grid = SpatialGrid::regular_1d(cfg.grid_first, cfg.grid_step, cfg.grid_cells);
  d.obs_columns.assign(static_cast<std::size_t>(cfg.n_steps), {});
  if (cfg.dense_observations > 0) {
    std::vector<double> nodes(static_cast<std::size_t>(cfg.grid_cells));
    for (Index i = 0; i < cfg.grid_cells; ++i) nodes[static_cast<std::size_t>(i)] = d.flux_grid.centroids()(i, 0);
    d.mole_grid = SpatialGrid::sites_1d(nodes);
    std::uniform_int_distribution<Index> pick(0, cfg.grid_cells - 1);
    std::vector<Index> cols(static_cast<std::size_t>(cfg.dense_observations));
    for (auto& c : cols) c = pick(layout_rng);
    std::set<std::size_t> seen;
    for (Index c : cols) seen.insert(static_cast<std::size_t>(c));
    d.observed_sites.assign(seen.begin(), seen.end());
    for (std::size_t s = 0; s < nodes.size(); ++s)
      if (!seen.count(s)) d.prediction_sites.push_back(s);
    for (auto& per_t : d.obs_columns) per_t = cols;
    return d;
  }
  std::vector<double> sites = cfg.stations;
  sites.insert(sites.end(), cfg.prediction_sites.begin(), cfg.prediction_sites.end());
  d.mole_grid = SpatialGrid::sites_1d(sites);
  std::vector<std::vector<Eigen::VectorXd>> locations(static_cast<std::size_t>(cfg.n_steps));
  for (auto& per_t : locations)
    for (double s : cfg.stations) per_t.push_back(Eigen::VectorXd::Constant(1, s));
  const ObservationIncidence inc = build_incidence(locations, d.mole_grid);
  for (Index t = 0; t < cfg.n_steps; ++t) d.obs_columns[static_cast<std::size_t>(t)] = inc.columns_at(t);
  for (std::size_t s = 0; s < cfg.stations.size(); ++s) d.observed_sites.push_back(s);
  for (std::size_t s = 0; s < cfg.prediction_sites.size(); ++s) d.prediction_sites.push_back(cfg.stations.size() + s);
  return d;
}

SrrTensor study_srr(const StudyConfig& cfg, const StudyDomains& domains, std::uint64_t seed) {
  if (!cfg.srr_file.empty()) {
    SrrTensor srr = read_srr_binary(cfg.srr_file);
    if (srr.n_steps() != cfg.n_steps || srr.n_sites() != domains.mole_grid.size() ||
        srr.n_cells() != domains.flux_grid.size())
      fail(ErrorKind::DimensionMismatch, "SRR file dimensions do not match the configured domains");
    return srr;
  }
  std::vector<double> sites(static_cast<std::size_t>(domains.mole_grid.size()));
  for (Index s = 0; s < domains.mole_grid.size(); ++s) sites[static_cast<std::size_t>(s)] = domains.mole_grid.centroids()(s, 0);
  Rng rng = SeedSplitter(seed).stream("srr");
  return synthesize_plume_srr(sites, domains.flux_grid, cfg.n_steps, cfg.plume, rng);
}

Dataset simulate_dataset(const StudyConfig& cfg, std::uint64_t seed, const SrrTensor* srr) {
  const SeedSplitter seeds(seed);
  Rng layout = seeds.stream("layout");
  Dataset d;
  d.domains = build_domains(cfg, layout);
  d.srr = srr ? *srr : study_srr(cfg, d.domains, seed);
  if (d.srr.n_steps() != cfg.n_steps || d.srr.n_sites() != d.domains.mole_grid.size() ||
      d.srr.n_cells() != d.domains.flux_grid.size())
    fail(ErrorKind::DimensionMismatch, "SRR dimensions do not match the configured domains");
  d.incidence = ObservationIncidence(d.domains.obs_columns, d.domains.mole_grid.size());

  // Truth uses the configured prior on the full grid in density units.
  const LognormalFluxPrior prior = LognormalFluxPrior::from_params(cfg.resolved_prior(), d.domains.flux_grid);
  const MatrixXd B = assemble_B(d.srr, d.domains.flux_grid, PriorMode::density);
  const SeparableCovariance disc(cfg.theta_true, d.domains.mole_grid.centroids(), cfg.n_steps);
  Rng flux_rng = seeds.stream("flux");
  Rng disc_rng = seeds.stream("discrepancy");
  Rng noise_rng = seeds.stream("noise");
  const SimulatedFields f =
      forward_simulate(prior, B, &disc, VectorXd(), d.incidence, cfg.noise_variance, flux_rng, disc_rng, noise_rng);
  d.flux_truth = f.flux;
  d.mole_truth = f.mole;
  d.z = f.obs;
  d.validation = f.mole + std::sqrt(cfg.noise_variance) * standard_normal(noise_rng, f.mole.size());
  return d;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& data, const std::string& meta) {
  std::filesystem::create_directories(dir);
  const SpatialGrid& fg = data.domains.flux_grid;
  const SpatialGrid& mg = data.domains.mole_grid;
  {
    auto os = open_output(dir / "flux_truth.csv");
    os << meta << "\nid,coord1,area,flux\n";
    for (Index i = 0; i < fg.size(); ++i)
      os << i << ',' << fg.centroids()(i, 0) << ',' << fg.area(i) << ',' << data.flux_truth[i] << '\n';
  }
  const Index q = mg.size();
  {
    auto os = open_output(dir / "mole_truth.csv");
    os << meta << "\nt,site_id,coord1,value_ppb,validation_ppb\n";
    for (Index t = 0; t < data.incidence.n_steps(); ++t)
      for (Index s = 0; s < q; ++s)
        os << t << ',' << s << ',' << mg.centroids()(s, 0) << ',' << data.mole_truth[t * q + s] << ','
           << data.validation[t * q + s] << '\n';
  }
  {
    auto os = open_output(dir / "observations.csv");
    os << meta << "\nt,station_id,coord1,value_ppb\n";
    Index row = 0;
    for (Index t = 0; t < data.incidence.n_steps(); ++t)
      for (Index s : data.incidence.columns_at(t)) os << t << ',' << s << ',' << mg.centroids()(s, 0) << ',' << data.z[row++] << '\n';
  }
  write_srr_binary(dir / "srr.bin", data.srr);
}

Dataset read_dataset(const StudyConfig& cfg, const std::filesystem::path& dir) {
  Dataset d;
  d.domains.flux_grid = SpatialGrid::regular_1d(cfg.grid_first, cfg.grid_step, cfg.grid_cells);
  const SpatialGrid& fg = d.domains.flux_grid;

  const CsvTable ft = read_csv(dir / "flux_truth.csv");
  if (static_cast<Index>(ft.rows.size()) != fg.size())
    fail(ErrorKind::DimensionMismatch, "flux_truth.csv rows vs configured flux grid");
  d.flux_truth.resize(fg.size());
  for (std::size_t i = 0; i < ft.rows.size(); ++i) d.flux_truth[static_cast<Index>(i)] = ft.number(i, ft.column("flux"));

  const CsvTable mt = read_csv(dir / "mole_truth.csv");
  const std::size_t ct = mt.column("t"), cs = mt.column("site_id"), cc = mt.column("coord1"),
                    cv = mt.column("value_ppb"), cval = mt.column("validation_ppb");
  Index p = 0, q = 0;
  for (std::size_t r = 0; r < mt.rows.size(); ++r) {
    p = std::max<Index>(p, mt.integer(r, ct) + 1);
    q = std::max<Index>(q, mt.integer(r, cs) + 1);
  }
  if (p != cfg.n_steps) fail(ErrorKind::DimensionMismatch, "mole_truth.csv time steps vs config");
  if (static_cast<Index>(mt.rows.size()) != p * q) fail(ErrorKind::DimensionMismatch, "mole_truth.csv is not complete");
  std::vector<double> coords(static_cast<std::size_t>(q));
  d.mole_truth.resize(p * q);
  d.validation.resize(p * q);
  for (std::size_t r = 0; r < mt.rows.size(); ++r) {
    const Index t = mt.integer(r, ct), s = mt.integer(r, cs);
    coords[static_cast<std::size_t>(s)] = mt.number(r, cc);
    d.mole_truth[t * q + s] = mt.number(r, cv);
    d.validation[t * q + s] = mt.number(r, cval);
  }
  d.domains.mole_grid = SpatialGrid::sites_1d(coords);

  const CsvTable ot = read_csv(dir / "observations.csv");
  const std::size_t ot_t = ot.column("t"), ot_s = ot.column("station_id"), ot_v = ot.column("value_ppb");
  d.domains.obs_columns.assign(static_cast<std::size_t>(p), {});
  std::set<std::size_t> seen;
  d.z.resize(static_cast<Index>(ot.rows.size()));
  for (std::size_t r = 0; r < ot.rows.size(); ++r) {
    const long t = ot.integer(r, ot_t), s = ot.integer(r, ot_s);
    if (t < 0 || t >= p || s < 0 || s >= q) fail(ErrorKind::DimensionMismatch, "observations.csv index out of range");
    if (r > 0 && t < ot.integer(r - 1, ot_t)) fail(ErrorKind::Io, "observations.csv must be ordered by time");
    d.domains.obs_columns[static_cast<std::size_t>(t)].push_back(s);
    seen.insert(static_cast<std::size_t>(s));
    d.z[static_cast<Index>(r)] = ot.number(r, ot_v);
  }
  d.domains.observed_sites.assign(seen.begin(), seen.end());
  for (Index s = 0; s < q; ++s)
    if (!seen.count(static_cast<std::size_t>(s))) d.domains.prediction_sites.push_back(static_cast<std::size_t>(s));
  d.incidence = ObservationIncidence(d.domains.obs_columns, q);

  d.srr = read_srr_binary(dir / "srr.bin");
  if (d.srr.n_steps() != p || d.srr.n_sites() != q || d.srr.n_cells() != fg.size())
    fail(ErrorKind::DimensionMismatch, "srr.bin dimensions vs dataset");
  return d;
}

VectorXd Inference::to_density(const VectorXd& y) const {
  if (mode == PriorMode::density) return y;
  return y.cwiseQuotient(flux_grid.areas());
}

MatrixXd Inference::to_density_rows(const MatrixXd& draws) const {
  if (mode == PriorMode::density) return draws;
  return draws * flux_grid.areas().cwiseInverse().asDiagonal();
}

Inference prepare_inference(const StudyConfig& cfg, const Dataset& data, const FluxPriorParams& prior_params) {
  Inference inf;
  inf.mode = cfg.prior_mode;
  inf.kept_cells = sensitive_cells(data.srr, data.domains.observed_sites, cfg.trim_threshold);
  inf.flux_grid = data.domains.flux_grid.subset(inf.kept_cells);

  LognormalFluxPrior prior = LognormalFluxPrior::from_params(prior_params, data.domains.flux_grid).subset(inf.kept_cells);
  if (cfg.prior_mode == PriorMode::total_per_cell) prior = to_total_per_cell(prior, inf.flux_grid);
  inf.prior = std::make_shared<const LognormalFluxPrior>(prior);

  auto problem = std::make_shared<InversionProblem>();
  problem->B = assemble_B(data.srr.select_cells(inf.kept_cells), inf.flux_grid, cfg.prior_mode);
  problem->mole_sites = data.domains.mole_grid.centroids();
  problem->obs.noise_variance = cfg.noise_variance;
  problem->obs.incidence = data.incidence;
  problem->z = data.z;
  problem->prior = FluxPriorDensity::lognormal(prior);
  problem->validate();
  inf.problem = problem;

  inf.init_flux = (prior.log_mean() + 0.5 * prior.log_cov().diagonal()).array().exp().matrix();
  return inf;
}

EmResult estimate_theta(const StudyConfig& cfg, const Inference& inf) {
  return run_em(*inf.problem, cfg.theta0, inf.init_flux, cfg.em);
}

PosteriorChain sample_posterior(const StudyConfig& cfg, const Inference& inf, const InversionState& state,
                                std::uint64_t seed) {
  HmcConfig hc = cfg.hmc;
  hc.seed = SeedSplitter(seed).seed_for("hmc");
  if (cfg.laplace_mass) hc.mass = laplace_mass(state);
  if (cfg.pilot_tune) {
    const LogDensity target = collapsed_free_target(state.system);
    hc = tune_step_size(hc, target, inf.problem->prior.to_free(state.flux_mode), cfg.pilot_iterations);
  }
  return hmc_sample(hc, state.system, state.flux_mode, true);
}

CoverageResult predictive_coverage(const Dataset& data, const PosteriorChain& chain, double noise_variance,
                                   double interval, const std::vector<std::size_t>& sites, Rng& rng) {
  const Index q = data.domains.mole_grid.size();
  const Index p = data.incidence.n_steps();
  if (chain.mole.rows() == 0) fail(ErrorKind::DimensionMismatch, "chain carries no mole-fraction draws");
  const double sd = std::sqrt(noise_variance);
  const double lo_p = 0.5 * (1.0 - interval), hi_p = 1.0 - lo_p;
  CoverageResult res;
  std::vector<double> draws(static_cast<std::size_t>(chain.mole.rows()));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t site : sites) {
    for (Index t = 0; t < p; ++t) {
      const Index col = t * q + static_cast<Index>(site);
      for (Index i = 0; i < chain.mole.rows(); ++i)
        draws[static_cast<std::size_t>(i)] = chain.mole(i, col) + sd * normal(rng);
      const double lo = quantile(draws, lo_p), hi = quantile(draws, hi_p);
      const double v = data.validation[col];
      if (v >= lo && v <= hi) ++res.hits;
      ++res.total;
    }
  }
  return res;
}

ScoreReport score_chain(const Dataset& data, const Inference& inf, const PosteriorChain& chain) {
  ScoreReport rep;
  const MatrixXd dens = inf.to_density_rows(chain.flux);
  const VectorXd mean = dens.colwise().mean().transpose();
  const VectorXd var = ((dens.rowwise() - mean.transpose()).array().square().colwise().sum() /
                        static_cast<double>(std::max<Index>(1, dens.rows() - 1)))
                           .transpose();
  VectorXd truth(static_cast<Index>(inf.kept_cells.size()));
  for (std::size_t i = 0; i < inf.kept_cells.size(); ++i)
    truth[static_cast<Index>(i)] = data.flux_truth[static_cast<Index>(inf.kept_cells[i])];
  rep.s1f = s1_flux(truth, mean);
  rep.s2f = s2_flux(truth, mean, var);

  const Index q = data.domains.mole_grid.size();
  const Index p = data.incidence.n_steps();
  if (chain.mole.rows() > 0) {
    const VectorXd mole_mean = chain.mole.colwise().mean().transpose();
    for (std::size_t site : data.domains.prediction_sites) {
      VectorXd tr(p), pr(p);
      for (Index t = 0; t < p; ++t) {
        tr[t] = data.mole_truth[t * q + static_cast<Index>(site)];
        pr[t] = mole_mean[t * q + static_cast<Index>(site)];
      }
      std::ostringstream name;
      name << data.domains.mole_grid.centroids()(static_cast<Index>(site), 0);
      rep.s1m_by_site[name.str()] = s1_mole(tr, pr);
    }
  }
  std::vector<bool> all(static_cast<std::size_t>(chain.flux.cols()), true);
  const MatrixXd totals = inf.mode == PriorMode::density
                              ? MatrixXd(chain.flux * inf.flux_grid.areas().asDiagonal())
                              : chain.flux;
  rep.regional_totals["domain"] = regional_total(totals, all);
  return rep;
}

}  // namespace traceinv
