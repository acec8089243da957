#include "traceinv/cli.hpp"

#include "traceinv/errors.hpp"
#include "traceinv/io.hpp"
#include "traceinv/study.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace traceinv {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string data;
  std::string theta;
  std::string chain;
};

struct Context {
  StudyConfig cfg;
  std::uint64_t seed = 0;
  std::string meta;
  fs::path out;
};

Context make_context(const Options& o) {
  Context c;
  c.cfg = load_study_config(o.config);
  if (o.seed) c.cfg.seed = o.seed;
  c.seed = c.cfg.require_seed();
  c.meta = metadata_line(c.seed, c.cfg.config_hash);
  c.out = o.out;
  fs::create_directories(c.out);
  return c;
}

fs::path require_dir(const std::string& p, const char* what) {
  if (p.empty()) fail(ErrorKind::Config, std::string("--") + what + " is required");
  if (!fs::is_directory(p)) fail(ErrorKind::Io, std::string(what) + " directory not found: " + p);
  return p;
}

fs::path file_or_default(const std::string& p, const fs::path& fallback) {
  const fs::path path = p.empty() ? fallback : fs::path(p);
  if (!fs::exists(path)) fail(ErrorKind::Io, "file not found: " + path.string());
  return path;
}

void write_theta(const fs::path& path, const DiscrepancyParams& th, const std::string& meta) {
  auto os = open_output(path);
  os << meta << "\nsigma2_zeta,a,d\n" << th.sigma2 << ',' << th.a << ',' << th.d << '\n';
}

DiscrepancyParams read_theta(const fs::path& path) {
  const CsvTable t = read_csv(path);
  if (t.rows.size() != 1) fail(ErrorKind::Io, path.string() + ": expected one parameter row");
  DiscrepancyParams th{t.number(0, t.column("sigma2_zeta")), t.number(0, t.column("a")), t.number(0, t.column("d"))};
  th.validate();
  return th;
}

void cmd_calibrate(const Options& o, std::ostream& out) {
  const Context c = make_context(o);
  if (c.cfg.inventory.empty()) fail(ErrorKind::Config, "[calibrate] inventory is not set");
  const Inventory inv = read_inventory_csv(c.cfg.inventory);
  const CalibrationReport rep = calibrate_inventory(inv.totals, inv.grid, c.cfg.n_bins, c.cfg.max_lag);
  {
    auto os = open_output(c.out / "prior.ini");
    os << c.meta << '\n' << format_prior_file(rep.prior);
  }
  {
    auto os = open_output(c.out / "calibration_report.txt");
    os << c.meta << '\n' << format_report(rep);
  }
  out << format_report(rep);
}

void cmd_simulate(const Options& o, std::ostream& out) {
  const Context c = make_context(o);
  const Dataset d = simulate_dataset(c.cfg, c.seed);
  write_dataset(c.out, d, c.meta);
  out << "flux cells " << d.flux_truth.size() << ", mole entries " << d.mole_truth.size() << ", observations "
      << d.z.size() << ", srr " << d.srr.n_steps() << 'x' << d.srr.n_sites() << 'x' << d.srr.n_cells() << '\n';
}

void cmd_estimate(const Options& o, std::ostream& out) {
  const Context c = make_context(o);
  const Dataset d = read_dataset(c.cfg, require_dir(o.data, "data"));
  const Inference inf = prepare_inference(c.cfg, d, c.cfg.resolved_prior());
  const EmResult em = estimate_theta(c.cfg, inf);
  write_theta(c.out / "theta.csv", em.theta, c.meta);
  auto os = open_output(c.out / "em_trace.csv");
  os << c.meta << "\niter,sigma2_zeta,a,d,q_start,q_value,grad_norm,m_steps,mode_iterations,seconds\n";
  for (const auto& r : em.trace)
    os << r.iter << ',' << r.theta.sigma2 << ',' << r.theta.a << ',' << r.theta.d << ',' << r.q_start << ','
       << r.q_value << ',' << r.grad_norm << ',' << r.m_steps << ',' << r.mode_iterations << ',' << r.seconds << '\n';
  out << "theta_hat sigma2_zeta=" << em.theta.sigma2 << " a=" << em.theta.a << " d=" << em.theta.d
      << " iterations=" << em.iterations << (em.converged ? " converged" : " not-converged") << '\n';
}

void cmd_sample(const Options& o, std::ostream& out) {
  const Context c = make_context(o);
  const Dataset d = read_dataset(c.cfg, require_dir(o.data, "data"));
  const DiscrepancyParams th = read_theta(file_or_default(o.theta, c.out / "theta.csv"));
  const Inference inf = prepare_inference(c.cfg, d, c.cfg.resolved_prior());
  const InversionState state = laplace_e_step(*inf.problem, th, inf.init_flux, c.cfg.em.mode);
  const PosteriorChain chain = sample_posterior(c.cfg, inf, state, c.seed);
  write_chain_binary(c.out / "chain.bin", chain);
  auto os = open_output(c.out / "chain_info.csv");
  os << c.meta << "\nn_retained,acceptance_rate,leapfrog_steps,step_low,step_high,n_burnin,divergences\n"
     << chain.n_retained() << ',' << chain.acceptance_rate << ',' << chain.leapfrog_steps << ',' << chain.step_low
     << ',' << chain.step_high << ',' << chain.n_burnin << ',' << chain.divergences << '\n';
  out << "retained " << chain.n_retained() << " draws, acceptance " << chain.acceptance_rate << '\n';
}

void cmd_score(const Options& o, std::ostream& out) {
  const Context c = make_context(o);
  const Dataset d = read_dataset(c.cfg, require_dir(o.data, "data"));
  const PosteriorChain chain = read_chain_binary(file_or_default(o.chain, c.out / "chain.bin"));
  const Inference inf = prepare_inference(c.cfg, d, c.cfg.resolved_prior());
  if (chain.flux.cols() != static_cast<Index>(inf.kept_cells.size()))
    fail(ErrorKind::DimensionMismatch, "chain flux dimension vs trimmed flux domain");
  if (chain.mole.rows() > 0 && chain.mole.cols() != d.mole_truth.size())
    fail(ErrorKind::DimensionMismatch, "chain mole dimension vs dataset");
  const ScoreReport rep = score_chain(d, inf, chain);
  Rng rng = SeedSplitter(c.seed).stream("coverage");
  const CoverageResult cov = predictive_coverage(d, chain, c.cfg.noise_variance, c.cfg.interval,
                                                 d.domains.prediction_sites, rng);
  std::ostringstream table;
  table << format_score_table(rep) << "coverage " << cov.hits << '/' << cov.total << " = " << cov.rate() << '\n';
  auto os = open_output(c.out / "scores.txt");
  os << c.meta << '\n' << table.str();
  out << table.str();
}

void cmd_predict(const Options& o, std::ostream& out) {
  const Context c = make_context(o);
  const Dataset d = read_dataset(c.cfg, require_dir(o.data, "data"));
  const PosteriorChain chain = read_chain_binary(file_or_default(o.chain, c.out / "chain.bin"));
  const Inference inf = prepare_inference(c.cfg, d, c.cfg.resolved_prior());
  if (chain.flux.cols() != static_cast<Index>(inf.kept_cells.size()))
    fail(ErrorKind::DimensionMismatch, "chain flux dimension vs trimmed flux domain");
  const auto& probs = c.cfg.quantiles;
  const auto header = [&](std::ostream& os, const char* keys) {
    os << c.meta << '\n' << keys << ",mean";
    for (double p : probs) {
      std::ostringstream label;  // shortest form, e.g. q0.05
      label << 'q' << p;
      os << ',' << label.str();
    }
    os << '\n';
  };
  {
    const ColumnSummary s = summarize_columns(inf.to_density_rows(chain.flux), probs);
    auto os = open_output(c.out / "flux_quantiles.csv");
    header(os, "cell_id,coord1");
    for (Index j = 0; j < s.mean.size(); ++j) {
      os << inf.kept_cells[static_cast<std::size_t>(j)] << ',' << inf.flux_grid.centroids()(j, 0) << ',' << s.mean[j];
      for (Index k = 0; k < s.quantiles.cols(); ++k) os << ',' << s.quantiles(j, k);
      os << '\n';
    }
  }
  if (chain.mole.rows() > 0) {
    if (chain.mole.cols() != d.mole_truth.size()) fail(ErrorKind::DimensionMismatch, "chain mole dimension vs dataset");
    const ColumnSummary s = summarize_columns(chain.mole, probs);
    const Index q = d.domains.mole_grid.size();
    auto os = open_output(c.out / "mole_quantiles.csv");
    header(os, "t,site_id,coord1");
    for (Index j = 0; j < s.mean.size(); ++j) {
      os << j / q << ',' << j % q << ',' << d.domains.mole_grid.centroids()(j % q, 0) << ',' << s.mean[j];
      for (Index k = 0; k < s.quantiles.cols(); ++k) os << ',' << s.quantiles(j, k);
      os << '\n';
    }
  }
  out << "wrote quantiles for " << chain.flux.cols() << " flux cells\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bivariate lognormal flux inversion"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Options o;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "study configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "root seed (overrides [study] seed)");
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
  };
  struct Sub {
    const char* name;
    const char* help;
    void (*run)(const Options&, std::ostream&);
    bool data, theta, chain;
  };
  const Sub subs[] = {
      {"calibrate", "fit the flux prior to an inventory", cmd_calibrate, false, false, false},
      {"simulate", "simulate a study dataset", cmd_simulate, false, false, false},
      {"estimate", "Laplace-EM estimate of the discrepancy parameters", cmd_estimate, true, false, false},
      {"sample", "HMC draws from the joint posterior", cmd_sample, true, true, false},
      {"score", "verification statistics of a chain", cmd_score, true, false, true},
      {"predict", "posterior quantiles of flux and mole fraction", cmd_predict, true, false, true},
  };
  std::vector<std::pair<CLI::App*, const Sub*>> registered;
  for (const Sub& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    add_common(sub);
    if (s.data) sub->add_option("--data", o.data, "dataset directory written by simulate")->required();
    if (s.theta) sub->add_option("--theta", o.theta, "theta.csv from estimate (default <out>/theta.csv)");
    if (s.chain) sub->add_option("--chain", o.chain, "chain.bin from sample (default <out>/chain.bin)");
    registered.emplace_back(sub, &s);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  for (const auto& [sub, s] : registered) {
    if (!sub->parsed()) continue;
    try {
      s->run(o, out);
      return 0;
    } catch (const Error& e) {
      err << "traceinv " << s->name << ": " << e.what() << '\n';
      return is_input_error(e.kind()) ? 2 : 3;
    } catch (const fs::filesystem_error& e) {
      err << "traceinv " << s->name << ": " << e.what() << '\n';
      return 2;
    } catch (const std::exception& e) {
      err << "traceinv " << s->name << ": " << e.what() << '\n';
      return 3;
    }
  }
  return 2;
}

}  // namespace traceinv
