// Regenerates the shipped fixtures: the reference SRR for the 1D study and
// the synthetic 2D inventory used by the calibrate command.

#include "traceinv/io.hpp"
#include "traceinv/study.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>

using namespace traceinv;

namespace {

// Largest kept flux-cell centroid for a given SRR.
double trimmed_extent(const SrrTensor& srr, const StudyDomains& d, double threshold) {
  const auto kept = sensitive_cells(srr, d.observed_sites, threshold);
  return d.flux_grid.centroids()(static_cast<Index>(kept.back()), 0);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regenerate traceinv fixtures"};
  std::string config, out = "data";
  std::uint64_t first_seed = 1;
  double extent = 4.3;
  int inv_cells = 40;
  double inv_step = 0.25;
  std::uint64_t inv_seed = 1;
  app.add_option("--config", config, "study configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out, "fixture directory")->capture_default_str();
  app.add_option("--first-seed", first_seed, "first SRR seed tried")->capture_default_str();
  app.add_option("--extent", extent, "required upper edge of the trimmed flux domain")->capture_default_str();
  app.add_option("--inventory-cells", inv_cells, "inventory grid cells per side")->capture_default_str();
  app.add_option("--inventory-seed", inv_seed, "inventory seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    StudyConfig cfg = load_study_config(config);
    cfg.srr_file.clear();
    std::filesystem::create_directories(out);
    Rng layout(0);
    const StudyDomains dom = build_domains(cfg, layout);

    // Search for an SRR realization whose trimmed domain ends exactly at `extent`.
    std::uint64_t seed = first_seed;
    for (;; ++seed) {
      const SrrTensor srr = study_srr(cfg, dom, seed);
      if (std::abs(trimmed_extent(srr, dom, cfg.trim_threshold) - extent) < 1e-9) {
        write_srr_binary(std::filesystem::path(out) / "reference_srr.bin", srr);
        break;
      }
      if (seed - first_seed > 100000) {
        std::cerr << "no SRR seed found\n";
        return 1;
      }
    }

    // Inventory: lognormal field on a square lat-lon grid from the configured prior.
    Eigen::MatrixXd cent(inv_cells * inv_cells, 2);
    for (int i = 0; i < inv_cells; ++i)
      for (int j = 0; j < inv_cells; ++j) cent.row(i * inv_cells + j) << 50.0 + inv_step * i, -10.0 + inv_step * j;
    const SpatialGrid grid(cent, Eigen::VectorXd::Constant(cent.rows(), inv_step * inv_step));
    const LognormalFluxPrior prior = LognormalFluxPrior::from_params(cfg.prior, grid);
    Rng rng = SeedSplitter(inv_seed).stream("flux");
    const Inventory inv{grid, sample_flux(prior, rng).cwiseProduct(grid.areas())};
    write_inventory_csv(std::filesystem::path(out) / "synthetic_inventory.csv", inv, metadata_line(inv_seed, 0));

    auto os = open_output(std::filesystem::path(out) / "fixtures.ini");
    os << "# seeds used to generate the fixtures in this directory\n[srr]\nseed = " << seed << "\nextent = " << extent
       << "\n[inventory]\nseed = " << inv_seed << "\ncells = " << inv_cells << "\nstep = " << inv_step << "\n";
    std::cout << "reference SRR seed " << seed << "\n";
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  return 0;
}
