#pragma once

#include "traceinv/domains.hpp"
#include "traceinv/hmc.hpp"
#include "traceinv/srr.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace traceinv {

inline constexpr const char* kVersion = "0.1.0";

/// `# traceinv <version> seed=<n> config_hash=<16 hex digits>`
std::string metadata_line(std::uint64_t seed, std::uint64_t config_hash);

/// Comma-separated table. Lines starting with '#' and blank lines are
/// skipped; the first remaining line is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; Io error if absent.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
  double number(std::size_t row, std::size_t col) const;
  long integer(std::size_t row, std::size_t col) const;
};

CsvTable read_csv(const std::filesystem::path& path);

/// `id,coord1[,coord2],area`
SpatialGrid read_grid_csv(const std::filesystem::path& path);
void write_grid_csv(const std::filesystem::path& path, const SpatialGrid& grid, const std::string& meta);

struct Inventory {
  SpatialGrid grid;
  Eigen::VectorXd totals;  // g/s per cell
};
/// `id,coord1[,coord2],area,total_flux_g_per_s`
Inventory read_inventory_csv(const std::filesystem::path& path);
void write_inventory_csv(const std::filesystem::path& path, const Inventory& inv, const std::string& meta);

/// SRR1 binary: magic, int64 T, |D^L_m|, |D^L_f|, uint8 area_weighted, then
/// little-endian float64 values time-major.
void write_srr_binary(const std::filesystem::path& path, const SrrTensor& srr);
SrrTensor read_srr_binary(const std::filesystem::path& path);
/// `t,s_index,u_index,value`; unlisted entries are zero.
SrrTensor read_srr_csv(const std::filesystem::path& path, Eigen::Index n_steps, Eigen::Index n_sites,
                       Eigen::Index n_cells);

/// CHN1 binary: magic, int64 n_samples, n_flux, n_mole, float64 acceptance,
/// int64 L, float64 step_low, step_high, int64 n_burnin, int64 divergences,
/// then flux draws (row-major), log densities, mole draws (row-major).
void write_chain_binary(const std::filesystem::path& path, const PosteriorChain& chain);
PosteriorChain read_chain_binary(const std::filesystem::path& path);

/// Opens a file for writing; Io error on failure.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace traceinv
