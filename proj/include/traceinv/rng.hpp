#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string_view>

namespace traceinv {

using Rng = std::mt19937_64;

/// Derives independent named streams ("flux", "discrepancy", "noise", "srr",
/// "hmc", ...) from one root seed, so adding a consumer never perturbs the
/// draws of another.
class SeedSplitter {
 public:
  explicit SeedSplitter(std::uint64_t root) : root_(root) {}

  std::uint64_t root() const { return root_; }
  std::uint64_t seed_for(std::string_view stream) const;
  Rng stream(std::string_view stream) const { return Rng(seed_for(stream)); }

 private:
  std::uint64_t root_;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

Eigen::VectorXd standard_normal(Rng& rng, Eigen::Index n);
Eigen::MatrixXd standard_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols);

}  // namespace traceinv
