#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

namespace rankcalm {

/// Deterministic random stream. The generator and the gaussian transform are
/// spelled out here so results do not depend on the standard library build,
/// and child streams derived per sample index make parallel sweeps
/// schedule-independent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent stream for sample `index`, regardless of draw order here.
  Rng child(std::uint64_t index) const;

  std::uint64_t next_u64();
  double uniform();   // [0, 1)
  double gaussian();  // standard normal, Box-Muller

  Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols);
  Eigen::MatrixXd gaussian_symmetric(Eigen::Index n);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Worker count: min(RANKCALM_THREADS, hardware), at least 1.
int thread_budget();

/// Runs body(i) for i in [0, n). Work items must not share mutable state
/// except through their own slot of preallocated output.
void parallel_for(Eigen::Index n, const std::function<void(Eigen::Index)>& body);

}  // namespace rankcalm
