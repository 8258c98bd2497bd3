#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace a2a {

/// Seedable, portable random source. All randomness in the library flows
/// through explicit seeds; mt19937_64 has a standard-specified output
/// sequence and the Gaussian transform below is our own, so identical seeds
/// give identical streams on every platform (std::normal_distribution would
/// not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (pairs cached).
  double normal();

  Eigen::VectorXd normal_vector(int dim, double stddev = 1.0);

  /// Column-major fill order, fixed for reproducibility.
  Eigen::MatrixXd normal_matrix(int rows, int cols, double stddev = 1.0);

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Derives an independent child seed from (seed, stream). Used wherever one
/// config seed has to fan out into several generators (tasks, objectives,
/// gaps) without correlation.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace a2a
