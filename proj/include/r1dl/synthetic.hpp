// Seeded planted-factor matrices for benchmarks and verification:
// K orthonormal temporal patterns with disjoint sparse supports and
// decaying singular values, plus optional dense Gaussian noise.
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "r1dl/types.hpp"

namespace r1dl::metrics {

struct SyntheticSpec {
  std::size_t rows = 0;          // T
  std::size_t cols = 0;          // P
  std::size_t k = 1;
  std::size_t support_size = 1;  // nonzeros per planted loading
  double sigma_max = 1.0;        // leading factor weight
  double sigma_decay = 0.5;      // sigma_k = sigma_max * decay^k
  double noise_sigma = 0.0;      // i.i.d. additive Gaussian noise
  std::uint64_t seed = 0;
};

struct PlantedFactors {
  DataMatrix matrix;              // sum_k sigma_k u_k v_k^T + noise
  std::vector<BasisVector> u;     // orthonormal temporal patterns
  std::vector<LoadingVector> v;   // unit-norm disjoint-support loadings
  std::vector<double> sigma;
};

// Requires k * support_size <= cols and k <= rows.
PlantedFactors make_planted(const SyntheticSpec& spec);

}  // namespace r1dl::metrics
