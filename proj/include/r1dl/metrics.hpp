// Evaluation utilities: spatial overlap rate, Pearson correlation,
// atom-to-reference matching, and the timing benchmark harness.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "r1dl/engine.hpp"
#include "r1dl/types.hpp"

namespace r1dl::metrics {

// Dense spatial map with a binarization threshold: the support is
// { p : |value_p| > threshold }.
struct SpatialPattern {
  std::vector<double> values;
  double threshold = 1e-6;
};

std::vector<std::size_t> support(const SpatialPattern& p);
std::vector<std::size_t> support(const LoadingVector& v, double threshold = 1e-6);

// SOR(P1, P2) = |support(P1) n support(P2)| / |support(P2)|.
// Throws EmptyReferenceError when support(P2) is empty.
double spatial_overlap_rate(const SpatialPattern& p1, const SpatialPattern& p2);
double spatial_overlap_rate(const LoadingVector& p1, const LoadingVector& p2,
                            double threshold = 1e-6);
double support_overlap_rate(std::span<const std::size_t> s1,
                            std::span<const std::size_t> s2);

// Sample Pearson correlation; throws ZeroVarianceError, and
// InvalidConfigError when the lengths differ or N < 2.
double pearson(std::span<const double> x, std::span<const double> y);

struct Match {
  std::size_t ref_index = 0;
  std::size_t atom_index = 0;
  double correlation = 0.0;
};

struct MatchResult {
  std::vector<Match> matches;               // one per reference row
  std::vector<std::size_t> skipped_atoms;   // zero-variance atoms
};

// For each reference series, the atom with the highest Pearson
// correlation (ties to the lowest atom index). Zero-variance atoms are
// skipped and reported; throws NoEligibleAtomError if none remain.
MatchResult match_atoms(const std::vector<std::vector<double>>& d_rows,
                        const std::vector<std::vector<double>>& refs);

// Column-wise mean of stacked spatial maps (group averaging).
std::vector<double> average_patterns(const std::vector<std::vector<double>>& maps);

// --- benchmark harness ---

struct BenchCase {
  std::size_t rows = 0;   // T
  std::size_t cols = 0;   // P
  std::size_t k = 1;
  SparsityParam sparsity = SparsityParam::fraction(0.07);
};

struct BenchRow {
  BenchCase spec;
  std::size_t resolved_r = 0;
  std::string mode;          // "serial" or "parallel"
  std::size_t workers = 1;
  std::size_t partitions = 1;
  std::size_t repetitions = 1;
  double median_seconds = 0.0;
  double min_seconds = 0.0;
  double max_seconds = 0.0;
};

// Least-squares fit time = a + b*P + c*P^2 for one (mode, workers)
// series over the swept column counts.
struct QuadraticFit {
  std::string mode;
  std::size_t workers = 1;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

struct BenchTable {
  std::vector<BenchRow> rows;
  std::vector<QuadraticFit> fits;  // one per series with >= 3 distinct P
};

// Runs decompose on seeded synthetic data for every case: once serially,
// then once per entry of worker_counts. Reported time is the median over
// repetitions; atoms are identical across repetitions by determinism.
BenchTable benchmark(const std::vector<BenchCase>& cases,
                     const std::vector<std::size_t>& worker_counts,
                     std::size_t repetitions, std::uint64_t seed = 0);

std::string bench_csv(const BenchTable& table);
std::string bench_summary(const BenchTable& table);

}  // namespace r1dl::metrics
