// Planted-factor matrix construction.
#include "r1dl/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "r1dl/core.hpp"

namespace r1dl::metrics {

PlantedFactors make_planted(const SyntheticSpec& spec) {
  if (spec.rows < 1 || spec.cols < 1 || spec.k < 1 || spec.support_size < 1) {
    throw InvalidConfigError("synthetic spec dimensions must be at least 1");
  }
  if (spec.k > spec.rows) {
    throw InvalidConfigError("cannot plant more orthonormal patterns than rows");
  }
  if (spec.k * spec.support_size > spec.cols) {
    throw InvalidConfigError("disjoint supports need k * support_size <= cols");
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> magnitude(0.5, 1.0);

  PlantedFactors out;
  out.u.reserve(spec.k);
  out.v.reserve(spec.k);
  out.sigma.reserve(spec.k);

  // Orthonormal u_k via Gram-Schmidt on Gaussian draws.
  std::vector<std::vector<double>> basis;
  while (basis.size() < spec.k) {
    std::vector<double> cand(spec.rows);
    for (double& x : cand) x = normal(rng);
    for (const auto& b : basis) {
      double dot = 0.0;
      for (std::size_t i = 0; i < spec.rows; ++i) dot += cand[i] * b[i];
      for (std::size_t i = 0; i < spec.rows; ++i) cand[i] -= dot * b[i];
    }
    double sq = 0.0;
    for (double x : cand) sq += x * x;
    if (sq < 1e-12) continue;  // resample a degenerate draw
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : cand) x *= inv;
    basis.push_back(std::move(cand));
  }

  // Disjoint supports: a seeded partial shuffle of the column indices,
  // consumed in chunks of support_size.
  std::vector<std::size_t> columns(spec.cols);
  for (std::size_t i = 0; i < spec.cols; ++i) columns[i] = i;
  const std::size_t needed = spec.k * spec.support_size;
  for (std::size_t i = 0; i < needed; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, spec.cols - 1);
    std::swap(columns[i], columns[pick(rng)]);
  }

  DataMatrix s(spec.rows, spec.cols);
  if (spec.noise_sigma > 0.0) {
    for (double& x : s.values()) x = spec.noise_sigma * normal(rng);
  }

  for (std::size_t k = 0; k < spec.k; ++k) {
    LoadingVector v;
    v.length = spec.cols;
    v.indices.assign(columns.begin() + static_cast<std::ptrdiff_t>(k * spec.support_size),
                     columns.begin() + static_cast<std::ptrdiff_t>((k + 1) * spec.support_size));
    std::sort(v.indices.begin(), v.indices.end());
    v.values.resize(spec.support_size);
    double sq = 0.0;
    for (double& x : v.values) {
      x = magnitude(rng) * (normal(rng) < 0.0 ? -1.0 : 1.0);
      sq += x * x;
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : v.values) x *= inv;

    const double sigma = spec.sigma_max * std::pow(spec.sigma_decay, static_cast<double>(k));
    BasisVector u{std::move(basis[k])};
    for (std::size_t t = 0; t < spec.rows; ++t) {
      const double scale = sigma * u.values[t];
      auto row = s.row(t);
      for (std::size_t i = 0; i < v.nnz(); ++i) row[v.indices[i]] += scale * v.values[i];
    }
    out.u.push_back(std::move(u));
    out.v.push_back(std::move(v));
    out.sigma.push_back(sigma);
  }

  out.matrix = std::move(s);
  return out;
}

}  // namespace r1dl::metrics
