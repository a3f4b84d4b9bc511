// Serial r1DL: alternating rank-1 updates with hard l0 thresholding and
// outer-product deflation.
#include "r1dl/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "r1dl/detail/decompose_impl.hpp"

namespace r1dl::core {

NormalizeResult normalize_to_basis(std::vector<double> raw) {
  double sq = 0.0;
  for (double x : raw) sq += x * x;
  const double norm = std::sqrt(sq);
  if (norm == 0.0) throw ZeroImageError();
  for (double& x : raw) x /= norm;

  // Sign convention: the largest-magnitude element (ties to the lowest
  // index) must be non-negative.
  std::size_t peak = 0;
  double peak_abs = std::abs(raw[0]);
  for (std::size_t i = 1; i < raw.size(); ++i) {
    const double a = std::abs(raw[i]);
    if (a > peak_abs) {
      peak_abs = a;
      peak = i;
    }
  }
  const bool flip = raw[peak] < 0.0;
  if (flip) {
    for (double& x : raw) x = -x;
  }
  return NormalizeResult{BasisVector{std::move(raw)}, norm, flip};
}

BasisVector init_u(std::size_t t, Rng& rng) {
  if (t < 1) throw InvalidConfigError("basis length must be at least 1");
  std::vector<double> raw(t);
  while (true) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& x : raw) x = normal(rng);
    double sq = 0.0;
    for (double x : raw) sq += x * x;
    if (sq > 0.0) break;
  }
  return normalize_to_basis(std::move(raw)).u;
}

LoadingVector project_l0(std::span<const double> dense, std::size_t r) {
  const std::size_t p = dense.size();
  if (r < 1) throw InvalidConfigError("sparsity count must be at least 1");
  if (r > p) r = p;  // nnz can never exceed the logical length

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto by_magnitude = [&](std::size_t a, std::size_t b) {
    const double fa = std::abs(dense[a]);
    const double fb = std::abs(dense[b]);
    if (fa != fb) return fa > fb;
    return a < b;  // ties toward the lower index
  };
  if (r < p) {
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(r),
                     order.end(), by_magnitude);
    order.resize(r);
  }
  std::sort(order.begin(), order.end());

  LoadingVector v;
  v.length = p;
  v.indices.reserve(r);
  v.values.reserve(r);
  for (std::size_t idx : order) {
    if (dense[idx] != 0.0) {
      v.indices.push_back(idx);
      v.values.push_back(dense[idx]);
    }
  }
  return v;
}

double frobenius_sqnorm(const DataMatrix& s) {
  double sq = 0.0;
  for (double x : s.values()) sq += x * x;
  return sq;
}

void accumulate_vt_product(std::span<const double> rows, std::size_t n_rows,
                           std::size_t cols, std::span<const double> u,
                           std::span<double> acc) {
  for (std::size_t t = 0; t < n_rows; ++t) {
    const double ut = u[t];
    const double* row = rows.data() + t * cols;
    for (std::size_t j = 0; j < cols; ++j) acc[j] += ut * row[j];
  }
}

void mv_product_rows(std::span<const double> rows, std::size_t n_rows,
                     std::size_t cols, const LoadingVector& v, std::span<double> out) {
  const std::size_t nnz = v.nnz();
  for (std::size_t t = 0; t < n_rows; ++t) {
    const double* row = rows.data() + t * cols;
    double acc = 0.0;
    for (std::size_t i = 0; i < nnz; ++i) acc += row[v.indices[i]] * v.values[i];
    out[t] = acc;
  }
}

void deflate_rows(std::span<double> rows, std::size_t n_rows, std::size_t cols,
                  std::span<const double> u, const LoadingVector& v) {
  const std::size_t nnz = v.nnz();
  for (std::size_t t = 0; t < n_rows; ++t) {
    double* row = rows.data() + t * cols;
    const double ut = u[t];
    for (std::size_t i = 0; i < nnz; ++i) row[v.indices[i]] -= ut * v.values[i];
  }
}

double residual_energy_sqnorm_rows(std::span<const double> rows, std::size_t n_rows,
                                   std::size_t cols, std::span<const double> u,
                                   const LoadingVector& v) {
  // One pass per row plus a sparse correction on v's support; the
  // residual matrix is never materialized.
  const std::size_t nnz = v.nnz();
  double sq = 0.0;
  for (std::size_t t = 0; t < n_rows; ++t) {
    const double* row = rows.data() + t * cols;
    double row_sq = 0.0;
    for (std::size_t j = 0; j < cols; ++j) row_sq += row[j] * row[j];
    const double ut = u[t];
    for (std::size_t i = 0; i < nnz; ++i) {
      const double orig = row[v.indices[i]];
      const double d = orig - ut * v.values[i];
      row_sq += d * d - orig * orig;
    }
    sq += row_sq;
  }
  return sq < 0.0 ? 0.0 : sq;
}

LoadingVector update_v(const DataMatrix& s, const BasisVector& u, std::size_t r) {
  std::vector<double> dense(s.cols(), 0.0);
  accumulate_vt_product(s.values(), s.rows(), s.cols(), u.values, dense);
  return project_l0(dense, r);
}

UpdateUResult update_u(const DataMatrix& s, const LoadingVector& v) {
  if (v.empty()) throw ZeroImageError("loading vector has empty support");
  std::vector<double> image(s.rows(), 0.0);
  mv_product_rows(s.values(), s.rows(), s.cols(), v, image);
  NormalizeResult nr = normalize_to_basis(std::move(image));
  return UpdateUResult{std::move(nr.u), nr.norm, nr.sign_flipped};
}

FitResult fit_atom(const DataMatrix& s, const DecompositionConfig& config, Rng& rng,
                   EnergyTrace* trace) {
  config.validate();
  const std::size_t r = config.sparsity.resolve(s.cols());
  detail::SerialFitBackend backend(s);
  return detail::fit_atom_impl(backend, r, config, rng, trace);
}

void deflate_in_place(DataMatrix& s, const Atom& atom) {
  deflate_rows(s.values(), s.rows(), s.cols(), atom.u.values, atom.v);
}

DataMatrix deflate(const DataMatrix& s, const Atom& atom) {
  DataMatrix r = s;
  deflate_in_place(r, atom);
  return r;
}

Decomposition decompose(DataMatrix s, const DecompositionConfig& config,
                        const ProgressFn& progress) {
  detail::SerialBackend backend(s);
  return detail::decompose_impl(backend, config, progress);
}

double energy(const DataMatrix& s, const Atom& atom) {
  return std::sqrt(residual_energy_sqnorm_rows(s.values(), s.rows(), s.cols(),
                                               atom.u.values, atom.v));
}

}  // namespace r1dl::core
