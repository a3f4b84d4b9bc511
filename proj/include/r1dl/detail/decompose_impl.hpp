// Shared decomposition skeleton. The serial path (core) and the
// partitioned path (engine) run the exact same loop over a Backend that
// supplies the four matrix kernels, so the two paths are structurally
// identical: same RNG draws, same projection, same convergence tests,
// same early-stop logic. A single-worker parallel backend is therefore
// bit-identical to the serial one.
#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "r1dl/core.hpp"
#include "r1dl/types.hpp"

namespace r1dl::detail {

// Backend requirements:
//   std::size_t rows() const, cols() const
//   double residual_sqnorm() const
//   void vt_product(const BasisVector& u, std::vector<double>& out) const
//   void mv_product(const LoadingVector& v, std::vector<double>& out) const
//   double residual_energy(const BasisVector& u, const LoadingVector& v) const
// and, for decompose_impl only:
//   void deflate(const Atom& atom)

template <class Backend>
core::FitResult fit_atom_impl(const Backend& backend, std::size_t r,
                              const DecompositionConfig& config, core::Rng& rng,
                              EnergyTrace* trace) {
  const std::size_t t_len = backend.rows();
  BasisVector u = core::init_u(t_len, rng);

  if (trace) {
    *trace = EnergyTrace{};
    trace->input_sqnorm = backend.residual_sqnorm();
  }

  std::vector<double> scatter_v(backend.cols());
  std::vector<double> image;
  LoadingVector v;
  std::size_t iterations = 0;
  bool converged = false;

  for (std::size_t it = 0; it < config.max_iter; ++it) {
    backend.vt_product(u, scatter_v);
    v = core::project_l0(scatter_v, r);
    if (v.empty()) {
      throw DegenerateAtomError("projection of S^T u has empty support");
    }
    if (trace) {
      trace->after_v.push_back(backend.residual_energy(u, v));
      double sq = 0.0;
      for (double x : v.values) sq += x * x;
      trace->v_sqnorm.push_back(sq);
    }

    backend.mv_product(v, image);
    core::NormalizeResult nu = core::normalize_to_basis(std::move(image));
    if (nu.sign_flipped) v.negate();
    if (trace) trace->after_u.push_back(backend.residual_energy(nu.u, v));

    double diff_sq = 0.0;
    for (std::size_t i = 0; i < t_len; ++i) {
      const double d = nu.u.values[i] - u.values[i];
      diff_sq += d * d;
    }
    u = std::move(nu.u);
    iterations = it + 1;
    if (std::sqrt(diff_sq) < config.tol) {
      converged = true;
      break;
    }
  }

  return core::FitResult{Atom{std::move(u), std::move(v)}, iterations, converged};
}

template <class Backend>
Decomposition decompose_impl(Backend& backend, const DecompositionConfig& config,
                             const ProgressFn& progress,
                             std::vector<EnergyTrace>* traces = nullptr) {
  using Clock = std::chrono::steady_clock;
  config.validate();
  const std::size_t r = config.sparsity.resolve(backend.cols());

  Decomposition result;
  result.config = config;

  core::Rng rng(config.seed);
  const double input_norm = std::sqrt(backend.residual_sqnorm());
  const double stop_norm = 1e-12 * input_norm;
  double residual_norm = input_norm;

  for (std::size_t n = 0; n < config.k; ++n) {
    if (residual_norm <= stop_norm) {
      result.early_stop = true;
      result.stop_reason = StopReason::kZeroResidual;
      break;
    }
    const auto start = Clock::now();
    EnergyTrace trace;
    core::FitResult fit;
    try {
      fit = fit_atom_impl(backend, r, config, rng, traces ? &trace : nullptr);
    } catch (const DegenerateAtomError&) {
      result.early_stop = true;
      result.stop_reason = StopReason::kDegenerateAtom;
      break;
    }
    backend.deflate(fit.atom);
    residual_norm = std::sqrt(backend.residual_sqnorm());

    AtomStats stats;
    stats.iterations = fit.iterations;
    stats.converged = fit.converged;
    stats.residual_norm = residual_norm;
    stats.seconds = std::chrono::duration<double>(Clock::now() - start).count();

    result.atoms.push_back(std::move(fit.atom));
    result.stats.push_back(stats);
    if (traces) traces->push_back(std::move(trace));
    if (progress) progress(n, stats);
  }

  return result;
}

// Serial backend over a caller-owned residual matrix.
class SerialBackend {
 public:
  explicit SerialBackend(DataMatrix& residual) : m_(&residual) {}

  std::size_t rows() const { return m_->rows(); }
  std::size_t cols() const { return m_->cols(); }

  double residual_sqnorm() const { return core::frobenius_sqnorm(*m_); }

  void vt_product(const BasisVector& u, std::vector<double>& out) const {
    out.assign(m_->cols(), 0.0);
    core::accumulate_vt_product(m_->values(), m_->rows(), m_->cols(), u.values, out);
  }

  void mv_product(const LoadingVector& v, std::vector<double>& out) const {
    out.assign(m_->rows(), 0.0);
    core::mv_product_rows(m_->values(), m_->rows(), m_->cols(), v, out);
  }

  double residual_energy(const BasisVector& u, const LoadingVector& v) const {
    return std::sqrt(core::residual_energy_sqnorm_rows(m_->values(), m_->rows(),
                                                       m_->cols(), u.values, v));
  }

  void deflate(const Atom& atom) { core::deflate_in_place(*m_, atom); }

 private:
  DataMatrix* m_;
};

// Read-only serial backend for standalone fit_atom calls.
class SerialFitBackend {
 public:
  explicit SerialFitBackend(const DataMatrix& s) : m_(&s) {}

  std::size_t rows() const { return m_->rows(); }
  std::size_t cols() const { return m_->cols(); }

  double residual_sqnorm() const { return core::frobenius_sqnorm(*m_); }

  void vt_product(const BasisVector& u, std::vector<double>& out) const {
    out.assign(m_->cols(), 0.0);
    core::accumulate_vt_product(m_->values(), m_->rows(), m_->cols(), u.values, out);
  }

  void mv_product(const LoadingVector& v, std::vector<double>& out) const {
    out.assign(m_->rows(), 0.0);
    core::mv_product_rows(m_->values(), m_->rows(), m_->cols(), v, out);
  }

  double residual_energy(const BasisVector& u, const LoadingVector& v) const {
    return std::sqrt(core::residual_energy_sqnorm_rows(m_->values(), m_->rows(),
                                                       m_->cols(), u.values, v));
  }

 private:
  const DataMatrix* m_;
};

}  // namespace r1dl::detail
