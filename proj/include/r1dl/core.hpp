// Serial reference implementation of the r1DL algorithm: l0 projection,
// alternating u/v updates, per-atom convergence loop, deflation, and the
// full K-atom greedy decomposition.
#pragma once

#include <random>
#include <span>
#include <vector>

#include "r1dl/types.hpp"

namespace r1dl::core {

using Rng = std::mt19937_64;

// Random unit-norm start vector: i.i.d. standard normal entries,
// l2-normalized, sign convention applied. Deterministic given the
// engine state; redraws on the measure-zero all-zero sample.
BasisVector init_u(std::size_t t, Rng& rng);

// Keeps the r entries of largest absolute value (ties broken toward the
// lower index) and drops everything else. Entries that are exactly zero
// are never stored, so the support may be smaller than r.
LoadingVector project_l0(std::span<const double> dense, std::size_t r);

// v = argmin |S - u v^T|_F s.t. |v|_0 <= r, for unit u. Equals the hard
// thresholding of S^T u to its top-r magnitudes.
LoadingVector update_v(const DataMatrix& s, const BasisVector& u, std::size_t r);

struct UpdateUResult {
  BasisVector u;
  double norm = 0.0;    // |S v|_2 before normalization
  bool sign_flipped = false;  // caller must negate v in tandem when set
};

// u = S v / |S v|, then the sign convention. Throws ZeroImageError when
// S v is exactly zero.
UpdateUResult update_u(const DataMatrix& s, const LoadingVector& v);

struct FitResult {
  Atom atom;
  std::size_t iterations = 0;
  bool converged = false;
};

// Alternates update_v / update_u from a random start until
// |u_new - u_old|_2 < tol or max_iter iterations. Throws
// DegenerateAtomError when the residual image of v is zero.
// When trace is non-null, per-iteration energies are recorded.
FitResult fit_atom(const DataMatrix& s, const DecompositionConfig& config, Rng& rng,
                   EnergyTrace* trace = nullptr);

// R = S - u v^T restricted to v's support columns.
DataMatrix deflate(const DataMatrix& s, const Atom& atom);
void deflate_in_place(DataMatrix& s, const Atom& atom);

// Greedy K-atom decomposition over successive residuals. Consumes its
// input (the matrix becomes the residual buffer); callers keep a copy if
// they still need S. Stops early on a degenerate atom or once the
// residual norm falls below 1e-12 * |S|_F.
Decomposition decompose(DataMatrix s, const DecompositionConfig& config,
                        const ProgressFn& progress = nullptr);

// L(u, v) = |S - u v^T|_F, streamed over rows.
double energy(const DataMatrix& s, const Atom& atom);

// --- shared kernels (used by the engine's per-partition tasks) ---

double frobenius_sqnorm(const DataMatrix& s);

// acc[j] += sum_t u[t] * S(t, j) over the given rows; caller provides the
// accumulator so partial sums can be chained in a fixed order.
void accumulate_vt_product(std::span<const double> rows, std::size_t n_rows,
                           std::size_t cols, std::span<const double> u,
                           std::span<double> acc);

// out[t] = <S(t, .), v> over v's support, for each given row.
void mv_product_rows(std::span<const double> rows, std::size_t n_rows,
                     std::size_t cols, const LoadingVector& v, std::span<double> out);

// rows(t, j) -= u[t] * v[j] over v's support.
void deflate_rows(std::span<double> rows, std::size_t n_rows, std::size_t cols,
                  std::span<const double> u, const LoadingVector& v);

// Streaming |R - u v^T|_F^2 contribution of the given rows.
double residual_energy_sqnorm_rows(std::span<const double> rows, std::size_t n_rows,
                                   std::size_t cols, std::span<const double> u,
                                   const LoadingVector& v);

struct NormalizeResult {
  BasisVector u;
  double norm = 0.0;
  bool sign_flipped = false;
};

// l2-normalizes raw and applies the sign convention (largest-magnitude
// element non-negative, ties to the lowest index). Throws ZeroImageError
// on a zero vector.
NormalizeResult normalize_to_basis(std::vector<double> raw);

}  // namespace r1dl::core
