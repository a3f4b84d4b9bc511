// Domain types for rank-1 dictionary learning: the data matrix S, the
// temporal basis u, the sparse spatial loading v, and the decomposition
// bundle D/Z with per-atom statistics.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "r1dl/errors.hpp"

namespace r1dl {

// Dense T x P matrix, row-major, 64-bit entries. Rows are timepoints,
// columns are voxels. Residuals R^n reuse this type.
class DataMatrix {
 public:
  DataMatrix() = default;
  DataMatrix(std::size_t rows, std::size_t cols);
  DataMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& at(std::size_t t, std::size_t p) { return values_[t * cols_ + p]; }
  double at(std::size_t t, std::size_t p) const { return values_[t * cols_ + p]; }

  std::span<double> row(std::size_t t) { return {values_.data() + t * cols_, cols_}; }
  std::span<const double> row(std::size_t t) const {
    return {values_.data() + t * cols_, cols_};
  }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  // Throws NonFiniteError at the first NaN/Inf entry.
  void validate_finite() const;

  bool operator==(const DataMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Unit-norm length-T temporal pattern. The element of largest absolute
// value is non-negative (ties broken by lowest index); producers enforce
// this through normalize_to_basis().
struct BasisVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }

  bool operator==(const BasisVector&) const = default;
};

// Sparse length-P spatial loading: strictly ascending indices, stored
// values never exactly zero, nnz bounded by the resolved sparsity count.
struct LoadingVector {
  std::size_t length = 0;
  std::vector<std::size_t> indices;
  std::vector<double> values;

  std::size_t nnz() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
  void negate() {
    for (double& x : values) x = -x;
  }
  std::vector<double> to_dense() const;

  bool operator==(const LoadingVector&) const = default;
};

// One dictionary basis [u, v].
struct Atom {
  BasisVector u;
  LoadingVector v;

  bool operator==(const Atom&) const = default;
};

// Sparsity constraint: either a fraction of P or an absolute count.
class SparsityParam {
 public:
  static SparsityParam fraction(double f);
  static SparsityParam count(std::size_t c);

  // r = max(1, floor(f * P)) for fractions, min(c, P) for counts.
  std::size_t resolve(std::size_t p) const;

  bool is_fraction() const { return is_fraction_; }
  double fraction_value() const { return fraction_; }
  std::size_t count_value() const { return count_; }

 private:
  SparsityParam() = default;
  bool is_fraction_ = true;
  double fraction_ = 0.0;
  std::size_t count_ = 0;
};

struct DecompositionConfig {
  std::size_t k = 1;
  SparsityParam sparsity = SparsityParam::fraction(0.07);
  double tol = 1e-4;
  std::size_t max_iter = 100;
  std::uint64_t seed = 0;

  // Throws InvalidConfigError on K < 1, tol <= 0 or max_iter < 1.
  void validate() const;
};

struct AtomStats {
  std::size_t iterations = 0;
  bool converged = false;
  double residual_norm = 0.0;  // Frobenius norm of the residual after deflation
  double seconds = 0.0;
};

enum class StopReason {
  kCompleted,      // all K atoms learned
  kZeroResidual,   // residual dropped below 1e-12 * |S|_F
  kDegenerateAtom  // Sv = 0 or empty projection support
};

struct Decomposition {
  std::vector<Atom> atoms;
  std::vector<AtomStats> stats;
  DecompositionConfig config;
  bool early_stop = false;
  StopReason stop_reason = StopReason::kCompleted;
};

// Optional per-atom energy trace, filled only when a caller asks for it.
// Energies are honest streaming evaluations of |R - u v^T|_F, not the
// algebraic shortcut, so they can back independent convergence checks.
struct EnergyTrace {
  double input_sqnorm = 0.0;     // |R|_F^2 at atom start
  std::vector<double> after_v;   // energy of (u_old, v) after each v-update
  std::vector<double> after_u;   // energy of (u_new, v) after each u-update
  std::vector<double> v_sqnorm;  // |v|_2^2 after each v-update
};

// Per-atom progress callback: (atom index, stats so far).
using ProgressFn = std::function<void(std::size_t, const AtomStats&)>;

}  // namespace r1dl
