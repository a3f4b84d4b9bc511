// Invariant checks and small helpers for the shared domain types.
#include "r1dl/types.hpp"

#include <cmath>
#include <string>

namespace r1dl {

DataMatrix::DataMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {
  if (rows < 1 || cols < 1) {
    throw InvalidConfigError("matrix dimensions must be at least 1x1");
  }
}

DataMatrix::DataMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows < 1 || cols < 1) {
    throw InvalidConfigError("matrix dimensions must be at least 1x1");
  }
  if (values_.size() != rows * cols) {
    throw InvalidConfigError("value buffer has " + std::to_string(values_.size()) +
                             " entries, expected " + std::to_string(rows * cols));
  }
}

void DataMatrix::validate_finite() const {
  for (std::size_t t = 0; t < rows_; ++t) {
    const double* r = values_.data() + t * cols_;
    for (std::size_t p = 0; p < cols_; ++p) {
      if (!std::isfinite(r[p])) throw NonFiniteError(t, p);
    }
  }
}

std::vector<double> LoadingVector::to_dense() const {
  std::vector<double> dense(length, 0.0);
  for (std::size_t i = 0; i < indices.size(); ++i) dense[indices[i]] = values[i];
  return dense;
}

SparsityParam SparsityParam::fraction(double f) {
  if (!(f > 0.0) || f > 1.0 || !std::isfinite(f)) {
    throw InvalidConfigError("sparsity fraction must lie in (0, 1], got " +
                             std::to_string(f));
  }
  SparsityParam s;
  s.is_fraction_ = true;
  s.fraction_ = f;
  return s;
}

SparsityParam SparsityParam::count(std::size_t c) {
  if (c < 1) throw InvalidConfigError("sparsity count must be at least 1");
  SparsityParam s;
  s.is_fraction_ = false;
  s.count_ = c;
  return s;
}

std::size_t SparsityParam::resolve(std::size_t p) const {
  if (p < 1) throw InvalidConfigError("cannot resolve sparsity for empty matrix");
  if (is_fraction_) {
    const auto r = static_cast<std::size_t>(std::floor(fraction_ * static_cast<double>(p)));
    return r < 1 ? 1 : r;
  }
  return count_ < p ? count_ : p;
}

void DecompositionConfig::validate() const {
  if (k < 1) throw InvalidConfigError("atom count K must be at least 1");
  if (!(tol > 0.0)) throw InvalidConfigError("convergence tolerance must be positive");
  if (max_iter < 1) throw InvalidConfigError("max_iter must be at least 1");
}

}  // namespace r1dl
