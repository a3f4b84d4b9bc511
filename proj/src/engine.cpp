// Worker pool, row partitioning, and the three distributed primitives.
#include "r1dl/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <utility>

#include "r1dl/core.hpp"
#include "r1dl/detail/decompose_impl.hpp"

namespace r1dl::engine {
namespace {

// Contiguous near-equal split of n items over k owners; owner w gets
// [start, end). Used for both row->partition and partition->worker maps.
std::pair<std::size_t, std::size_t> split_range(std::size_t n, std::size_t k,
                                                std::size_t w) {
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  const std::size_t start = w * base + std::min(w, extra);
  const std::size_t size = base + (w < extra ? 1 : 0);
  return {start, start + size};
}

}  // namespace

PartitionedMatrix::PartitionedMatrix(DataMatrix s, std::size_t n_partitions)
    : rows_(s.rows()), cols_(s.cols()), data_(std::move(s.values())) {
  if (n_partitions < 1 || n_partitions > rows_) {
    throw InvalidPartitioningError("partition count " + std::to_string(n_partitions) +
                                   " outside [1, " + std::to_string(rows_) + "]");
  }
  parts_.reserve(n_partitions);
  for (std::size_t i = 0; i < n_partitions; ++i) {
    const auto [start, end] = split_range(rows_, n_partitions, i);
    parts_.push_back(RowPartition{i, start, end - start});
  }
}

DataMatrix PartitionedMatrix::reassemble() const {
  return DataMatrix(rows_, cols_, data_);
}

PartitionedMatrix partition_matrix(DataMatrix s, std::size_t n_partitions) {
  return PartitionedMatrix(std::move(s), n_partitions);
}

std::size_t EngineConfig::resolve_workers() const {
  if (workers >= 1) return workers;
  if (const char* env = std::getenv("R1DL_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
      throw InvalidConfigError("R1DL_WORKERS must be a positive integer, got '" +
                               std::string(env) + "'");
    }
    return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw >= 1 ? hw : 1;
}

std::size_t EngineConfig::resolve_partitions(std::size_t t) const {
  std::size_t p = partitions;
  if (p == 0) p = std::min(resolve_workers(), t);
  if (p < 1 || p > t) {
    throw InvalidPartitioningError("partition count " + std::to_string(p) +
                                   " outside [1, " + std::to_string(t) + "]");
  }
  return p;
}

WorkerPool::WorkerPool(std::size_t workers) : size_(workers) {
  if (workers < 1) throw InvalidConfigError("worker count must be at least 1");
  if (size_ == 1) return;  // degenerate pool runs jobs inline
  threads_.reserve(size_);
  for (std::size_t w = 0; w < size_; ++w) {
    threads_.emplace_back([this, w] { worker_loop(w); });
  }
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mutex_);
    shutdown_ = true;
  }
  start_cv_.notify_all();
  for (auto& t : threads_) t.join();
}

void WorkerPool::run(std::size_t n_tasks,
                     const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n_tasks == 0) return;
  if (size_ == 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) fn(i, 0);
    return;
  }
  std::unique_lock lock(mutex_);
  job_ = &fn;
  job_tasks_ = n_tasks;
  pending_ = size_;
  first_error_ = nullptr;
  ++generation_;
  lock.unlock();
  start_cv_.notify_all();

  lock.lock();
  done_cv_.wait(lock, [this] { return pending_ == 0; });
  job_ = nullptr;
  if (first_error_) {
    std::exception_ptr err = first_error_;
    first_error_ = nullptr;
    lock.unlock();
    std::rethrow_exception(err);
  }
}

void WorkerPool::worker_loop(std::size_t worker_index) {
  std::uint64_t seen = 0;
  while (true) {
    const std::function<void(std::size_t, std::size_t)>* job = nullptr;
    std::size_t n_tasks = 0;
    {
      std::unique_lock lock(mutex_);
      start_cv_.wait(lock, [&] { return shutdown_ || generation_ != seen; });
      if (shutdown_) return;
      seen = generation_;
      job = job_;
      n_tasks = job_tasks_;
    }
    const auto [start, end] = split_range(n_tasks, size_, worker_index);
    std::exception_ptr err;
    try {
      for (std::size_t i = start; i < end; ++i) (*job)(i, worker_index);
    } catch (...) {
      err = std::current_exception();
    }
    {
      std::lock_guard lock(mutex_);
      if (err && !first_error_) first_error_ = err;
      if (--pending_ == 0) done_cv_.notify_all();
    }
  }
}

namespace {

// Reduce scratch: one length-P slot per worker. Each worker accumulates
// the partials of its ascending partition range into its slot; the slots
// are then folded in ascending worker order, so every coordinate sums
// its terms in ascending partition order with a fixed associativity.
void vt_product_into(const PartitionedMatrix& m, std::span<const double> u,
                     WorkerPool& pool, std::vector<std::vector<double>>& slots,
                     std::vector<double>& out) {
  const std::size_t cols = m.cols();
  const std::size_t used = std::min(pool.size(), m.partition_count());
  slots.resize(pool.size());
  for (std::size_t w = 0; w < used; ++w) slots[w].assign(cols, 0.0);

  pool.run(m.partition_count(), [&](std::size_t i, std::size_t w) {
    const RowPartition& p = m.partition(i);
    core::accumulate_vt_product(m.partition_rows(i), p.row_count, cols,
                                u.subspan(p.first_row, p.row_count), slots[w]);
  });

  out.assign(cols, 0.0);
  for (std::size_t w = 0; w < used; ++w) {
    const std::vector<double>& slot = slots[w];
    for (std::size_t j = 0; j < cols; ++j) out[j] += slot[j];
  }
}

void mv_product_into(const PartitionedMatrix& m, const LoadingVector& v,
                     WorkerPool& pool, std::vector<double>& out) {
  out.assign(m.rows(), 0.0);
  pool.run(m.partition_count(), [&](std::size_t i, std::size_t) {
    const RowPartition& p = m.partition(i);
    core::mv_product_rows(m.partition_rows(i), p.row_count, m.cols(), v,
                          std::span<double>(out).subspan(p.first_row, p.row_count));
  });
}

double residual_sqnorm_of(const PartitionedMatrix& m, WorkerPool& pool,
                          std::vector<double>& partials) {
  partials.assign(m.partition_count(), 0.0);
  pool.run(m.partition_count(), [&](std::size_t i, std::size_t) {
    double sq = 0.0;
    for (double x : m.partition_rows(i)) sq += x * x;
    partials[i] = sq;
  });
  double total = 0.0;
  for (double x : partials) total += x;
  return total;
}

// Backend over a PartitionedMatrix for the shared decomposition skeleton.
class ParallelBackend {
 public:
  ParallelBackend(PartitionedMatrix& m, WorkerPool& pool) : m_(&m), pool_(&pool) {}

  std::size_t rows() const { return m_->rows(); }
  std::size_t cols() const { return m_->cols(); }

  double residual_sqnorm() const { return residual_sqnorm_of(*m_, *pool_, partials_); }

  void vt_product(const BasisVector& u, std::vector<double>& out) const {
    vt_product_into(*m_, u.values, *pool_, slots_, out);
  }

  void mv_product(const LoadingVector& v, std::vector<double>& out) const {
    mv_product_into(*m_, v, *pool_, out);
  }

  double residual_energy(const BasisVector& u, const LoadingVector& v) const {
    partials_.assign(m_->partition_count(), 0.0);
    pool_->run(m_->partition_count(), [&](std::size_t i, std::size_t) {
      const RowPartition& p = m_->partition(i);
      partials_[i] = core::residual_energy_sqnorm_rows(
          m_->partition_rows(i), p.row_count, m_->cols(),
          std::span<const double>(u.values).subspan(p.first_row, p.row_count), v);
    });
    double total = 0.0;
    for (double x : partials_) total += x;
    return std::sqrt(total < 0.0 ? 0.0 : total);
  }

  void deflate(const Atom& atom) {
    pool_->run(m_->partition_count(), [&](std::size_t i, std::size_t) {
      const RowPartition& p = m_->partition(i);
      core::deflate_rows(
          m_->partition_rows(i), p.row_count, m_->cols(),
          std::span<const double>(atom.u.values).subspan(p.first_row, p.row_count),
          atom.v);
    });
  }

 private:
  PartitionedMatrix* m_;
  WorkerPool* pool_;
  mutable std::vector<std::vector<double>> slots_;
  mutable std::vector<double> partials_;
};

}  // namespace

std::vector<double> par_vt_product(const PartitionedMatrix& m, const BasisVector& u,
                                   WorkerPool& pool) {
  std::vector<std::vector<double>> slots;
  std::vector<double> out;
  vt_product_into(m, u.values, pool, slots, out);
  return out;
}

MvProduct par_mv_product(const PartitionedMatrix& m, const LoadingVector& v,
                         WorkerPool& pool) {
  if (v.empty()) throw ZeroImageError("loading vector has empty support");
  MvProduct result;
  mv_product_into(m, v, pool, result.raw);
  core::NormalizeResult nr = core::normalize_to_basis(result.raw);
  result.norm = nr.norm;
  result.u = std::move(nr.u);
  result.sign_flipped = nr.sign_flipped;
  return result;
}

void par_deflate(PartitionedMatrix& m, const Atom& atom, WorkerPool& pool) {
  pool.run(m.partition_count(), [&](std::size_t i, std::size_t) {
    const RowPartition& p = m.partition(i);
    core::deflate_rows(
        m.partition_rows(i), p.row_count, m.cols(),
        std::span<const double>(atom.u.values).subspan(p.first_row, p.row_count),
        atom.v);
  });
}

Decomposition decompose_parallel(PartitionedMatrix m, const DecompositionConfig& config,
                                 const EngineConfig& engine, const ProgressFn& progress,
                                 std::vector<EnergyTrace>* traces) {
  WorkerPool pool(engine.resolve_workers());
  ParallelBackend backend(m, pool);
  return detail::decompose_impl(backend, config, progress, traces);
}

Decomposition decompose_parallel(DataMatrix s, const DecompositionConfig& config,
                                 const EngineConfig& engine, const ProgressFn& progress) {
  const std::size_t parts = engine.resolve_partitions(s.rows());
  return decompose_parallel(PartitionedMatrix(std::move(s), parts), config, engine,
                            progress);
}

}  // namespace r1dl::engine
