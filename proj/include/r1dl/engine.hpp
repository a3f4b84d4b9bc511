// Partitioned data-parallel execution of r1DL: contiguous row blocks
// processed by a worker pool through the three distributed primitives
// (partial vt-product with ordered sum-reduce, per-row mv-product,
// per-row deflation). Results match the serial path; a single worker is
// bit-identical to it.
#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "r1dl/types.hpp"

namespace r1dl::engine {

// Contiguous block of timepoint rows owned by one worker task at a time.
struct RowPartition {
  std::size_t index = 0;
  std::size_t first_row = 0;
  std::size_t row_count = 0;
};

// S split into contiguous row blocks. The backing buffer is taken over
// from the input matrix and doubles as the residual: deflation mutates
// the blocks in place, and partitions are disjoint row-range views, so
// no second T x P buffer ever exists.
class PartitionedMatrix {
 public:
  PartitionedMatrix(DataMatrix s, std::size_t n_partitions);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t partition_count() const { return parts_.size(); }
  const RowPartition& partition(std::size_t i) const { return parts_[i]; }

  std::span<double> partition_rows(std::size_t i) {
    const RowPartition& p = parts_[i];
    return {data_.data() + p.first_row * cols_, p.row_count * cols_};
  }
  std::span<const double> partition_rows(std::size_t i) const {
    const RowPartition& p = parts_[i];
    return {data_.data() + p.first_row * cols_, p.row_count * cols_};
  }

  // Copies the blocks back into a DataMatrix (test/verification helper).
  DataMatrix reassemble() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
  std::vector<RowPartition> parts_;
};

// Near-equal contiguous split: the first T mod W blocks get ceil(T/W)
// rows. Throws InvalidPartitioningError unless 1 <= n_partitions <= T.
PartitionedMatrix partition_matrix(DataMatrix s, std::size_t n_partitions);

struct EngineConfig {
  std::size_t workers = 0;     // 0 = auto: R1DL_WORKERS env var, else hardware
  std::size_t partitions = 0;  // 0 = auto: worker count, capped at T

  std::size_t resolve_workers() const;
  std::size_t resolve_partitions(std::size_t t) const;
};

// Fixed pool of worker threads executing indexed task batches. Tasks are
// assigned statically: worker w runs a contiguous ascending range of
// task indices, so reductions that fold per-worker slots in order are
// reproducible regardless of completion order. run() blocks until the
// whole batch finished and rethrows the first task exception.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t workers);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t size() const { return size_; }

  // fn(task_index, worker_index); tasks [0, n_tasks) split contiguously
  // over workers, each worker walking its range in ascending order.
  void run(std::size_t n_tasks, const std::function<void(std::size_t, std::size_t)>& fn);

 private:
  void worker_loop(std::size_t worker_index);

  std::size_t size_ = 1;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  const std::function<void(std::size_t, std::size_t)>* job_ = nullptr;
  std::size_t job_tasks_ = 0;
  std::uint64_t generation_ = 0;
  std::size_t pending_ = 0;
  std::exception_ptr first_error_;
  bool shutdown_ = false;
};

// Partial v = sum over partitions of u_block^T S_block, reduced in
// ascending partition order. Equals S^T u.
std::vector<double> par_vt_product(const PartitionedMatrix& m, const BasisVector& u,
                                   WorkerPool& pool);

struct MvProduct {
  std::vector<double> raw;  // assembled S v before normalization
  double norm = 0.0;
  BasisVector u;            // normalized, sign convention applied
  bool sign_flipped = false;
};

// Each partition computes <S_t, v> for its rows; the assembled vector is
// normalized centrally. Equals core::update_u. Throws ZeroImageError.
MvProduct par_mv_product(const PartitionedMatrix& m, const LoadingVector& v,
                         WorkerPool& pool);

// S_block -= u_block v^T over v's support, independently per partition.
void par_deflate(PartitionedMatrix& m, const Atom& atom, WorkerPool& pool);

// Same contract as core::decompose, built from the three primitives with
// barrier-separated phases. Consumes the partitioned matrix (it is the
// residual buffer).
Decomposition decompose_parallel(PartitionedMatrix m, const DecompositionConfig& config,
                                 const EngineConfig& engine,
                                 const ProgressFn& progress = nullptr,
                                 std::vector<EnergyTrace>* traces = nullptr);

// Convenience overload: partitions per the engine config, then runs.
Decomposition decompose_parallel(DataMatrix s, const DecompositionConfig& config,
                                 const EngineConfig& engine = {},
                                 const ProgressFn& progress = nullptr);

}  // namespace r1dl::engine
