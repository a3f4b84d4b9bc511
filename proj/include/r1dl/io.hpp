// Matrix ingestion and persistence: space-delimited text and binary
// matrix formats (row-at-a-time streaming), uniform column sampling,
// factor-matrix files (dense D / sparse-triplet Z), and run reports.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "r1dl/types.hpp"

namespace r1dl::io {

enum class MatrixFormat { kText, kBinary };

// Parses "text"/"binary"; throws InvalidConfigError otherwise.
MatrixFormat parse_format(const std::string& name);

// Text: one row per line, entries separated by single ASCII spaces, no
// header. Binary: "R1DL" magic, u32 version 1, u64 T, u64 P, then T*P
// little-endian doubles, row-major (file size is exactly 24 + 8*T*P).
DataMatrix read_matrix(const std::string& path, MatrixFormat format);
void write_matrix(const DataMatrix& s, const std::string& path, MatrixFormat format);

struct SamplingSpec {
  double rate = 1.0;  // in (0, 1]
  std::uint64_t seed = 0;

  // max(1, round(rate * p)) columns.
  std::size_t sample_count(std::size_t p) const;
};

struct SampledMatrix {
  DataMatrix matrix;
  std::vector<std::size_t> indices;  // ascending original column indices
};

// Uniform sampling without replacement (seeded partial Fisher-Yates);
// selected columns are returned in ascending original order.
SampledMatrix sample_columns(const DataMatrix& s, const SamplingSpec& spec);

// D file: K lines of T space-separated values. Z file: header "K P",
// then "atom voxel value" triplets sorted by (atom, voxel).
void write_decomposition(const Decomposition& d, const std::string& d_path,
                         const std::string& z_path);

// Round-trips the atoms value-exactly; stats are not stored in factor
// files and come back zeroed. expected_p is cross-checked against the Z
// header.
Decomposition read_decomposition(const std::string& d_path, const std::string& z_path,
                                 std::size_t expected_p);

// Individual factor-file readers (the sor/match commands need one side).
std::vector<std::vector<double>> read_factor_d(const std::string& path);
struct ZFile {
  std::size_t k = 0;
  std::size_t p = 0;
  std::vector<LoadingVector> atoms;
};
ZFile read_factor_z(const std::string& path);

struct PhaseTime {
  std::string name;
  double seconds = 0.0;
};

struct AtomRecord {
  std::size_t index = 0;
  std::size_t iterations = 0;
  bool converged = false;
  double residual_norm = 0.0;
  double seconds = 0.0;
};

// Timings, iteration counts and residual norms for one run; the schema
// is documented in the README. total equals the sum of the phase times.
struct RunReport {
  std::size_t rows = 0;
  std::size_t cols = 0;
  DecompositionConfig config;
  std::string mode = "serial";  // "serial" or "parallel"
  std::size_t workers = 1;
  std::size_t partitions = 1;
  bool early_stop = false;
  std::vector<PhaseTime> phases;
  std::vector<AtomRecord> atoms;

  double total_seconds() const;
};

RunReport make_report(const Decomposition& d, std::size_t rows, std::size_t cols,
                      const std::string& mode, std::size_t workers,
                      std::size_t partitions);

void write_report(const RunReport& report, const std::string& path);
RunReport read_report(const std::string& path);

}  // namespace r1dl::io
