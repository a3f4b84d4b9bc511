// Spatial overlap rate, Pearson correlation, atom matching, benchmark.
#include "r1dl/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <utility>

#include "r1dl/core.hpp"
#include "r1dl/synthetic.hpp"

namespace r1dl::metrics {

std::vector<std::size_t> support(const SpatialPattern& p) {
  if (p.threshold < 0.0) throw InvalidConfigError("threshold must be non-negative");
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    if (std::abs(p.values[i]) > p.threshold) s.push_back(i);
  }
  return s;
}

std::vector<std::size_t> support(const LoadingVector& v, double threshold) {
  if (threshold < 0.0) throw InvalidConfigError("threshold must be non-negative");
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < v.nnz(); ++i) {
    if (std::abs(v.values[i]) > threshold) s.push_back(v.indices[i]);
  }
  return s;
}

double support_overlap_rate(std::span<const std::size_t> s1,
                            std::span<const std::size_t> s2) {
  if (s2.empty()) throw EmptyReferenceError("reference pattern has empty support");
  std::size_t shared = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < s1.size() && j < s2.size()) {
    if (s1[i] == s2[j]) {
      ++shared;
      ++i;
      ++j;
    } else if (s1[i] < s2[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return static_cast<double>(shared) / static_cast<double>(s2.size());
}

double spatial_overlap_rate(const SpatialPattern& p1, const SpatialPattern& p2) {
  if (p1.values.size() != p2.values.size()) {
    throw InvalidConfigError("spatial patterns have different lengths");
  }
  const auto s1 = support(p1);
  const auto s2 = support(p2);
  return support_overlap_rate(s1, s2);
}

double spatial_overlap_rate(const LoadingVector& p1, const LoadingVector& p2,
                            double threshold) {
  if (p1.length != p2.length) {
    throw InvalidConfigError("spatial patterns have different lengths");
  }
  const auto s1 = support(p1, threshold);
  const auto s2 = support(p2, threshold);
  return support_overlap_rate(s1, s2);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidConfigError("pearson inputs differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw InvalidConfigError("pearson needs at least two samples");

  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw ZeroVarianceError("pearson input has zero variance");
  }
  return sxy / std::sqrt(sxx * syy);
}

MatchResult match_atoms(const std::vector<std::vector<double>>& d_rows,
                        const std::vector<std::vector<double>>& refs) {
  if (d_rows.empty()) throw InvalidConfigError("no atoms to match");
  MatchResult result;

  std::vector<bool> eligible(d_rows.size(), true);
  for (std::size_t k = 0; k < d_rows.size(); ++k) {
    const auto& row = d_rows[k];
    const bool constant = std::all_of(row.begin(), row.end(),
                                      [&](double v) { return v == row.front(); });
    if (constant || row.size() < 2) {
      eligible[k] = false;
      result.skipped_atoms.push_back(k);
    }
  }
  if (std::none_of(eligible.begin(), eligible.end(), [](bool e) { return e; })) {
    throw NoEligibleAtomError("every atom has zero variance");
  }

  for (std::size_t m = 0; m < refs.size(); ++m) {
    Match best;
    bool found = false;
    for (std::size_t k = 0; k < d_rows.size(); ++k) {
      if (!eligible[k]) continue;
      const double corr = pearson(d_rows[k], refs[m]);
      if (!found || corr > best.correlation) {
        best = Match{m, k, corr};
        found = true;
      }
    }
    result.matches.push_back(best);
  }
  return result;
}

std::vector<double> average_patterns(const std::vector<std::vector<double>>& maps) {
  if (maps.empty()) throw InvalidConfigError("no patterns to average");
  const std::size_t p = maps.front().size();
  std::vector<double> mean(p, 0.0);
  for (const auto& map : maps) {
    if (map.size() != p) throw InvalidConfigError("patterns differ in length");
    for (std::size_t i = 0; i < p; ++i) mean[i] += map[i];
  }
  const double inv = 1.0 / static_cast<double>(maps.size());
  for (double& x : mean) x *= inv;
  return mean;
}

namespace {

double median_of(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

DataMatrix bench_matrix(const BenchCase& c, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.rows = c.rows;
  spec.cols = c.cols;
  spec.k = std::min(c.k, c.rows);
  const std::size_t r = c.sparsity.resolve(c.cols);
  spec.support_size = std::max<std::size_t>(1, std::min(r, c.cols / spec.k));
  spec.sigma_max = 16.0;
  spec.sigma_decay = 0.8;
  spec.noise_sigma = 0.01;
  spec.seed = seed;
  return std::move(make_planted(spec).matrix);
}

// Least squares for time = a + b*x + c*x^2 via the 3x3 normal equations.
bool fit_quadratic(const std::vector<double>& xs, const std::vector<double>& ys,
                   QuadraticFit& fit) {
  const std::size_t n = xs.size();
  if (n < 3) return false;
  double m[3][4] = {};
  for (std::size_t i = 0; i < n; ++i) {
    const double x = xs[i];
    const double pows[5] = {1.0, x, x * x, x * x * x, x * x * x * x};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m[r][c] += pows[r + c];
      m[r][3] += pows[r] * ys[i];
    }
  }
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    if (std::abs(m[pivot][col]) < 1e-30) return false;
    std::swap(m[col], m[pivot]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
    }
  }
  fit.a = m[0][3] / m[0][0];
  fit.b = m[1][3] / m[1][1];
  fit.c = m[2][3] / m[2][2];

  double mean = 0.0;
  for (double y : ys) mean += y;
  mean /= static_cast<double>(n);
  double ss_tot = 0.0;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pred = fit.a + fit.b * xs[i] + fit.c * xs[i] * xs[i];
    ss_res += (ys[i] - pred) * (ys[i] - pred);
    ss_tot += (ys[i] - mean) * (ys[i] - mean);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.points = n;
  return true;
}

}  // namespace

BenchTable benchmark(const std::vector<BenchCase>& cases,
                     const std::vector<std::size_t>& worker_counts,
                     std::size_t repetitions, std::uint64_t seed) {
  using Clock = std::chrono::steady_clock;
  if (repetitions < 1) throw InvalidConfigError("repetitions must be at least 1");

  BenchTable table;
  for (const BenchCase& c : cases) {
    const DataMatrix base = bench_matrix(c, seed);
    DecompositionConfig config;
    config.k = c.k;
    config.sparsity = c.sparsity;
    config.seed = seed;

    const auto run_block = [&](const std::string& mode, std::size_t workers) {
      std::vector<double> times;
      times.reserve(repetitions);
      for (std::size_t rep = 0; rep < repetitions; ++rep) {
        DataMatrix input = base;  // one decomposition at a time, fresh residual
        const auto start = Clock::now();
        if (mode == "serial") {
          core::decompose(std::move(input), config);
        } else {
          engine::EngineConfig ec;
          ec.workers = workers;
          engine::decompose_parallel(std::move(input), config, ec);
        }
        times.push_back(std::chrono::duration<double>(Clock::now() - start).count());
      }
      BenchRow row;
      row.spec = c;
      row.resolved_r = c.sparsity.resolve(c.cols);
      row.mode = mode;
      row.workers = mode == "serial" ? 1 : workers;
      row.partitions = mode == "serial" ? 1 : std::min(workers, c.rows);
      row.repetitions = repetitions;
      row.median_seconds = median_of(times);
      row.min_seconds = *std::min_element(times.begin(), times.end());
      row.max_seconds = *std::max_element(times.begin(), times.end());
      table.rows.push_back(row);
    };

    run_block("serial", 1);
    for (std::size_t w : worker_counts) run_block("parallel", w);
  }

  // Quadratic fit per (mode, workers) series across the swept P values.
  std::map<std::pair<std::string, std::size_t>, std::pair<std::vector<double>, std::vector<double>>>
      series;
  for (const BenchRow& row : table.rows) {
    auto& [xs, ys] = series[{row.mode, row.workers}];
    xs.push_back(static_cast<double>(row.spec.cols));
    ys.push_back(row.median_seconds);
  }
  for (auto& [key, data] : series) {
    QuadraticFit fit;
    fit.mode = key.first;
    fit.workers = key.second;
    if (fit_quadratic(data.first, data.second, fit)) table.fits.push_back(fit);
  }
  return table;
}

std::string bench_csv(const BenchTable& table) {
  std::string out =
      "T,P,K,r,mode,workers,partitions,reps,median_s,min_s,max_s\n";
  char buf[256];
  for (const BenchRow& row : table.rows) {
    std::snprintf(buf, sizeof(buf), "%zu,%zu,%zu,%zu,%s,%zu,%zu,%zu,%.6f,%.6f,%.6f\n",
                  row.spec.rows, row.spec.cols, row.spec.k, row.resolved_r,
                  row.mode.c_str(), row.workers, row.partitions, row.repetitions,
                  row.median_seconds, row.min_seconds, row.max_seconds);
    out += buf;
  }
  return out;
}

std::string bench_summary(const BenchTable& table) {
  std::string out;
  char buf[256];
  for (const BenchRow& row : table.rows) {
    std::snprintf(buf, sizeof(buf),
                  "%zux%zu K=%zu r=%zu %s workers=%zu median=%.3fs (min %.3f, max %.3f)\n",
                  row.spec.rows, row.spec.cols, row.spec.k, row.resolved_r,
                  row.mode.c_str(), row.workers, row.median_seconds, row.min_seconds,
                  row.max_seconds);
    out += buf;
  }
  for (const QuadraticFit& fit : table.fits) {
    std::snprintf(buf, sizeof(buf),
                  "fit %s workers=%zu: time = %.3e + %.3e*P + %.3e*P^2 (R^2=%.4f, %zu points)\n",
                  fit.mode.c_str(), fit.workers, fit.a, fit.b, fit.c, fit.r_squared,
                  fit.points);
    out += buf;
  }
  return out;
}

}  // namespace r1dl::metrics
