// Acceptance suite: one pass/fail line per criterion, exit code equal
// to the number of failures. Criterion 10 (peak-RSS) re-executes this
// binary with --memcheck-child so the measurement starts from a clean
// address space.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "r1dl/core.hpp"
#include "r1dl/engine.hpp"
#include "r1dl/io.hpp"
#include "r1dl/metrics.hpp"
#include "r1dl/synthetic.hpp"

using namespace r1dl;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

struct Criterion {
  const char* name;
  Clock::time_point start = Clock::now();
  explicit Criterion(const char* n) : name(n) {}
  void pass(const std::string& detail) const {
    std::printf("PASS  %s: %s (%.2f s)\n", name, detail.c_str(), elapsed());
  }
  void fail(const std::string& detail) const {
    std::printf("FAIL  %s: %s (%.2f s)\n", name, detail.c_str(), elapsed());
    ++failures;
  }
  void skip(const std::string& detail) const {
    std::printf("SKIP  %s: %s (%.2f s)\n", name, detail.c_str(), elapsed());
  }
  double elapsed() const {
    return std::chrono::duration<double>(Clock::now() - start).count();
  }
};

DataMatrix random_matrix(std::size_t t, std::size_t p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  DataMatrix s(t, p);
  for (double& x : s.values()) x = normal(rng);
  return s;
}

double oracle_energy(const DataMatrix& s, const BasisVector& u, const LoadingVector& v) {
  const auto dense = v.to_dense();
  double sq = 0.0;
  for (std::size_t t = 0; t < s.rows(); ++t) {
    for (std::size_t p = 0; p < s.cols(); ++p) {
      const double d = s.at(t, p) - u[t] * dense[p];
      sq += d * d;
    }
  }
  return std::sqrt(sq);
}

void enumerate_supports(std::size_t p, std::size_t r, std::vector<std::size_t>& stack,
                        const std::function<void(const std::vector<std::size_t>&)>& emit,
                        std::size_t start = 0) {
  if (stack.size() == r) {
    emit(stack);
    return;
  }
  for (std::size_t i = start; i < p; ++i) {
    stack.push_back(i);
    enumerate_supports(p, r, stack, emit, i + 1);
    stack.pop_back();
  }
}

// criterion 1: update_v vs exhaustive search over all r-supports
void criterion_exact_minimizer() {
  Criterion c("criterion 1 (exact-minimizer oracle)");
  std::mt19937_64 rng(1001);
  int checked = 0;
  int failed = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t t = 1 + rng() % 6;
    const std::size_t p = 2 + rng() % 7;  // up to 8
    const std::size_t r = 1 + rng() % std::min<std::size_t>(4, p);
    const DataMatrix s = random_matrix(t, p, rng);
    const BasisVector u = core::init_u(t, rng);
    const LoadingVector v = core::update_v(s, u, r);
    const double achieved = oracle_energy(s, u, v);

    std::vector<double> stu(p, 0.0);
    core::accumulate_vt_product(s.values(), t, p, u.values, stu);
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> stack;
    enumerate_supports(p, r, stack, [&](const std::vector<std::size_t>& supp) {
      LoadingVector w;
      w.length = p;
      for (std::size_t idx : supp) {
        if (stu[idx] != 0.0) {
          w.indices.push_back(idx);
          w.values.push_back(stu[idx]);
        }
      }
      best = std::min(best, oracle_energy(s, u, w));
    });
    ++checked;
    if (!(achieved <= best + 1e-12 && best <= achieved + 1e-12)) ++failed;
  }
  if (failed == 0 && c.elapsed() < 10.0) {
    c.pass(std::to_string(checked) + "/200 matrices match the exhaustive argmin");
  } else {
    c.fail(std::to_string(failed) + " mismatches or overtime");
  }
}

// criteria 2 + 3: energy monotonicity and the post-v-update identity
void criterion_energy_monotone_and_identity() {
  Criterion c2("criterion 2 (energy monotonicity)");
  Criterion c3("criterion 3 (post-v-update identity)");
  std::mt19937_64 rng(2002);
  int mono_violations = 0;
  int identity_violations = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const DataMatrix s = random_matrix(20, 50, rng);
    DecompositionConfig config;
    config.k = 1;
    config.sparsity = SparsityParam::count(1 + rep % 12);
    config.max_iter = 30;
    config.seed = static_cast<std::uint64_t>(rep);
    core::Rng fit_rng(config.seed);
    EnergyTrace trace;
    core::fit_atom(s, config, fit_rng, &trace);

    const double s_sq = core::frobenius_sqnorm(s);
    const double slack = 1e-12 * std::sqrt(s_sq);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < trace.after_v.size(); ++it) {
      if (trace.after_v[it] > prev + slack) ++mono_violations;
      if (trace.after_u[it] > trace.after_v[it] + slack) ++mono_violations;
      prev = trace.after_u[it];
      const double lhs = trace.after_v[it] * trace.after_v[it];
      const double rhs = s_sq - trace.v_sqnorm[it];
      if (std::abs(lhs - rhs) > 1e-9 * s_sq) ++identity_violations;
    }
  }
  if (mono_violations == 0) {
    c2.pass("0 violations over 100 matrices");
  } else {
    c2.fail(std::to_string(mono_violations) + " violations");
  }
  if (identity_violations == 0) {
    c3.pass("identity holds within 1e-9 relative on the same 100 matrices");
  } else {
    c3.fail(std::to_string(identity_violations) + " violations");
  }
}

// criterion 4: exact rank-1 inputs are recovered to machine precision
void criterion_rank1_recovery() {
  Criterion c("criterion 4 (rank-1 recovery)");
  int failed = 0;
  for (int seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(3000 + seed);
    const std::size_t t = 8 + rng() % 20;
    const std::size_t p = 30 + rng() % 60;
    const std::size_t nnz = 2 + rng() % 6;
    const BasisVector u_star = core::init_u(t, rng);
    LoadingVector v_star;
    v_star.length = p;
    std::vector<std::size_t> cols(p);
    for (std::size_t i = 0; i < p; ++i) cols[i] = i;
    std::shuffle(cols.begin(), cols.end(), rng);
    cols.resize(nnz);
    std::sort(cols.begin(), cols.end());
    std::uniform_real_distribution<double> mag(0.5, 2.0);
    for (std::size_t idx : cols) {
      v_star.indices.push_back(idx);
      v_star.values.push_back(mag(rng) * (rng() % 2 == 0 ? 1.0 : -1.0));
    }
    DataMatrix s(t, p);
    for (std::size_t row = 0; row < t; ++row) {
      for (std::size_t i = 0; i < nnz; ++i) {
        s.at(row, v_star.indices[i]) = u_star[row] * v_star.values[i];
      }
    }

    DecompositionConfig config;
    config.k = 1;
    config.sparsity = SparsityParam::count(nnz);
    config.seed = static_cast<std::uint64_t>(seed);
    const Decomposition d = core::decompose(s, config);
    if (d.atoms.size() != 1) {
      ++failed;
      continue;
    }
    double dot = 0.0;
    for (std::size_t row = 0; row < t; ++row) dot += d.atoms[0].u[row] * u_star[row];
    const double rel =
        d.stats[0].residual_norm / std::sqrt(core::frobenius_sqnorm(s));
    if (!(std::abs(dot) > 1.0 - 1e-10 && rel < 1e-8)) ++failed;
  }
  if (failed == 0) {
    c.pass("50/50 seeded instances recovered");
  } else {
    c.fail(std::to_string(failed) + "/50 instances failed");
  }
}

// criterion 5: planted-K recovery in decreasing-sigma order
void criterion_planted_k() {
  Criterion c("criterion 5 (planted-K recovery)");
  int seeds_passed = 0;
  for (int seed = 0; seed < 50; ++seed) {
    metrics::SyntheticSpec spec;
    spec.rows = 64;
    spec.cols = 4096;
    spec.k = 5;
    spec.support_size = 64;
    spec.sigma_max = 16.0;
    spec.sigma_decay = 0.5;  // sigma = 16, 8, 4, 2, 1
    spec.noise_sigma = 0.0;
    spec.seed = static_cast<std::uint64_t>(4000 + seed);
    const auto planted = metrics::make_planted(spec);

    DecompositionConfig config;
    config.k = 5;
    // the paper's 7% convention; a budget that covers the whole planted
    // support keeps the greedy pursuit on the dominant factor (an exact
    // per-factor budget creates thresholding lock-in basins and the
    // recovery order becomes init-dependent)
    config.sparsity = SparsityParam::fraction(0.07);
    config.seed = static_cast<std::uint64_t>(seed);
    const Decomposition d = core::decompose(planted.matrix, config);
    if (d.atoms.size() != 5) continue;

    bool ok = true;
    for (std::size_t k = 0; k < 5; ++k) {
      const double corr =
          metrics::pearson(d.atoms[k].u.values, planted.u[k].values);
      const double sor = metrics::spatial_overlap_rate(d.atoms[k].v, planted.v[k]);
      if (!(std::abs(corr) > 0.99 && sor > 0.95)) {
        ok = false;
        break;
      }
    }
    if (ok) ++seeds_passed;
  }
  if (seeds_passed >= 48 && c.elapsed() < 30.0) {
    c.pass(std::to_string(seeds_passed) + "/50 seeds recovered all factors in order");
  } else {
    c.fail(std::to_string(seeds_passed) + "/50 seeds passed (need 48) in " +
           std::to_string(c.elapsed()) + " s (need < 30)");
  }
}

// criterion 6: serial/parallel equivalence on 176 x 20000 matrices
void criterion_serial_parallel_equivalence() {
  Criterion c("criterion 6 (serial/parallel equivalence)");
  std::mt19937_64 rng(6006);
  int failed = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const DataMatrix s = random_matrix(176, 20000, rng);
    DecompositionConfig config;
    config.k = 2;
    config.sparsity = SparsityParam::count(400);
    config.max_iter = 10;
    config.seed = static_cast<std::uint64_t>(rep);
    const Decomposition serial = core::decompose(s, config);

    {
      engine::EngineConfig ec;
      ec.workers = 1;
      const Decomposition par = engine::decompose_parallel(s, config, ec);
      if (par.atoms.size() != serial.atoms.size()) {
        ++failed;
        continue;
      }
      for (std::size_t k = 0; k < par.atoms.size(); ++k) {
        if (!(par.atoms[k] == serial.atoms[k])) ++failed;  // bit-identical
      }
    }
    for (std::size_t workers : {2u, 4u, 8u}) {
      engine::EngineConfig ec;
      ec.workers = workers;
      const Decomposition par = engine::decompose_parallel(s, config, ec);
      if (par.atoms.size() != serial.atoms.size()) {
        ++failed;
        continue;
      }
      for (std::size_t k = 0; k < par.atoms.size(); ++k) {
        if (par.atoms[k].v.indices != serial.atoms[k].v.indices) {
          ++failed;
          continue;
        }
        for (std::size_t t = 0; t < 176; ++t) {
          if (std::abs(par.atoms[k].u[t] - serial.atoms[k].u[t]) > 1e-8) ++failed;
        }
        for (std::size_t i = 0; i < par.atoms[k].v.nnz(); ++i) {
          if (std::abs(par.atoms[k].v.values[i] - serial.atoms[k].v.values[i]) > 1e-8) {
            ++failed;
          }
        }
      }
    }
  }
  if (failed == 0) {
    c.pass("20 matrices, W in {1,2,4,8}: supports identical, elements within 1e-8");
  } else {
    c.fail(std::to_string(failed) + " deviations");
  }
}

// criterion 7: byte-identical factor files for identical invocations
void criterion_determinism() {
  Criterion c("criterion 7 (determinism)");
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "r1dl_acceptance_det";
  fs::create_directories(dir);
  std::mt19937_64 rng(7007);
  const DataMatrix s = random_matrix(48, 3000, rng);
  DecompositionConfig config;
  config.k = 4;
  config.sparsity = SparsityParam::fraction(0.05);
  config.seed = 99;
  config.max_iter = 20;

  const auto run_once = [&](const std::string& tag) {
    engine::EngineConfig ec;
    ec.workers = 3;
    ec.partitions = 5;
    const Decomposition d =
        engine::decompose_parallel(engine::PartitionedMatrix(s, 5), config, ec);
    io::write_decomposition(d, (dir / ("d_" + tag)).string(),
                            (dir / ("z_" + tag)).string());
  };
  run_once("a");
  run_once("b");
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string{std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>()};
  };
  const bool same_d = slurp(dir / "d_a") == slurp(dir / "d_b");
  const bool same_z = slurp(dir / "z_a") == slurp(dir / "z_b");
  fs::remove_all(dir);
  if (same_d && same_z) {
    c.pass("repeated invocation produced byte-identical D and Z files");
  } else {
    c.fail("factor files differ between identical runs");
  }
}

// criterion 8: sampled-run supports overlap full-run supports
void criterion_sampling_robustness() {
  Criterion c("criterion 8 (sampling robustness)");
  int atoms_total = 0;
  int atoms_passed = 0;
  for (int seed = 0; seed < 10; ++seed) {
    metrics::SyntheticSpec spec;
    spec.rows = 176;
    spec.cols = 100000;
    spec.k = 5;
    spec.support_size = 2000;
    spec.sigma_max = 16.0;
    spec.sigma_decay = 0.5;
    spec.noise_sigma = 0.002;
    spec.seed = static_cast<std::uint64_t>(8000 + seed);
    const auto planted = metrics::make_planted(spec);

    DecompositionConfig config;
    config.k = 5;
    // r = 2100 full / 1050 sampled: a 5% margin over the planted support
    // (2000 full, ~1000 surviving) so each deflation removes the whole
    // factor; an exact budget leaves truncation stubs that hijack later
    // atoms whenever sampling keeps more support columns than r
    config.sparsity = SparsityParam::fraction(0.021);
    config.seed = static_cast<std::uint64_t>(seed);
    const Decomposition full = core::decompose(planted.matrix, config);

    io::SamplingSpec sampling{0.5, static_cast<std::uint64_t>(seed)};
    const io::SampledMatrix sampled = io::sample_columns(planted.matrix, sampling);
    const Decomposition sub = core::decompose(sampled.matrix, config);

    // sampled original-column set, for restricting the full-run support
    std::vector<bool> in_sample(100000, false);
    for (std::size_t idx : sampled.indices) in_sample[idx] = true;

    for (const Atom& atom : sub.atoms) {
      // match by temporal correlation against the full-run atoms
      double best = -1.0;
      std::size_t best_k = 0;
      for (std::size_t k = 0; k < full.atoms.size(); ++k) {
        const double corr = std::abs(
            metrics::pearson(atom.u.values, full.atoms[k].u.values));
        if (corr > best) {
          best = corr;
          best_k = k;
        }
      }
      // sampled-run support mapped back to original column ids
      std::vector<std::size_t> p1;
      for (std::size_t i : atom.v.indices) p1.push_back(sampled.indices[i]);
      std::sort(p1.begin(), p1.end());
      // full-run support restricted to sampled columns
      std::vector<std::size_t> p2;
      for (std::size_t idx : full.atoms[best_k].v.indices) {
        if (in_sample[idx]) p2.push_back(idx);
      }
      ++atoms_total;
      if (!p2.empty() && metrics::support_overlap_rate(p1, p2) > 0.85) ++atoms_passed;
    }
  }
  const double frac =
      static_cast<double>(atoms_passed) / static_cast<double>(atoms_total);
  char detail[128];
  std::snprintf(detail, sizeof(detail), "%d/%d atom pairs above SOR 0.85 (%.0f%%)",
                atoms_passed, atoms_total, 100.0 * frac);
  if (frac >= 0.9) {
    c.pass(detail);
  } else {
    c.fail(detail);
  }
}

// criterion 9: wall-clock sanity and the bench table + quadratic fit
void criterion_scaling() {
  Criterion c("criterion 9 (scaling sanity)");
  metrics::SyntheticSpec spec;
  spec.rows = 176;
  spec.cols = 200000;
  spec.k = 10;
  spec.support_size = 10000;
  spec.sigma_max = 32.0;
  spec.sigma_decay = 0.7;
  spec.noise_sigma = 0.002;
  spec.seed = 9009;
  const auto planted = metrics::make_planted(spec);

  DecompositionConfig config;
  config.k = 10;
  config.sparsity = SparsityParam::fraction(0.05);
  config.seed = 1;

  engine::EngineConfig four;
  four.workers = 4;
  const auto start4 = Clock::now();
  const Decomposition d4 = engine::decompose_parallel(planted.matrix, config, four);
  const double t4 = std::chrono::duration<double>(Clock::now() - start4).count();

  engine::EngineConfig one;
  one.workers = 1;
  const auto start1 = Clock::now();
  const Decomposition d1 = engine::decompose_parallel(planted.matrix, config, one);
  const double t1 = std::chrono::duration<double>(Clock::now() - start1).count();

  char detail[160];
  if (t4 < 60.0 && d4.atoms.size() == 10 && d1.atoms.size() == 10) {
    std::snprintf(detail, sizeof(detail), "K=10 on 176x200000: W=4 took %.1f s (< 60 s)",
                  t4);
    c.pass(detail);
  } else {
    std::snprintf(detail, sizeof(detail), "W=4 took %.1f s (limit 60 s)", t4);
    c.fail(detail);
  }

  Criterion cr("criterion 9b (W=4 <= 0.7x W=1)");
  const double ratio = t4 / t1;
  const unsigned hw = std::thread::hardware_concurrency();
  std::snprintf(detail, sizeof(detail), "W=4 %.1f s vs W=1 %.1f s, ratio %.2f", t4, t1,
                ratio);
  if (hw >= 4) {
    if (ratio <= 0.7) {
      cr.pass(detail);
    } else {
      cr.fail(detail);
    }
  } else {
    cr.skip(std::string(detail) +
            " -- precondition unmet: criterion is scoped to a 4-core machine, this host "
            "exposes " +
            std::to_string(hw) + " hardware thread(s)");
  }

  Criterion cb("criterion 9c (bench table + quadratic fit)");
  std::vector<metrics::BenchCase> cases;
  for (std::size_t p : {25000u, 50000u, 100000u, 200000u}) {
    metrics::BenchCase bc;
    bc.rows = 176;
    bc.cols = p;
    bc.k = 3;
    bc.sparsity = SparsityParam::fraction(0.05);
    cases.push_back(bc);
  }
  const auto table = metrics::benchmark(cases, {4}, 1, 17);
  std::fputs(metrics::bench_csv(table).c_str(), stdout);
  std::fputs(metrics::bench_summary(table).c_str(), stdout);
  bool monotone = true;
  double prev = 0.0;
  for (const auto& row : table.rows) {
    if (row.mode != "serial") continue;
    if (row.median_seconds < prev * 0.8) monotone = false;  // allow timing noise
    prev = row.median_seconds;
  }
  if (!table.fits.empty() && monotone) {
    cb.pass("time-vs-P table emitted with quadratic fit");
  } else {
    cb.fail("missing fit or non-monotone trend");
  }
}

// criterion 10: peak RSS below 2x matrix + 64 MB, measured in a child
int memcheck_child() {
  metrics::SyntheticSpec spec;
  spec.rows = 176;
  spec.cols = 200000;
  spec.k = 10;
  spec.support_size = 10000;
  spec.sigma_max = 32.0;
  spec.sigma_decay = 0.7;
  spec.noise_sigma = 0.002;
  spec.seed = 9009;
  auto planted = metrics::make_planted(spec);
  std::vector<BasisVector>().swap(planted.u);
  std::vector<LoadingVector>().swap(planted.v);

  DecompositionConfig config;
  config.k = 10;
  config.sparsity = SparsityParam::fraction(0.05);
  config.seed = 1;
  engine::EngineConfig ec;
  ec.workers = 4;
  const Decomposition d =
      engine::decompose_parallel(std::move(planted.matrix), config, ec);

  std::ifstream status("/proc/self/status");
  std::string line;
  long vmhwm_kb = -1;
  while (std::getline(status, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      std::sscanf(line.c_str(), "VmHWM: %ld", &vmhwm_kb);
      break;
    }
  }
  std::printf("atoms %zu\nvmhwm_kb %ld\n", d.atoms.size(), vmhwm_kb);
  return vmhwm_kb > 0 ? 0 : 1;
}

void criterion_memory(const char* self_path) {
  Criterion c("criterion 10 (memory contract)");
  const std::string cmd = std::string(self_path) + " --memcheck-child";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) {
    c.fail("could not spawn the memcheck child");
    return;
  }
  char buf[256];
  long vmhwm_kb = -1;
  std::size_t atoms = 0;
  while (std::fgets(buf, sizeof(buf), pipe)) {
    std::sscanf(buf, "vmhwm_kb %ld", &vmhwm_kb);
    std::sscanf(buf, "atoms %zu", &atoms);
  }
  const int status = pclose(pipe);
  const double matrix_bytes = 176.0 * 200000.0 * 8.0;
  const double limit = 2.0 * matrix_bytes + 64.0 * 1024.0 * 1024.0;
  const double peak = static_cast<double>(vmhwm_kb) * 1024.0;
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "peak RSS %.0f MB vs limit %.0f MB (matrix %.0f MB, %zu atoms)",
                peak / 1048576.0, limit / 1048576.0, matrix_bytes / 1048576.0, atoms);
  if (WEXITSTATUS(status) == 0 && vmhwm_kb > 0 && peak < limit && atoms == 10) {
    c.pass(detail);
  } else {
    c.fail(detail);
  }
}

// criterion 11: value-exact round trips through every format
void criterion_roundtrips() {
  Criterion c("criterion 11 (I/O round trips)");
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "r1dl_acceptance_io";
  fs::create_directories(dir);
  std::mt19937_64 rng(11011);
  std::normal_distribution<double> normal;
  int failed = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t t = 1 + rng() % 6;
    const std::size_t p = 1 + rng() % 10;
    DataMatrix m(t, p);
    for (double& x : m.values()) x = normal(rng) * std::pow(10.0, (int)(rng() % 7) - 3);
    const std::string txt = (dir / "m.txt").string();
    const std::string bin = (dir / "m.bin").string();
    io::write_matrix(m, txt, io::MatrixFormat::kText);
    io::write_matrix(m, bin, io::MatrixFormat::kBinary);
    if (!(io::read_matrix(txt, io::MatrixFormat::kText) == m)) ++failed;
    if (!(io::read_matrix(bin, io::MatrixFormat::kBinary) == m)) ++failed;

    if (rep % 5 == 0) {
      // randomized decomposition round trip through factor files
      Decomposition d;
      const std::size_t k = 1 + rng() % 3;
      for (std::size_t a = 0; a < k; ++a) {
        std::vector<double> raw(t);
        for (double& x : raw) x = normal(rng);
        if (std::all_of(raw.begin(), raw.end(), [](double x) { return x == 0.0; })) {
          raw[0] = 1.0;
        }
        Atom atom;
        atom.u = core::normalize_to_basis(std::move(raw)).u;
        atom.v.length = p;
        for (std::size_t i = 0; i < p; ++i) {
          if (rng() % 2 == 0) {
            atom.v.indices.push_back(i);
            atom.v.values.push_back(normal(rng) + 2.0);
          }
        }
        d.atoms.push_back(std::move(atom));
        d.stats.push_back({});
      }
      const std::string dp = (dir / "d.txt").string();
      const std::string zp = (dir / "z.txt").string();
      io::write_decomposition(d, dp, zp);
      const Decomposition back = io::read_decomposition(dp, zp, p);
      if (back.atoms.size() != d.atoms.size()) {
        ++failed;
      } else {
        for (std::size_t a = 0; a < d.atoms.size(); ++a) {
          if (!(back.atoms[a] == d.atoms[a])) ++failed;
        }
      }
    }
  }
  fs::remove_all(dir);
  if (failed == 0) {
    c.pass("1000 matrices (text+binary) and 200 decompositions round-trip exactly");
  } else {
    c.fail(std::to_string(failed) + " round-trip mismatches");
  }
}

// criterion 12: metrics against brute-force scalar oracles
void criterion_metrics_oracles() {
  Criterion c("criterion 12 (metrics oracles)");
  std::mt19937_64 rng(12012);
  std::normal_distribution<double> normal;
  int failed = 0;
  for (int rep = 0; rep < 100; ++rep) {
    // SOR
    const std::size_t p = 5 + rng() % 20;
    std::vector<double> a(p, 0.0), b(p, 0.0);
    for (double& x : a) x = rng() % 2 == 0 ? 0.0 : normal(rng);
    for (double& x : b) x = rng() % 2 == 0 ? 0.0 : normal(rng);
    b[rng() % p] = 1.0;
    std::size_t shared = 0, denom = 0;
    for (std::size_t i = 0; i < p; ++i) {
      const bool ia = std::abs(a[i]) > 1e-6;
      const bool ib = std::abs(b[i]) > 1e-6;
      if (ib) ++denom;
      if (ia && ib) ++shared;
    }
    const double sor_oracle = static_cast<double>(shared) / static_cast<double>(denom);
    if (metrics::spatial_overlap_rate({a, 1e-6}, {b, 1e-6}) != sor_oracle) ++failed;

    // pearson
    const std::size_t n = 4 + rng() % 12;
    std::vector<double> x(n), y(n);
    for (double& v : x) v = normal(rng);
    for (double& v : y) v = normal(rng);
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sx += x[i];
      sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double num = 0, dx = 0, dy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      num += (x[i] - mx) * (y[i] - my);
      dx += (x[i] - mx) * (x[i] - mx);
      dy += (y[i] - my) * (y[i] - my);
    }
    if (std::abs(metrics::pearson(x, y) - num / std::sqrt(dx * dy)) > 1e-12) ++failed;

    // match_atoms
    const std::size_t k = 2 + rng() % 4;
    std::vector<std::vector<double>> d_rows(k, std::vector<double>(n));
    std::vector<std::vector<double>> refs(2, std::vector<double>(n));
    for (auto& row : d_rows) {
      for (double& v : row) v = normal(rng);
    }
    for (auto& row : refs) {
      for (double& v : row) v = normal(rng);
    }
    const auto result = metrics::match_atoms(d_rows, refs);
    for (std::size_t m = 0; m < refs.size(); ++m) {
      double best = -2.0;
      std::size_t best_k = 0;
      for (std::size_t kk = 0; kk < k; ++kk) {
        const double corr = metrics::pearson(d_rows[kk], refs[m]);
        if (corr > best) {
          best = corr;
          best_k = kk;
        }
      }
      if (result.matches[m].atom_index != best_k) ++failed;
    }
  }
  if (failed == 0) {
    c.pass("SOR, pearson and match_atoms agree with oracles on 100 fixtures");
  } else {
    c.fail(std::to_string(failed) + " oracle mismatches");
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1 && std::strcmp(argv[1], "--memcheck-child") == 0) {
    return memcheck_child();
  }

  criterion_exact_minimizer();
  criterion_energy_monotone_and_identity();
  criterion_rank1_recovery();
  criterion_planted_k();
  criterion_serial_parallel_equivalence();
  criterion_determinism();
  criterion_sampling_robustness();
  criterion_scaling();
  criterion_memory(argv[0]);
  criterion_roundtrips();
  criterion_metrics_oracles();

  if (failures == 0) {
    std::printf("acceptance: all criteria passed\n");
  } else {
    std::printf("acceptance: %d criterion failure(s)\n", failures);
  }
  return failures;
}
