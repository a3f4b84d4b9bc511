// r1dl command-line tool: decompose, sample, sor, match, bench, convert.
//
// Exit codes: 0 success (possibly with an early-termination warning),
// 2 invalid flags or configuration, 3 I/O or parse errors, 4 numerical
// degeneracy (no atoms, empty reference support, zero variance).
#include <chrono>
#include <cstdio>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "r1dl/core.hpp"
#include "r1dl/engine.hpp"
#include "r1dl/io.hpp"
#include "r1dl/metrics.hpp"
#include "r1dl/types.hpp"

namespace {

using Clock = std::chrono::steady_clock;

constexpr int kExitOk = 0;
constexpr int kExitFlags = 2;
constexpr int kExitIo = 3;
constexpr int kExitDegenerate = 4;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// "1" is a count, "1.0" is a fraction; integer literals are counts,
// anything else must parse as a fraction in (0, 1].
r1dl::SparsityParam parse_sparsity(const std::string& text) {
  if (text.empty()) throw r1dl::InvalidConfigError("empty --sparsity value");
  const bool integral =
      text.find_first_not_of("0123456789") == std::string::npos;
  if (integral) {
    return r1dl::SparsityParam::count(std::stoull(text));
  }
  std::size_t used = 0;
  double f = 0.0;
  try {
    f = std::stod(text, &used);
  } catch (const std::exception&) {
    throw r1dl::InvalidConfigError("cannot parse --sparsity value '" + text + "'");
  }
  if (used != text.size()) {
    throw r1dl::InvalidConfigError("cannot parse --sparsity value '" + text + "'");
  }
  return r1dl::SparsityParam::fraction(f);
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item =
        text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (item.empty()) throw r1dl::InvalidConfigError("empty entry in list '" + text + "'");
    out.push_back(std::stoull(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

// "TxPxKxR" with R a sparsity literal, e.g. 176x20000x10x0.07.
std::vector<r1dl::metrics::BenchCase> parse_bench_sizes(const std::string& text) {
  std::vector<r1dl::metrics::BenchCase> cases;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item =
        text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    std::vector<std::string> fields;
    std::size_t fpos = 0;
    while (fpos <= item.size()) {
      const std::size_t x = item.find('x', fpos);
      fields.push_back(item.substr(fpos, x == std::string::npos ? std::string::npos : x - fpos));
      if (x == std::string::npos) break;
      fpos = x + 1;
    }
    if (fields.size() != 4) {
      throw r1dl::InvalidConfigError("size spec '" + item + "' must be TxPxKxR");
    }
    r1dl::metrics::BenchCase c;
    c.rows = std::stoull(fields[0]);
    c.cols = std::stoull(fields[1]);
    c.k = std::stoull(fields[2]);
    c.sparsity = parse_sparsity(fields[3]);
    cases.push_back(c);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return cases;
}

struct DecomposeArgs {
  std::string input;
  std::string format = "text";
  std::size_t k = 1;
  std::string sparsity = "0.07";
  double tol = 1e-4;
  std::size_t max_iter = 100;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  std::size_t partitions = 0;
  bool serial = false;
  std::string out_d;
  std::string out_z;
  std::string report;
};

int run_decompose(const DecomposeArgs& args) {
  r1dl::DecompositionConfig config;
  config.k = args.k;
  config.sparsity = parse_sparsity(args.sparsity);
  config.tol = args.tol;
  config.max_iter = args.max_iter;
  config.seed = args.seed;
  config.validate();

  r1dl::io::RunReport report;
  const auto read_start = Clock::now();
  r1dl::DataMatrix s =
      r1dl::io::read_matrix(args.input, r1dl::io::parse_format(args.format));
  report.phases.push_back({"read", seconds_since(read_start)});
  report.rows = s.rows();
  report.cols = s.cols();

  const r1dl::ProgressFn progress = [](std::size_t index, const r1dl::AtomStats& st) {
    std::fprintf(stderr, "atom %zu: iterations=%zu residual=%.6g seconds=%.3f\n", index,
                 st.iterations, st.residual_norm, st.seconds);
  };

  r1dl::Decomposition d;
  const auto run_start = Clock::now();
  if (args.serial) {
    report.mode = "serial";
    report.workers = 1;
    report.partitions = 1;
    d = r1dl::core::decompose(std::move(s), config, progress);
  } else {
    r1dl::engine::EngineConfig ec;
    ec.workers = args.workers;
    ec.partitions = args.partitions;
    report.mode = "parallel";
    report.workers = ec.resolve_workers();
    report.partitions = ec.resolve_partitions(report.rows);
    d = r1dl::engine::decompose_parallel(std::move(s), config, ec, progress);
  }
  report.phases.push_back({"decompose", seconds_since(run_start)});

  if (d.atoms.empty()) {
    std::fprintf(stderr, "error: decomposition produced no atoms (degenerate input)\n");
    return kExitDegenerate;
  }

  const auto write_start = Clock::now();
  r1dl::io::write_decomposition(d, args.out_d, args.out_z);
  report.phases.push_back({"write", seconds_since(write_start)});

  report.config = d.config;
  report.early_stop = d.early_stop;
  for (std::size_t i = 0; i < d.atoms.size(); ++i) {
    const r1dl::AtomStats& st = d.stats[i];
    report.atoms.push_back(
        {i, st.iterations, st.converged, st.residual_norm, st.seconds});
  }
  if (!args.report.empty()) r1dl::io::write_report(report, args.report);

  if (d.early_stop) {
    std::fprintf(stderr, "warning: early termination after %zu of %zu atoms (%s)\n",
                 d.atoms.size(), config.k,
                 d.stop_reason == r1dl::StopReason::kZeroResidual ? "zero residual"
                                                                  : "degenerate atom");
  }
  return kExitOk;
}

int run_sample(const std::string& input, const std::string& format, double rate,
               std::uint64_t seed, const std::string& output,
               const std::string& indices_path) {
  const auto fmt = r1dl::io::parse_format(format);
  const r1dl::DataMatrix s = r1dl::io::read_matrix(input, fmt);
  r1dl::io::SamplingSpec spec{rate, seed};
  r1dl::io::SampledMatrix sampled = r1dl::io::sample_columns(s, spec);
  r1dl::io::write_matrix(sampled.matrix, output, fmt);
  if (!indices_path.empty()) {
    std::FILE* f = std::fopen(indices_path.c_str(), "w");
    if (!f) throw r1dl::IoError("cannot open '" + indices_path + "' for writing");
    for (std::size_t idx : sampled.indices) std::fprintf(f, "%zu\n", idx);
    std::fclose(f);
  }
  return kExitOk;
}

int run_sor(const std::string& a_path, std::size_t atom_a, const std::string& b_path,
            std::size_t atom_b, double threshold) {
  const r1dl::io::ZFile za = r1dl::io::read_factor_z(a_path);
  const r1dl::io::ZFile zb = r1dl::io::read_factor_z(b_path);
  if (atom_a >= za.atoms.size()) {
    throw r1dl::ParseError("atom index " + std::to_string(atom_a) + " out of range for '" +
                           a_path + "' (" + std::to_string(za.atoms.size()) + " atoms)");
  }
  if (atom_b >= zb.atoms.size()) {
    throw r1dl::ParseError("atom index " + std::to_string(atom_b) + " out of range for '" +
                           b_path + "' (" + std::to_string(zb.atoms.size()) + " atoms)");
  }
  const double sor = r1dl::metrics::spatial_overlap_rate(za.atoms[atom_a],
                                                         zb.atoms[atom_b], threshold);
  std::printf("%.4f\n", sor);
  return kExitOk;
}

int run_match(const std::string& d_path, const std::string& refs_path) {
  const auto d_rows = r1dl::io::read_factor_d(d_path);
  const r1dl::DataMatrix refs =
      r1dl::io::read_matrix(refs_path, r1dl::io::MatrixFormat::kText);
  if (refs.cols() != d_rows.front().size()) {
    throw r1dl::ParseError("reference series length " + std::to_string(refs.cols()) +
                           " does not match temporal pattern length " +
                           std::to_string(d_rows.front().size()));
  }
  std::vector<std::vector<double>> ref_rows;
  for (std::size_t m = 0; m < refs.rows(); ++m) {
    const auto row = refs.row(m);
    ref_rows.emplace_back(row.begin(), row.end());
  }
  const r1dl::metrics::MatchResult result = r1dl::metrics::match_atoms(d_rows, ref_rows);
  std::printf("ref atom correlation\n");
  for (const auto& m : result.matches) {
    std::printf("%zu %zu %.6f\n", m.ref_index, m.atom_index, m.correlation);
  }
  for (std::size_t k : result.skipped_atoms) {
    std::fprintf(stderr, "warning: atom %zu skipped (zero variance)\n", k);
  }
  return kExitOk;
}

int run_bench(const std::string& sizes, const std::string& workers_list, std::size_t reps,
              const std::string& csv_path, std::uint64_t seed) {
  const auto cases = parse_bench_sizes(sizes);
  std::vector<std::size_t> workers;
  if (workers_list.empty()) {
    workers.push_back(r1dl::engine::EngineConfig{}.resolve_workers());
  } else {
    workers = parse_size_list(workers_list);
  }
  const r1dl::metrics::BenchTable table = r1dl::metrics::benchmark(cases, workers, reps, seed);
  if (!csv_path.empty()) {
    std::FILE* f = std::fopen(csv_path.c_str(), "w");
    if (!f) throw r1dl::IoError("cannot open '" + csv_path + "' for writing");
    const std::string csv = r1dl::metrics::bench_csv(table);
    std::fwrite(csv.data(), 1, csv.size(), f);
    std::fclose(f);
  }
  std::fputs(r1dl::metrics::bench_summary(table).c_str(), stdout);
  return kExitOk;
}

int run_convert(const std::string& input, const std::string& from,
                const std::string& output, const std::string& to) {
  const r1dl::DataMatrix s = r1dl::io::read_matrix(input, r1dl::io::parse_format(from));
  r1dl::io::write_matrix(s, output, r1dl::io::parse_format(to));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rank-1 dictionary learning: sparse decomposition of dense T x P matrices"};
  app.require_subcommand(1);

  DecomposeArgs dec;
  auto* cmd_dec = app.add_subcommand("decompose", "learn K sparse rank-1 atoms");
  cmd_dec->add_option("--input", dec.input, "input matrix path")->required();
  cmd_dec->add_option("--format", dec.format, "matrix format: text|binary")
      ->check(CLI::IsMember({"text", "binary"}));
  cmd_dec->add_option("-K", dec.k, "number of atoms to learn")->required();
  cmd_dec->add_option("--sparsity", dec.sparsity,
                      "nonzeros per loading: fraction in (0,1] or integer count "
                      "('1' is a count, '1.0' is a fraction)");
  cmd_dec->add_option("--tol", dec.tol, "convergence threshold on |u_new - u_old|");
  cmd_dec->add_option("--max-iter", dec.max_iter, "iteration cap per atom");
  cmd_dec->add_option("--seed", dec.seed, "RNG seed");
  cmd_dec->add_option("--workers", dec.workers,
                      "worker threads (default: R1DL_WORKERS env var, else hardware)");
  cmd_dec->add_option("--partitions", dec.partitions,
                      "row partitions (default: worker count, capped at T)");
  cmd_dec->add_flag("--serial", dec.serial, "run the serial reference path");
  cmd_dec->add_option("--out-d", dec.out_d, "output path for temporal patterns D")
      ->required();
  cmd_dec->add_option("--out-z", dec.out_z, "output path for spatial loadings Z")
      ->required();
  cmd_dec->add_option("--report", dec.report, "optional run report path");

  std::string sample_input, sample_format = "text", sample_output, sample_indices;
  double sample_rate = 1.0;
  std::uint64_t sample_seed = 0;
  auto* cmd_sample = app.add_subcommand("sample", "uniform column sampling");
  cmd_sample->add_option("--input", sample_input)->required();
  cmd_sample->add_option("--format", sample_format)
      ->check(CLI::IsMember({"text", "binary"}));
  cmd_sample->add_option("--rate", sample_rate, "sampling rate in (0, 1]")->required();
  cmd_sample->add_option("--seed", sample_seed);
  cmd_sample->add_option("--output", sample_output)->required();
  cmd_sample->add_option("--indices", sample_indices,
                         "output path for the selected column indices");

  std::string sor_a, sor_b;
  std::size_t sor_atom_a = 0, sor_atom_b = 0;
  double sor_threshold = 1e-6;
  auto* cmd_sor = app.add_subcommand("sor", "spatial overlap rate between two Z atoms");
  cmd_sor->add_option("--a", sor_a, "first Z file")->required();
  cmd_sor->add_option("--atom-a", sor_atom_a)->required();
  cmd_sor->add_option("--b", sor_b, "second Z file (reference)")->required();
  cmd_sor->add_option("--atom-b", sor_atom_b)->required();
  cmd_sor->add_option("--threshold", sor_threshold, "support binarization threshold");

  std::string match_d, match_refs;
  auto* cmd_match = app.add_subcommand("match", "match temporal patterns to references");
  cmd_match->add_option("--d", match_d, "D file (K x T)")->required();
  cmd_match->add_option("--refs", match_refs, "reference series file (M x T, text)")
      ->required();

  std::string bench_sizes, bench_workers, bench_csv_path;
  std::size_t bench_reps = 3;
  std::uint64_t bench_seed = 0;
  auto* cmd_bench = app.add_subcommand("bench", "timing benchmark on synthetic data");
  cmd_bench->add_option("--sizes", bench_sizes, "comma list of TxPxKxR specs")->required();
  cmd_bench->add_option("--workers", bench_workers, "comma list of worker counts");
  cmd_bench->add_option("--reps", bench_reps, "repetitions per configuration");
  cmd_bench->add_option("--csv", bench_csv_path, "write the timing table as CSV");
  cmd_bench->add_option("--seed", bench_seed);

  std::string conv_input, conv_from, conv_output, conv_to;
  auto* cmd_conv = app.add_subcommand("convert", "convert between matrix formats");
  cmd_conv->add_option("--input", conv_input)->required();
  cmd_conv->add_option("--from", conv_from)->required()
      ->check(CLI::IsMember({"text", "binary"}));
  cmd_conv->add_option("--output", conv_output)->required();
  cmd_conv->add_option("--to", conv_to)->required()
      ->check(CLI::IsMember({"text", "binary"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitFlags;
  }

  try {
    if (cmd_dec->parsed()) return run_decompose(dec);
    if (cmd_sample->parsed()) {
      return run_sample(sample_input, sample_format, sample_rate, sample_seed,
                        sample_output, sample_indices);
    }
    if (cmd_sor->parsed()) return run_sor(sor_a, sor_atom_a, sor_b, sor_atom_b, sor_threshold);
    if (cmd_match->parsed()) return run_match(match_d, match_refs);
    if (cmd_bench->parsed()) {
      return run_bench(bench_sizes, bench_workers, bench_reps, bench_csv_path, bench_seed);
    }
    if (cmd_conv->parsed()) return run_convert(conv_input, conv_from, conv_output, conv_to);
  } catch (const r1dl::InvalidConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFlags;
  } catch (const r1dl::InvalidPartitioningError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFlags;
  } catch (const r1dl::NonFiniteError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const r1dl::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const r1dl::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const r1dl::Error& e) {
    // zero image, degenerate atom, empty reference, zero variance, ...
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDegenerate;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFlags;
  }
  return kExitOk;
}
