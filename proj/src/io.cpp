// Text/binary matrix formats, factor files, sampling, and run reports.
#include "r1dl/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <utility>

static_assert(std::endian::native == std::endian::little,
              "binary matrix format assumes a little-endian host");

namespace r1dl::io {
namespace {

constexpr char kMagic[4] = {'R', '1', 'D', 'L'};
constexpr std::uint32_t kBinaryVersion = 1;

// Shortest round-trip decimal representation.
void append_double(std::string& out, double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  out.append(buf, res.ptr);
}

double parse_double_token(std::string_view token, std::size_t line_no,
                          std::size_t col_no) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec == std::errc::result_out_of_range) throw NonFiniteError(line_no - 1, col_no);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ParseError("malformed number '" + std::string(token) + "' at line " +
                     std::to_string(line_no) + ", entry " + std::to_string(col_no + 1));
  }
  if (!std::isfinite(value)) throw NonFiniteError(line_no - 1, col_no);
  return value;
}

// Splits a line on single spaces and appends parsed entries; returns the
// number of entries.
std::size_t parse_text_row(const std::string& line, std::size_t line_no,
                           std::vector<double>& out) {
  if (line.empty()) throw ParseError("empty row at line " + std::to_string(line_no));
  std::size_t count = 0;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(' ', pos);
    const std::size_t end = next == std::string::npos ? line.size() : next;
    if (end == pos) {
      throw ParseError("empty entry at line " + std::to_string(line_no) + ", entry " +
                       std::to_string(count + 1));
    }
    out.push_back(parse_double_token({line.data() + pos, end - pos}, line_no, count));
    ++count;
    if (next == std::string::npos) break;
    pos = next + 1;
    if (pos == line.size()) {
      throw ParseError("trailing space at line " + std::to_string(line_no));
    }
  }
  return count;
}

DataMatrix read_matrix_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    const std::size_t n = parse_text_row(line, rows + 1, values);
    if (rows == 0) {
      cols = n;
    } else if (n != cols) {
      throw ParseError("ragged row at line " + std::to_string(rows + 1) + ": expected " +
                       std::to_string(cols) + " entries, found " + std::to_string(n));
    }
    ++rows;
  }
  if (in.bad()) throw IoError("read failure on '" + path + "'");
  if (rows == 0) throw ParseError("'" + path + "' holds no matrix rows");
  return DataMatrix(rows, cols, std::move(values));
}

void write_matrix_text(const DataMatrix& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  std::string line;
  for (std::size_t t = 0; t < s.rows(); ++t) {
    line.clear();
    const auto row = s.row(t);
    for (std::size_t p = 0; p < s.cols(); ++p) {
      if (p != 0) line.push_back(' ');
      append_double(line, row[p]);
    }
    line.push_back('\n');
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
  }
  if (!out) throw IoError("write failure on '" + path + "'");
}

void put_u32(std::ofstream& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.write(buf, 4);
}

void put_u64(std::ofstream& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.write(buf, 8);
}

DataMatrix read_matrix_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  char magic[4];
  if (!in.read(magic, 4)) throw ParseError("'" + path + "' is shorter than the header");
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw BadMagicError("'" + path + "' does not start with the R1DL magic bytes");
  }
  std::uint32_t version = 0;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  if (!in.read(reinterpret_cast<char*>(&version), 4) ||
      !in.read(reinterpret_cast<char*>(&rows), 8) ||
      !in.read(reinterpret_cast<char*>(&cols), 8)) {
    throw ParseError("'" + path + "' is shorter than the header");
  }
  if (version != kBinaryVersion) {
    throw BadVersionError("unsupported binary matrix version " + std::to_string(version));
  }
  if (rows < 1 || cols < 1 || rows > (std::uint64_t{1} << 40) ||
      cols > (std::uint64_t{1} << 40)) {
    throw ParseError("implausible dimensions " + std::to_string(rows) + " x " +
                     std::to_string(cols) + " in '" + path + "'");
  }

  std::vector<double> values(static_cast<std::size_t>(rows * cols));
  if (!in.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(values.size() * sizeof(double)))) {
    throw ParseError("'" + path + "' is truncated");
  }
  char extra;
  if (in.read(&extra, 1)) throw ParseError("'" + path + "' has trailing data");

  DataMatrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols),
               std::move(values));
  m.validate_finite();
  return m;
}

void write_matrix_binary(const DataMatrix& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(kMagic, 4);
  put_u32(out, kBinaryVersion);
  put_u64(out, s.rows());
  put_u64(out, s.cols());
  out.write(reinterpret_cast<const char*>(s.values().data()),
            static_cast<std::streamsize>(s.values().size() * sizeof(double)));
  if (!out) throw IoError("write failure on '" + path + "'");
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && line[pos] == ' ') ++pos;
    std::size_t end = pos;
    while (end < line.size() && line[end] != ' ') ++end;
    if (end > pos) parts.emplace_back(line.substr(pos, end - pos));
    pos = end;
  }
  return parts;
}

std::size_t parse_index(const std::string& token, const std::string& what,
                        std::size_t line_no) {
  std::size_t value = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw ParseError("malformed " + what + " '" + token + "' at line " +
                     std::to_string(line_no));
  }
  return value;
}

}  // namespace

MatrixFormat parse_format(const std::string& name) {
  if (name == "text") return MatrixFormat::kText;
  if (name == "binary") return MatrixFormat::kBinary;
  throw InvalidConfigError("unknown matrix format '" + name + "' (expected text|binary)");
}

DataMatrix read_matrix(const std::string& path, MatrixFormat format) {
  if (format == MatrixFormat::kText) {
    DataMatrix m = read_matrix_text(path);
    return m;  // entries already validated finite during parsing
  }
  return read_matrix_binary(path);
}

void write_matrix(const DataMatrix& s, const std::string& path, MatrixFormat format) {
  if (format == MatrixFormat::kText) {
    write_matrix_text(s, path);
  } else {
    write_matrix_binary(s, path);
  }
}

std::size_t SamplingSpec::sample_count(std::size_t p) const {
  if (!(rate > 0.0) || rate > 1.0) {
    throw InvalidConfigError("sampling rate must lie in (0, 1]");
  }
  const auto n = static_cast<std::size_t>(
      std::llround(rate * static_cast<double>(p)));
  if (n < 1) return 1;
  return n > p ? p : n;
}

SampledMatrix sample_columns(const DataMatrix& s, const SamplingSpec& spec) {
  const std::size_t p = s.cols();
  const std::size_t m = spec.sample_count(p);

  std::vector<std::size_t> pool(p);
  for (std::size_t i = 0; i < p; ++i) pool[i] = i;
  std::mt19937_64 rng(spec.seed);
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, p - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(m);
  std::sort(pool.begin(), pool.end());

  DataMatrix out(s.rows(), m);
  for (std::size_t t = 0; t < s.rows(); ++t) {
    const auto src = s.row(t);
    const auto dst = out.row(t);
    for (std::size_t i = 0; i < m; ++i) dst[i] = src[pool[i]];
  }
  return SampledMatrix{std::move(out), std::move(pool)};
}

void write_decomposition(const Decomposition& d, const std::string& d_path,
                         const std::string& z_path) {
  std::ofstream df(d_path, std::ios::binary | std::ios::trunc);
  if (!df) throw IoError("cannot open '" + d_path + "' for writing");
  std::string line;
  std::size_t p = 0;
  for (const Atom& atom : d.atoms) {
    line.clear();
    for (std::size_t i = 0; i < atom.u.size(); ++i) {
      if (i != 0) line.push_back(' ');
      append_double(line, atom.u[i]);
    }
    line.push_back('\n');
    df.write(line.data(), static_cast<std::streamsize>(line.size()));
    p = atom.v.length;
  }
  if (!df) throw IoError("write failure on '" + d_path + "'");

  std::ofstream zf(z_path, std::ios::binary | std::ios::trunc);
  if (!zf) throw IoError("cannot open '" + z_path + "' for writing");
  line.clear();
  line += std::to_string(d.atoms.size());
  line.push_back(' ');
  line += std::to_string(p);
  line.push_back('\n');
  zf.write(line.data(), static_cast<std::streamsize>(line.size()));
  for (std::size_t k = 0; k < d.atoms.size(); ++k) {
    const LoadingVector& v = d.atoms[k].v;
    for (std::size_t i = 0; i < v.nnz(); ++i) {
      line.clear();
      line += std::to_string(k);
      line.push_back(' ');
      line += std::to_string(v.indices[i]);
      line.push_back(' ');
      append_double(line, v.values[i]);
      line.push_back('\n');
      zf.write(line.data(), static_cast<std::streamsize>(line.size()));
    }
  }
  if (!zf) throw IoError("write failure on '" + z_path + "'");
}

std::vector<std::vector<double>> read_factor_d(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    std::vector<double> row;
    parse_text_row(line, line_no, row);
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("ragged row at line " + std::to_string(line_no) + " in '" + path +
                       "'");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("'" + path + "' holds no temporal patterns");
  return rows;
}

ZFile read_factor_z(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("'" + path + "' is missing the header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_ws(line);
  if (header.size() != 2) {
    throw ParseError("Z header must be 'K P', got '" + line + "'");
  }
  ZFile z;
  z.k = parse_index(header[0], "atom count", 1);
  z.p = parse_index(header[1], "voxel count", 1);
  z.atoms.assign(z.k, LoadingVector{});
  for (auto& v : z.atoms) v.length = z.p;

  std::size_t line_no = 1;
  std::size_t last_atom = 0;
  std::size_t last_voxel = 0;
  bool any = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    const auto parts = split_ws(line);
    if (parts.size() != 3) {
      throw ParseError("Z triplet at line " + std::to_string(line_no) +
                       " must be 'atom voxel value'");
    }
    const std::size_t atom = parse_index(parts[0], "atom index", line_no);
    const std::size_t voxel = parse_index(parts[1], "voxel index", line_no);
    const double value = parse_double_token(parts[2], line_no, 2);
    if (atom >= z.k) {
      throw ParseError("atom index " + std::to_string(atom) + " out of range at line " +
                       std::to_string(line_no));
    }
    if (voxel >= z.p) {
      throw ParseError("voxel index " + std::to_string(voxel) + " out of range at line " +
                       std::to_string(line_no));
    }
    if (value == 0.0) {
      throw ParseError("explicit zero value at line " + std::to_string(line_no));
    }
    if (any && (atom < last_atom || (atom == last_atom && voxel <= last_voxel))) {
      throw ParseError("Z triplets out of (atom, voxel) order at line " +
                       std::to_string(line_no));
    }
    z.atoms[atom].indices.push_back(voxel);
    z.atoms[atom].values.push_back(value);
    last_atom = atom;
    last_voxel = voxel;
    any = true;
  }
  return z;
}

Decomposition read_decomposition(const std::string& d_path, const std::string& z_path,
                                 std::size_t expected_p) {
  const auto d_rows = read_factor_d(d_path);
  ZFile z = read_factor_z(z_path);
  if (z.p != expected_p) {
    throw ParseError("Z header voxel count " + std::to_string(z.p) +
                     " does not match expected " + std::to_string(expected_p));
  }
  if (z.k != d_rows.size()) {
    throw ParseError("D file has " + std::to_string(d_rows.size()) +
                     " atoms but Z header says " + std::to_string(z.k));
  }
  Decomposition d;
  d.atoms.reserve(z.k);
  for (std::size_t k = 0; k < z.k; ++k) {
    Atom atom;
    atom.u.values = d_rows[k];
    atom.v = std::move(z.atoms[k]);
    d.atoms.push_back(std::move(atom));
  }
  d.stats.assign(d.atoms.size(), AtomStats{});
  return d;
}

double RunReport::total_seconds() const {
  double total = 0.0;
  for (const PhaseTime& p : phases) total += p.seconds;
  return total;
}

RunReport make_report(const Decomposition& d, std::size_t rows, std::size_t cols,
                      const std::string& mode, std::size_t workers,
                      std::size_t partitions) {
  RunReport report;
  report.rows = rows;
  report.cols = cols;
  report.config = d.config;
  report.mode = mode;
  report.workers = workers;
  report.partitions = partitions;
  report.early_stop = d.early_stop;
  for (std::size_t i = 0; i < d.atoms.size(); ++i) {
    const AtomStats& s = d.stats[i];
    report.atoms.push_back(
        AtomRecord{i, s.iterations, s.converged, s.residual_norm, s.seconds});
  }
  return report;
}

void write_report(const RunReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  char buf[160];
  out << "r1dl report 1\n";
  out << "rows " << report.rows << "\n";
  out << "cols " << report.cols << "\n";
  out << "k " << report.config.k << "\n";
  if (report.config.sparsity.is_fraction()) {
    std::string frac;
    append_double(frac, report.config.sparsity.fraction_value());
    out << "sparsity fraction:" << frac << "\n";
  } else {
    out << "sparsity count:" << report.config.sparsity.count_value() << "\n";
  }
  {
    std::string tol;
    append_double(tol, report.config.tol);
    out << "tol " << tol << "\n";
  }
  out << "max_iter " << report.config.max_iter << "\n";
  out << "seed " << report.config.seed << "\n";
  out << "mode " << report.mode << "\n";
  out << "workers " << report.workers << "\n";
  out << "partitions " << report.partitions << "\n";
  out << "atoms " << report.atoms.size() << "\n";
  out << "early_stop " << (report.early_stop ? 1 : 0) << "\n";
  for (const PhaseTime& p : report.phases) {
    std::snprintf(buf, sizeof(buf), "phase %s %.6f\n", p.name.c_str(), p.seconds);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "total %.6f\n", report.total_seconds());
  out << buf;
  for (const AtomRecord& a : report.atoms) {
    std::string res;
    append_double(res, a.residual_norm);
    std::snprintf(buf, sizeof(buf), "atom %zu %zu %d %s %.6f\n", a.index, a.iterations,
                  a.converged ? 1 : 0, res.c_str(), a.seconds);
    out << buf;
  }
  if (!out) throw IoError("write failure on '" + path + "'");
}

RunReport read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line) || line != "r1dl report 1") {
    throw ParseError("'" + path + "' is not an r1dl report");
  }
  RunReport report;
  double fraction = 0.0;
  std::size_t count = 0;
  bool is_fraction = true;
  std::size_t line_no = 1;
  double declared_total = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto parts = split_ws(line);
    const std::string& key = parts[0];
    const auto need = [&](std::size_t n) {
      if (parts.size() != n) {
        throw ParseError("malformed report line " + std::to_string(line_no));
      }
    };
    if (key == "rows") {
      need(2);
      report.rows = parse_index(parts[1], "rows", line_no);
    } else if (key == "cols") {
      need(2);
      report.cols = parse_index(parts[1], "cols", line_no);
    } else if (key == "k") {
      need(2);
      report.config.k = parse_index(parts[1], "k", line_no);
    } else if (key == "sparsity") {
      need(2);
      const std::string& spec = parts[1];
      if (spec.rfind("fraction:", 0) == 0) {
        is_fraction = true;
        fraction = parse_double_token(spec.substr(9), line_no, 1);
      } else if (spec.rfind("count:", 0) == 0) {
        is_fraction = false;
        count = parse_index(spec.substr(6), "sparsity count", line_no);
      } else {
        throw ParseError("malformed sparsity at line " + std::to_string(line_no));
      }
    } else if (key == "tol") {
      need(2);
      report.config.tol = parse_double_token(parts[1], line_no, 1);
    } else if (key == "max_iter") {
      need(2);
      report.config.max_iter = parse_index(parts[1], "max_iter", line_no);
    } else if (key == "seed") {
      need(2);
      report.config.seed = parse_index(parts[1], "seed", line_no);
    } else if (key == "mode") {
      need(2);
      report.mode = parts[1];
    } else if (key == "workers") {
      need(2);
      report.workers = parse_index(parts[1], "workers", line_no);
    } else if (key == "partitions") {
      need(2);
      report.partitions = parse_index(parts[1], "partitions", line_no);
    } else if (key == "atoms") {
      need(2);
    } else if (key == "early_stop") {
      need(2);
      report.early_stop = parts[1] == "1";
    } else if (key == "phase") {
      need(3);
      report.phases.push_back(
          PhaseTime{parts[1], parse_double_token(parts[2], line_no, 2)});
    } else if (key == "total") {
      need(2);
      declared_total = parse_double_token(parts[1], line_no, 1);
    } else if (key == "atom") {
      need(6);
      AtomRecord a;
      a.index = parse_index(parts[1], "atom index", line_no);
      a.iterations = parse_index(parts[2], "iterations", line_no);
      a.converged = parts[3] == "1";
      a.residual_norm = parse_double_token(parts[4], line_no, 4);
      a.seconds = parse_double_token(parts[5], line_no, 5);
      report.atoms.push_back(a);
    } else {
      throw ParseError("unknown report key '" + key + "' at line " +
                       std::to_string(line_no));
    }
  }
  report.config.sparsity =
      is_fraction ? SparsityParam::fraction(fraction > 0.0 ? fraction : 0.07)
                  : SparsityParam::count(count);
  if (std::abs(declared_total - report.total_seconds()) > 1e-3) {
    throw ParseError("report total does not match the sum of phase times");
  }
  return report;
}

}  // namespace r1dl::io
