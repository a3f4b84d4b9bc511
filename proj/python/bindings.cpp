// pybind11 bindings for the main r1dl operations: decomposition (serial
// and partitioned), column sampling, overlap/correlation metrics, and
// matrix file I/O. Matrices cross the boundary as 2-D float64 numpy
// arrays; spatial loadings come back in sparse (indices, values) form.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <utility>

#include "r1dl/core.hpp"
#include "r1dl/engine.hpp"
#include "r1dl/io.hpp"
#include "r1dl/metrics.hpp"
#include "r1dl/types.hpp"

namespace py = pybind11;

namespace {

r1dl::DataMatrix matrix_from_numpy(const py::array_t<double>& arr) {
  const auto buf = arr.request();
  if (buf.ndim != 2) throw py::value_error("expected a 2-D float64 array");
  const auto rows = static_cast<std::size_t>(buf.shape[0]);
  const auto cols = static_cast<std::size_t>(buf.shape[1]);
  r1dl::DataMatrix m(rows, cols);
  const auto view = arr.unchecked<2>();
  for (std::size_t t = 0; t < rows; ++t) {
    for (std::size_t p = 0; p < cols; ++p) {
      m.at(t, p) = view(static_cast<py::ssize_t>(t), static_cast<py::ssize_t>(p));
    }
  }
  m.validate_finite();
  return m;
}

py::array_t<double> matrix_to_numpy(const r1dl::DataMatrix& m) {
  py::array_t<double> arr({m.rows(), m.cols()});
  std::memcpy(arr.mutable_data(), m.values().data(),
              m.values().size() * sizeof(double));
  return arr;
}

std::vector<double> vector_from_numpy(const py::array_t<double>& arr) {
  const auto buf = arr.request();
  if (buf.ndim != 1) throw py::value_error("expected a 1-D float64 array");
  std::vector<double> out(static_cast<std::size_t>(buf.shape[0]));
  const auto view = arr.unchecked<1>();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = view(static_cast<py::ssize_t>(i));
  }
  return out;
}

r1dl::SparsityParam sparsity_from_object(const py::object& sparsity) {
  if (py::isinstance<py::int_>(sparsity)) {
    return r1dl::SparsityParam::count(sparsity.cast<std::size_t>());
  }
  return r1dl::SparsityParam::fraction(sparsity.cast<double>());
}

r1dl::DecompositionConfig make_config(std::size_t k, const py::object& sparsity,
                                      double tol, std::size_t max_iter,
                                      std::uint64_t seed) {
  r1dl::DecompositionConfig config;
  config.k = k;
  config.sparsity = sparsity_from_object(sparsity);
  config.tol = tol;
  config.max_iter = max_iter;
  config.seed = seed;
  return config;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "rank-1 dictionary learning with l0 sparsity and deflation";

  py::register_exception<r1dl::Error>(m, "R1dlError", PyExc_RuntimeError);

  py::class_<r1dl::Decomposition>(m, "Decomposition")
      .def_property_readonly("k",
                             [](const r1dl::Decomposition& d) { return d.atoms.size(); })
      .def_property_readonly("early_stop",
                             [](const r1dl::Decomposition& d) { return d.early_stop; })
      .def_property_readonly(
          "d",
          [](const r1dl::Decomposition& d) {
            const std::size_t k = d.atoms.size();
            const std::size_t t = k == 0 ? 0 : d.atoms.front().u.size();
            py::array_t<double> arr({k, t});
            auto view = arr.mutable_unchecked<2>();
            for (std::size_t a = 0; a < k; ++a) {
              for (std::size_t i = 0; i < t; ++i) {
                view(static_cast<py::ssize_t>(a), static_cast<py::ssize_t>(i)) =
                    d.atoms[a].u[i];
              }
            }
            return arr;
          },
          "temporal patterns, one unit-norm row per atom (K x T)")
      .def_property_readonly(
          "z",
          [](const r1dl::Decomposition& d) {
            py::list out;
            for (const r1dl::Atom& atom : d.atoms) {
              py::array_t<std::size_t> idx(atom.v.nnz());
              py::array_t<double> val(atom.v.nnz());
              std::memcpy(idx.mutable_data(), atom.v.indices.data(),
                          atom.v.nnz() * sizeof(std::size_t));
              std::memcpy(val.mutable_data(), atom.v.values.data(),
                          atom.v.nnz() * sizeof(double));
              out.append(py::make_tuple(idx, val));
            }
            return out;
          },
          "sparse spatial loadings, one (indices, values) pair per atom")
      .def_property_readonly("iterations",
                             [](const r1dl::Decomposition& d) {
                               std::vector<std::size_t> out;
                               for (const auto& s : d.stats) out.push_back(s.iterations);
                               return out;
                             })
      .def_property_readonly("residual_norms",
                             [](const r1dl::Decomposition& d) {
                               std::vector<double> out;
                               for (const auto& s : d.stats)
                                 out.push_back(s.residual_norm);
                               return out;
                             })
      .def_property_readonly("converged", [](const r1dl::Decomposition& d) {
        std::vector<bool> out;
        for (const auto& s : d.stats) out.push_back(s.converged);
        return out;
      });

  m.def(
      "decompose",
      [](const py::array_t<double>& s, std::size_t k, const py::object& sparsity,
         double tol, std::size_t max_iter, std::uint64_t seed, std::size_t workers,
         std::size_t partitions, bool serial) {
        r1dl::DataMatrix matrix = matrix_from_numpy(s);
        const auto config = make_config(k, sparsity, tol, max_iter, seed);
        if (serial) {
          py::gil_scoped_release release;
          return r1dl::core::decompose(std::move(matrix), config);
        }
        r1dl::engine::EngineConfig ec;
        ec.workers = workers;
        ec.partitions = partitions;
        py::gil_scoped_release release;
        return r1dl::engine::decompose_parallel(std::move(matrix), config, ec);
      },
      py::arg("s"), py::arg("k"), py::arg("sparsity") = 0.07, py::arg("tol") = 1e-4,
      py::arg("max_iter") = 100, py::arg("seed") = 0, py::arg("workers") = 0,
      py::arg("partitions") = 0, py::arg("serial") = false,
      "learn K sparse rank-1 atoms; sparsity is a fraction (float) or count (int)");

  m.def(
      "energy",
      [](const py::array_t<double>& s, const py::array_t<double>& u,
         const py::array_t<std::size_t>& indices, const py::array_t<double>& values) {
        const r1dl::DataMatrix matrix = matrix_from_numpy(s);
        r1dl::Atom atom;
        atom.u.values = vector_from_numpy(u);
        atom.v.length = matrix.cols();
        const auto iview = indices.unchecked<1>();
        for (py::ssize_t i = 0; i < iview.shape(0); ++i) {
          atom.v.indices.push_back(iview(i));
        }
        atom.v.values = vector_from_numpy(values);
        return r1dl::core::energy(matrix, atom);
      },
      py::arg("s"), py::arg("u"), py::arg("indices"), py::arg("values"),
      "Frobenius norm of S - u v^T for a sparse loading");

  m.def(
      "sample_columns",
      [](const py::array_t<double>& s, double rate, std::uint64_t seed) {
        const r1dl::DataMatrix matrix = matrix_from_numpy(s);
        const auto sampled = r1dl::io::sample_columns(matrix, {rate, seed});
        py::array_t<std::size_t> idx(sampled.indices.size());
        std::memcpy(idx.mutable_data(), sampled.indices.data(),
                    sampled.indices.size() * sizeof(std::size_t));
        return py::make_tuple(matrix_to_numpy(sampled.matrix), idx);
      },
      py::arg("s"), py::arg("rate"), py::arg("seed") = 0,
      "uniform column sampling; returns (sampled matrix, ascending indices)");

  m.def(
      "spatial_overlap_rate",
      [](const py::array_t<double>& p1, const py::array_t<double>& p2, double threshold) {
        return r1dl::metrics::spatial_overlap_rate({vector_from_numpy(p1), threshold},
                                                   {vector_from_numpy(p2), threshold});
      },
      py::arg("p1"), py::arg("p2"), py::arg("threshold") = 1e-6,
      "|support(p1) & support(p2)| / |support(p2)|");

  m.def(
      "pearson",
      [](const py::array_t<double>& x, const py::array_t<double>& y) {
        return r1dl::metrics::pearson(vector_from_numpy(x), vector_from_numpy(y));
      },
      py::arg("x"), py::arg("y"));

  m.def(
      "match_atoms",
      [](const py::array_t<double>& d, const py::array_t<double>& refs) {
        const r1dl::DataMatrix dm = matrix_from_numpy(d);
        const r1dl::DataMatrix rm = matrix_from_numpy(refs);
        std::vector<std::vector<double>> d_rows, ref_rows;
        for (std::size_t k = 0; k < dm.rows(); ++k) {
          const auto row = dm.row(k);
          d_rows.emplace_back(row.begin(), row.end());
        }
        for (std::size_t k = 0; k < rm.rows(); ++k) {
          const auto row = rm.row(k);
          ref_rows.emplace_back(row.begin(), row.end());
        }
        const auto result = r1dl::metrics::match_atoms(d_rows, ref_rows);
        py::list out;
        for (const auto& match : result.matches) {
          out.append(py::make_tuple(match.ref_index, match.atom_index, match.correlation));
        }
        return out;
      },
      py::arg("d"), py::arg("refs"),
      "per reference: (ref index, best atom index, correlation)");

  m.def(
      "read_matrix",
      [](const std::string& path, const std::string& format) {
        return matrix_to_numpy(r1dl::io::read_matrix(path, r1dl::io::parse_format(format)));
      },
      py::arg("path"), py::arg("format") = "text");

  m.def(
      "write_matrix",
      [](const py::array_t<double>& s, const std::string& path, const std::string& format) {
        r1dl::io::write_matrix(matrix_from_numpy(s), path, r1dl::io::parse_format(format));
      },
      py::arg("s"), py::arg("path"), py::arg("format") = "text");

#ifdef R1DL_VERSION
  m.attr("__version__") = R1DL_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}
