#include "synten/diagnostics.hpp"
#include "synten/errors.hpp"
#include "synten/factorization.hpp"
#include "synten/io.hpp"
#include "synten/pipeline.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <vector>

namespace py = pybind11;
using namespace synten;

namespace {

using Array3 = py::array_t<double, py::array::f_style | py::array::forcecast>;

Tensor3 to_tensor(const Array3& a) {
  if (a.ndim() != 3) throw ArgumentError("expected a 3-d array");
  const Dims3 dims{a.shape(0), a.shape(1), a.shape(2)};
  return Tensor3(dims, std::vector<double>(a.data(), a.data() + a.size()));
}

py::array_t<double> to_array(const Tensor3& t) {
  const auto s = static_cast<py::ssize_t>(sizeof(double));
  const std::vector<py::ssize_t> shape{t.dim(1), t.dim(2), t.dim(3)};
  const std::vector<py::ssize_t> strides{s, s * t.dim(1), s * t.dim(1) * t.dim(2)};
  return py::array_t<double>(shape, strides, t.data().data());
}

FitConfig make_config(int max_iters, double tol, std::uint64_t seed, std::optional<int> restarts) {
  FitConfig cfg;
  cfg.max_iters = max_iters;
  cfg.tol = tol;
  cfg.seed = seed;
  cfg.restarts = restarts;
  return cfg;
}

py::list factor_list(const std::array<Matrix, 3>& f) {
  py::list l;
  for (const auto& m : f) l.append(m);
  return l;
}

#define FIT_ARGS                                                                                   \
  py::arg("max_iters") = 500, py::arg("tol") = 1e-6, py::arg("seed") = 0, \
      py::arg("restarts") = std::nullopt

}  // namespace

PYBIND11_MODULE(_synten, m) {
  m.doc() = "Tensor decompositions for muscle-synergy extraction";

  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<DegenerateInputError>(m, "DegenerateInputError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("unfold", [](const Array3& x, int mode) { return unfold(to_tensor(x), mode); }, py::arg("x"), py::arg("mode"));
  m.def(
      "fold",
      [](const Matrix& u, int mode, std::array<Index, 3> dims) { return to_array(fold(u, mode, dims)); },
      py::arg("m"), py::arg("mode"), py::arg("dims"));
  m.def(
      "explained_variance",
      [](const Array3& x, const Array3& xhat) { return explained_variance(to_tensor(x), to_tensor(xhat)); },
      py::arg("x"), py::arg("xhat"));
  m.def("controlled_averaging", &controlled_averaging, py::arg("m"), py::arg("k") = 3);
  m.def("pearson", &pearson, py::arg("a"), py::arg("b"));

  m.def(
      "nmf",
      [](const Matrix& x, Index r, int max_iters, double tol, std::uint64_t seed, std::optional<int> restarts) {
        const NmfModel model = nmf(x, r, make_config(max_iters, tol, seed, restarts));
        py::dict d;
        d["temporal"] = model.temporal;
        d["spatial"] = model.spatial;
        d["vaf"] = model.vaf;
        d["iters"] = model.iters;
        d["converged"] = model.converged;
        return d;
      },
      py::arg("x"), py::arg("rank"), FIT_ARGS);

  m.def(
      "parafac",
      [](const Array3& x, Index r, bool nonneg, int max_iters, double tol, std::uint64_t seed,
         std::optional<int> restarts) {
        const ConstraintSpec cons = nonneg ? ConstraintSpec::nonnegative() : ConstraintSpec::none();
        const Tensor3 t = to_tensor(x);
        const ParafacModel model = parafac_als(t, r, cons, make_config(max_iters, tol, seed, restarts));
        py::dict d;
        d["weights"] = model.lambda;
        d["factors"] = factor_list(model.factors);
        d["fit"] = model.fit;
        d["iters"] = model.iters;
        d["converged"] = model.converged;
        d["corcondia"] = corcondia(t, model);
        d["warnings"] = model.warnings;
        return d;
      },
      py::arg("x"), py::arg("rank"), py::arg("nonneg") = true, FIT_ARGS);

  m.def(
      "tucker",
      [](const Array3& x, std::array<Index, 3> ranks, bool nonneg, int max_iters, double tol, std::uint64_t seed,
         std::optional<int> restarts) {
        const ConstraintSpec cons = nonneg ? ConstraintSpec::nonnegative() : ConstraintSpec::none();
        const TuckerModel model = tucker_als(to_tensor(x), ranks, cons, make_config(max_iters, tol, seed, restarts));
        py::dict d;
        d["core"] = to_array(model.core.values);
        d["factors"] = factor_list(model.factors);
        d["fit"] = model.fit;
        d["iters"] = model.iters;
        d["converged"] = model.converged;
        d["warnings"] = model.warnings;
        return d;
      },
      py::arg("x"), py::arg("ranks"), py::arg("nonneg") = true, FIT_ARGS);

  m.def(
      "constrained_tucker",
      [](const Array3& x, int n_dofs, Index reps_per_task, int max_iters, double tol, std::uint64_t seed) {
        const TuckerModel model =
            constrained_tucker(to_tensor(x), n_dofs, reps_per_task, make_config(max_iters, tol, seed, std::nullopt));
        py::dict d;
        d["core"] = to_array(model.core.values);
        d["factors"] = factor_list(model.factors);
        d["fit"] = model.fit;
        d["iters"] = model.iters;
        d["converged"] = model.converged;
        d["warnings"] = model.warnings;
        return d;
      },
      py::arg("x"), py::arg("n_dofs"), py::arg("reps_per_task"), py::arg("max_iters") = 500, py::arg("tol") = 1e-6,
      py::arg("seed") = 0);

  m.def(
      "synthetic_tensor",
      [](int n_dofs, int reps_per_task, std::optional<double> snr_db, std::uint64_t seed) {
        SynthSpec spec;
        spec.n_tasks = 2 * n_dofs;
        spec.reps_per_task = reps_per_task;
        spec.snr_db = snr_db;
        spec.seed = seed;
        const SynthData data = generate_synthetic(spec);
        const TensorizedSet ts = tensorize(data.recordings, spec.n_samples);
        py::list labels;
        for (const auto& l : ts.labels) labels.append(py::make_tuple(l.task_id, l.repetition_id));
        py::dict d;
        d["tensor"] = to_array(ts.tensor);
        d["synergies"] = data.truth.synergies;
        d["labels"] = labels;
        return d;
      },
      py::arg("n_dofs") = 1, py::arg("reps_per_task") = 10, py::arg("snr_db") = std::nullopt, py::arg("seed") = 0);

  m.def("read_report", [](const std::string& path) {
    const SynergyReport r = report_from_json(read_text_file(path));
    py::dict d;
    d["method"] = r.method;
    d["fit"] = r.fit;
    d["synergies"] = r.synergy_matrix();
    py::list labels;
    for (const auto& s : r.synergies) labels.append(s.label);
    d["labels"] = labels;
    return d;
  }, py::arg("path"));
}
