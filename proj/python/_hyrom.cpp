#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hyrom/bench.hpp"
#include "hyrom/errors.hpp"
#include "hyrom/io.hpp"

namespace py = pybind11;
using namespace hyrom;

namespace {

DenseMatrix stack(const std::vector<Vector>& cols) {
  if (cols.empty()) return {};
  DenseMatrix out(cols.front().size(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = cols[j];
  return out;
}

std::vector<Vector> unstack(const DenseMatrix& a) {
  std::vector<Vector> out;
  for (Eigen::Index j = 0; j < a.cols(); ++j) out.push_back(a.col(j));
  return out;
}

Mat3d to_mat3(const Eigen::Matrix3d& a) {
  Mat3d F{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) F[i][j] = a(i, j);
  return F;
}

Eigen::Matrix3d from_mat3(const Mat3d& F) {
  Eigen::Matrix3d a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = F[i][j];
  return a;
}

py::dict report_dict(const ErrorReport& rep) {
  py::list runs;
  for (const auto& r : rep.runs) {
    py::dict d;
    d["method"] = r.method;
    d["param_id"] = r.param_id;
    d["ok"] = r.ok;
    d["eps_abs"] = r.eps_abs;
    d["eps_rel"] = r.eps_rel;
    d["wall_seconds"] = r.wall_seconds;
    d["assembly_calls"] = r.assembly_calls;
    runs.append(d);
  }
  py::dict summary;
  for (const auto& s : rep.summary()) {
    py::dict d;
    d["runs"] = s.runs;
    d["failures"] = s.failures;
    d["mean_eps_abs"] = s.mean_eps_abs;
    d["mean_eps_rel"] = s.mean_eps_rel;
    d["mean_wall"] = s.mean_wall;
    d["speedup"] = s.speedup;
    summary[py::str(s.method)] = d;
  }
  py::dict out;
  out["runs"] = runs;
  out["summary"] = summary;
  return out;
}

}  // namespace

PYBIND11_MODULE(_hyrom, m) {
  m.doc() = "Reduced-order modelling of nonlinear elastodynamics with network-predicted reduced operators";

  // translators run newest first, so the base class goes in first
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_IOError);
  py::register_exception<Divergence>(m, "Divergence", PyExc_ArithmeticError);

  m.def("neo_hookean_pk1",
        [](const Eigen::Matrix3d& F, double G, double K) { return from_mat3(neo_hookean_pk1(to_mat3(F), NeoHookeanParams{G, K})); },
        py::arg("F"), py::arg("G"), py::arg("K"));
  m.def("neo_hookean_energy",
        [](const Eigen::Matrix3d& F, double G, double K) { return neo_hookean_energy(to_mat3(F), NeoHookeanParams{G, K}); },
        py::arg("F"), py::arg("G"), py::arg("K"));

  m.def("pod",
        [](const DenseMatrix& S, double eps, bool randomized, std::uint64_t seed) {
          const ReducedBasis b = pod(S, eps, randomized ? PodMethod::Randomized : PodMethod::Deterministic, seed);
          return py::make_tuple(b.V, b.singular_values, b.total_energy);
        },
        py::arg("S"), py::arg("eps"), py::arg("randomized") = true, py::arg("seed") = 0,
        "Returns (V, singular values, total energy).");
  m.def("deim_points", &deim_points, py::arg("Phi"));
  m.def("error_metrics",
        [](const DenseMatrix& fom, const DenseMatrix& reduced) {
          const ErrorMetrics e = error_metrics(unstack(fom), unstack(reduced));
          return py::make_tuple(e.eps_abs, e.eps_rel);
        },
        py::arg("fom"), py::arg("reduced"), "Columns are time steps. Returns (eps_abs, eps_rel).");

  py::class_<ExperimentConfig>(m, "Experiment")
      .def_static("load", [](const std::string& path) { return ExperimentConfig::load(path); })
      .def_static("from_text", [](const std::string& text) { return ExperimentConfig::from(KeyValueConfig::parse(text)); },
                  py::arg("text") = "")
      .def_readonly("name", &ExperimentConfig::name)
      .def_property_readonly("parameter_names", [](const ExperimentConfig& c) { return c.params.names; })
      .def_property_readonly("steps", [](const ExperimentConfig& c) { return c.grid().Nt; })
      .def_property_readonly("dofs", [](const ExperimentConfig& c) { return c.mesh().dof_count(); })
      .def_property_readonly("elements", [](const ExperimentConfig& c) { return c.mesh().element_count(); })
      .def("center", &ExperimentConfig::center)
      .def("test_parameters",
           [](const ExperimentConfig& c) { return uniform_sample(c.params, c.n_test, c.test_seed); })
      .def("run_fom",
           [](const ExperimentConfig& c, const std::vector<double>& mu) {
             const Mesh mesh = c.mesh();
             const Assembler a(mesh);
             Trajectory t;
             {
               py::gil_scoped_release nogil;
               t = run_fom(a, c.setup(mu), c.grid(), c.newton, {SnapshotMode::None, mu});
             }
             return py::make_tuple(stack(t.states), t.iterations, t.wall_seconds);
           },
           py::arg("mu"), "Returns (states N_h x N_t, Newton iterations per step, wall seconds).")
      .def("run_offline",
           [](const ExperimentConfig& c, const std::string& out_dir) {
             OfflineArtifacts art;
             {
               py::gil_scoped_release nogil;
               art = run_offline(c, out_dir);
             }
             py::dict d;
             d["N"] = art.basis.dimension();
             std::vector<Eigen::Index> sizes;
             for (const auto& op : art.deim) sizes.push_back(op.size());
             d["deim_sizes"] = sizes;
             d["stage_seconds"] = art.stage_seconds;
             return d;
           },
           py::arg("out_dir"))
      .def("benchmark",
           [](const ExperimentConfig& c, const std::string& artifacts, std::vector<std::vector<double>> params) {
             if (params.empty()) params = uniform_sample(c.params, c.n_test, c.test_seed);
             ErrorReport rep;
             {
               py::gil_scoped_release nogil;
               rep = run_online_benchmark(c, load_offline(artifacts), params);
             }
             return report_dict(rep);
           },
           py::arg("artifacts"), py::arg("params") = std::vector<std::vector<double>>{})
      .def("hyromnet",
           [](const ExperimentConfig& c, const std::string& artifacts, const std::vector<double>& mu) {
             const OfflineArtifacts art = load_offline(artifacts);
             const HyromnetRun run = run_hyromnet(art.pair, art.basis.V, mu, c.grid(), c.online);
             return py::make_tuple(stack(run.traj.lifted(art.basis.V)), run.traj.iterations, run.assembly_calls);
           },
           py::arg("artifacts"), py::arg("mu"), "Returns (lifted states, iterations per step, assembly calls).");

  m.def("read_snapshots", [](const std::string& path) {
    const SnapshotMatrix s = io::read_snapshots(path);
    std::vector<std::vector<double>> mu;
    std::vector<std::uint32_t> n, k;
    for (const auto& meta : s.meta()) {
      mu.push_back(meta.mu);
      n.push_back(meta.n);
      k.push_back(meta.k);
    }
    return py::make_tuple(DenseMatrix(s.data()), mu, n, k);
  });
  m.def("write_snapshots",
        [](const std::string& path, const DenseMatrix& data, const std::vector<std::vector<double>>& mu,
           const std::vector<std::uint32_t>& n, const std::vector<std::uint32_t>& k) {
          const auto c = static_cast<std::size_t>(data.cols());
          if (mu.size() != c || n.size() != c || k.size() != c)
            throw InvalidArgument("write_snapshots: one metadata entry per column is required");
          SnapshotMatrix s(data.rows());
          for (std::size_t j = 0; j < c; ++j) s.append(data.col(static_cast<Eigen::Index>(j)), {mu[j], n[j], k[j]});
          io::write_snapshots(path, s);
        },
        py::arg("path"), py::arg("data"), py::arg("mu"), py::arg("n"), py::arg("k"));

  py::class_<Surrogate>(m, "Surrogate")
      .def_static("load", [](const std::string& path) { return io::read_surrogate(path); })
      .def_property_readonly("descriptor", [](const Surrogate& s) { return s.spec.descriptor(); })
      .def_readonly("max_newton_index", &Surrogate::max_newton_index)
      .def("__call__", [](const Surrogate& s, const DenseMatrix& X) { return s.forward(X); }, py::arg("X"));

  m.def("manifest_problems", [](const std::string& dir) { return io::verify_manifest(dir); });
}
