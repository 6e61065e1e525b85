#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rbldp/covariance.hpp"
#include "rbldp/errors.hpp"
#include "rbldp/ldp_verify.hpp"
#include "rbldp/parallel.hpp"
#include "rbldp/path_sim.hpp"
#include "rbldp/rate_solver.hpp"
#include "rbldp/rbergomi.hpp"
#include "rbldp/special_math.hpp"
#include "rbldp/version.hpp"

namespace py = pybind11;
using namespace rbldp;

namespace {

using Array = py::array_t<double>;

Array to_array(const std::vector<double>& v) { return Array(static_cast<py::ssize_t>(v.size()), v.data()); }

// Stacks equally long rows into a (rows, cols) array.
template <class Get>
Array stack(std::size_t rows, std::size_t cols, Get get) {
  Array out({static_cast<py::ssize_t>(rows), static_cast<py::ssize_t>(cols)});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::vector<double>& row = get(r);
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = row[c];
  }
  return out;
}

RateMode parse_mode(const std::string& mode, const ModelParams& params) {
  if (mode == "auto") return params.rho == 0.0 ? RateMode::uncorrelated : RateMode::correlated;
  if (mode == "correlated") return RateMode::correlated;
  if (mode == "uncorrelated") return RateMode::uncorrelated;
  throw DomainError("mode must be 'auto', 'correlated' or 'uncorrelated'");
}

py::dict rate_dict(const RateResult& r) {
  py::dict d;
  d["value"] = r.value;
  d["control"] = to_array(r.control.values);
  d["control2"] = to_array(r.control2.values);
  d["residual"] = r.residual;
  d["residual_profile"] = to_array(r.residual_profile);
  d["iterations"] = r.iterations;
  d["multistart_best_of"] = r.multistart_best_of;
  d["best_start"] = r.best_start;
  d["converged"] = r.converged;
  return d;
}

McOptions mc(int n, int n_paths, std::uint64_t seed, int threads) {
  McOptions o;
  o.n = n;
  o.n_paths = n_paths;
  o.seed = seed;
  o.threads = threads;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Rough Bergomi simulation, small-noise rate functions and Monte Carlo checks";
  m.attr("__version__") = kVersion;

  static py::exception<DomainError> domain_error(m, "DomainError", PyExc_ValueError);
  static py::exception<NumericalError> numerical_error(m, "NumericalError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const DomainError& e) {
      domain_error(e.what());
    } catch (const NumericalError& e) {
      numerical_error(e.what());
    }
  });

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init([](double alpha, double eta, double rho, double v0) {
             ModelParams p{alpha, eta, rho, v0};
             p.validate();
             return p;
           }),
           py::arg("alpha") = -0.25, py::arg("eta") = 1.0, py::arg("rho") = 0.0,
           py::arg("v0") = 0.04)
      .def_readwrite("alpha", &ModelParams::alpha)
      .def_readwrite("eta", &ModelParams::eta)
      .def_readwrite("rho", &ModelParams::rho)
      .def_readwrite("v0", &ModelParams::v0)
      .def_property_readonly("beta", &ModelParams::beta)
      .def_property_readonly("varrho", &ModelParams::varrho)
      .def("validate", &ModelParams::validate)
      .def("__repr__", [](const ModelParams& p) {
        return "ModelParams(alpha=" + std::to_string(p.alpha) + ", eta=" + std::to_string(p.eta) +
               ", rho=" + std::to_string(p.rho) + ", v0=" + std::to_string(p.v0) + ")";
      });

  m.def("gamma", &rbldp::gamma, py::arg("x"));
  m.def(
      "hyp2f1", [](double a, double b, double c, double z) { return hyp2f1({a, b, c, z}); },
      py::arg("a"), py::arg("b"), py::arg("c"), py::arg("z"));
  m.def("kernel", &kernel, py::arg("s"), py::arg("t"), py::arg("params"));
  m.def("cov_zz", &cov_zz, py::arg("s"), py::arg("t"), py::arg("params"));
  m.def("cov_zw", &cov_zw, py::arg("s"), py::arg("t"), py::arg("params"));
  m.def("cov_zb", &cov_zb, py::arg("t"), py::arg("params"));

  m.def(
      "simulate",
      [](const ModelParams& params, int n, int n_paths, std::uint64_t seed, double eps, int threads) {
        if (n_paths < 1) throw DomainError("n_paths must be positive");
        const Grid grid(n);
        const auto factor = build_joint_cholesky(grid, params);
        std::vector<ModelPaths> paths(n_paths);
        {
          py::gil_scoped_release release;
          parallel_for(paths.size(), threads, [&](std::size_t r) {
            paths[r] = build_model_paths(sample_path(factor, seed, r), params, eps);
          });
        }
        const std::size_t rows = paths.size(), cols = grid.size();
        py::dict d;
        d["t"] = to_array(grid.times());
        d["W"] = stack(rows, cols, [&](std::size_t r) -> const auto& { return paths[r].bundle.w; });
        d["Wperp"] = stack(rows, cols, [&](std::size_t r) -> const auto& { return paths[r].bundle.wperp; });
        d["Z"] = stack(rows, cols, [&](std::size_t r) -> const auto& { return paths[r].bundle.z; });
        d["B"] = stack(rows, cols, [&](std::size_t r) -> const auto& { return paths[r].bundle.b; });
        d["v"] = stack(rows, cols, [&](std::size_t r) -> const auto& { return paths[r].v; });
        d["X"] = stack(rows, cols, [&](std::size_t r) -> const auto& { return paths[r].x; });
        d["cholesky_jitter"] = factor.jitter();
        return d;
      },
      py::arg("params"), py::arg("n") = 64, py::arg("n_paths") = 1, py::arg("seed") = 0,
      py::arg("eps") = 1.0, py::arg("threads") = 1,
      "Sample driver and model paths; arrays have shape (n_paths, n + 1).");

  m.def(
      "rate_endpoint",
      [](const ModelParams& params, double u, int n, double eps, const std::string& mode,
         bool reduced, int starts, std::uint64_t seed) {
        RateProblem p;
        p.params = params;
        p.grid = Grid(n);
        p.eps = eps;
        p.mode = parse_mode(mode, params);
        p.target_u = u;
        SolverSettings s;
        s.starts = starts;
        s.seed = seed;
        RateResult r;
        {
          py::gil_scoped_release release;
          r = reduced ? solve_endpoint_uncorrelated_reduced(p, s) : solve_endpoint(p, s);
        }
        return rate_dict(r);
      },
      py::arg("params"), py::arg("u"), py::arg("n") = 64, py::arg("eps") = 1.0,
      py::arg("mode") = "auto", py::arg("reduced") = false, py::arg("starts") = 8,
      py::arg("seed") = 0, "Endpoint rate function value and minimizing control.");

  m.def(
      "rate_path",
      [](const ModelParams& params, const std::vector<double>& target, double eps,
         const std::string& mode, int starts, std::uint64_t seed) {
        if (target.size() < 2) throw DomainError("target path needs at least two nodes");
        RateProblem p;
        p.params = params;
        p.grid = Grid(static_cast<int>(target.size()) - 1);
        p.eps = eps;
        p.mode = parse_mode(mode, params);
        p.target_path = target;
        SolverSettings s;
        s.starts = starts;
        s.seed = seed;
        return rate_dict(solve_path(p, s));
      },
      py::arg("params"), py::arg("target"), py::arg("eps") = 1.0, py::arg("mode") = "auto",
      py::arg("starts") = 8, py::arg("seed") = 0,
      "Path rate function for a target running integral on a uniform grid.");

  m.def(
      "forward_path",
      [](const ModelParams& params, const std::vector<double>& f1, const std::vector<double>& f2,
         double eps, const std::string& mode) {
        RateProblem p;
        p.params = params;
        p.grid = Grid(static_cast<int>(f1.size()));
        p.eps = eps;
        p.mode = parse_mode(mode, params);
        return to_array(forward_path(f1, f2, p));
      },
      py::arg("params"), py::arg("f1"), py::arg("f2") = std::vector<double>{},
      py::arg("eps") = 1.0, py::arg("mode") = "auto");

  m.def(
      "mc_tail",
      [](double u, double t, const ModelParams& params, int n, int n_paths, std::uint64_t seed,
         int threads) {
        TailEstimate e;
        {
          py::gil_scoped_release release;
          e = mc_tail(u, t, params, mc(n, n_paths, seed, threads));
        }
        py::dict d;
        d["p_hat"] = e.p_hat;
        d["std_err"] = e.std_err;
        d["hits"] = e.hits;
        d["n_paths"] = e.n_paths;
        d["zero_hits"] = e.zero_hits;
        d["upper_bound"] = e.upper_bound;
        return d;
      },
      py::arg("u"), py::arg("t"), py::arg("params"), py::arg("n") = 64, py::arg("n_paths") = 10000,
      py::arg("seed") = 0, py::arg("threads") = 1);

  m.def(
      "exp_equiv_check",
      [](double delta, const std::vector<double>& ladder, const ModelParams& params, int n,
         int n_paths, std::uint64_t seed, int threads) {
        const auto r = exp_equiv_check(delta, ladder, params, mc(n, n_paths, seed, threads));
        py::dict d;
        d["eps"] = r.eps;
        d["q_hat"] = r.q_hat;
        d["std_err"] = r.std_err;
        d["nonincreasing"] = r.nonincreasing;
        d["final_zero"] = r.final_zero;
        d["pass"] = r.pass;
        return d;
      },
      py::arg("delta"), py::arg("ladder"), py::arg("params"), py::arg("n") = 64,
      py::arg("n_paths") = 100000, py::arg("seed") = 0, py::arg("threads") = 1);

  m.def(
      "borell_tis_check",
      [](const std::vector<double>& x, const ModelParams& params, int n, int n_paths,
         std::uint64_t seed, int threads, bool offsets_from_mean) {
        const auto r =
            borell_tis_check(x, params, mc(n, n_paths, seed, threads), offsets_from_mean);
        py::dict d;
        d["m_hat"] = r.m_hat;
        d["x"] = r.x;
        d["p_hat"] = r.p_hat;
        d["bound"] = r.bound;
        d["pass"] = r.pass;
        return d;
      },
      py::arg("x"), py::arg("params"), py::arg("n") = 512, py::arg("n_paths") = 100000,
      py::arg("seed") = 0, py::arg("threads") = 1, py::arg("offsets_from_mean") = true);

  m.def(
      "holder_check",
      [](const ModelParams& params, int n, int n_paths, std::uint64_t seed, int threads,
         double tolerance) {
        const auto r = holder_check(params, mc(n, n_paths, seed, threads), tolerance);
        py::dict d;
        d["target"] = r.target;
        d["mean"] = r.mean;
        d["std_err"] = r.std_err;
        d["pass"] = r.pass;
        return d;
      },
      py::arg("params"), py::arg("n") = 1024, py::arg("n_paths") = 1000, py::arg("seed") = 0,
      py::arg("threads") = 1, py::arg("tolerance") = 0.05);

  m.def(
      "selfsim_check",
      [](const std::vector<double>& a, const ModelParams& params, int n, int n_paths,
         std::uint64_t seed, int threads, double level) {
        const auto r = selfsim_check(a, params, mc(n, n_paths, seed, threads), level);
        py::dict d;
        d["a"] = r.a;
        d["ks_statistic"] = r.ks_statistic;
        d["p_value"] = r.p_value;
        d["pass"] = r.pass;
        return d;
      },
      py::arg("a"), py::arg("params"), py::arg("n") = 64, py::arg("n_paths") = 100000,
      py::arg("seed") = 0, py::arg("threads") = 1, py::arg("level") = 0.01);
}
