#include "rbldp/rate_solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>

#include <Eigen/Dense>
#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

#include "rbldp/errors.hpp"
#include "rbldp/parallel.hpp"
#include "rbldp/rbergomi.hpp"
#include "rbldp/rng.hpp"

namespace rbldp {

void RateProblem::validate() const {
  params.validate();
  grid.validate();
  if (grid.horizon != 1.0) throw DomainError("rate problems live on the unit interval");
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  if (mode == RateMode::correlated && params.rho == 0.0)
    throw DomainError("correlated rate function is degenerate at rho = 0; use uncorrelated mode");
}

namespace {

// ---------------------------------------------------------------------------
// Forward map and its adjoint.
//
// Driving path x = I^K f1 on the nodes, s_k = sqrt(m(x)(t_k, eps)), increments
// dy_k = coef * g_k * dt where g = f1 (correlated, coef = rho) or g = f2
// (uncorrelated, coef = 1). Running integral Phi_{k+1} = Phi_k + s_k dy_k.

class RunningIntegral {
 public:
  explicit RunningIntegral(const RateProblem& problem)
      : n_(problem.grid.n),
        dt_(problem.grid.dt()),
        correlated_(problem.mode == RateMode::correlated),
        coef_(correlated_ ? problem.params.rho : 1.0),
        weights_(volterra_weights(problem.grid, problem.params)),
        half_log_level_(0.5 * std::log(problem.params.v0 *
                                       std::pow(problem.eps, 1.0 + problem.params.beta()))),
        drift_(problem.grid.size()) {
    const double half_eta2 = 0.5 * problem.params.eta * problem.params.eta;
    for (int k = 0; k <= n_; ++k)
      drift_[k] = half_eta2 * std::pow(problem.eps * problem.grid.time(k), problem.params.beta());
  }

  int n() const noexcept { return n_; }
  double dt() const noexcept { return dt_; }
  bool correlated() const noexcept { return correlated_; }
  int num_vars() const noexcept { return correlated_ ? n_ : 2 * n_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  struct State {
    std::vector<double> x, s, dy, run;
  };

  // Returns false when the variance exponent leaves the guarded range.
  bool forward(const double* vars, State& st) const {
    const double* f1 = vars;
    const double* g = correlated_ ? vars : vars + n_;
    st.x.assign(n_ + 1, 0.0);
    st.s.assign(n_ + 1, 0.0);
    st.dy.assign(n_, 0.0);
    st.run.assign(n_ + 1, 0.0);
    for (int k = 1; k <= n_; ++k) {
      double acc = 0.0;
      for (int j = 0; j < k; ++j) acc += weights_[k - j] * f1[j];
      st.x[k] = acc;
    }
    for (int k = 0; k <= n_; ++k) {
      const double expo = st.x[k] - drift_[k];
      if (expo > kExponentGuard || !std::isfinite(expo)) return false;
      st.s[k] = std::exp(half_log_level_ + 0.5 * expo);
    }
    for (int k = 0; k < n_; ++k) {
      st.dy[k] = coef_ * g[k] * dt_;
      st.run[k + 1] = st.run[k] + st.s[k] * st.dy[k];
    }
    return true;
  }

  // grad += d/dvars sum_j W_j s_j dy_j, with W_j the weight of increment j.
  void adjoint(const State& st, const std::vector<double>& incr_weight, double* grad) const {
    double* g_f1 = grad;
    double* g_g = correlated_ ? grad : grad + n_;
    std::vector<double> q(n_, 0.0);
    for (int k = 0; k < n_; ++k) {
      g_g[k] += st.s[k] * coef_ * dt_ * incr_weight[k];
      q[k] = 0.5 * st.s[k] * st.dy[k] * incr_weight[k];
    }
    for (int i = 0; i < n_; ++i) {
      double acc = 0.0;
      for (int k = i + 1; k < n_; ++k) acc += weights_[k - i] * q[k];
      g_f1[i] += acc;
    }
  }

  // V(f1) = sum_k m_k dt and its gradient (used by the reduced problem).
  bool variance_integral(const double* f1, double& value, double* grad) const {
    State st;
    std::vector<double> tmp(num_vars(), 0.0);
    std::copy(f1, f1 + n_, tmp.begin());
    if (!forward(tmp.data(), st)) return false;
    value = 0.0;
    for (int k = 0; k < n_; ++k) value += st.s[k] * st.s[k] * dt_;
    if (grad) {
      for (int i = 0; i < n_; ++i) {
        double acc = 0.0;
        for (int k = i + 1; k < n_; ++k) acc += weights_[k - i] * st.s[k] * st.s[k] * dt_;
        grad[i] = acc;
      }
    }
    return true;
  }

 private:
  int n_;
  double dt_;
  bool correlated_;
  double coef_;
  std::vector<double> weights_;
  double half_log_level_;
  std::vector<double> drift_;
};

// ---------------------------------------------------------------------------
// Constraint systems: endpoint (one constraint) or path (n constraints).

class ConstraintSystem {
 public:
  ConstraintSystem(const RunningIntegral& ri, std::vector<double> targets, bool path)
      : ri_(ri), targets_(std::move(targets)), path_(path) {}

  int num_vars() const { return ri_.num_vars(); }
  int num_constraints() const { return static_cast<int>(targets_.size()); }
  const RunningIntegral& integral() const { return ri_; }

  bool constraints(const double* vars, RunningIntegral::State& st, std::vector<double>& c) const {
    if (!ri_.forward(vars, st)) return false;
    c.resize(targets_.size());
    if (path_) {
      for (int k = 1; k <= ri_.n(); ++k) c[k - 1] = st.run[k] - targets_[k - 1];
    } else {
      c[0] = st.run[ri_.n()] - targets_[0];
    }
    return true;
  }

  // grad += d/dvars sum_k w_k c_k
  void adjoint(const RunningIntegral::State& st, const std::vector<double>& w, double* grad) const {
    std::vector<double> incr(ri_.n(), 0.0);
    if (path_) {
      double suffix = 0.0;
      for (int j = ri_.n() - 1; j >= 0; --j) {
        suffix += w[j];  // constraint j covers node j + 1
        incr[j] = suffix;
      }
    } else {
      std::fill(incr.begin(), incr.end(), w[0]);
    }
    ri_.adjoint(st, incr, grad);
  }

  Eigen::MatrixXd jacobian(const RunningIntegral::State& st) const {
    const int m = num_constraints();
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(m, num_vars());
    std::vector<double> w(m, 0.0), row(num_vars());
    for (int k = 0; k < m; ++k) {
      std::fill(w.begin(), w.end(), 0.0);
      std::fill(row.begin(), row.end(), 0.0);
      w[k] = 1.0;
      adjoint(st, w, row.data());
      for (int j = 0; j < num_vars(); ++j) jac(k, j) = row[j];
    }
    return jac;
  }

 private:
  const RunningIntegral& ri_;
  std::vector<double> targets_;
  bool path_;
};

// ---------------------------------------------------------------------------
// Quasi-Newton inner solver (L-BFGS with Wolfe line search).

class CallbackFunction final : public ceres::FirstOrderFunction {
 public:
  using Fn = std::function<bool(const double*, double*, double*)>;
  CallbackFunction(int n, Fn fn) : n_(n), fn_(std::move(fn)) {}
  bool Evaluate(const double* p, double* cost, double* grad) const override {
    return fn_(p, cost, grad);
  }
  int NumParameters() const override { return n_; }

 private:
  int n_;
  Fn fn_;
};

int minimize(std::vector<double>& y, CallbackFunction::Fn fn, int max_iterations) {
  ceres::GradientProblem problem(new CallbackFunction(static_cast<int>(y.size()), std::move(fn)));
  ceres::GradientProblemSolver::Options options;
  options.line_search_direction_type = ceres::LBFGS;
  options.max_num_iterations = max_iterations;
  options.function_tolerance = 1e-16;
  options.gradient_tolerance = 1e-13;
  options.parameter_tolerance = 1e-15;
  options.logging_type = ceres::SILENT;
  options.minimizer_progress_to_stdout = false;
  ceres::GradientProblemSolver::Summary summary;
  ceres::Solve(options, problem, y.data(), &summary);
  return static_cast<int>(summary.iterations.size());
}

double sum_sq(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double roughness(const std::vector<double>& vars, int n) {
  double r = 0.0;
  for (std::size_t b = 0; b < vars.size(); b += n)
    for (int k = 0; k + 1 < n; ++k) {
      const double d = vars[b + k + 1] - vars[b + k];
      r += d * d;
    }
  return r;
}

struct StartOutcome {
  std::vector<double> vars;
  double value = std::numeric_limits<double>::infinity();
  std::vector<double> residuals;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

// Augmented Lagrangian: L = 1/2 ||x||^2_{L2} - lambda.c + mu/2 |c|^2, the
// penalty growing by `penalty_growth` per outer iteration, then Gauss-Newton
// feasibility polish along the constraint normals.
StartOutcome solve_augmented_lagrangian(const ConstraintSystem& sys, std::vector<double> vars,
                                        const SolverSettings& settings, double tol) {
  const int nv = sys.num_vars();
  const int m = sys.num_constraints();
  const double dt = sys.integral().dt();
  const double sqrt_dt = std::sqrt(dt);

  StartOutcome out;
  RunningIntegral::State st;
  std::vector<double> c;
  if (!sys.constraints(vars.data(), st, c)) return out;

  double gscale = 0.0;
  {
    const Eigen::MatrixXd jac = sys.jacobian(st);
    gscale = jac.squaredNorm() / (m * dt);
  }
  if (!(gscale > 0.0) || !std::isfinite(gscale)) gscale = 1.0;
  double mu = settings.penalty0 / gscale;
  std::vector<double> lambda(m, 0.0);

  std::vector<double> y(nv);
  for (int j = 0; j < nv; ++j) y[j] = vars[j] * sqrt_dt;

  for (int outer = 0; outer < settings.max_outer; ++outer) {
    auto fn = [&, mu](const double* yp, double* cost, double* grad) -> bool {
      thread_local RunningIntegral::State s;
      thread_local std::vector<double> cc, x, w;
      x.resize(nv);
      for (int j = 0; j < nv; ++j) x[j] = yp[j] / sqrt_dt;
      if (!sys.constraints(x.data(), s, cc)) return false;
      double val = 0.0;
      for (int j = 0; j < nv; ++j) val += 0.5 * yp[j] * yp[j];
      w.resize(m);
      for (int k = 0; k < m; ++k) {
        val += -lambda[k] * cc[k] + 0.5 * mu * cc[k] * cc[k];
        w[k] = -lambda[k] + mu * cc[k];
      }
      *cost = val;
      if (grad) {
        std::fill(grad, grad + nv, 0.0);
        sys.adjoint(s, w, grad);
        for (int j = 0; j < nv; ++j) grad[j] = yp[j] + grad[j] / sqrt_dt;
      }
      return true;
    };
    out.iterations += minimize(y, fn, settings.max_inner_iterations);
    for (int j = 0; j < nv; ++j) vars[j] = y[j] / sqrt_dt;
    if (!sys.constraints(vars.data(), st, c)) return out;
    if (max_abs(c) <= tol) break;
    for (int k = 0; k < m; ++k) lambda[k] -= mu * c[k];
    mu *= settings.penalty_growth;
  }

  // Minimum-norm Newton corrections onto the constraint set.
  for (int it = 0; it < 20 && max_abs(c) > 1e-3 * tol; ++it) {
    const Eigen::MatrixXd jac = sys.jacobian(st);
    const Eigen::VectorXd cv = Eigen::Map<const Eigen::VectorXd>(c.data(), m);
    const Eigen::MatrixXd jjt = jac * jac.transpose();
    const Eigen::VectorXd mult = jjt.ldlt().solve(cv);
    const Eigen::VectorXd step = -jac.transpose() * mult;
    std::vector<double> trial(vars);
    for (int j = 0; j < nv; ++j) trial[j] += step[j];
    RunningIntegral::State st2;
    std::vector<double> c2;
    if (!sys.constraints(trial.data(), st2, c2) || !(max_abs(c2) < max_abs(c))) break;
    vars.swap(trial);
    st = std::move(st2);
    c.swap(c2);
  }

  out.value = 0.5 * sum_sq(vars) * dt;
  out.residuals = c;
  out.residual = max_abs(c);
  out.converged = out.residual <= tol && std::isfinite(out.value);
  out.vars = std::move(vars);
  return out;
}

std::vector<double> gaussian_vector(std::uint64_t seed, std::uint64_t stream, int n) {
  NormalStream rng(seed, stream);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.next();
  return v;
}

// Picks the lowest value; near-ties go to the smoothest control, then to the
// lower start index.
int select_best(const std::vector<StartOutcome>& outcomes, int n) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(outcomes.size()); ++i) {
    const auto& o = outcomes[i];
    if (!o.converged) continue;
    if (best < 0) {
      best = i;
      continue;
    }
    const auto& b = outcomes[best];
    const double tie = 1e-10 * std::max(1.0, std::abs(b.value));
    if (o.value < b.value - tie) {
      best = i;
    } else if (std::abs(o.value - b.value) <= tie && roughness(o.vars, n) < roughness(b.vars, n)) {
      best = i;
    }
  }
  return best;
}

RateResult finish(const std::vector<StartOutcome>& outcomes, int n, bool split, bool path) {
  const int best = select_best(outcomes, n);
  if (best < 0) {
    int closest = 0;
    for (int i = 1; i < static_cast<int>(outcomes.size()); ++i)
      if (outcomes[i].residual < outcomes[closest].residual) closest = i;
    throw InfeasibleError("rate solver: no start reached the constraint tolerance (best residual " +
                              std::to_string(outcomes[closest].residual) + ")",
                          outcomes[closest].residual, outcomes[closest].residuals);
  }
  const auto& o = outcomes[best];
  RateResult r;
  r.value = o.value;
  r.control.values.assign(o.vars.begin(), o.vars.begin() + n);
  if (split) r.control2.values.assign(o.vars.begin() + n, o.vars.end());
  r.residual = o.residual;
  if (path) r.residual_profile = o.residuals;
  for (const auto& x : outcomes) r.iterations += x.iterations;
  r.multistart_best_of = static_cast<int>(outcomes.size());
  r.best_start = best;
  r.converged = true;
  return r;
}

RateResult zero_result(int n, bool split, bool path) {
  RateResult r;
  r.control.values.assign(n, 0.0);
  if (split) r.control2.values.assign(n, 0.0);
  if (path) r.residual_profile.assign(n, 0.0);
  r.converged = true;
  r.multistart_best_of = 1;
  r.best_start = 0;
  return r;
}

// Multistart set: zero, +/- a constant level, then seeded Gaussian
// perturbations. In the uncorrelated case the f2 block is multiplied by
// sign(target) so the solver is exactly odd in the target.
std::vector<std::vector<double>> start_points(const RateProblem& problem,
                                              const SolverSettings& settings, double target) {
  const int n = problem.grid.n;
  const bool correlated = problem.mode == RateMode::correlated;
  const double level = std::sqrt(problem.params.v0 * std::pow(problem.eps, 1.0 + problem.params.beta()));
  std::vector<std::vector<double>> starts;
  const int count = std::max(1, settings.starts);
  if (correlated) {
    const double c = target / (problem.params.rho * level);
    for (int i = 0; i < count; ++i) {
      std::vector<double> f(n, 0.0);
      if (i == 1) std::fill(f.begin(), f.end(), c);
      if (i == 2) std::fill(f.begin(), f.end(), -c);
      if (i >= 3) {
        const auto g = gaussian_vector(settings.seed, static_cast<std::uint64_t>(i), n);
        for (int k = 0; k < n; ++k) f[k] = c + 0.5 * std::abs(c) * g[k];
      }
      starts.push_back(std::move(f));
    }
  } else {
    const double sign = target < 0.0 ? -1.0 : 1.0;
    const double c2 = std::abs(target) / level;
    for (int i = 0; i < count; ++i) {
      std::vector<double> v(2 * n, 0.0);
      if (i >= 1) std::fill(v.begin() + n, v.end(), sign * c2);
      if (i == 1) std::fill(v.begin(), v.begin() + n, 0.25);
      if (i == 2) std::fill(v.begin(), v.begin() + n, -0.25);
      if (i >= 3) {
        const auto g = gaussian_vector(settings.seed, static_cast<std::uint64_t>(i), 2 * n);
        for (int k = 0; k < n; ++k) v[k] = 0.5 * g[k];
        for (int k = 0; k < n; ++k) v[n + k] = sign * (c2 + 0.5 * c2 * g[n + k]);
      }
      starts.push_back(std::move(v));
    }
  }
  return starts;
}

double target_tolerance(const SolverSettings& settings, double scale) {
  return settings.tolerance * std::max(1.0, scale);
}

}  // namespace

// ---------------------------------------------------------------------------

double endpoint_map_correlated(std::span<const double> f, const RateProblem& problem) {
  problem.validate();
  if (problem.mode != RateMode::correlated)
    throw DomainError("endpoint_map_correlated: problem is not correlated");
  if (static_cast<int>(f.size()) != problem.grid.n) throw DomainError("control must have n entries");
  RunningIntegral ri(problem);
  RunningIntegral::State st;
  if (!ri.forward(f.data(), st)) throw OverflowError("endpoint map: variance exponent exceeds guard", -1);
  return st.run[problem.grid.n];
}

std::vector<double> gradient_endpoint(std::span<const double> f, const RateProblem& problem) {
  problem.validate();
  if (problem.mode != RateMode::correlated)
    throw DomainError("gradient_endpoint: problem is not correlated");
  if (static_cast<int>(f.size()) != problem.grid.n) throw DomainError("control must have n entries");
  RunningIntegral ri(problem);
  RunningIntegral::State st;
  if (!ri.forward(f.data(), st)) throw OverflowError("endpoint map: variance exponent exceeds guard", -1);
  std::vector<double> grad(f.size(), 0.0);
  ri.adjoint(st, std::vector<double>(f.size(), 1.0), grad.data());
  return grad;
}

std::vector<double> forward_path(std::span<const double> f1, std::span<const double> f2,
                                 const RateProblem& problem) {
  problem.validate();
  const int n = problem.grid.n;
  if (static_cast<int>(f1.size()) != n) throw DomainError("control must have n entries");
  RunningIntegral ri(problem);
  std::vector<double> vars(f1.begin(), f1.end());
  if (!ri.correlated()) {
    if (static_cast<int>(f2.size()) != n) throw DomainError("second control must have n entries");
    vars.insert(vars.end(), f2.begin(), f2.end());
  }
  RunningIntegral::State st;
  if (!ri.forward(vars.data(), st)) throw OverflowError("forward map: variance exponent exceeds guard", -1);
  return st.run;
}

RateResult solve_endpoint(const RateProblem& problem, const SolverSettings& settings) {
  problem.validate();
  const int n = problem.grid.n;
  const bool split = problem.mode == RateMode::uncorrelated;
  if (!std::isfinite(problem.target_u)) throw DomainError("endpoint target must be finite");
  if (problem.target_u == 0.0) return zero_result(n, split, false);

  RunningIntegral ri(problem);
  ConstraintSystem sys(ri, {problem.target_u}, false);
  const double tol = target_tolerance(settings, std::abs(problem.target_u));
  const auto starts = start_points(problem, settings, problem.target_u);
  std::vector<StartOutcome> outcomes(starts.size());
  parallel_for(starts.size(), 1, [&](std::size_t i) {
    outcomes[i] = solve_augmented_lagrangian(sys, starts[i], settings, tol);
  });
  return finish(outcomes, n, split, false);
}

RateResult solve_endpoint_uncorrelated_reduced(const RateProblem& problem,
                                               const SolverSettings& settings) {
  problem.validate();
  if (problem.mode != RateMode::uncorrelated)
    throw DomainError("reduced solver applies to the uncorrelated mode only");
  const int n = problem.grid.n;
  const double u = problem.target_u;
  if (!std::isfinite(u)) throw DomainError("endpoint target must be finite");
  if (u == 0.0) return zero_result(n, true, false);

  RunningIntegral ri(problem);
  const double dt = ri.dt();
  const double sqrt_dt = std::sqrt(dt);
  const double u2 = u * u;

  std::vector<StartOutcome> outcomes;
  const int count = std::max(1, settings.starts);
  for (int i = 0; i < count; ++i) {
    std::vector<double> f1(n, 0.0);
    if (i == 1) std::fill(f1.begin(), f1.end(), 0.25);
    if (i == 2) std::fill(f1.begin(), f1.end(), -0.25);
    if (i >= 3) {
      const auto g = gaussian_vector(settings.seed, static_cast<std::uint64_t>(i), 2 * n);
      for (int k = 0; k < n; ++k) f1[k] = 0.5 * g[k];
    }
    std::vector<double> y(n);
    for (int k = 0; k < n; ++k) y[k] = f1[k] * sqrt_dt;
    auto fn = [&](const double* yp, double* cost, double* grad) -> bool {
      thread_local std::vector<double> x, dv;
      x.resize(n);
      dv.resize(n);
      for (int k = 0; k < n; ++k) x[k] = yp[k] / sqrt_dt;
      double v = 0.0;
      if (!ri.variance_integral(x.data(), v, grad ? dv.data() : nullptr)) return false;
      double val = 0.0;
      for (int k = 0; k < n; ++k) val += 0.5 * yp[k] * yp[k];
      *cost = val + u2 / (2.0 * v);
      if (grad)
        for (int k = 0; k < n; ++k) grad[k] = yp[k] - u2 / (2.0 * v * v) * dv[k] / sqrt_dt;
      return true;
    };
    StartOutcome o;
    o.iterations = minimize(y, fn, settings.max_inner_iterations);
    for (int k = 0; k < n; ++k) f1[k] = y[k] / sqrt_dt;

    // optimal f2 = u s / V with s = sqrt(m), V = sum s^2 dt
    std::vector<double> vars(2 * n, 0.0);
    std::copy(f1.begin(), f1.end(), vars.begin());
    RunningIntegral::State st;
    if (ri.forward(vars.data(), st)) {
      double v = 0.0;
      for (int k = 0; k < n; ++k) v += st.s[k] * st.s[k] * dt;
      for (int k = 0; k < n; ++k) vars[n + k] = u * st.s[k] / v;
      ri.forward(vars.data(), st);
      o.value = 0.5 * sum_sq(f1) * dt + u2 / (2.0 * v);
      o.residuals = {st.run[n] - u};
      o.residual = std::abs(o.residuals[0]);
      o.converged = o.residual <= target_tolerance(settings, std::abs(u)) && std::isfinite(o.value);
      o.vars = std::move(vars);
    }
    outcomes.push_back(std::move(o));
  }
  return finish(outcomes, n, true, false);
}

RateResult solve_path(const RateProblem& problem, const SolverSettings& settings) {
  problem.validate();
  const int n = problem.grid.n;
  const bool split = problem.mode == RateMode::uncorrelated;
  const auto& phi = problem.target_path;
  if (static_cast<int>(phi.size()) != problem.grid.size())
    throw DomainError("target path must have n + 1 entries");
  if (phi[0] != 0.0) throw DomainError("target path must start at 0");
  for (double x : phi)
    if (!std::isfinite(x)) throw DomainError("target path must be finite");
  if (std::all_of(phi.begin(), phi.end(), [](double x) { return x == 0.0; }))
    return zero_result(n, split, true);

  RunningIntegral ri(problem);
  ConstraintSystem sys(ri, std::vector<double>(phi.begin() + 1, phi.end()), true);
  double scale = 0.0;
  for (double x : phi) scale = std::max(scale, std::abs(x));
  const double tol = target_tolerance(settings, scale);
  const auto starts = start_points(problem, settings, phi[n] != 0.0 ? phi[n] : scale);
  std::vector<StartOutcome> outcomes(starts.size());
  parallel_for(starts.size(), 1, [&](std::size_t i) {
    outcomes[i] = solve_augmented_lagrangian(sys, starts[i], settings, tol);
  });
  return finish(outcomes, n, split, true);
}

}  // namespace rbldp
