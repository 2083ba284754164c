#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "coopflow/bounds.hpp"
#include "coopflow/config.hpp"
#include "coopflow/errors.hpp"
#include "coopflow/flow.hpp"
#include "coopflow/metrics.hpp"
#include "coopflow/model.hpp"
#include "coopflow/runner.hpp"

namespace py = pybind11;
using namespace coopflow;

namespace {

InversionBranch parse_branch(const std::string& name) {
  if (name == "auto") return InversionBranch::automatic;
  if (name == "direct") return InversionBranch::direct;
  if (name == "woodbury") return InversionBranch::woodbury;
  throw InvalidParameter("branch must be 'auto', 'direct' or 'woodbury'");
}

// [k][agent] states as a (K+1) x n x 9 nested list.
py::list state_cube(const std::vector<std::vector<StateVector>>& cube) {
  py::list out;
  for (const auto& step : cube) {
    MatrixXd m(static_cast<Eigen::Index>(step.size()), kStateDim);
    for (std::size_t i = 0; i < step.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = step[i].transpose();
    out.append(m);
  }
  return out;
}

py::dict bounds_dict(const std::vector<BoundPoint>& b) {
  std::vector<double> p, v, a;
  for (const auto& x : b) {
    p.push_back(x.p);
    v.push_back(x.v);
    a.push_back(x.a);
  }
  py::dict d;
  d["p"] = p;
  d["v"] = v;
  d["a"] = a;
  return d;
}

py::dict series_dict(const ErrorSeries& s) {
  py::dict d;
  d["p"] = s.p;
  d["v"] = s.v;
  d["a"] = s.a;
  return d;
}

}  // namespace

PYBIND11_MODULE(_coopflow, m) {
  m.doc() = "Cooperative localization with particle-flow belief propagation";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvalidParameter>(m, "InvalidParameter", PyExc_ValueError);
  py::register_exception<SingularGeometry>(m, "SingularGeometry", PyExc_ArithmeticError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<DegenerateWeights>(m, "DegenerateWeights", PyExc_ArithmeticError);

  m.def(
      "motion_model",
      [](double dt, double sigma_a) {
        const auto mm = build_motion_model(dt, sigma_a);
        py::dict d;
        d["F"] = MatrixXd(mm.F);
        d["G"] = MatrixXd(mm.G);
        d["Q"] = MatrixXd(mm.Q);
        return d;
      },
      py::arg("dt"), py::arg("sigma_a"), "Transition matrix F, noise gain G and process covariance Q.");

  m.def(
      "range_jacobian_block",
      [](const Vec3& p_i, const Vec3& p_j) { return VectorXd(range_jacobian_block(p_i, p_j).transpose()); },
      py::arg("p_i"), py::arg("p_j"), "Gradient of |p_i - p_j| with respect to agent i's 9-D state.");

  m.def(
      "lambda_grid",
      [](int n, double ratio) {
        const auto s = exponential_lambda_grid(n, ratio);
        return py::make_tuple(s.lambdas, s.deltas);
      },
      py::arg("n"), py::arg("ratio") = 1.2, "Exponentially spaced pseudo-time grid (lambdas, deltas).");

  m.def(
      "flow_coefficients",
      [](const MatrixXd& P, const MatrixXd& H, const VectorXd& r, const VectorXd& z, const VectorXd& nu,
         double lambda, const VectorXd& mean0, const std::string& branch) {
        const auto fc = flow_coefficients(P, {H, r, z, nu}, lambda, mean0, parse_branch(branch));
        return py::make_tuple(fc.A, fc.c);
      },
      py::arg("P"), py::arg("H"), py::arg("r"), py::arg("z"), py::arg("nu"), py::arg("lam"), py::arg("mean0"),
      py::arg("branch") = "auto", "Flow coefficients (A, c) of the exact Daum-Huang drift.");

  m.def(
      "linear_flow",
      [](const MatrixXd& particles, const VectorXd& mean, const MatrixXd& P, const MatrixXd& H, const VectorXd& r,
         const VectorXd& z, int n_lambda, double ratio) {
        const auto sched = exponential_lambda_grid(n_lambda, ratio);
        const VectorXd nu = VectorXd::Zero(z.size());
        const VectorXd mean0 = mean;
        auto provider = [&](double lam, const VectorXd&) {
          return flow_coefficients(P, {H, r, z, nu}, lam, mean0);
        };
        const auto res = flow_integrate(particles, mean, sched, provider);
        return py::make_tuple(res.particles, res.mean);
      },
      py::arg("particles"), py::arg("mean"), py::arg("P"), py::arg("H"), py::arg("r"), py::arg("z"),
      py::arg("n_lambda") = 20, py::arg("ratio") = 1.2, "Migrates particles under a linear measurement z = Hx + v.");

  m.def(
      "sigma_point_cov_update",
      [](const MatrixXd& P, const VectorXd& mean, const std::function<VectorXd(const VectorXd&)>& h,
         const MatrixXd& R) { return sigma_point_cov_update(P, mean, h, R).P_post; },
      py::arg("P"), py::arg("mean"), py::arg("h"), py::arg("R"), "Unscented covariance update.");

  m.def(
      "systematic_resample",
      [](const VectorXd& w, std::uint64_t seed) {
        Rng rng(seed);
        const auto idx = systematic_resample(w, rng);
        return std::vector<long long>(idx.begin(), idx.end());
      },
      py::arg("weights"), py::arg("seed"), "Indices drawn by systematic resampling.");

  m.def(
      "cumulative_frequency",
      [](const std::vector<double>& e, const std::vector<double>& taus) { return cumulative_frequency(e, taus); },
      py::arg("errors"), py::arg("taus"));
  m.def(
      "outage_probability",
      [](const std::vector<double>& e, double tau) { return outage_probability(e, tau); }, py::arg("errors"),
      py::arg("tau"));

  m.def(
      "parse_config", [](const std::string& text) { return to_yaml(parse_config(text)); }, py::arg("text"),
      "Validates a YAML configuration and returns the fully resolved YAML.");

  m.def(
      "generate_scenario",
      [](const std::string& config_text, std::uint64_t stream_seed) {
        const auto cfg = parse_config(config_text);
        const auto sc = generate_scenario(cfg.scenario, stream_seed);
        MatrixXd anchors(static_cast<Eigen::Index>(sc.anchors.size()), 3);
        for (std::size_t a = 0; a < sc.anchors.size(); ++a)
          anchors.row(static_cast<Eigen::Index>(a)) = sc.anchors[a].position.transpose();
        std::vector<std::vector<StateVector>> cube;
        for (const auto& step : sc.trajectories) {
          std::vector<StateVector> row;
          for (const auto& s : step) row.push_back(s.flat());
          cube.push_back(row);
        }
        return py::make_tuple(anchors, state_cube(cube));
      },
      py::arg("config"), py::arg("seed"), "Anchors (n_anchors x 3) and per-step agent states (n x 9 each).");

  m.def(
      "run_experiment",
      [](const std::string& config_text, unsigned threads, const std::string& out_dir) {
        const auto cfg = parse_config(config_text);
        ExperimentResult res;
        {
          py::gil_scoped_release release;
          res = run_experiment(cfg, threads);
          if (!out_dir.empty()) write_outputs(res, out_dir);
        }
        py::dict d;
        d["rmse"] = series_dict(res.rmse);
        d["rmse_converged"] = series_dict(res.rmse_converged);
        d["pcrlb"] = bounds_dict(res.pcrlb);
        d["n_failed"] = res.n_failed;
        d["n_diverged"] = res.n_diverged;
        d["joint_ms_per_step"] = res.joint_ms_per_step;
        d["agent_ms_per_step"] = res.agent_ms_per_step;
        py::list runs;
        for (const auto& r : res.runs) {
          py::dict rd;
          rd["status"] = std::string(to_string(r.status));
          rd["final_error_p"] = r.final_error_p;
          rd["estimates"] = state_cube(r.estimates);
          rd["truths"] = state_cube(r.truths);
          runs.append(rd);
        }
        d["runs"] = runs;
        return d;
      },
      py::arg("config"), py::arg("threads") = 0, py::arg("out_dir") = "",
      "Runs the configured Monte-Carlo experiment; optionally writes the result tables.");
}
