#include "coopflow/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "coopflow/edh.hpp"
#include "coopflow/errors.hpp"
#include "coopflow/flow.hpp"
#include "coopflow/pfbp.hpp"
#include "coopflow/sirbp.hpp"

namespace coopflow {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<StateVector> flat_states(const std::vector<AgentState>& agents) {
  std::vector<StateVector> out;
  out.reserve(agents.size());
  for (const auto& a : agents) out.push_back(a.flat());
  return out;
}

std::vector<StateVector> split_joint(const VectorXd& joint) {
  std::vector<StateVector> out;
  for (Eigen::Index i = 0; i < joint.size() / kStateDim; ++i) out.push_back(joint.segment<kStateDim>(i * kStateDim));
  return out;
}

std::vector<Rng> agent_streams(std::uint64_t seed, int n) {
  std::vector<Rng> rngs;
  rngs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) rngs.push_back(make_rng(seed, {kTagAgent, static_cast<std::uint64_t>(i)}));
  return rngs;
}

double max_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream ss;
  ss << std::setprecision(10) << v;
  return ss.str();
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

void write_rmse(const std::filesystem::path& path, const ErrorSeries& rmse, const std::vector<BoundPoint>& bounds,
                std::size_t steps) {
  auto out = open_out(path);
  out << "k,rmse_p,rmse_v,rmse_a,pcrlb_p,pcrlb_v,pcrlb_a\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < steps; ++k) {
    const bool have = k < rmse.p.size();
    const BoundPoint b = k < bounds.size() ? bounds[k] : BoundPoint{nan, nan, nan, false};
    out << k << ',' << fmt(have ? rmse.p[k] : nan) << ',' << fmt(have ? rmse.v[k] : nan) << ','
        << fmt(have ? rmse.a[k] : nan) << ',' << fmt(b.p) << ',' << fmt(b.v) << ',' << fmt(b.a) << '\n';
  }
  finish(out, path);
}

}  // namespace

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::ok: return "ok";
    case RunStatus::diverged: return "diverged";
    case RunStatus::failed: return "failed";
  }
  return "?";
}

std::uint64_t run_seed(std::uint64_t base, int run) {
  return derive_seed(base, {static_cast<std::uint64_t>(run)});
}

RunRecord execute_run(const ExperimentConfig& cfg, int run) {
  const auto& sc = cfg.scenario;
  const auto& ac = cfg.algorithm;
  RunRecord rec;
  rec.run = run;
  rec.seed = run_seed(sc.seed, run);

  try {
    const Scenario scenario = generate_scenario(sc, rec.seed);
    const MotionModel mm = build_motion_model(sc.dt, sc.sigma_a);
    const FlowSchedule schedule = exponential_lambda_grid(ac.lambda_steps, ac.lambda_ratio);
    const auto sampling = ac.uniform_prior_positions ? PriorSampling::uniform_position : PriorSampling::gaussian;
    const auto priors = init_prior(sc, ac.particles, sampling, rec.seed);

    std::vector<LinkSets> links;
    std::vector<NetworkSnapshot> snapshots;
    for (int k = 1; k <= sc.K; ++k) {
      const auto pos = scenario.positions_at(k);
      links.push_back(build_connectivity(pos, scenario.anchors, sc.r_max));
      Rng mrng = make_rng(rec.seed, {kTagMeasurement, static_cast<std::uint64_t>(k)});
      snapshots.push_back(simulate_measurements(pos, scenario.anchors, links.back(), sc.sigma, mrng, ac.mode, k));
    }
    std::vector<StateMatrix> prior_covs;
    for (const auto& p : priors) prior_covs.push_back(p.belief.cov);
    rec.pcrlb = pcrlb_sequence(scenario, links, sc.sigma, mm, prior_covs);

    for (int k = 0; k <= sc.K; ++k) rec.truths.push_back(flat_states(scenario.trajectories[k]));
    std::vector<StateVector> initial;
    for (const auto& p : priors) initial.push_back(p.belief.mean);
    rec.estimates.push_back(initial);

    switch (ac.algo) {
      case Algorithm::edh: {
        EdhState state = edh_initial_state(priors);
        Rng rng = make_rng(rec.seed, {kTagFilter});
        for (int k = 1; k <= sc.K; ++k) {
          const auto t0 = Clock::now();
          auto step = edh_time_step(state, snapshots[k - 1], scenario.anchors, mm, sc.sigma, schedule, rng);
          rec.joint_ms.push_back(ms_since(t0));
          state = std::move(step.posterior);
          rec.estimates.push_back(split_joint(step.mmse));
        }
        break;
      }
      case Algorithm::pfbp: {
        auto beliefs = beliefs_from_prior(priors);
        auto rngs = agent_streams(rec.seed, sc.n_agents);
        PfbpOptions opts;
        opts.regularize = ac.regularize;
        opts.sigma_r_vel = ac.sigma_r_vel;
        opts.sigma_r_acc = ac.sigma_r_acc;
        opts.anneal_max = ac.anneal_max;
        for (int k = 1; k <= sc.K; ++k) {
          const auto t0 = Clock::now();
          auto step = pfbp_time_step(beliefs, snapshots[k - 1], scenario.anchors, mm, sc.sigma, schedule,
                                     ac.mp_iters, rngs, opts);
          rec.joint_ms.push_back(ms_since(t0));
          rec.agent_ms.push_back(1e3 * max_of(step.agent_seconds));
          rec.degenerate_events += step.degenerate_events;
          beliefs = std::move(step.beliefs);
          rec.estimates.push_back(std::move(step.mmse));
        }
        break;
      }
      case Algorithm::sirbp: {
        auto beliefs = beliefs_from_prior(priors);
        auto rngs = agent_streams(rec.seed, sc.n_agents);
        SirbpOptions opts;
        opts.regularize = ac.regularize;
        opts.sigma_r_vel = ac.sigma_r_vel;
        opts.sigma_r_acc = ac.sigma_r_acc;
        for (int k = 1; k <= sc.K; ++k) {
          const auto t0 = Clock::now();
          auto step = sirbp_time_step(beliefs, snapshots[k - 1], scenario.anchors, mm, sc.sigma, ac.mp_iters,
                                      rngs, opts);
          rec.joint_ms.push_back(ms_since(t0));
          rec.agent_ms.push_back(1e3 * max_of(step.agent_seconds));
          rec.degenerate_events += step.degenerate_events;
          beliefs = std::move(step.beliefs);
          rec.estimates.push_back(std::move(step.mmse));
        }
        break;
      }
    }

    double err = 0.0;
    const auto& last = rec.estimates.back();
    const auto& truth = rec.truths.back();
    bool finite = true;
    for (std::size_t i = 0; i < last.size(); ++i) {
      finite = finite && last[i].allFinite();
      err += (last[i].head<3>() - truth[i].head<3>()).norm();
    }
    rec.final_error_p = err / static_cast<double>(last.size());
    if (!finite) {
      rec.status = RunStatus::failed;
      rec.message = "non-finite estimate";
    } else if (!(rec.final_error_p <= cfg.divergence_threshold)) {
      rec.status = RunStatus::diverged;
    }
  } catch (const std::exception& e) {
    rec.status = RunStatus::failed;
    rec.message = e.what();
  }
  return rec;
}

void aggregate(ExperimentResult& result) {
  EstimateCube est_all, truth_all, est_conv, truth_conv;
  result.n_failed = 0;
  result.n_diverged = 0;
  std::vector<double> joint, agent;
  const std::size_t steps = static_cast<std::size_t>(result.config.scenario.K) + 1;
  std::vector<double> sq_p(steps, 0.0), sq_v(steps, 0.0), sq_a(steps, 0.0), cnt(steps, 0.0);

  for (const auto& r : result.runs) {
    for (std::size_t k = 0; k < r.pcrlb.size() && k < steps; ++k) {
      if (!r.pcrlb[k].available) continue;
      sq_p[k] += r.pcrlb[k].p * r.pcrlb[k].p;
      sq_v[k] += r.pcrlb[k].v * r.pcrlb[k].v;
      sq_a[k] += r.pcrlb[k].a * r.pcrlb[k].a;
      cnt[k] += 1.0;
    }
    if (r.status == RunStatus::failed) {
      ++result.n_failed;
      continue;
    }
    est_all.push_back(r.estimates);
    truth_all.push_back(r.truths);
    if (r.status == RunStatus::diverged) {
      ++result.n_diverged;
    } else {
      est_conv.push_back(r.estimates);
      truth_conv.push_back(r.truths);
    }
    joint.insert(joint.end(), r.joint_ms.begin(), r.joint_ms.end());
    agent.insert(agent.end(), r.agent_ms.begin(), r.agent_ms.end());
  }
  result.rmse = rmse_series(est_all, truth_all);
  result.rmse_converged = rmse_series(est_conv, truth_conv);
  result.joint_ms_per_step = mean_of(joint);
  result.agent_ms_per_step = mean_of(agent);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  result.pcrlb.assign(steps, BoundPoint{nan, nan, nan, false});
  for (std::size_t k = 0; k < steps; ++k) {
    if (cnt[k] == 0.0) continue;
    result.pcrlb[k] = {std::sqrt(sq_p[k] / cnt[k]), std::sqrt(sq_v[k] / cnt[k]), std::sqrt(sq_a[k] / cnt[k]), true};
  }
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned threads) {
  cfg.validate();
  ExperimentResult result;
  result.config = cfg;
  result.runs.resize(static_cast<std::size_t>(cfg.runs));

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(cfg.runs));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < cfg.runs; r = next++) result.runs[static_cast<std::size_t>(r)] = execute_run(cfg, r);
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  aggregate(result);
  return result;
}

void write_outputs(const ExperimentResult& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto& cfg = result.config;
  const std::size_t steps = static_cast<std::size_t>(cfg.scenario.K) + 1;

  write_rmse(out_dir / "rmse.csv", result.rmse, result.pcrlb, steps);
  write_rmse(out_dir / "rmse_converged.csv", result.rmse_converged, result.pcrlb, steps);

  {
    const auto path = out_dir / "cf.csv";
    auto out = open_out(path);
    out << "k,tau,cf,outage\n";
    auto errors_at = [&](std::size_t k, std::vector<double>& errs) {
      for (const auto& r : result.runs) {
        if (r.status == RunStatus::failed || k >= r.estimates.size()) continue;
        for (std::size_t i = 0; i < r.estimates[k].size(); ++i)
          errs.push_back((r.estimates[k][i].head<3>() - r.truths[k][i].head<3>()).norm());
      }
    };
    auto emit = [&](const std::string& label, const std::vector<double>& errs) {
      const auto cf = cumulative_frequency(errs, cfg.cf_thresholds);
      for (std::size_t t = 0; t < cf.size(); ++t)
        out << label << ',' << fmt(cfg.cf_thresholds[t]) << ',' << fmt(cf[t]) << ',' << fmt(1.0 - cf[t]) << '\n';
    };
    std::vector<double> all;
    for (std::size_t k = 1; k < steps; ++k) errors_at(k, all);
    emit("all", all);
    for (int k : cfg.resolved_cf_steps()) {
      std::vector<double> errs;
      errors_at(static_cast<std::size_t>(k), errs);
      emit(std::to_string(k), errs);
    }
    finish(out, path);
  }

  {
    const auto path = out_dir / "runtime.csv";
    auto out = open_out(path);
    const std::string algo(to_string(cfg.algorithm.algo));
    out << "algo,mode,ms_per_step\n";
    out << algo << ",joint," << fmt(result.joint_ms_per_step) << '\n';
    if (cfg.algorithm.algo != Algorithm::edh) out << algo << ",per_agent," << fmt(result.agent_ms_per_step) << '\n';
    finish(out, path);
  }

  {
    const auto path = out_dir / "runs.csv";
    auto out = open_out(path);
    out << "run,seed,status,final_error_p,degenerate_events,message\n";
    for (const auto& r : result.runs) {
      std::string msg = r.message;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      out << r.run << ',' << r.seed << ',' << to_string(r.status) << ',' << fmt(r.final_error_p) << ','
          << r.degenerate_events << ',' << msg << '\n';
    }
    finish(out, path);
  }

  {
    const auto path = out_dir / "manifest.yaml";
    auto out = open_out(path);
    out << "# coopflow run manifest: resolved configuration\n" << to_yaml(cfg);
    finish(out, path);
  }
}

}  // namespace coopflow
