#include "coopflow/pfbp.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "coopflow/edh.hpp"
#include "coopflow/errors.hpp"

namespace coopflow {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::vector<AgentBelief> beliefs_from_prior(std::span<const AgentPrior> priors) {
  std::vector<AgentBelief> out;
  out.reserve(priors.size());
  for (std::size_t i = 0; i < priors.size(); ++i)
    out.push_back({static_cast<int>(i), priors[i].particles, priors[i].belief});
  return out;
}

double anneal_inflation(int u, int U, double anneal_max) {
  if (U <= 1 || anneal_max == 0.0) return 0.0;
  if (u < 1 || u > U) throw InvalidParameter("iteration index out of range");
  return anneal_max * (std::exp2(U - u) - 1.0) / (std::exp2(U - 1) - 1.0);
}

std::vector<NeighborhoodRow> neighborhood_rows(int agent, const NetworkSnapshot& snapshot) {
  std::vector<NeighborhoodRow> rows;
  for (const auto& m : snapshot.anchor_links.at(static_cast<std::size_t>(agent)))
    rows.push_back({true, m.node, 0, m.z});
  int block = 1;
  for (const auto& m : snapshot.agent_links[static_cast<std::size_t>(agent)]) {
    rows.push_back({false, m.node, block, m.z});
    if (snapshot.mode == LinkMode::centralized) {
      if (auto back = snapshot.agent_measurement(m.node, agent)) rows.push_back({false, m.node, block, *back});
    }
    ++block;
  }
  return rows;
}

namespace {

Vec3 row_partner(const NeighborhoodRow& row, const VectorXd& stacked, std::span<const Anchor> anchors) {
  return row.to_anchor ? anchors[row.node].position : Vec3(stacked.segment<3>(row.block * kStateDim));
}

}  // namespace

VectorXd neighborhood_measurement_function(std::span<const NeighborhoodRow> rows,
                                           const VectorXd& stacked, std::span<const Anchor> anchors) {
  VectorXd h(static_cast<Eigen::Index>(rows.size()));
  const Vec3 self = stacked.head<3>();
  for (std::size_t r = 0; r < rows.size(); ++r)
    h[static_cast<Eigen::Index>(r)] = range(self, row_partner(rows[r], stacked, anchors));
  return h;
}

LinearizedObservation neighborhood_observation(std::span<const NeighborhoodRow> rows,
                                               const VectorXd& stacked,
                                               std::span<const Anchor> anchors, double sigma) {
  const auto m = static_cast<Eigen::Index>(rows.size());
  LinearizedObservation obs;
  obs.H = MatrixXd::Zero(m, stacked.size());
  obs.r = VectorXd::Constant(m, sigma * sigma);
  obs.z.resize(m);
  const Vec3 self = stacked.head<3>();
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    obs.z[r] = row.z;
    const auto grad = range_jacobian_block(self, row_partner(row, stacked, anchors));
    obs.H.block<1, kStateDim>(r, 0) = grad;
    if (!row.to_anchor) obs.H.block<1, kStateDim>(r, row.block * kStateDim) = -grad;
  }
  obs.nu = neighborhood_measurement_function(rows, stacked, anchors) - obs.H * stacked;
  return obs;
}

NeighborhoodStack build_neighborhood(int agent, const AgentBelief& predicted_self,
                                     std::span<const AgentBelief> previous,
                                     const NetworkSnapshot& snapshot,
                                     std::span<const Anchor> anchors, double sigma, double anneal) {
  NeighborhoodStack st;
  st.members.push_back(agent);
  for (const auto& m : snapshot.agent_links.at(static_cast<std::size_t>(agent))) st.members.push_back(m.node);

  const auto n = static_cast<Eigen::Index>(st.members.size()) * kStateDim;
  st.mean.resize(n);
  st.P_tilde = MatrixXd::Zero(n, n);
  st.mean.head<kStateDim>() = sample_mean(predicted_self.particles);
  st.P_tilde.topLeftCorner<kStateDim, kStateDim>() = predicted_self.summary.cov;
  for (std::size_t b = 1; b < st.members.size(); ++b) {
    const auto& partner = previous[static_cast<std::size_t>(st.members[b])];
    const auto off = static_cast<Eigen::Index>(b) * kStateDim;
    st.mean.segment<kStateDim>(off) = sample_mean(partner.particles);
    st.P_tilde.block<kStateDim, kStateDim>(off, off) =
        partner.summary.cov + anneal * StateMatrix::Identity();
  }
  st.obs = neighborhood_observation(neighborhood_rows(agent, snapshot), st.mean, anchors, sigma);
  return st;
}

AgentUpdate pfbp_agent_update(int agent, const AgentBelief& predicted_self,
                              std::span<const AgentBelief> previous,
                              const NetworkSnapshot& snapshot, std::span<const Anchor> anchors,
                              double sigma, const FlowSchedule& schedule, Rng& rng,
                              const PfbpOptions& opts, double anneal) {
  const MatrixXd& self = predicted_self.particles;
  const Eigen::Index M = self.cols();
  const NeighborhoodStack st =
      build_neighborhood(agent, predicted_self, previous, snapshot, anchors, sigma, anneal);
  const auto rows = neighborhood_rows(agent, snapshot);
  const auto n = st.mean.size();

  // Particle m of the agent is paired with particle m of every partner.
  MatrixXd stacked(n, M);
  stacked.topRows<kStateDim>() = self;
  for (std::size_t b = 1; b < st.members.size(); ++b) {
    const auto& partner = previous[static_cast<std::size_t>(st.members[b])].particles;
    if (partner.cols() != M) throw InvalidParameter("partner particle count differs");
    stacked.middleRows<kStateDim>(static_cast<Eigen::Index>(b) * kStateDim) = partner;
  }

  const VectorXd& beta0 = st.mean;
  auto provider = [&](double lambda, const VectorXd& mean) {
    return flow_coefficients(st.P_tilde, neighborhood_observation(rows, mean, anchors, sigma), lambda,
                             beta0);
  };
  const FlowResult flow = flow_integrate(stacked, beta0, schedule, provider, kStateDim);

  const VectorXd self_mean0 = beta0.head<kStateDim>();
  const GaussianDensity prior(self_mean0, MatrixXd(predicted_self.summary.cov));
  auto prior_term = [&](Eigen::Index, const Eigen::Ref<const VectorXd>& x) {
    return prior.log_pdf(x.head<kStateDim>());
  };
  auto likelihood = [&](Eigen::Index m, const Eigen::Ref<const VectorXd>& x) {
    const Vec3 pi = x.head<3>();
    double ll = 0.0;
    for (const auto& row : rows) {
      const Vec3 pj = row.to_anchor ? anchors[row.node].position
                                    : Vec3(stacked.block<3, 1>(row.block * kStateDim, m));
      ll += range_log_likelihood(row.z, range(pi, pj), sigma);
    }
    return ll;
  };

  AgentUpdate out;
  VectorXd w;
  try {
    w = invertible_flow_reweight(stacked, flow.particles, prior_term, likelihood, prior_term);
  } catch (const DegenerateWeights&) {
    out.belief = predicted_self;
    out.belief.agent_id = agent;
    out.degenerate = true;
    return out;
  }
  out.effective_sample_size = 1.0 / w.squaredNorm();

  MatrixXd chi = gather_columns(flow.particles.topRows<kStateDim>(), systematic_resample(w, rng));
  VectorXd update_mean = beta0;
  update_mean.head<kStateDim>() = sample_mean(chi);

  StateMatrix P = predicted_self.summary.cov;
  if (!rows.empty()) {
    const auto m = static_cast<Eigen::Index>(rows.size());
    auto h = [&](const VectorXd& x) { return neighborhood_measurement_function(rows, x, anchors); };
    const SigmaPointUpdate up =
        sigma_point_cov_update(st.P_tilde, update_mean, h, sigma * sigma * MatrixXd::Identity(m, m));
    P = up.P_post.topLeftCorner<kStateDim, kStateDim>();
  }

  out.belief.agent_id = agent;
  out.belief.summary.mean = update_mean.head<kStateDim>();
  if (opts.regularize) {
    chi = regularize(std::move(chi), opts.sigma_r_vel, opts.sigma_r_acc, rng);
    P = regularize_cov(P, opts.sigma_r_vel, opts.sigma_r_acc);
  }
  out.belief.particles = std::move(chi);
  out.belief.summary.cov = P;
  return out;
}

MpIterationResult pfbp_mp_iteration(std::span<const AgentBelief> predicted,
                                    std::span<const AgentBelief> previous,
                                    const NetworkSnapshot& snapshot, std::span<const Anchor> anchors,
                                    double sigma, const FlowSchedule& schedule,
                                    std::span<Rng> agent_rngs, const PfbpOptions& opts, int u, int U,
                                    std::span<const int> order) {
  const std::size_t n = predicted.size();
  if (previous.size() != n || agent_rngs.size() != n || static_cast<std::size_t>(snapshot.n_agents()) != n)
    throw InvalidParameter("agent counts differ");
  if (u < 1) throw InvalidParameter("iteration index must be >= 1");

  std::vector<int> seq(order.begin(), order.end());
  if (seq.empty()) {
    seq.resize(n);
    std::iota(seq.begin(), seq.end(), 0);
  }
  const double anneal = anneal_inflation(u, U, opts.anneal_max);

  MpIterationResult res;
  res.beliefs.resize(n);
  res.degenerate.assign(n, false);
  res.agent_seconds.assign(n, 0.0);
  for (int i : seq) {
    const auto t0 = Clock::now();
    AgentUpdate up = pfbp_agent_update(i, predicted[i], previous, snapshot, anchors, sigma, schedule,
                                       agent_rngs[i], opts, anneal);
    res.beliefs[i] = std::move(up.belief);
    res.degenerate[i] = up.degenerate;
    res.agent_seconds[i] = seconds_since(t0);
  }
  return res;
}

std::vector<AgentBelief> pfbp_predict(std::span<const AgentBelief> beliefs, const MotionModel& mm,
                                      std::span<Rng> agent_rngs) {
  std::vector<AgentBelief> out(beliefs.size());
  for (std::size_t i = 0; i < beliefs.size(); ++i) {
    out[i].agent_id = beliefs[i].agent_id;
    out[i].particles = propagate_particles(beliefs[i].particles, mm, agent_rngs[i]);
    out[i].summary.mean = sample_mean(out[i].particles);
    out[i].summary.cov = predict_covariance(MatrixXd(beliefs[i].summary.cov), mm.F, mm.Q);
  }
  return out;
}

PfbpStepResult pfbp_time_step(std::span<const AgentBelief> beliefs, const NetworkSnapshot& snapshot,
                              std::span<const Anchor> anchors, const MotionModel& mm, double sigma,
                              const FlowSchedule& schedule, int U, std::span<Rng> agent_rngs,
                              const PfbpOptions& opts) {
  if (U < 1) throw InvalidParameter("at least one message-passing iteration is required");
  const std::size_t n = beliefs.size();
  if (agent_rngs.size() != n) throw InvalidParameter("one RNG stream per agent is required");

  PfbpStepResult out;
  out.agent_seconds.assign(n, 0.0);
  out.predicted.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto t0 = Clock::now();
    auto p = pfbp_predict(beliefs.subspan(i, 1), mm, agent_rngs.subspan(i, 1));
    out.predicted.push_back(std::move(p.front()));
    out.agent_seconds[i] += seconds_since(t0);
  }

  std::vector<AgentBelief> current = out.predicted;
  for (int u = 1; u <= U; ++u) {
    MpIterationResult it = pfbp_mp_iteration(out.predicted, current, snapshot, anchors, sigma, schedule,
                                             agent_rngs, opts, u, U);
    for (std::size_t i = 0; i < n; ++i) {
      out.agent_seconds[i] += it.agent_seconds[i];
      if (it.degenerate[i]) ++out.degenerate_events;
    }
    current = std::move(it.beliefs);
  }

  out.mmse.reserve(n);
  for (const auto& b : current) out.mmse.push_back(b.summary.mean);
  out.beliefs = std::move(current);
  return out;
}

}  // namespace coopflow
