#include "coopflow/sirbp.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

#include "coopflow/edh.hpp"
#include "coopflow/errors.hpp"
#include "coopflow/flow.hpp"

namespace coopflow {

namespace {

using Clock = std::chrono::steady_clock;
using Eigen::ArrayXd;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

StateMatrix sample_covariance(const MatrixXd& particles, const VectorXd& mean) {
  const MatrixXd centered = particles.colwise() - mean;
  return centered * centered.transpose() / static_cast<double>(particles.cols());
}

}  // namespace

VectorXd sirbp_log_weights(int agent, const MatrixXd& self_particles,
                           std::span<const MatrixXd> particles_by_agent,
                           const NetworkSnapshot& snapshot, std::span<const Anchor> anchors,
                           double sigma) {
  const Eigen::Index M = self_particles.cols();
  VectorXd lw = VectorXd::Zero(M);
  const auto i = static_cast<std::size_t>(agent);

  for (const auto& link : snapshot.anchor_links.at(i)) {
    const Vec3& pa = anchors[link.node].position;
    for (Eigen::Index m = 0; m < M; ++m)
      lw[m] += range_log_likelihood(link.z, range(self_particles.block<3, 1>(0, m), pa), sigma);
  }

  const double inv2s2 = 0.5 / (sigma * sigma);
  ArrayXd t;
  for (const auto& link : snapshot.agent_links[i]) {
    const MatrixXd& partner = particles_by_agent[static_cast<std::size_t>(link.node)];
    const Eigen::Index Q = partner.cols();
    if (Q == 0) throw InvalidParameter("partner has no particles");
    const ArrayXd px = partner.row(0).transpose().array();
    const ArrayXd py = partner.row(1).transpose().array();
    const ArrayXd pz = partner.row(2).transpose().array();
    std::optional<double> back;
    if (snapshot.mode == LinkMode::centralized) back = snapshot.agent_measurement(link.node, agent);
    const double log_q = std::log(static_cast<double>(Q));

    for (Eigen::Index m = 0; m < M; ++m) {
      const ArrayXd d = ((px - self_particles(0, m)).square() + (py - self_particles(1, m)).square() +
                         (pz - self_particles(2, m)).square())
                            .sqrt();
      t = -(link.z - d).square() * inv2s2;
      if (back) t -= (*back - d).square() * inv2s2;
      const double mx = t.maxCoeff();
      lw[m] += mx + std::log((t - mx).exp().sum()) - log_q;
    }
  }
  return lw;
}

VectorXd sirbp_weight_update(int agent, const MatrixXd& self_particles,
                             std::span<const MatrixXd> particles_by_agent,
                             const NetworkSnapshot& snapshot, std::span<const Anchor> anchors,
                             double sigma) {
  return normalize_log_weights(
      sirbp_log_weights(agent, self_particles, particles_by_agent, snapshot, anchors, sigma));
}

SirbpStepResult sirbp_time_step(std::span<const AgentBelief> beliefs, const NetworkSnapshot& snapshot,
                                std::span<const Anchor> anchors, const MotionModel& mm, double sigma,
                                int U, std::span<Rng> agent_rngs, const SirbpOptions& opts) {
  if (U < 1) throw InvalidParameter("at least one message-passing iteration is required");
  const std::size_t n = beliefs.size();
  if (agent_rngs.size() != n || static_cast<std::size_t>(snapshot.n_agents()) != n)
    throw InvalidParameter("agent counts differ");

  SirbpStepResult out;
  out.agent_seconds.assign(n, 0.0);
  std::vector<MatrixXd> predicted(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto t0 = Clock::now();
    predicted[i] = propagate_particles(beliefs[i].particles, mm, agent_rngs[i]);
    out.agent_seconds[i] += seconds_since(t0);
  }

  std::vector<MatrixXd> current = predicted;
  for (int u = 1; u <= U; ++u) {
    std::vector<MatrixXd> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto t0 = Clock::now();
      try {
        const VectorXd w = sirbp_weight_update(static_cast<int>(i), predicted[i], current, snapshot,
                                               anchors, sigma);
        next[i] = gather_columns(predicted[i], systematic_resample(w, agent_rngs[i]));
        if (opts.regularize)
          next[i] = regularize(std::move(next[i]), opts.sigma_r_vel, opts.sigma_r_acc, agent_rngs[i]);
      } catch (const DegenerateWeights&) {
        next[i] = predicted[i];
        ++out.degenerate_events;
      }
      out.agent_seconds[i] += seconds_since(t0);
    }
    current = std::move(next);
  }

  out.beliefs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const VectorXd mean = sample_mean(current[i]);
    out.mmse.push_back(mean);
    const StateMatrix cov = sample_covariance(current[i], mean);
    out.beliefs[i] = {beliefs[i].agent_id, std::move(current[i]), {mean, cov}};
  }
  return out;
}

}  // namespace coopflow
