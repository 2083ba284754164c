#pragma once

// Bootstrap particle BP baseline: predicted particles weighted by the product of incoming
// messages, systematic resampling, optional regularization.

#include <span>
#include <vector>

#include "coopflow/model.hpp"
#include "coopflow/pfbp.hpp"

namespace coopflow {

struct SirbpOptions {
  bool regularize = false;
  double sigma_r_vel = 0.15;
  double sigma_r_acc = 0.15;
};

/// Unnormalized log-weights of agent i's particles: anchor likelihoods plus, per partner j,
/// log (1/M) sum_q N(z_{i,j}; |p_j^q - p_i^m|, sigma^2) (times the reverse-direction factor in
/// centralized mode). O(M^2) per cooperative link.
VectorXd sirbp_log_weights(int agent, const MatrixXd& self_particles,
                           std::span<const MatrixXd> particles_by_agent,
                           const NetworkSnapshot& snapshot, std::span<const Anchor> anchors,
                           double sigma);

/// Normalized weights; throws DegenerateWeights.
VectorXd sirbp_weight_update(int agent, const MatrixXd& self_particles,
                             std::span<const MatrixXd> particles_by_agent,
                             const NetworkSnapshot& snapshot, std::span<const Anchor> anchors,
                             double sigma);

struct SirbpStepResult {
  std::vector<AgentBelief> beliefs;
  std::vector<StateVector> mmse;
  int degenerate_events = 0;
  std::vector<double> agent_seconds;
};

/// Bootstrap prediction then U iterations of weighting and resampling; each iteration
/// reweights the predicted particles against partner particles from the previous iteration.
/// Belief summaries hold the sample mean and sample covariance.
SirbpStepResult sirbp_time_step(std::span<const AgentBelief> beliefs, const NetworkSnapshot& snapshot,
                                std::span<const Anchor> anchors, const MotionModel& mm, double sigma,
                                int U, std::span<Rng> agent_rngs, const SirbpOptions& opts);

}  // namespace coopflow
