#pragma once

// Distributed particle-flow belief propagation. Each agent flows its predicted particles over
// a stacked state made of itself and its cooperative partners (whose beliefs come from the
// previous message-passing iteration), reweights, resamples, and summarizes its belief by a
// sample mean and an unscented covariance update.

#include <span>
#include <vector>

#include "coopflow/flow.hpp"
#include "coopflow/model.hpp"

namespace coopflow {

/// Particle representation (9 x M, uniform weights) plus the Gaussian summary that is broadcast.
struct AgentBelief {
  int agent_id = 0;
  MatrixXd particles;
  GaussianBelief summary;
};

std::vector<AgentBelief> beliefs_from_prior(std::span<const AgentPrior> priors);

struct PfbpOptions {
  bool regularize = false;
  double sigma_r_vel = 0.15;
  double sigma_r_acc = 0.15;
  // Partner covariance inflation at the first iteration; decays to 0 at the last one.
  double anneal_max = 0.0;
};

/// Inflation alpha(u) for u in 1..U: anneal_max * (2^(U-u) - 1) / (2^(U-1) - 1), so that
/// alpha(1) = anneal_max and alpha(U) = 0. Zero when U == 1.
double anneal_inflation(int u, int U, double anneal_max);

/// Self plus partners, in link order.
struct NeighborhoodStack {
  std::vector<int> members;
  VectorXd mean;      // beta-bar: [self; partners ascending]
  MatrixXd P_tilde;   // blockdiag(P_self_pred, P_j + alpha I, ...)
  LinearizedObservation obs;
};

/// One neighborhood measurement row: anchor rows first, then per partner z_{i,j}
/// (followed by z_{j,i} in centralized mode).
struct NeighborhoodRow {
  bool to_anchor = true;
  int node = 0;   // anchor index, or partner agent index
  int block = 0;  // stacked block of the partner (0 for anchor rows)
  double z = 0.0;
};

std::vector<NeighborhoodRow> neighborhood_rows(int agent, const NetworkSnapshot& snapshot);

VectorXd neighborhood_measurement_function(std::span<const NeighborhoodRow> rows,
                                           const VectorXd& stacked, std::span<const Anchor> anchors);

/// H_i, nu_i and R_i at a stacked linearization point.
LinearizedObservation neighborhood_observation(std::span<const NeighborhoodRow> rows,
                                               const VectorXd& stacked,
                                               std::span<const Anchor> anchors, double sigma);

/// Stack for agent i. `previous` is indexed by agent id and supplies the partner beliefs.
NeighborhoodStack build_neighborhood(int agent, const AgentBelief& predicted_self,
                                     std::span<const AgentBelief> previous,
                                     const NetworkSnapshot& snapshot,
                                     std::span<const Anchor> anchors, double sigma, double anneal);

struct AgentUpdate {
  AgentBelief belief;
  bool degenerate = false;
  double effective_sample_size = 0.0;
};

/// New belief of one agent for one message-passing iteration.
AgentUpdate pfbp_agent_update(int agent, const AgentBelief& predicted_self,
                              std::span<const AgentBelief> previous,
                              const NetworkSnapshot& snapshot, std::span<const Anchor> anchors,
                              double sigma, const FlowSchedule& schedule, Rng& rng,
                              const PfbpOptions& opts, double anneal);

struct MpIterationResult {
  std::vector<AgentBelief> beliefs;
  std::vector<bool> degenerate;
  std::vector<double> agent_seconds;
};

/// Updates every agent from iteration u-1 state. Agents read only `previous`, so the result
/// does not depend on `order` (an empty order means ascending).
MpIterationResult pfbp_mp_iteration(std::span<const AgentBelief> predicted,
                                    std::span<const AgentBelief> previous,
                                    const NetworkSnapshot& snapshot, std::span<const Anchor> anchors,
                                    double sigma, const FlowSchedule& schedule,
                                    std::span<Rng> agent_rngs, const PfbpOptions& opts, int u, int U,
                                    std::span<const int> order = {});

/// Motion-model prediction of particles and covariance for every agent.
std::vector<AgentBelief> pfbp_predict(std::span<const AgentBelief> beliefs, const MotionModel& mm,
                                      std::span<Rng> agent_rngs);

struct PfbpStepResult {
  std::vector<AgentBelief> beliefs;
  std::vector<StateVector> mmse;
  std::vector<AgentBelief> predicted;
  int degenerate_events = 0;
  std::vector<double> agent_seconds;  // per-agent compute for this step
};

/// Prediction followed by U message-passing iterations; every iteration restarts the flow
/// from the predicted particles.
PfbpStepResult pfbp_time_step(std::span<const AgentBelief> beliefs, const NetworkSnapshot& snapshot,
                              std::span<const Anchor> anchors, const MotionModel& mm, double sigma,
                              const FlowSchedule& schedule, int U, std::span<Rng> agent_rngs,
                              const PfbpOptions& opts);

}  // namespace coopflow
