#pragma once

// Centralized exact Daum-Huang particle flow filter over the stacked state of all agents.

#include <span>
#include <vector>

#include "coopflow/flow.hpp"
#include "coopflow/model.hpp"

namespace coopflow {

/// Stacked joint state; agent blocks in ascending agent index.
struct JointState {
  VectorXd stacked;

  int n_agents() const { return static_cast<int>(stacked.size() / kStateDim); }
  StateVector agent(int i) const { return stacked.segment<kStateDim>(i * kStateDim); }

  static JointState from_agents(std::span<const StateVector> agents);
};

/// One directed range measurement in the joint observation vector.
struct JointMeasurementRow {
  int agent = 0;
  bool to_anchor = true;
  int node = 0;  // anchor index or partner agent index
  double z = 0.0;
};

/// Rows in agent order: anchor links then agent links, each ascending. Every directed
/// measurement present in the snapshot contributes a row.
std::vector<JointMeasurementRow> joint_measurement_rows(const NetworkSnapshot& snapshot);

/// h(x) for the given rows.
VectorXd joint_measurement_function(std::span<const JointMeasurementRow> rows, const VectorXd& x,
                                    std::span<const Anchor> anchors);

/// H = dh/dx at `mean`, nu = h(mean) - H mean, R = sigma^2 I.
/// Throws SingularGeometry if a link's endpoints coincide at the linearization point.
LinearizedObservation build_joint_observation(const NetworkSnapshot& snapshot, const VectorXd& mean,
                                              std::span<const Anchor> anchors, double sigma);

/// Joint particles (9|C| x M, uniformly weighted) and covariance.
struct EdhState {
  MatrixXd particles;
  MatrixXd cov;
};

EdhState edh_initial_state(std::span<const AgentPrior> priors);

struct EdhStepResult {
  EdhState posterior;
  VectorXd mmse;
  MatrixXd predicted_cov;
  double effective_sample_size = 0.0;
};

/// Predict, flow, reweight, resample and update the covariance for one time step.
/// Throws DegenerateWeights if the importance weights collapse.
EdhStepResult edh_time_step(const EdhState& prev, const NetworkSnapshot& snapshot,
                            std::span<const Anchor> anchors, const MotionModel& mm, double sigma,
                            const FlowSchedule& schedule, Rng& rng);

/// Propagates every 9-D block of every particle through the motion model (particle-major draws).
MatrixXd propagate_particles(const MatrixXd& particles, const MotionModel& mm, Rng& rng);

/// Row-wise mean of the columns.
VectorXd sample_mean(const MatrixXd& particles);

}  // namespace coopflow
