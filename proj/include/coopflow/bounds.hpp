#pragma once

// Recursive posterior Cramer-Rao lower bound along the true trajectories.

#include <span>
#include <vector>

#include "coopflow/model.hpp"

namespace coopflow {

/// RMSE floors at one time step. `available` is false when the information matrix is singular.
struct BoundPoint {
  double p = 0.0;
  double v = 0.0;
  double a = 0.0;
  bool available = true;
};

/// J_k = (W + F J_{k-1}^-1 F^T)^-1 + H^T diag(r)^-1 H. Throws NumericalError if a factorization fails.
MatrixXd pcrlb_information_step(const MatrixXd& J_prev, const MatrixXd& F, const MatrixXd& W,
                                const MatrixXd& H, const VectorXd& r);

/// Joint measurement Jacobian at the true positions: one row per directed link (both directions
/// of every agent pair, plus every agent-anchor link).
MatrixXd true_state_jacobian(std::span<const Vec3> positions, std::span<const Anchor> anchors,
                             const LinkSets& links);

/// Floors from an information matrix: sqrt of the agent-averaged trace of each 3x3 block of J^-1.
BoundPoint bound_from_information(const MatrixXd& J);

/// Bounds for k = 0..K. links[k-1] holds the link sets at time k (k = 1..K).
std::vector<BoundPoint> pcrlb_sequence(const Scenario& scenario, std::span<const LinkSets> links,
                                       double sigma, const MotionModel& mm,
                                       std::span<const StateMatrix> prior_covs);

}  // namespace coopflow
