#pragma once

// Numerical machinery shared by the EDH filter and PF-BP: pseudo-time schedule, Gaussian
// flow coefficients, Euler integration of the flow, invertible-flow reweighting, sigma-point
// covariance update, covariance prediction, resampling and regularization.

#include <functional>
#include <vector>

#include "coopflow/random.hpp"
#include "coopflow/types.hpp"

namespace coopflow {

/// Pseudo-time grid lambda_1 < ... < lambda_N = 1 with steps delta_l = lambda_l - lambda_{l-1}.
struct FlowSchedule {
  std::vector<double> lambdas;
  std::vector<double> deltas;

  int size() const { return static_cast<int>(lambdas.size()); }
};

/// Geometric step sizes delta_{l+1} = ratio * delta_l, smallest first, summing to one.
FlowSchedule exponential_lambda_grid(int n_lambda, double ratio = 1.2);

/// Drift zeta(x) = A x + c of the Gaussian (exact Daum-Huang) flow.
struct FlowCoefficients {
  MatrixXd A;
  VectorXd c;
};

/// Measurement model linearized at a point: z ~ H x + nu + noise, noise ~ N(0, diag(r)).
struct LinearizedObservation {
  MatrixXd H;
  VectorXd r;  // diagonal of R
  VectorXd z;
  VectorXd nu;

  Eigen::Index size() const { return z.size(); }
};

enum class InversionBranch {
  automatic,  // woodbury when there are more measurements than state dimensions
  direct,     // invert (lambda H P H^T + R), an m x m system
  woodbury,   // matrix-inversion-lemma form, an n x n system
};

/// A = -1/2 P H^T (lambda H P H^T + R)^-1 H
/// c = (I + 2 lambda A) [ (I + lambda A) P H^T R^-1 (z - nu) + A mean0 ]
FlowCoefficients flow_coefficients(const MatrixXd& P, const LinearizedObservation& obs,
                                   double lambda, const VectorXd& mean0,
                                   InversionBranch branch = InversionBranch::automatic);

/// Returns the coefficients at pseudo time `lambda`, linearized at `mean`.
using CoefficientProvider = std::function<FlowCoefficients(double lambda, const VectorXd& mean)>;

struct FlowResult {
  MatrixXd particles;
  VectorXd mean;
};

/// Euler integration x_l = x_{l-1} + (A x_{l-1} + c) delta_l for every particle (column) and
/// for the mean. Only the first `moving_rows` rows migrate; the remaining rows are held fixed
/// (partner states in a stacked neighborhood). moving_rows < 0 moves every row.
FlowResult flow_integrate(MatrixXd particles, VectorXd mean, const FlowSchedule& schedule,
                          const CoefficientProvider& provider, Eigen::Index moving_rows = -1);

/// Log density evaluated for particle index m at state x.
using LogDensity = std::function<double(Eigen::Index m, const Eigen::Ref<const VectorXd>& x)>;

/// Normalized importance weights from log-weights (max-subtracted before exponentiation).
/// Throws DegenerateWeights when no finite log-weight exists.
VectorXd normalize_log_weights(const VectorXd& log_weights);

/// w_m ~ transition(end_m) * likelihood(end_m) / proposal(start_m), normalized.
VectorXd invertible_flow_reweight(const MatrixXd& start, const MatrixXd& end,
                                  const LogDensity& transition_at_end,
                                  const LogDensity& likelihood_at_end,
                                  const LogDensity& proposal_at_start);

/// Multivariate normal log density with a cached Cholesky factor.
class GaussianDensity {
 public:
  GaussianDensity(VectorXd mean, const MatrixXd& cov);

  double log_pdf(const Eigen::Ref<const VectorXd>& x) const;

 private:
  VectorXd mean_;
  MatrixXd chol_lower_;
  double log_norm_ = 0.0;
};

using ObservationFn = std::function<VectorXd(const VectorXd&)>;

struct SigmaPointUpdate {
  MatrixXd P_post;
  MatrixXd K;
  MatrixXd P_zz;
};

/// Unscented update of the covariance around `mean` with 2n+1 sigma points
/// (alpha = 1, beta = 2, kappa = 0). P_post = P_pred - K P_zz K^T, symmetrized.
/// On a failed Cholesky of P_pred, retries once with 1e-9 I added, then throws NumericalError.
SigmaPointUpdate sigma_point_cov_update(const MatrixXd& P_pred, const VectorXd& mean,
                                        const ObservationFn& h, const MatrixXd& R);

/// (I (x) F) P (I (x) F)^T + I (x) Q for a covariance over stacked 9-D agent blocks.
MatrixXd predict_covariance(const MatrixXd& P, const StateMatrix& F, const StateMatrix& Q);

/// Systematic resampling: one uniform offset, M evenly spaced pointers into the CDF.
std::vector<Eigen::Index> systematic_resample(const VectorXd& weights, Rng& rng);

/// Selects the columns of `samples` named by `indices`.
MatrixXd gather_columns(const MatrixXd& samples, const std::vector<Eigen::Index>& indices);

/// Sigma_r = diag(0, 0, 0, s_v^2 I3, s_a^2 I3).
StateMatrix regularization_kernel(double sigma_r_vel, double sigma_r_acc);

/// Perturbs every 9-D particle by N(0, Sigma_r). Position rows are never touched.
MatrixXd regularize(MatrixXd particles, double sigma_r_vel, double sigma_r_acc, Rng& rng);

/// P + Sigma_r.
StateMatrix regularize_cov(const StateMatrix& P, double sigma_r_vel, double sigma_r_acc);

}  // namespace coopflow
