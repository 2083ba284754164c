#include "coopflow/flow.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "coopflow/errors.hpp"

namespace coopflow {

FlowSchedule exponential_lambda_grid(int n_lambda, double ratio) {
  if (n_lambda < 1) throw InvalidParameter("n_lambda must be >= 1");
  if (!(ratio > 1.0) || !std::isfinite(ratio)) throw InvalidParameter("ratio must be > 1");

  FlowSchedule s;
  s.deltas.resize(static_cast<std::size_t>(n_lambda));
  double step = 1.0, total = 0.0;
  for (auto& d : s.deltas) {
    d = step;
    total += step;
    step *= ratio;
  }
  double acc = 0.0;
  for (auto& d : s.deltas) {
    d /= total;
    acc += d;
    s.lambdas.push_back(acc);
  }
  // Force the endpoint and keep the deltas consistent with it.
  s.lambdas.back() = 1.0;
  s.deltas.back() = 1.0 - (n_lambda > 1 ? s.lambdas[s.lambdas.size() - 2] : 0.0);
  return s;
}

FlowCoefficients flow_coefficients(const MatrixXd& P, const LinearizedObservation& obs,
                                   double lambda, const VectorXd& mean0, InversionBranch branch) {
  const Eigen::Index n = P.rows();
  const Eigen::Index m = obs.size();
  if (P.cols() != n || mean0.size() != n) throw InvalidParameter("covariance/mean dimension mismatch");
  if (obs.H.rows() != m || obs.r.size() != m || obs.nu.size() != m || (m > 0 && obs.H.cols() != n))
    throw InvalidParameter("observation dimension mismatch");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidParameter("lambda must lie in [0, 1]");

  FlowCoefficients out{MatrixXd::Zero(n, n), VectorXd::Zero(n)};
  if (m == 0) return out;
  if ((obs.r.array() <= 0.0).any()) throw InvalidParameter("measurement variances must be positive");

  const MatrixXd PHt = P * obs.H.transpose();
  if (branch == InversionBranch::automatic)
    branch = m > n ? InversionBranch::woodbury : InversionBranch::direct;

  if (branch == InversionBranch::direct) {
    MatrixXd S = lambda * obs.H * PHt;
    S.diagonal() += obs.r;
    Eigen::LLT<MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) throw NumericalError("innovation covariance not positive definite");
    out.A = -0.5 * llt.solve(PHt.transpose()).transpose() * obs.H;
  } else {
    // P H^T (lambda H P H^T + R)^-1 H = (I + lambda P Phi)^-1 P Phi with Phi = H^T R^-1 H.
    const MatrixXd Phi = obs.H.transpose() * obs.r.cwiseInverse().asDiagonal() * obs.H;
    const MatrixXd PPhi = P * Phi;
    MatrixXd M = lambda * PPhi;
    M.diagonal().array() += 1.0;
    Eigen::PartialPivLU<MatrixXd> lu(M);
    out.A = -0.5 * lu.solve(PPhi);
  }

  const VectorXd v = PHt * (obs.z - obs.nu).cwiseQuotient(obs.r);
  const VectorXd t = v + lambda * (out.A * v) + out.A * mean0;
  out.c = t + 2.0 * lambda * (out.A * t);
  if (!out.A.allFinite() || !out.c.allFinite()) throw NumericalError("non-finite flow coefficients");
  return out;
}

FlowResult flow_integrate(MatrixXd particles, VectorXd mean, const FlowSchedule& schedule,
                          const CoefficientProvider& provider, Eigen::Index moving_rows) {
  const Eigen::Index n = particles.rows();
  if (mean.size() != n) throw InvalidParameter("mean/particle dimension mismatch");
  const Eigen::Index rows = moving_rows < 0 ? n : moving_rows;
  if (rows > n) throw InvalidParameter("moving_rows exceeds state dimension");

  for (int l = 0; l < schedule.size(); ++l) {
    const FlowCoefficients fc = provider(schedule.lambdas[l], mean);
    const double delta = schedule.deltas[l];
    const auto A = fc.A.topRows(rows);
    const auto c = fc.c.head(rows);
    MatrixXd drift = A * particles;
    drift.colwise() += c;
    const VectorXd mean_drift = A * mean + c;
    particles.topRows(rows) += delta * drift;
    mean.head(rows) += delta * mean_drift;
  }
  return {std::move(particles), std::move(mean)};
}

VectorXd normalize_log_weights(const VectorXd& log_weights) {
  double max_lw = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights)
    if (!std::isnan(lw) && lw > max_lw) max_lw = lw;
  if (!std::isfinite(max_lw)) throw DegenerateWeights("no finite importance weight");

  VectorXd w(log_weights.size());
  for (Eigen::Index m = 0; m < w.size(); ++m)
    w[m] = std::isnan(log_weights[m]) ? 0.0 : std::exp(log_weights[m] - max_lw);
  const double total = w.sum();
  if (!(total > 0.0) || !std::isfinite(total)) throw DegenerateWeights("importance weights sum to zero");
  return w / total;
}

VectorXd invertible_flow_reweight(const MatrixXd& start, const MatrixXd& end,
                                  const LogDensity& transition_at_end,
                                  const LogDensity& likelihood_at_end,
                                  const LogDensity& proposal_at_start) {
  if (start.cols() != end.cols()) throw InvalidParameter("start/end particle counts differ");
  VectorXd lw(end.cols());
  for (Eigen::Index m = 0; m < end.cols(); ++m) {
    lw[m] = transition_at_end(m, end.col(m)) + likelihood_at_end(m, end.col(m)) -
            proposal_at_start(m, start.col(m));
  }
  return normalize_log_weights(lw);
}

GaussianDensity::GaussianDensity(VectorXd mean, const MatrixXd& cov) : mean_(std::move(mean)) {
  const auto n = mean_.size();
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    llt.compute(cov + 1e-9 * MatrixXd::Identity(n, n));
    if (llt.info() != Eigen::Success) throw NumericalError("covariance not positive definite");
  }
  chol_lower_ = llt.matrixL();
  log_norm_ = -0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi) -
              chol_lower_.diagonal().array().log().sum();
}

double GaussianDensity::log_pdf(const Eigen::Ref<const VectorXd>& x) const {
  const VectorXd y = chol_lower_.triangularView<Eigen::Lower>().solve(x - mean_);
  return log_norm_ - 0.5 * y.squaredNorm();
}

SigmaPointUpdate sigma_point_cov_update(const MatrixXd& P_pred, const VectorXd& mean,
                                        const ObservationFn& h, const MatrixXd& R) {
  const Eigen::Index n = P_pred.rows();
  const Eigen::Index m = R.rows();
  if (P_pred.cols() != n || mean.size() != n) throw InvalidParameter("covariance/mean dimension mismatch");

  SigmaPointUpdate out;
  if (m == 0) {
    out.P_post = P_pred;
    symmetrize(out.P_post);
    out.K = MatrixXd::Zero(n, 0);
    out.P_zz = MatrixXd::Zero(0, 0);
    return out;
  }

  MatrixXd P = P_pred;
  Eigen::LLT<MatrixXd> llt(P);
  if (llt.info() != Eigen::Success) {
    P.diagonal().array() += 1e-9;
    llt.compute(P);
    if (llt.info() != Eigen::Success) throw NumericalError("sigma-point Cholesky failed");
  }
  const MatrixXd S = std::sqrt(static_cast<double>(n)) * MatrixXd(llt.matrixL());

  // alpha = 1, beta = 2, kappa = 0: spread sqrt(n), W0m = 0, W0c = 2, Wi = 1 / (2n).
  const double wi = 0.5 / static_cast<double>(n);
  const double w0c = 2.0;

  const VectorXd z0 = h(mean);
  if (z0.size() != m) throw InvalidParameter("observation function size does not match R");
  MatrixXd Zp(m, n), Zm(m, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Zp.col(i) = h(mean + S.col(i));
    Zm.col(i) = h(mean - S.col(i));
  }
  const VectorXd zbar = wi * (Zp.rowwise().sum() + Zm.rowwise().sum());

  MatrixXd Pzz = w0c * (z0 - zbar) * (z0 - zbar).transpose();
  MatrixXd Pxz = MatrixXd::Zero(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const VectorXd dp = Zp.col(i) - zbar;
    const VectorXd dm = Zm.col(i) - zbar;
    Pzz.noalias() += wi * (dp * dp.transpose() + dm * dm.transpose());
    Pxz.noalias() += wi * S.col(i) * (dp - dm).transpose();
  }
  Pzz += R;
  symmetrize(Pzz);

  Eigen::LDLT<MatrixXd> ldlt(Pzz);
  if (ldlt.info() != Eigen::Success) throw NumericalError("measurement covariance factorization failed");
  out.K = ldlt.solve(Pxz.transpose()).transpose();
  out.P_zz = Pzz;
  out.P_post = P - out.K * Pzz * out.K.transpose();
  symmetrize(out.P_post);
  return out;
}

MatrixXd predict_covariance(const MatrixXd& P, const StateMatrix& F, const StateMatrix& Q) {
  const Eigen::Index n = P.rows();
  if (P.cols() != n || n % kStateDim != 0)
    throw InvalidParameter("covariance must be square over 9-D blocks");
  const Eigen::Index blocks = n / kStateDim;
  MatrixXd out(n, n);
  for (Eigen::Index a = 0; a < blocks; ++a) {
    for (Eigen::Index b = 0; b < blocks; ++b) {
      out.block<kStateDim, kStateDim>(a * kStateDim, b * kStateDim) =
          F * P.block<kStateDim, kStateDim>(a * kStateDim, b * kStateDim) * F.transpose();
    }
    out.block<kStateDim, kStateDim>(a * kStateDim, a * kStateDim) += Q;
  }
  symmetrize(out);
  return out;
}

std::vector<Eigen::Index> systematic_resample(const VectorXd& weights, Rng& rng) {
  const Eigen::Index M = weights.size();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(M));
  if (M == 0) return idx;
  const double offset = uniform01(rng);
  double cdf = weights[0];
  Eigen::Index i = 0;
  for (Eigen::Index m = 0; m < M; ++m) {
    const double u = (static_cast<double>(m) + offset) / static_cast<double>(M);
    while (i < M - 1 && cdf <= u) cdf += weights[++i];
    idx[static_cast<std::size_t>(m)] = i;
  }
  return idx;
}

MatrixXd gather_columns(const MatrixXd& samples, const std::vector<Eigen::Index>& indices) {
  MatrixXd out(samples.rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t m = 0; m < indices.size(); ++m) out.col(static_cast<Eigen::Index>(m)) = samples.col(indices[m]);
  return out;
}

StateMatrix regularization_kernel(double sigma_r_vel, double sigma_r_acc) {
  StateVector d;
  d << 0, 0, 0, Vec3::Constant(sigma_r_vel * sigma_r_vel), Vec3::Constant(sigma_r_acc * sigma_r_acc);
  return d.asDiagonal();
}

MatrixXd regularize(MatrixXd particles, double sigma_r_vel, double sigma_r_acc, Rng& rng) {
  if (particles.rows() != kStateDim) throw InvalidParameter("regularize expects 9-D particles");
  if (sigma_r_vel < 0.0 || sigma_r_acc < 0.0) throw InvalidParameter("kernel widths must be non-negative");
  for (Eigen::Index m = 0; m < particles.cols(); ++m) {
    for (int d = 3; d < 6; ++d) particles(d, m) += sigma_r_vel * standard_normal(rng);
    for (int d = 6; d < 9; ++d) particles(d, m) += sigma_r_acc * standard_normal(rng);
  }
  return particles;
}

StateMatrix regularize_cov(const StateMatrix& P, double sigma_r_vel, double sigma_r_acc) {
  return P + regularization_kernel(sigma_r_vel, sigma_r_acc);
}

}  // namespace coopflow
