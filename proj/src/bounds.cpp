#include "coopflow/bounds.hpp"

#include <cmath>
#include <limits>

#include "coopflow/errors.hpp"

namespace coopflow {

namespace {

// Inverse of a symmetric positive definite matrix, or nullopt-like empty matrix on failure.
bool spd_inverse(const MatrixXd& J, MatrixXd& out) {
  Eigen::LLT<MatrixXd> llt(J);
  if (llt.info() != Eigen::Success) return false;
  out = llt.solve(MatrixXd::Identity(J.rows(), J.cols()));
  symmetrize(out);
  return out.allFinite();
}

MatrixXd block_diagonal(const StateMatrix& block, Eigen::Index count) {
  MatrixXd out = MatrixXd::Zero(count * kStateDim, count * kStateDim);
  for (Eigen::Index i = 0; i < count; ++i) out.block<kStateDim, kStateDim>(i * kStateDim, i * kStateDim) = block;
  return out;
}

}  // namespace

MatrixXd pcrlb_information_step(const MatrixXd& J_prev, const MatrixXd& F, const MatrixXd& W,
                                const MatrixXd& H, const VectorXd& r) {
  MatrixXd J_prev_inv;
  if (!spd_inverse(J_prev, J_prev_inv)) throw NumericalError("singular information matrix");
  MatrixXd pred = F * J_prev_inv * F.transpose() + W;
  symmetrize(pred);
  MatrixXd J;
  if (!spd_inverse(pred, J)) throw NumericalError("singular predicted covariance");
  if (H.rows() > 0) J += H.transpose() * r.cwiseInverse().asDiagonal() * H;
  symmetrize(J);
  return J;
}

MatrixXd true_state_jacobian(std::span<const Vec3> positions, std::span<const Anchor> anchors,
                             const LinkSets& links) {
  const auto n = static_cast<Eigen::Index>(positions.size());
  Eigen::Index rows = 0;
  for (Eigen::Index i = 0; i < n; ++i) rows += static_cast<Eigen::Index>(links.anchors[i].size() + links.agents[i].size());
  MatrixXd H = MatrixXd::Zero(rows, n * kStateDim);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int a : links.anchors[i])
      H.block<1, kStateDim>(r++, i * kStateDim) = range_jacobian_block(positions[i], anchors[a].position);
    for (int j : links.agents[i]) {
      const auto g = range_jacobian_block(positions[i], positions[j]);
      H.block<1, kStateDim>(r, i * kStateDim) = g;
      H.block<1, kStateDim>(r, j * kStateDim) = -g;
      ++r;
    }
  }
  return H;
}

BoundPoint bound_from_information(const MatrixXd& J) {
  MatrixXd C;
  if (!spd_inverse(J, C)) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan, false};
  }
  const Eigen::Index n = J.rows() / kStateDim;
  double sp = 0.0, sv = 0.0, sa = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto blk = C.block<kStateDim, kStateDim>(i * kStateDim, i * kStateDim);
    sp += blk.block<3, 3>(0, 0).trace();
    sv += blk.block<3, 3>(3, 3).trace();
    sa += blk.block<3, 3>(6, 6).trace();
  }
  const double inv = 1.0 / static_cast<double>(n);
  return {std::sqrt(sp * inv), std::sqrt(sv * inv), std::sqrt(sa * inv), true};
}

std::vector<BoundPoint> pcrlb_sequence(const Scenario& scenario, std::span<const LinkSets> links,
                                       double sigma, const MotionModel& mm,
                                       std::span<const StateMatrix> prior_covs) {
  const auto n = static_cast<Eigen::Index>(prior_covs.size());
  const int K = static_cast<int>(scenario.trajectories.size()) - 1;
  if (static_cast<int>(links.size()) < K) throw InvalidParameter("missing link sets");

  MatrixXd J = MatrixXd::Zero(n * kStateDim, n * kStateDim);
  for (Eigen::Index i = 0; i < n; ++i) {
    MatrixXd inv;
    if (!spd_inverse(MatrixXd(prior_covs[i]), inv)) throw NumericalError("prior covariance is singular");
    J.block<kStateDim, kStateDim>(i * kStateDim, i * kStateDim) = inv;
  }
  const MatrixXd F = block_diagonal(mm.F, n);
  const MatrixXd W = block_diagonal(mm.Q, n);

  std::vector<BoundPoint> out;
  out.push_back(bound_from_information(J));
  bool ok = out.back().available;
  for (int k = 1; k <= K; ++k) {
    if (ok) {
      const auto pos = scenario.positions_at(k);
      const MatrixXd H = true_state_jacobian(pos, scenario.anchors, links[k - 1]);
      try {
        J = pcrlb_information_step(J, F, W, H, VectorXd::Constant(H.rows(), sigma * sigma));
        out.push_back(bound_from_information(J));
        ok = out.back().available;
        continue;
      } catch (const NumericalError&) {
        ok = false;
      }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.push_back({nan, nan, nan, false});
  }
  return out;
}

}  // namespace coopflow
