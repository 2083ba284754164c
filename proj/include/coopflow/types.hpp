#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <span>

namespace coopflow {

inline constexpr int kStateDim = 9;
inline constexpr int kPosDim = 3;

using Vec3 = Eigen::Vector3d;
using StateVector = Eigen::Matrix<double, kStateDim, 1>;
using StateMatrix = Eigen::Matrix<double, kStateDim, kStateDim>;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Kinematic state of one agent. Flattened order is [position; velocity; acceleration].
struct AgentState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();

  StateVector flat() const {
    StateVector x;
    x << position, velocity, acceleration;
    return x;
  }

  static AgentState from_flat(const Eigen::Ref<const StateVector>& x) {
    return {x.segment<3>(0), x.segment<3>(3), x.segment<3>(6)};
  }

  bool operator==(const AgentState&) const = default;
};

struct Anchor {
  Vec3 position = Vec3::Zero();
};

/// Mean and covariance summary of an agent belief; this is what PF-BP broadcasts.
struct GaussianBelief {
  StateVector mean = StateVector::Zero();
  StateMatrix cov = StateMatrix::Zero();
};

/// Number of doubles in a serialized GaussianBelief: 9 means + 45 upper-triangular entries.
inline constexpr std::size_t kBeliefWireSize = kStateDim + kStateDim * (kStateDim + 1) / 2;

/// Packs the mean followed by the row-major upper triangle (i <= j) of the covariance.
std::array<double, kBeliefWireSize> serialize_belief(const GaussianBelief& belief);

/// Inverse of serialize_belief; the lower triangle is mirrored from the upper one.
GaussianBelief deserialize_belief(std::span<const double, kBeliefWireSize> wire);

/// M weighted samples. `samples` holds one particle per column (dim x M).
struct ParticleSet {
  MatrixXd samples;
  VectorXd weights;

  Eigen::Index size() const { return samples.cols(); }
  Eigen::Index dim() const { return samples.rows(); }

  /// Equally weighted set over the given columns.
  static ParticleSet uniform(MatrixXd samples);

  VectorXd mean() const;
};

/// Enforces P = (P + P^T) / 2 in place.
template <typename Derived>
void symmetrize(Eigen::MatrixBase<Derived>& m) {
  m = (0.5 * (m + m.transpose())).eval();
}

}  // namespace coopflow
