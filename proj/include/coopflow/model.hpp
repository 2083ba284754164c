#pragma once

// Motion and measurement models, scenario generation, connectivity.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "coopflow/random.hpp"
#include "coopflow/types.hpp"

namespace coopflow {

/// Minimum node separation [m] below which the range Jacobian is treated as singular.
inline constexpr double kCoincidentEpsilon = 1e-9;

struct ScenarioConfig {
  int n_agents = 5;
  int n_anchors = 9;
  Vec3 volume = Vec3(20.0, 20.0, 20.0);
  double r_max = 18.0;  // +inf means fully connected
  double sigma = 0.1;
  double sigma_a = 0.15;
  double dt = 0.1;
  int K = 40;
  std::uint64_t seed = 0;
  double prior_sigma_p = 20.0;
  double prior_sigma_a_factor = 10.0;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;

  bool operator==(const ScenarioConfig&) const = default;
};

/// Constant-acceleration model x' = F x + G u, u ~ N(0, sigma_a^2 I3).
struct MotionModel {
  double dt = 0.0;
  double sigma_a = 0.0;
  StateMatrix F = StateMatrix::Identity();
  Eigen::Matrix<double, kStateDim, 3> G = Eigen::Matrix<double, kStateDim, 3>::Zero();
  StateMatrix Q = StateMatrix::Zero();
};

MotionModel build_motion_model(double dt, double sigma_a);

AgentState propagate_state(const AgentState& x, const MotionModel& mm, const Vec3& u);

inline StateVector propagate_state(const StateVector& x, const MotionModel& mm, const Vec3& u) {
  return mm.F * x + mm.G * u;
}

/// Euclidean distance between two points.
double range(const Vec3& p_i, const Vec3& p_j);

/// d range(p_i, p_j) / d x_i as a 1x9 row (velocity and acceleration columns are zero).
/// Throws SingularGeometry when the points are closer than kCoincidentEpsilon.
Eigen::Matrix<double, 1, kStateDim> range_jacobian_block(const Vec3& p_i, const Vec3& p_j);

/// One realization: anchors plus true states for k = 0..K, indexed [k][agent].
struct Scenario {
  std::vector<Anchor> anchors;
  std::vector<std::vector<AgentState>> trajectories;

  std::vector<Vec3> positions_at(int k) const;
};

/// Eight volume corners (x fastest) followed by the volume center; the first n_anchors are used.
std::vector<Anchor> place_anchors(const ScenarioConfig& cfg);

/// Trajectories for cfg.K steps. Each agent draws from its own substream of `stream_seed`.
Scenario generate_scenario(const ScenarioConfig& cfg, std::uint64_t stream_seed);

/// Per-agent link sets, each sorted by ascending node index.
struct LinkSets {
  std::vector<std::vector<int>> anchors;
  std::vector<std::vector<int>> agents;
};

LinkSets build_connectivity(std::span<const Vec3> positions, std::span<const Anchor> anchors,
                            double r_max);

enum class LinkMode { distributed, centralized };

struct Measurement {
  int node = 0;
  double z = 0.0;
};

/// Connectivity and range measurements at one time step. Every ordered pair (i, j) of
/// linked agents carries its own draw z_{i,j}; `mode` decides which ones a per-agent
/// update may use (distributed: only its own; centralized: both directions).
struct NetworkSnapshot {
  int time_index = 0;
  LinkMode mode = LinkMode::distributed;
  std::vector<std::vector<Measurement>> anchor_links;
  std::vector<std::vector<Measurement>> agent_links;

  int n_agents() const { return static_cast<int>(anchor_links.size()); }

  /// z_{i,j} if j is a cooperative partner of i.
  std::optional<double> agent_measurement(int i, int j) const;

  /// Total number of directed measurements.
  std::size_t measurement_count() const;

  /// Snapshot with the given number of agents and no links.
  static NetworkSnapshot empty(int n_agents, int time_index = 0,
                               LinkMode mode = LinkMode::distributed);
};

NetworkSnapshot simulate_measurements(std::span<const Vec3> positions,
                                      std::span<const Anchor> anchors, const LinkSets& links,
                                      double sigma, Rng& rng, LinkMode mode, int time_index = 0);

/// P0 = diag(sigma_p^2 I3, dt^2 sigma_init^2 I3, sigma_init^2 I3), sigma_init = factor * sigma_a.
StateMatrix prior_covariance(const ScenarioConfig& cfg);

enum class PriorSampling {
  gaussian,          // all particles from N(mean, P0)
  uniform_position,  // positions uniform in the volume, velocity/acceleration Gaussian
};

struct AgentPrior {
  GaussianBelief belief;
  MatrixXd particles;  // 9 x M
};

std::vector<AgentPrior> init_prior(const ScenarioConfig& cfg, int n_particles,
                                   PriorSampling sampling, std::uint64_t stream_seed);

/// Draws M samples from N(mean, cov) as columns.
MatrixXd sample_gaussian(const VectorXd& mean, const MatrixXd& cov, int n_samples, Rng& rng);

}  // namespace coopflow

namespace coopflow {

/// log N(z; d, sigma^2) up to the additive constant shared by every particle.
inline double range_log_likelihood(double z, double d, double sigma) {
  const double e = (z - d) / sigma;
  return -0.5 * e * e;
}

}  // namespace coopflow
