#include "coopflow/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coopflow/errors.hpp"

namespace coopflow {

std::array<double, kBeliefWireSize> serialize_belief(const GaussianBelief& belief) {
  std::array<double, kBeliefWireSize> wire{};
  std::size_t n = 0;
  for (int i = 0; i < kStateDim; ++i) wire[n++] = belief.mean[i];
  for (int i = 0; i < kStateDim; ++i)
    for (int j = i; j < kStateDim; ++j) wire[n++] = belief.cov(i, j);
  return wire;
}

GaussianBelief deserialize_belief(std::span<const double, kBeliefWireSize> wire) {
  GaussianBelief belief;
  std::size_t n = 0;
  for (int i = 0; i < kStateDim; ++i) belief.mean[i] = wire[n++];
  for (int i = 0; i < kStateDim; ++i)
    for (int j = i; j < kStateDim; ++j) belief.cov(i, j) = belief.cov(j, i) = wire[n++];
  return belief;
}

ParticleSet ParticleSet::uniform(MatrixXd samples) {
  ParticleSet set;
  const auto m = samples.cols();
  set.samples = std::move(samples);
  set.weights = VectorXd::Constant(m, m > 0 ? 1.0 / static_cast<double>(m) : 0.0);
  return set;
}

VectorXd ParticleSet::mean() const { return samples * weights; }

void ScenarioConfig::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (n_agents < 1) throw ConfigError("n_agents", "must be >= 1");
  if (n_anchors < 1 || n_anchors > 9) throw ConfigError("n_anchors", "must be in [1, 9]");
  for (int d = 0; d < 3; ++d)
    if (!positive(volume[d])) throw ConfigError("volume", "extents must be positive");
  if (!(r_max > 0.0) || std::isnan(r_max)) throw ConfigError("r_max", "must be positive or inf");
  if (!positive(sigma)) throw ConfigError("sigma", "must be positive");
  if (!positive(sigma_a)) throw ConfigError("sigma_a", "must be positive");
  if (!positive(dt)) throw ConfigError("dt", "must be positive");
  if (K < 1) throw ConfigError("K", "must be >= 1");
  if (!positive(prior_sigma_p)) throw ConfigError("prior_sigma_p", "must be positive");
  if (!positive(prior_sigma_a_factor))
    throw ConfigError("prior_sigma_a_factor", "must be positive");
}

MotionModel build_motion_model(double dt, double sigma_a) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("dt must be positive");
  if (!(sigma_a >= 0.0) || !std::isfinite(sigma_a))
    throw InvalidParameter("sigma_a must be non-negative");

  MotionModel mm;
  mm.dt = dt;
  mm.sigma_a = sigma_a;
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  mm.F.setIdentity();
  mm.F.block<3, 3>(0, 3) = dt * I;
  mm.F.block<3, 3>(0, 6) = 0.5 * dt * dt * I;
  mm.F.block<3, 3>(3, 6) = dt * I;
  mm.G.block<3, 3>(0, 0) = 0.5 * dt * dt * I;
  mm.G.block<3, 3>(3, 0) = dt * I;
  mm.G.block<3, 3>(6, 0) = I;
  mm.Q = sigma_a * sigma_a * mm.G * mm.G.transpose();
  return mm;
}

AgentState propagate_state(const AgentState& x, const MotionModel& mm, const Vec3& u) {
  return AgentState::from_flat(propagate_state(x.flat(), mm, u));
}

double range(const Vec3& p_i, const Vec3& p_j) { return (p_j - p_i).norm(); }

Eigen::Matrix<double, 1, kStateDim> range_jacobian_block(const Vec3& p_i, const Vec3& p_j) {
  const Vec3 diff = p_i - p_j;
  const double d = diff.norm();
  if (!(d > kCoincidentEpsilon)) throw SingularGeometry("range Jacobian at coincident nodes");
  Eigen::Matrix<double, 1, kStateDim> row = Eigen::Matrix<double, 1, kStateDim>::Zero();
  row.head<3>() = diff.transpose() / d;
  return row;
}

std::vector<Vec3> Scenario::positions_at(int k) const {
  std::vector<Vec3> out;
  out.reserve(trajectories.at(k).size());
  for (const auto& s : trajectories.at(k)) out.push_back(s.position);
  return out;
}

std::vector<Anchor> place_anchors(const ScenarioConfig& cfg) {
  std::vector<Anchor> all;
  for (int c = 0; c < 8; ++c) {
    all.push_back({Vec3((c & 1) ? cfg.volume.x() : 0.0, (c & 2) ? cfg.volume.y() : 0.0,
                        (c & 4) ? cfg.volume.z() : 0.0)});
  }
  all.push_back({0.5 * cfg.volume});
  all.resize(static_cast<std::size_t>(std::clamp(cfg.n_anchors, 0, 9)));
  return all;
}

Scenario generate_scenario(const ScenarioConfig& cfg, std::uint64_t stream_seed) {
  cfg.validate();
  const MotionModel mm = build_motion_model(cfg.dt, cfg.sigma_a);
  const Vec3 center = 0.5 * cfg.volume;

  Scenario sc;
  sc.anchors = place_anchors(cfg);
  sc.trajectories.assign(static_cast<std::size_t>(cfg.K) + 1,
                         std::vector<AgentState>(static_cast<std::size_t>(cfg.n_agents)));

  for (int i = 0; i < cfg.n_agents; ++i) {
    Rng rng = make_rng(stream_seed, {kTagTrajectory, static_cast<std::uint64_t>(i)});
    AgentState s;
    for (int d = 0; d < 3; ++d) s.position[d] = cfg.volume[d] * uniform01(rng);
    const Vec3 to_center = center - s.position;
    const double n = to_center.norm();
    s.velocity = n > kCoincidentEpsilon ? Vec3(to_center / n) : Vec3::Zero();
    s.acceleration.setZero();
    sc.trajectories[0][i] = s;
    for (int k = 1; k <= cfg.K; ++k) {
      s = propagate_state(s, mm, normal3(rng, cfg.sigma_a));
      sc.trajectories[k][i] = s;
    }
  }
  return sc;
}

LinkSets build_connectivity(std::span<const Vec3> positions, std::span<const Anchor> anchors,
                            double r_max) {
  const auto n = positions.size();
  LinkSets links;
  links.anchors.resize(n);
  links.agents.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < anchors.size(); ++a)
      if (range(positions[i], anchors[a].position) <= r_max)
        links.anchors[i].push_back(static_cast<int>(a));
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && range(positions[i], positions[j]) <= r_max)
        links.agents[i].push_back(static_cast<int>(j));
  }
  return links;
}

std::optional<double> NetworkSnapshot::agent_measurement(int i, int j) const {
  for (const auto& m : agent_links.at(static_cast<std::size_t>(i)))
    if (m.node == j) return m.z;
  return std::nullopt;
}

std::size_t NetworkSnapshot::measurement_count() const {
  std::size_t n = 0;
  for (const auto& l : anchor_links) n += l.size();
  for (const auto& l : agent_links) n += l.size();
  return n;
}

NetworkSnapshot NetworkSnapshot::empty(int n_agents, int time_index, LinkMode mode) {
  NetworkSnapshot s;
  s.time_index = time_index;
  s.mode = mode;
  s.anchor_links.resize(static_cast<std::size_t>(n_agents));
  s.agent_links.resize(static_cast<std::size_t>(n_agents));
  return s;
}

NetworkSnapshot simulate_measurements(std::span<const Vec3> positions,
                                      std::span<const Anchor> anchors, const LinkSets& links,
                                      double sigma, Rng& rng, LinkMode mode, int time_index) {
  if (!(sigma > 0.0)) throw InvalidParameter("sigma must be positive");
  const int n = static_cast<int>(positions.size());
  NetworkSnapshot snap = NetworkSnapshot::empty(n, time_index, mode);
  std::normal_distribution<double> noise(0.0, sigma);
  for (int i = 0; i < n; ++i) {
    for (int a : links.anchors[i])
      snap.anchor_links[i].push_back({a, range(positions[i], anchors[a].position) + noise(rng)});
    for (int j : links.agents[i])
      snap.agent_links[i].push_back({j, range(positions[i], positions[j]) + noise(rng)});
  }
  return snap;
}

StateMatrix prior_covariance(const ScenarioConfig& cfg) {
  const double sp2 = cfg.prior_sigma_p * cfg.prior_sigma_p;
  const double sa = cfg.prior_sigma_a_factor * cfg.sigma_a;
  StateVector diag;
  diag << sp2, sp2, sp2, Vec3::Constant(cfg.dt * cfg.dt * sa * sa), Vec3::Constant(sa * sa);
  return diag.asDiagonal();
}

MatrixXd sample_gaussian(const VectorXd& mean, const MatrixXd& cov, int n_samples, Rng& rng) {
  const auto n = mean.size();
  MatrixXd L;
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) {
    L = llt.matrixL();
  } else {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
    L = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  MatrixXd out(n, n_samples);
  VectorXd w(n);
  for (int m = 0; m < n_samples; ++m) {
    for (Eigen::Index d = 0; d < n; ++d) w[d] = standard_normal(rng);
    out.col(m) = mean + L * w;
  }
  return out;
}

std::vector<AgentPrior> init_prior(const ScenarioConfig& cfg, int n_particles,
                                   PriorSampling sampling, std::uint64_t stream_seed) {
  if (n_particles < 1) throw InvalidParameter("particle count must be >= 1");
  const StateMatrix P0 = prior_covariance(cfg);
  std::vector<AgentPrior> priors(static_cast<std::size_t>(cfg.n_agents));
  for (int i = 0; i < cfg.n_agents; ++i) {
    Rng rng = make_rng(stream_seed, {kTagPrior, static_cast<std::uint64_t>(i)});
    AgentPrior& p = priors[i];
    for (int d = 0; d < 3; ++d) p.belief.mean[d] = cfg.volume[d] * uniform01(rng);
    for (int d = 3; d < kStateDim; ++d) p.belief.mean[d] = std::sqrt(P0(d, d)) * standard_normal(rng);
    p.belief.cov = P0;
    p.particles = sample_gaussian(p.belief.mean, P0, n_particles, rng);
    if (sampling == PriorSampling::uniform_position) {
      for (int m = 0; m < n_particles; ++m)
        for (int d = 0; d < 3; ++d) p.particles(d, m) = cfg.volume[d] * uniform01(rng);
    }
  }
  return priors;
}

}  // namespace coopflow
