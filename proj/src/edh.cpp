#include "coopflow/edh.hpp"

#include "coopflow/errors.hpp"

namespace coopflow {

JointState JointState::from_agents(std::span<const StateVector> agents) {
  JointState js;
  js.stacked.resize(static_cast<Eigen::Index>(agents.size()) * kStateDim);
  for (std::size_t i = 0; i < agents.size(); ++i)
    js.stacked.segment<kStateDim>(static_cast<Eigen::Index>(i) * kStateDim) = agents[i];
  return js;
}

std::vector<JointMeasurementRow> joint_measurement_rows(const NetworkSnapshot& snapshot) {
  std::vector<JointMeasurementRow> rows;
  rows.reserve(snapshot.measurement_count());
  for (int i = 0; i < snapshot.n_agents(); ++i) {
    for (const auto& m : snapshot.anchor_links[i]) rows.push_back({i, true, m.node, m.z});
    for (const auto& m : snapshot.agent_links[i]) rows.push_back({i, false, m.node, m.z});
  }
  return rows;
}

namespace {

Vec3 block_position(const VectorXd& x, int agent) { return x.segment<3>(agent * kStateDim); }

}  // namespace

VectorXd joint_measurement_function(std::span<const JointMeasurementRow> rows, const VectorXd& x,
                                    std::span<const Anchor> anchors) {
  VectorXd h(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const Vec3 pi = block_position(x, row.agent);
    const Vec3 pj = row.to_anchor ? anchors[row.node].position : block_position(x, row.node);
    h[static_cast<Eigen::Index>(r)] = range(pi, pj);
  }
  return h;
}

LinearizedObservation build_joint_observation(const NetworkSnapshot& snapshot, const VectorXd& mean,
                                              std::span<const Anchor> anchors, double sigma) {
  const auto rows = joint_measurement_rows(snapshot);
  const auto m = static_cast<Eigen::Index>(rows.size());
  if (mean.size() != static_cast<Eigen::Index>(snapshot.n_agents()) * kStateDim)
    throw InvalidParameter("joint mean does not match snapshot agent count");

  LinearizedObservation obs;
  obs.H = MatrixXd::Zero(m, mean.size());
  obs.r = VectorXd::Constant(m, sigma * sigma);
  obs.z.resize(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    obs.z[r] = row.z;
    const Vec3 pi = block_position(mean, row.agent);
    const Vec3 pj = row.to_anchor ? anchors[row.node].position : block_position(mean, row.node);
    const auto grad = range_jacobian_block(pi, pj);
    obs.H.block<1, kStateDim>(r, row.agent * kStateDim) = grad;
    if (!row.to_anchor) obs.H.block<1, kStateDim>(r, row.node * kStateDim) = -grad;
  }
  obs.nu = joint_measurement_function(rows, mean, anchors) - obs.H * mean;
  return obs;
}

EdhState edh_initial_state(std::span<const AgentPrior> priors) {
  const auto n = static_cast<Eigen::Index>(priors.size());
  if (n == 0) throw InvalidParameter("no agents");
  const Eigen::Index M = priors[0].particles.cols();
  EdhState st{MatrixXd(n * kStateDim, M), MatrixXd::Zero(n * kStateDim, n * kStateDim)};
  for (Eigen::Index i = 0; i < n; ++i) {
    if (priors[i].particles.cols() != M) throw InvalidParameter("particle counts differ between agents");
    st.particles.middleRows<kStateDim>(i * kStateDim) = priors[i].particles;
    st.cov.block<kStateDim, kStateDim>(i * kStateDim, i * kStateDim) = priors[i].belief.cov;
  }
  return st;
}

MatrixXd propagate_particles(const MatrixXd& particles, const MotionModel& mm, Rng& rng) {
  if (particles.rows() % kStateDim != 0) throw InvalidParameter("particles are not 9-D blocks");
  const Eigen::Index blocks = particles.rows() / kStateDim;
  MatrixXd out(particles.rows(), particles.cols());
  for (Eigen::Index m = 0; m < particles.cols(); ++m) {
    for (Eigen::Index b = 0; b < blocks; ++b) {
      const StateVector x = particles.block<kStateDim, 1>(b * kStateDim, m);
      out.block<kStateDim, 1>(b * kStateDim, m) = propagate_state(x, mm, normal3(rng, mm.sigma_a));
    }
  }
  return out;
}

VectorXd sample_mean(const MatrixXd& particles) { return particles.rowwise().mean(); }

EdhStepResult edh_time_step(const EdhState& prev, const NetworkSnapshot& snapshot,
                            std::span<const Anchor> anchors, const MotionModel& mm, double sigma,
                            const FlowSchedule& schedule, Rng& rng) {
  if (prev.particles.cols() < 2) throw InvalidParameter("EDH needs at least two particles");
  if (prev.particles.rows() != static_cast<Eigen::Index>(snapshot.n_agents()) * kStateDim)
    throw InvalidParameter("joint particles do not match snapshot agent count");

  const MatrixXd predicted = propagate_particles(prev.particles, mm, rng);
  const MatrixXd P_pred = predict_covariance(prev.cov, mm.F, mm.Q);
  const VectorXd mean0 = sample_mean(predicted);

  auto provider = [&](double lambda, const VectorXd& mean) {
    return flow_coefficients(P_pred, build_joint_observation(snapshot, mean, anchors, sigma), lambda,
                             mean0);
  };
  const FlowResult flow = flow_integrate(predicted, mean0, schedule, provider);

  const auto rows = joint_measurement_rows(snapshot);
  const GaussianDensity prior(mean0, P_pred);
  auto prior_term = [&](Eigen::Index, const Eigen::Ref<const VectorXd>& x) { return prior.log_pdf(x); };
  auto likelihood = [&](Eigen::Index, const Eigen::Ref<const VectorXd>& x) {
    double ll = 0.0;
    for (const auto& row : rows) {
      const Vec3 pi = x.segment<3>(row.agent * kStateDim);
      const Vec3 pj = row.to_anchor ? anchors[row.node].position : Vec3(x.segment<3>(row.node * kStateDim));
      ll += range_log_likelihood(row.z, range(pi, pj), sigma);
    }
    return ll;
  };
  const VectorXd w = invertible_flow_reweight(predicted, flow.particles, prior_term, likelihood, prior_term);

  EdhStepResult out;
  out.effective_sample_size = 1.0 / w.squaredNorm();
  out.posterior.particles = gather_columns(flow.particles, systematic_resample(w, rng));
  out.mmse = sample_mean(out.posterior.particles);

  const MatrixXd R = sigma * sigma * MatrixXd::Identity(static_cast<Eigen::Index>(rows.size()),
                                                        static_cast<Eigen::Index>(rows.size()));
  auto h = [&](const VectorXd& x) { return joint_measurement_function(rows, x, anchors); };
  out.posterior.cov = sigma_point_cov_update(P_pred, out.mmse, h, R).P_post;
  out.predicted_cov = P_pred;
  return out;
}

}  // namespace coopflow
