import math

import numpy as np
import pytest

import coopflow


def test_motion_model_entries():
    mm = coopflow.motion_model(0.1, 0.15)
    F, Q = mm["F"], mm["Q"]
    assert F.shape == (9, 9)
    assert F[0, 3] == pytest.approx(0.1)
    assert F[0, 6] == pytest.approx(0.005)
    assert Q[0, 0] == pytest.approx(5.625e-7)
    np.testing.assert_allclose(Q, mm["G"] @ mm["G"].T * 0.15**2, atol=1e-15)
    with pytest.raises(coopflow.InvalidParameter):
        coopflow.motion_model(0.0, 0.15)


def test_range_jacobian():
    g = coopflow.range_jacobian_block([0, 0, 0], [1, 0, 0])
    np.testing.assert_allclose(g, [-1, 0, 0, 0, 0, 0, 0, 0, 0])
    with pytest.raises(coopflow.SingularGeometry):
        coopflow.range_jacobian_block([1, 1, 1], [1, 1, 1])


def test_lambda_grid_and_scalar_flow():
    lambdas, deltas = coopflow.lambda_grid(2)
    assert lambdas == pytest.approx([1 / 2.2, 1.0])
    assert sum(deltas) == pytest.approx(1.0)

    A, c = coopflow.flow_coefficients(
        np.eye(1), np.eye(1), np.ones(1), np.ones(1), np.zeros(1), 0.0, np.zeros(1)
    )
    assert A[0, 0] == pytest.approx(-0.5)
    assert c[0] == pytest.approx(1.0)

    rng = np.random.default_rng(0)
    P = np.array([[2.0, 0.3], [0.3, 1.0]])
    H = rng.normal(size=(4, 2))
    args = (P, H, np.full(4, 0.5), rng.normal(size=4), rng.normal(size=4), 0.3, rng.normal(size=2))
    Ad, cd = coopflow.flow_coefficients(*args, branch="direct")
    Aw, cw = coopflow.flow_coefficients(*args, branch="woodbury")
    np.testing.assert_allclose(Ad, Aw, atol=1e-10)
    np.testing.assert_allclose(cd, cw, atol=1e-10)


def test_linear_flow_reaches_the_kalman_mean():
    rng = np.random.default_rng(1)
    particles = rng.normal(size=(1, 100))
    _, mean = coopflow.linear_flow(
        particles, np.zeros(1), np.eye(1), np.eye(1), np.ones(1), np.ones(1), n_lambda=100, ratio=1.2 ** (19 / 99)
    )
    assert mean[0] == pytest.approx(0.5, abs=0.01)


def test_sigma_point_update_matches_kalman():
    P = np.diag([2.0, 1.0, 0.5])
    H = np.array([[1.0, 0.5, 0.0], [0.0, 1.0, 1.0]])
    R = np.diag([0.3, 0.2])
    post = coopflow.sigma_point_cov_update(P, np.zeros(3), lambda x: H @ x, R)
    S = H @ P @ H.T + R
    K = P @ H.T @ np.linalg.inv(S)
    np.testing.assert_allclose(post, P - K @ S @ K.T, atol=1e-10)


def test_resampling_and_metrics():
    assert sorted(coopflow.systematic_resample([0.25] * 4, 3)) == [0, 1, 2, 3]
    assert coopflow.systematic_resample([1, 0, 0], 3) == [0, 0, 0]
    assert coopflow.cumulative_frequency([1, 2, 3], [2.0]) == pytest.approx([2 / 3])
    assert coopflow.outage_probability([1, 2, 3], 2.0) == pytest.approx(1 / 3)


def test_config_round_trip():
    resolved = coopflow.parse_config("particles: 50\nr_max: inf")
    assert "particles: 50" in resolved
    assert coopflow.parse_config(resolved) == resolved
    with pytest.raises(coopflow.ConfigError):
        coopflow.parse_config("particles: 0")
    with pytest.raises(coopflow.ConfigError):
        coopflow.parse_config("unknown_key: 1")


def test_scenario_shapes():
    anchors, states = coopflow.generate_scenario("n_agents: 3\nK: 5", 4)
    assert anchors.shape == (9, 3)
    assert len(states) == 6
    assert states[0].shape == (3, 9)
    for row in states[0]:
        assert np.linalg.norm(row[3:6]) == pytest.approx(1.0)


@pytest.mark.parametrize("algo", ["edh", "pfbp", "sirbp"])
def test_small_experiment(tmp_path, algo):
    cfg = f"algo: {algo}\nn_agents: 3\nK: 5\nparticles: 40\nlambda_steps: 8\nruns: 2\nr_max: inf\nseed: 5\n"
    res = coopflow.run_experiment(cfg, threads=1, out_dir=str(tmp_path))
    assert len(res["runs"]) == 2
    assert len(res["rmse"]["p"]) == 6
    assert res["pcrlb"]["p"][0] == pytest.approx(math.sqrt(3) * 20)
    assert res["joint_ms_per_step"] > 0
    header = (tmp_path / "rmse.csv").read_text().splitlines()[0]
    assert header == "k,rmse_p,rmse_v,rmse_a,pcrlb_p,pcrlb_v,pcrlb_a"
    again = coopflow.run_experiment(cfg, threads=1)
    assert again["rmse"]["p"] == res["rmse"]["p"]
