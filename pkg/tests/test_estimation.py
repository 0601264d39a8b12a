import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_orientation
from nvorient.errors import EstimationError, FieldInputError, UselessWorkingPointError
from nvorient.geometry import (NVOrientation, RotationStep, misorientation, rotate_orientation, rotation_matrix)
from nvorient.protocols.estimation import OrientationEstimate, estimate_x, estimate_z, intersect_cones
from nvorient.protocols.noise import NoiseModel
from nvorient.protocols.sensitivity import angle_sensitivity, sensitivity_table
from nvorient.protocols.tracking import track_sequence
from nvorient.spin_model import SpinParams

P = SpinParams()
START = NVOrientation.from_vectors([0.1, 0.2, 1.0], [1, 0, 0])


def _prior(o):
    return OrientationEstimate(o, 0.0, 0.0, 0.0, 0)


def _about_z(o, deg):
    return NVOrientation.from_vectors(o.z_axis, rotation_matrix(o.z_axis, math.radians(deg)) @ o.x_axis)


# sensitivities


def test_sensitivity_table_values():
    t = sensitivity_table(P, NoiseModel())
    assert t["delta_theta_sq"] == pytest.approx(8.0e-5, rel=0.05)
    assert t["delta_gamma_sq"] == pytest.approx(0.043, rel=0.05)
    assert t["delta_theta_dq"] == pytest.approx(4.5e-5, rel=0.05)
    assert t["delta_gamma_dq"] == pytest.approx(0.021, rel=0.05)


def test_useless_working_point():
    with pytest.raises(UselessWorkingPointError):
        angle_sensitivity(P, NoiseModel(), "sq", "theta", 0.0, 100, 0)
    with pytest.raises(UselessWorkingPointError):
        angle_sensitivity(P, NoiseModel(), "dq", "gamma", 0.0, 100, 1.0)


# cone intersection


def test_intersect_cones_exact():
    rng = np.random.default_rng(3)
    for _ in range(50):
        z = rng.normal(size=3)
        z /= np.linalg.norm(z)
        b1, b2 = rng.normal(size=3), rng.normal(size=3)
        b1 /= np.linalg.norm(b1)
        b2 /= np.linalg.norm(b2)
        got = intersect_cones(b1, z @ b1, b2, z @ b2, z)
        assert np.allclose(got, z, atol=1e-9)
        other = intersect_cones(b1, z @ b1, b2, z @ b2, -z)
        assert other @ b1 == pytest.approx(z @ b1, abs=1e-12)
        assert other @ b2 == pytest.approx(z @ b2, abs=1e-12)


def test_intersect_cones_inconsistent():
    with pytest.raises(EstimationError):
        intersect_cones([1, 0, 0], 0.99, [0, 1, 0], 0.99, [0, 0, 1])
    with pytest.raises(EstimationError):
        intersect_cones([1, 0, 0], 0.5, [1, 0, 0], 0.5, [0, 0, 1])


# z estimate


def test_estimate_z_same_axis():
    est = estimate_z(P, _prior(START), 100, None, truth=START)
    assert np.allclose(est.orientation.z_axis, START.z_axis, atol=1e-9)


def test_estimate_z_tilted_5deg():
    truth = rotate_orientation(START, RotationStep([1, -2, 0.3], math.radians(5)))
    est = estimate_z(P, _prior(START), 100, None, truth=truth)
    assert math.acos(min(1, est.orientation.z_axis @ truth.z_axis)) <= 1e-6


def test_estimate_z_from_readings_matches_simulation():
    truth = rotate_orientation(START, RotationStep([0, 1, 0], math.radians(3)))
    sim = estimate_z(P, _prior(START), 100, None, truth=truth)
    from nvorient.protocols.estimation import _measure
    from nvorient.spin_model import FieldConfig

    z0, x0, y0 = START.z_axis, START.x_axis, START.y_axis
    dirs = [0.5 * z0 + math.sqrt(3) / 2 * x0, 0.5 * z0 + math.sqrt(3) / 2 * y0]
    readings = [_measure(P, FieldConfig(100 * d, np.zeros(3), "lab"), truth, "dq", 0.5, None, None) for d in dirs]
    rec = estimate_z(P, _prior(START), 100, None, readings=readings)
    assert np.allclose(rec.orientation.z_axis, sim.orientation.z_axis, atol=1e-12)


def test_estimate_z_noise_consistent_with_sensitivity():
    noise = NoiseModel(rng_seed=21)
    errs = []
    for i in range(300):
        est = estimate_z(P, _prior(START), 100, noise, truth=START, mode="sq", rng=noise.rng(i))
        d = est.orientation.z_axis - START.z_axis
        errs.extend([d @ START.x_axis, d @ START.y_axis])
    rms = math.degrees(float(np.sqrt(np.mean(np.square(errs)))))
    delta_theta = sensitivity_table(P, noise)["delta_theta_sq"]
    assert delta_theta / 2 <= rms <= 2 * delta_theta
    assert rms == pytest.approx(math.degrees(est.sigma_theta), rel=0.15)


# x estimate


def test_estimate_x_same_axis():
    est = estimate_x(P, START.z_axis, START.x_axis, 100, 1.0, None, truth=START)
    assert misorientation(est.orientation, START) <= 1e-9


def test_estimate_x_rotated_10deg():
    truth = _about_z(START, 10)
    est = estimate_x(P, START.z_axis, START.x_axis, 100, 1.0, None, truth=truth)
    assert misorientation(est.orientation, truth) <= 1e-6
    assert est.method == "two_point"


@pytest.mark.parametrize("deg", [29.9, 30.0, -30.0])
def test_estimate_x_degenerate_falls_back(deg):
    truth = _about_z(START, deg)
    est = estimate_x(P, START.z_axis, START.x_axis, 100, 1.0, None, truth=truth)
    assert est.method == "mini_scan"
    assert misorientation(est.orientation, truth) <= 1e-6


def test_estimate_x_c3_representative_nearest_prior():
    truth = _about_z(START, 120 + 8)
    est = estimate_x(P, START.z_axis, START.x_axis, 100, 1.0, None, truth=truth)
    assert misorientation(est.orientation, _about_z(START, 8)) <= 1e-6


def test_estimate_x_requires_orthogonal_prior():
    with pytest.raises(FieldInputError):
        estimate_x(P, [0, 0, 1], [0.3, 0, 1], 100, 1.0, None, truth=NVOrientation.identity())


def test_estimate_x_noise_consistent_with_sensitivity():
    noise = NoiseModel(rng_seed=8)
    errs = []
    for i in range(300):
        est = estimate_x(P, START.z_axis, START.x_axis, 100, 1.0, noise, truth=START, mode="sq", rng=noise.rng(i))
        errs.append(math.degrees(misorientation(est.orientation, START)))
    rms = float(np.sqrt(np.mean(np.square(errs))))
    delta_gamma = sensitivity_table(P, noise)["delta_gamma_sq"]
    assert delta_gamma / 2 <= rms <= 2 * delta_gamma


def test_angle_error_scales_with_inverse_sqrt_time():
    noise = NoiseModel(rng_seed=12)
    times = np.array([0.01, 0.1, 1.0])
    stds = []
    for k, t in enumerate(times):
        errs = []
        for i in range(400):
            est = estimate_x(P, START.z_axis, START.x_axis, 100, 1.0, noise, truth=START, time=t,
                             rng=noise.rng(k, i))
            errs.append(misorientation(est.orientation, START))
        stds.append(np.sqrt(np.mean(np.square(errs))))
    slope = np.polyfit(np.log(times), np.log(stds), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.05)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 15), st.floats(-25, 25))
def test_noiseless_estimates_exact_in_capture_range(seed, tilt, twist):
    rng = np.random.default_rng(seed)
    prior = random_orientation(rng)
    axis = rng.normal(size=3)
    truth = _about_z(rotate_orientation(prior, RotationStep(axis, math.radians(tilt))), twist)
    z = estimate_z(P, _prior(prior), 100, None, truth=truth)
    x = estimate_x(P, z.orientation.z_axis, z.orientation.x_axis, 100, 1.0, None, truth=truth)
    assert misorientation(x.orientation, truth) <= 1e-6


# tracking


def test_track_identity_all_degenerate():
    recs = track_sequence(P, [START] * 4, 1.0, None)
    assert [r.status for r in recs[1:]] == ["degenerate"] * 3
    assert all(r.step is None for r in recs)


def test_track_uniform_steps_round_trip():
    axis = np.array([0.3, 1.0, 0.5])
    axis /= np.linalg.norm(axis)
    traj = [START]
    for _ in range(6):
        traj.append(rotate_orientation(traj[-1], RotationStep(axis, math.radians(5))))
    recs = track_sequence(P, traj, 1.0, None)
    for r in recs[1:]:
        assert r.status == "ok"
        assert np.max(np.abs(r.step.axis - axis)) <= 1e-6
        assert r.step.angle == pytest.approx(math.radians(5), abs=1e-6)
        assert r.step_error <= 1e-6


def test_track_gap_marker(monkeypatch):
    import nvorient.protocols.tracking as tracking

    real = tracking.estimate_z
    calls = {"n": 0}

    def flaky(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] == 2:
            raise EstimationError("cones do not intersect")
        return real(*args, **kwargs)

    monkeypatch.setattr(tracking, "estimate_z", flaky)
    traj = [rotate_orientation(START, RotationStep([0, 0, 1], math.radians(2 * i))) for i in range(4)]
    recs = tracking.track_sequence(P, traj, 1.0, None)
    assert [r.status for r in recs] == ["ok", "gap", "ok", "ok"]
    assert recs[1].estimate is None and "cones" in recs[1].message
    assert recs[2].step.angle == pytest.approx(math.radians(4), abs=1e-6)


def test_track_rejects_large_steps():
    traj = [START, rotate_orientation(START, RotationStep([1, 0, 0], math.radians(25)))]
    with pytest.raises(ValueError):
        track_sequence(P, traj, 1.0, None)


def test_track_records_unpack_as_pairs():
    traj = [START, rotate_orientation(START, RotationStep([0, 1, 1], math.radians(3)))]
    est, step = track_sequence(P, traj, 1.0, None)[1].as_pair()
    assert isinstance(est, OrientationEstimate) and step.angle == pytest.approx(math.radians(3), abs=1e-9)
