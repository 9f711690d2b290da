import math

import numpy as np
import pytest

from twistrod import liegroup as lg
from twistrod import rod


def test_neutral_twist():
    np.testing.assert_array_equal(rod.neutral_twist(0.4), [0.4, 0, 0, 0, 0, 0])
    np.testing.assert_array_equal(rod.neutral_twist(0.4, "SE2"), [0.4, 0, 0])
    for bad in (0.0, -1.0, float("nan")):
        with pytest.raises(rod.InvalidLengthError):
            rod.neutral_twist(bad)


def test_deformation_names_and_values():
    state = rod.RodState(np.array([0.45, 0.01, 0, 0.2, 0, 1.0]), rod.neutral_twist(0.46))
    d = rod.deformation_dict(state)
    assert list(d) == ["lambda", "gamma_y", "gamma_z", "tau", "omega_y", "omega_z"]
    assert d["lambda"] == pytest.approx(-0.01)
    assert d["tau"] == 0.2


def test_state_rejects_mixed_groups():
    with pytest.raises(lg.ModeMismatchError):
        rod.RodState(np.zeros(3), np.zeros(6))
    with pytest.raises(lg.ModeMismatchError):
        rod.RodState(np.zeros(3), np.zeros(3), lg.Pose.identity("SE3"))


def test_sample_poses_endpoints():
    xi = np.array([0.46, 0.0, math.pi / 2])
    base = lg.translation(0.1, 0.2)
    poses = rod.sample_poses(rod.RodState(xi, rod.neutral_twist(0.46, "SE2"), base), n=5)
    assert [s for s, _ in poses] == [0.0, 0.25, 0.5, 0.75, 1.0]
    np.testing.assert_allclose(poses[0][1].matrix, base.matrix)
    np.testing.assert_allclose(poses[-1][1].matrix, rod.tip_pose(xi, base).matrix, atol=1e-15)
    with pytest.raises(rod.InvalidSamplingError):
        rod.sample_poses(rod.RodState(xi, xi), n=1)


def test_centerline_is_arc_of_expected_radius():
    xi = np.array([0.5, 0.0, 0.0, 0.0, 0.0, 1.0])
    pts = rod.centerline(xi, n=50)
    # Circle of radius 0.5 centred at (0, 0.5).
    np.testing.assert_allclose(np.linalg.norm(pts[:, :2] - [0.0, 0.5], axis=1), 0.5, atol=1e-14)
    with pytest.raises(rod.InvalidSamplingError):
        rod.centerline(xi, n=1)
