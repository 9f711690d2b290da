import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from twistrod import crosssection as cs
from twistrod import liegroup as lg
from twistrod.mechanics import assemble, nominal_stiffness, solve_equilibrium


def test_planar_mounts():
    d = cs.planar_design(0.1016)
    assert d.labels == ["a1", "a2"]
    np.testing.assert_allclose(d.mounts[0].transform.translation, [0, 0.0508])
    np.testing.assert_allclose(d.mounts[1].transform.translation, [0, -0.0508])


def test_ring_positions_and_frames():
    d = cs.radial_design(0.08, 3)
    for i, m in enumerate(d.mounts):
        phi = 2 * math.pi * i / 3
        np.testing.assert_allclose(m.transform.translation, [0, 0.04 * math.cos(phi), 0.04 * math.sin(phi)],
                                   atol=1e-15)
        # Local y points radially outward.
        np.testing.assert_allclose(m.transform.rotation[:, 1], [0, math.cos(phi), math.sin(phi)], atol=1e-15)
        np.testing.assert_allclose(m.transform.rotation[:, 0], [1, 0, 0], atol=1e-15)


def test_helical_tilt_leans_into_azimuth():
    t = 0.2
    d = cs.helical_design(0.08, 3, t)
    x_axis = d.mounts[0].transform.rotation[:, 0]
    assert x_axis[0] == pytest.approx(math.cos(t))
    assert abs(x_axis[1]) < 1e-15  # no radial lean
    assert abs(x_axis[2]) == pytest.approx(math.sin(t))


def test_untilted_helical_equals_radial_but_keeps_kind():
    h = cs.helical_design(0.08, 3, 0.0)
    r = cs.radial_design(0.08, 3)
    assert h.kind == "helical" and h.params["tilt_rad"] == 0.0
    for a, b in zip(h.mounts, r.mounts):
        np.testing.assert_array_equal(a.transform.matrix, b.transform.matrix)


@pytest.mark.parametrize("call", [
    lambda: cs.planar_design(0.0),
    lambda: cs.radial_design(-0.1),
    lambda: cs.radial_design(0.1, 1),
    lambda: cs.radial_design(0.1, 2.5),
    lambda: cs.helical_design(0.1, 3, math.pi / 2),
    lambda: cs.helical_design(0.1, 1, 0.0),
    lambda: cs.explicit_design([]),
    lambda: cs.explicit_design([lg.Pose.identity(), lg.Pose.identity()], ["a", "a"]),
])
def test_invalid_geometry(call):
    with pytest.raises(cs.InvalidGeometryError):
        call()


def test_explicit_mixed_groups_rejected():
    with pytest.raises(lg.ModeMismatchError):
        cs.explicit_design([lg.Pose.identity("SE3"), lg.Pose.identity("SE2")])


@given(st.sampled_from(["planar", "radial", "helical"]), st.floats(0.0, 1.0), st.integers(0, 2))
def test_actuator_curve_is_base_curve_times_mount(kind, s, idx):
    design = {"planar": cs.planar_design(0.07), "radial": cs.radial_design(0.09),
              "helical": cs.helical_design(0.09, 3, -0.4)}[kind]
    idx = min(idx, len(design.mounts) - 1)
    xi = np.array([0.42, 0.02, 1.3]) if kind == "planar" else np.array([0.42, 0.01, -0.02, 0.7, -0.9, 1.4])
    base = lg.exp(0.1 * np.ones_like(xi))
    lhs = cs.actuator_curve(design, idx, xi, s, base)
    rhs = base @ lg.exp(xi, s) @ design.mounts[idx].transform
    np.testing.assert_allclose(lhs.matrix, rhs.matrix, atol=1e-12)


def test_single_helical_actuation_twists_and_bends():
    design = cs.helical_design(0.08, 3, 0.25, nominal_stiffness(1e-4))
    l_on = np.array([0.38, 0.46, 0.46])
    xi = solve_equilibrium(assemble(design), l_on)
    assert abs(xi[3]) > 0.1 and np.linalg.norm(xi[4:]) > 0.1
    flipped = solve_equilibrium(assemble(cs.helical_design(0.08, 3, -0.25, nominal_stiffness(1e-4))), l_on)
    assert np.sign(flipped[3]) == -np.sign(xi[3])
