import numpy as np
import pytest
from conftest import disc

from sepcbf.derivatives import (
    barrier_gradient,
    hdot,
    nonholonomic_coefficients,
    pair_coefficients,
    side_coefficients,
    unicycle_input_map,
)
from sepcbf.geometry import DomainError, Pose, Superellipsoid, axis_angle, dual_order, pnorm
from sepcbf.oracle import (
    InputDirection,
    PairState,
    finite_difference_hdot,
    flow_pair,
    random_direction,
    random_separated_pair,
)
from sepcbf.separation import Hyperplane, Side, SideIntermediates


def unit_disc_state():
    si, pi = disc(0.0)
    sj, pj = disc(-4.0)
    return PairState(si, pi, sj, pj, Hyperplane([1, 0], -2))


def test_barrier_gradient_examples():
    g = barrier_gradient(SideIntermediates(0.0, np.array([3.0, 4.0])), 2.0)
    assert g.dh_dlambda == 1.0
    np.testing.assert_allclose(g.dh_dmu, [-0.6, -0.8], atol=1e-15)
    g = barrier_gradient(SideIntermediates(0.0, np.array([1.2, 0.0])), 4 / 3)
    np.testing.assert_allclose(g.dh_dmu, [-1, 0], atol=1e-15)
    g = barrier_gradient(SideIntermediates(0.0, np.array([1.0, 1.0])), 2.0)
    np.testing.assert_allclose(g.dh_dmu, [-(0.5**0.5)] * 2, atol=1e-15)
    with pytest.raises(AssertionError):
        barrier_gradient(SideIntermediates(0.0, np.zeros(2)), 2.0)


@pytest.mark.parametrize("q", [4 / 3, 1.5, 2.0, 3.0])
def test_barrier_gradient_has_unit_dual_norm(q, rng):
    p = dual_order(q)
    for _ in range(50):
        g = barrier_gradient(SideIntermediates(0.0, rng.normal(size=3)), q)
        assert pnorm(g.dh_dmu, p) == pytest.approx(1.0, abs=1e-9)


def test_unit_disc_coefficients():
    st = unit_disc_state()
    co = pair_coefficients(st.shape_i, st.pose_i, st.shape_j, st.pose_j, st.plane)
    np.testing.assert_allclose(co.a_i, [0.0], atol=1e-15)
    np.testing.assert_allclose(co.b_i, [1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(co.c_i, [0.0, 0.0], atol=1e-15)
    assert co.d_i == -1.0 and co.d_j == 1.0
    # every component against the finite-difference oracle
    fd = finite_difference_hdot(st, InputDirection(v_i=[1.0, 0.0]), 1e-6, Side.I)
    assert fd == pytest.approx(1.0, abs=1e-6)
    for direction, expected in [
        (InputDirection(w_i=1.0), co.a_i[0]),
        (InputDirection(v_i=[0.0, 1.0]), co.b_i[1]),
        (InputDirection(eta=[0.0, 1.0]), co.c_i[1]),
        (InputDirection(delta=1.0), co.d_i),
    ]:
        assert finite_difference_hdot(st, direction, 1e-6, Side.I) == pytest.approx(expected, abs=1e-6)


def test_hdot_examples():
    st = unit_disc_state()
    co = pair_coefficients(st.shape_i, st.pose_i, st.shape_j, st.pose_j, st.plane)
    z2 = np.zeros(2)
    assert hdot(co, 0.0, z2, 0.0, z2, z2, 0.0) == (0.0, 0.0)
    assert hdot(co, 0.0, [1.0, 0.0], 0.0, z2, z2, 0.0)[0] == pytest.approx(1.0)
    assert hdot(co, 0.0, z2, 0.0, z2, z2, 1.0) == (-1.0, 1.0)


def test_offset_coefficients_have_fixed_signs(rng):
    for _ in range(50):
        st = random_separated_pair(rng, int(rng.choice([2, 3])))
        co = pair_coefficients(st.shape_i, st.pose_i, st.shape_j, st.pose_j, st.plane)
        assert (co.d_i, co.d_j) == (-1.0, 1.0)


def test_dimension_mismatch_is_rejected():
    with pytest.raises(DomainError):
        side_coefficients(Superellipsoid(np.eye(2), 2), Pose.identity(3), Hyperplane([1, 0, 0], 0), Side.I)


def test_random_3d_case_matches_finite_differences(rng):
    R = axis_angle(rng.normal(size=3), 0.9)
    shape = Superellipsoid(np.diag([1.0, 2.0, 3.0]), 2)
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    pose_i = Pose(R, 6.0 * n)
    pose_j = Pose(R.T, -6.0 * n)
    st = PairState(shape, pose_i, shape, pose_j, Hyperplane(n, 0.0))
    assert np.all(st.barriers() > 0)
    co = pair_coefficients(shape, pose_i, shape, pose_j, st.plane)
    for k in range(3):
        e = np.eye(3)[k]
        checks = [
            (InputDirection(w_i=e), co.a_i[k], 0.0),
            (InputDirection(v_i=e), co.b_i[k], 0.0),
            (InputDirection(w_j=e), 0.0, co.a_j[k]),
            (InputDirection(v_j=e), 0.0, co.b_j[k]),
            (InputDirection(eta=e), co.c_i[k], co.c_j[k]),
        ]
        for direction, want_i, want_j in checks:
            fd = finite_difference_hdot(st, direction, 1e-6)
            np.testing.assert_allclose(fd, [want_i, want_j], rtol=1e-5, atol=1e-5)
    np.testing.assert_allclose(finite_difference_hdot(st, InputDirection(delta=1.0)), [-1, 1], atol=1e-8)


def test_combined_direction_is_linear(rng):
    for d in (2, 3):
        st = random_separated_pair(rng, d)
        co = pair_coefficients(st.shape_i, st.pose_i, st.shape_j, st.pose_j, st.plane)
        direction = random_direction(rng, d)
        fd = finite_difference_hdot(st, direction, 1e-6)
        # the flow projects eta onto the tangent space, as the coefficients assume
        np.testing.assert_allclose(hdot(co, *direction.parts(d)), fd, rtol=1e-5, atol=1e-5)


def test_zero_direction_gives_zero_rate(rng):
    st = random_separated_pair(rng, 2)
    np.testing.assert_array_equal(finite_difference_hdot(st, InputDirection(), 1e-6), [0.0, 0.0])


def test_nonholonomic_unit_disc():
    st = unit_disc_state()
    a_v, a_w, c, d = nonholonomic_coefficients(st.shape_i, st.pose_i, st.plane, Side.I, 0.1)
    assert a_v == pytest.approx(1.0, abs=1e-15)
    assert a_w == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(c, [0, 0], atol=1e-15)
    assert d == -1.0
    with pytest.raises(DomainError):
        nonholonomic_coefficients(st.shape_i, st.pose_i, st.plane, Side.I, 0.0)
    with pytest.raises(DomainError):
        nonholonomic_coefficients(Superellipsoid(np.eye(3), 2), Pose.identity(3), Hyperplane([1, 0, 0], -2), Side.I, 0.1)


def test_nonholonomic_small_offset_limit(rng):
    st = random_separated_pair(rng, 2)
    sc = side_coefficients(st.shape_i, st.pose_i, st.plane, Side.I)
    for L in (1e-3, 1e-6, 1e-9):
        a_v, a_w, _, _ = nonholonomic_coefficients(st.shape_i, st.pose_i, st.plane, Side.I, L)
        assert a_v == pytest.approx(sc.b[0], abs=1e-15)
        assert a_w == pytest.approx(sc.a[0], abs=2 * L * abs(sc.b[1]) + 1e-15)
    np.testing.assert_array_equal(unicycle_input_map(0.25), [[0, 1], [1, 0], [0, 0.25]])


def test_nonholonomic_matches_finite_differences(rng):
    for _ in range(20):
        st = random_separated_pair(rng, 2)
        L = 0.1
        for side in (Side.I, Side.J):
            shape, pose = (st.shape_i, st.pose_i) if side is Side.I else (st.shape_j, st.pose_j)
            a_v, a_w, _, _ = nonholonomic_coefficients(shape, pose, st.plane, side, L)
            if side is Side.I:
                dv, dw = InputDirection(v_i=[1.0, 0.0]), InputDirection(w_i=1.0, v_i=[0.0, L])
            else:
                dv, dw = InputDirection(v_j=[1.0, 0.0]), InputDirection(w_j=1.0, v_j=[0.0, L])
            assert finite_difference_hdot(st, dv, 1e-6, side) == pytest.approx(a_v, rel=1e-5, abs=1e-5)
            assert finite_difference_hdot(st, dw, 1e-6, side) == pytest.approx(a_w, rel=1e-5, abs=1e-5)


def test_eta_keeps_the_normal_on_the_sphere(rng):
    for d in (2, 3):
        n = rng.normal(size=d)
        n /= np.linalg.norm(n)
        eta = rng.normal(size=d) * 10
        # d/dt |n|^2 = 2 n^T (I - n n^T) eta
        assert abs(2 * n @ (eta - n * (n @ eta))) < 1e-13


def test_coefficients_are_continuous_along_paths(rng):
    for _ in range(20):
        d = int(rng.choice([2, 3]))
        st = random_separated_pair(rng, d)
        direction = random_direction(rng, d)

        def coeffs(s):
            x = flow_pair(st, direction, s)
            co = pair_coefficients(x.shape_i, x.pose_i, x.shape_j, x.pose_j, x.plane)
            return np.concatenate([co.i.as_vector(), co.j.as_vector()])

        c0 = coeffs(0.0)
        big = np.abs(coeffs(1e-3) - c0).max()
        small = np.abs(coeffs(5e-4) - c0).max()
        assert big < 1e-1
        assert 1.5 < big / small < 2.5
