import numpy as np
import pytest
from conftest import disc

from sepcbf.geometry import DomainError, Pose, Superellipsoid
from sepcbf.opt import QpProblem
from sepcbf.oracle import (
    InputDirection,
    OracleReport,
    bodies_overlap,
    brute_force_qp,
    finite_difference_hdot,
    grid_max_margin,
    random_plane,
    random_pose,
    random_separated_pair,
    random_shape,
    sampled_halfspace_margin,
    support_gap,
)
from sepcbf.separation import Hyperplane, Side, side_barrier


def test_sampled_margin_examples():
    s, p = disc(0.0)
    assert sampled_halfspace_margin(s, p, Hyperplane([1, 0], -2), 4096) == pytest.approx(1.0, abs=2e-3)
    g0 = Superellipsoid(np.diag([1.2, 0.6]), 4)
    assert sampled_halfspace_margin(g0, Pose(np.eye(2), [-8, 0]), Hyperplane([1, 0], -10), 4096) == pytest.approx(
        0.8, abs=2e-3
    )
    with pytest.raises(DomainError):
        sampled_halfspace_margin(s, p, Hyperplane([1, 0], -2), 128)


def test_sampled_margin_random_p3(rng):
    for _ in range(20):
        shape = Superellipsoid(random_shape(rng, 2).Q, 3)
        pose, plane = random_pose(rng, 2), random_plane(rng, 2)
        h = side_barrier(shape, pose, plane, Side.I)
        assert sampled_halfspace_margin(shape, pose, plane, 2048) == pytest.approx(h, abs=2e-3)


def test_sampled_margin_converges_under_doubling(rng):
    ms = [256 * 2**k for k in range(6)]
    gaps = []
    for _ in range(100):
        shape = Superellipsoid(random_shape(rng, 2).Q, float(rng.choice([2.0, 3.0, 4.0])))
        pose, plane = random_pose(rng, 2), random_plane(rng, 2)
        h = side_barrier(shape, pose, plane, Side.I)
        vals = np.array([sampled_halfspace_margin(shape, pose, plane, m) for m in ms])
        # nested angle grids: the sampled minimum can only go down
        assert np.all(np.diff(vals) <= 1e-12)
        assert np.all(vals >= h - 1e-12)
        gaps.append(vals - h)
    worst = np.max(gaps, axis=0)
    assert np.all(worst[:-1] / worst[1:] >= 2.0)


def test_bodies_overlap_examples():
    assert not bodies_overlap(*disc(2.0), *disc(-2.0))
    assert bodies_overlap(*disc(0.5), *disc(-0.5))
    assert bodies_overlap(*disc(1.0), *disc(-1.0))
    # a small body fully inside a big one has no boundary sample inside, but its center is
    big = Superellipsoid(np.eye(2) * 5, 2)
    assert bodies_overlap(big, Pose.identity(2), *disc(0.3))
    with pytest.raises(DomainError):
        bodies_overlap(*disc(2.0), *disc(-2.0), m=512)


def test_bodies_overlap_matches_support_gap(rng):
    th = np.linspace(0, 2 * np.pi, 3600, endpoint=False)
    U = np.column_stack([np.cos(th), np.sin(th)])
    for _ in range(60):
        si, sj = random_shape(rng, 2), random_shape(rng, 2)
        pi, pj = random_pose(rng, 2, 2.0), random_pose(rng, 2, 2.0)
        gap = support_gap(si, pi, sj, pj, U).max()
        if abs(gap) < 1e-2:
            continue
        assert bodies_overlap(si, pi, sj, pj) == (gap < 0)


def test_finite_difference_contract(rng):
    st = random_separated_pair(rng, 2)
    with pytest.raises(DomainError):
        finite_difference_hdot(st, InputDirection(delta=1.0), 1e-3)
    with pytest.raises(DomainError):
        finite_difference_hdot(st, InputDirection(delta=1.0), 1e-9)
    np.testing.assert_allclose(finite_difference_hdot(st, InputDirection(delta=1.0), 1e-6), [-1, 1], atol=1e-8)
    assert finite_difference_hdot(st, InputDirection(delta=1.0), 1e-6, Side.J) == pytest.approx(1.0, abs=1e-8)


def test_brute_force_qp_small_cases():
    x, act = brute_force_qp(QpProblem([[1.0]], [0.0], [[1.0]], [1.0]))
    assert x[0] == pytest.approx(1.0) and act == [0]
    x, act = brute_force_qp(QpProblem(np.eye(2), [-1.0, -1.0], [[-1.0, -1.0]], [-1.0]))
    np.testing.assert_allclose(x, [0.5, 0.5])
    x, act = brute_force_qp(QpProblem(np.eye(1), [0.0], [[1.0], [-1.0]], [1.0, 0.0]))
    assert x is None
    with pytest.raises(ValueError):
        brute_force_qp(QpProblem(np.eye(1), [0.0], np.ones((17, 1)), np.zeros(17)))


def test_grid_max_margin_unit_discs():
    val, n = grid_max_margin(*disc(2.0), *disc(-2.0))
    assert val == pytest.approx(0.25, abs=1e-12)
    np.testing.assert_allclose(n, [1, 0], atol=1e-9)
    val, n = grid_max_margin(*disc(0.5), *disc(-0.5))
    assert val == np.inf and n is None


def test_support_gap_of_discs():
    assert support_gap(*disc(2.0), *disc(-2.0), [1.0, 0.0]) == pytest.approx(2.0)
    gaps = support_gap(*disc(2.0), *disc(-2.0), [[1.0, 0.0], [0.0, 1.0]])
    np.testing.assert_allclose(gaps, [2.0, -2.0])


def test_random_separated_pair_is_separated(rng):
    for _ in range(50):
        st = random_separated_pair(rng, int(rng.choice([2, 3])))
        assert np.all(st.barriers() > 0)
        assert not bodies_overlap(st.shape_i, st.pose_i, st.shape_j, st.pose_j)


def test_report_semantics():
    r = OracleReport.compare("x", 1.0, 1.0 + 1e-9, 1e-8)
    assert r.passed and r.abs_error == pytest.approx(1e-9)
    r = OracleReport.compare("x", 100.0, 101.0, 1e-3, relative=True)
    assert not r.passed and r.rel_error == pytest.approx(1 / 101)
    assert OracleReport.flag("y", True, "ok", 5).passed
    bad = OracleReport.flag("y", False, "broken", 5)
    assert not bad.passed and bad.line().startswith("FAIL")
