"""Oracle property suites behind ``sepcbf check``.

Each suite draws seeded random cases, compares the analytic code against a
brute-force reference from :mod:`sepcbf.oracle` and returns a list of
:class:`~sepcbf.oracle.OracleReport` (one per checked quantity, carrying the
worst case). ``SUITES`` maps suite names to callables taking ``(rng, level)``.
"""

from __future__ import annotations

import time

import numpy as np

from . import kernels
from .derivatives import nonholonomic_coefficients, pair_coefficients
from .geometry import Pose, Superellipsoid, unit_directions
from .opt.cbfqp import ClassKappa, assemble_cbf_qp
from .opt.margin import SeparationFailure, max_margin_hyperplane
from .opt.qp import QpProblem, solve_qp
from .oracle import (
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
from .separation import Hyperplane, Side, is_separating, side_barrier
from .sim import step
from .world import AgentState, World

ORDERS = (1.5, 2.0, 3.0, 4.0)

SIZES = {
    "fast": dict(margin=100, pairs=100, deriv=20, validity=100, drift=10_000, qp=40, grid=10),
    "full": dict(margin=500, pairs=500, deriv=200, validity=500, drift=10_000, qp=200, grid=50),
}


def _worst(name, errors, tol, resolution, relative=False):
    errors = np.asarray(errors, dtype=float)
    k = int(np.argmax(errors)) if errors.size else 0
    worst = float(errors[k]) if errors.size else 0.0
    return OracleReport(name, worst, 0.0, worst, worst, bool(worst <= tol), tol, resolution)


# ---------------------------------------------------------------------------


def margin_suite(rng, n_cases: int, m: int = 2048, d: int = 2):
    """Single-side condition against boundary sampling on random triples."""
    sign_bad, errs = 0, []
    for _ in range(n_cases):
        shape, pose = random_shape(rng, d), random_pose(rng, d)
        # planes near the body so that both signs occur
        plane = random_plane(rng, d)
        plane = Hyperplane(plane.n, float(pose.rho @ plane.n + rng.uniform(-2.5, 2.5)))
        h = side_barrier(shape, pose, plane, Side.I)
        s = sampled_halfspace_margin(shape, pose, plane, m)
        errs.append(abs(h - s))
        if abs(h) > 1e-3 and np.sign(h) != np.sign(s):
            sign_bad += 1
    return [
        OracleReport.flag(
            f"single-side sign agreement d={d} (|h|>1e-3)", sign_bad == 0, f"{sign_bad}/{n_cases} disagree", n_cases
        ),
        _worst(f"single-side margin vs sampling d={d}", errs, 2e-3, f"m={m}, {n_cases} cases"),
    ]


def overlap_suite(rng, n_cases: int, m: int = 2048, band: float = 1e-2):
    """Max-margin feasibility against the overlap oracle on planar pairs.

    Pairs whose clearance (largest support gap over a direction grid) lies in
    ``(-inf, band]`` without a sampled overlap are redrawn: sampling cannot
    settle near-contact cases.
    """
    bad, counted, overlaps, skipped = [], 0, 0, 0
    while counted < n_cases:
        shape_i, shape_j = random_shape(rng, 2), random_shape(rng, 2)
        pose_i, pose_j = random_pose(rng, 2, 2.0), random_pose(rng, 2, 2.0)
        hit = bodies_overlap(shape_i, pose_i, shape_j, pose_j, m)
        gap = float(support_gap(shape_i, pose_i, shape_j, pose_j, unit_directions(2, 3600)).max())
        if not hit and gap <= band:
            skipped += 1
            continue
        counted += 1
        try:
            res = max_margin_hyperplane(shape_i, pose_i, shape_j, pose_j)
            feasible = is_separating(shape_i, pose_i, shape_j, pose_j, res.plane)
        except SeparationFailure:
            feasible = False
        overlaps += hit
        if feasible == hit:
            bad.append(counted)
    detail = f"{overlaps} overlapping, {n_cases - overlaps} clear, {skipped} near-contact redrawn"
    return [OracleReport.flag("max-margin feasibility vs overlap oracle", not bad, detail, n_cases)]


def _basis_directions(d: int):
    r = 1 if d == 2 else 3
    sizes = [("w_i", r), ("v_i", d), ("w_j", r), ("v_j", d), ("eta", d), ("delta", 1)]
    out = []
    for name, size in sizes:
        for k in range(size):
            e = np.zeros(size)
            e[k] = 1.0
            out.append(InputDirection(**{name: e if name != "delta" else 1.0}))
    return out


def _analytic_rates(co, d):
    r = 1 if d == 2 else 3
    zi, zj = np.zeros(r + d), np.zeros(r + d)
    row_i = np.concatenate([co.a_i, co.b_i, zi, co.c_i, [co.d_i]])
    row_j = np.concatenate([zj, co.a_j, co.b_j, co.c_j, [co.d_j]])
    return np.vstack([row_i, row_j])


def derivative_suite(rng, n_per_combo: int, step_size: float = 1e-6):
    """Every barrier-rate coefficient against central differences of the exact flow."""
    reports = []
    for d in (2, 3):
        for p in ORDERS:
            errs = []
            for _ in range(n_per_combo):
                st = random_separated_pair(rng, d)
                st = type(st)(
                    Superellipsoid(st.shape_i.Q, p), st.pose_i, Superellipsoid(st.shape_j.Q, p), st.pose_j, st.plane
                )
                co = pair_coefficients(st.shape_i, st.pose_i, st.shape_j, st.pose_j, st.plane)
                ana = _analytic_rates(co, d)
                fd = np.column_stack([finite_difference_hdot(st, e, step_size) for e in _basis_directions(d)])
                errs.append(np.max(np.abs(ana - fd) / np.maximum(1.0, np.abs(fd))))
            reports.append(_worst(f"barrier-rate coefficients d={d} p={p:g}", errs, 1e-5, f"{n_per_combo} states, step={step_size:g}"))
    errs = []
    for _ in range(n_per_combo):
        L = rng.uniform(0.05, 0.5)
        st = random_separated_pair(rng, 2)
        for side in (Side.I, Side.J):
            shape, pose = (st.shape_i, st.pose_i) if side is Side.I else (st.shape_j, st.pose_j)
            a_v, a_w, _, _ = nonholonomic_coefficients(shape, pose, st.plane, side, L)
            if side is Side.I:
                dirs = [InputDirection(v_i=[1.0, 0.0]), InputDirection(w_i=1.0, v_i=[0.0, L])]
            else:
                dirs = [InputDirection(v_j=[1.0, 0.0]), InputDirection(w_j=1.0, v_j=[0.0, L])]
            fd = np.array([finite_difference_hdot(st, e, step_size, side) for e in dirs])
            ana = np.array([a_v, a_w])
            errs.append(np.max(np.abs(ana - fd) / np.maximum(1.0, np.abs(fd))))
    reports.append(_worst("unicycle rate coefficients (a_v, a_w)", errs, 1e-5, f"{n_per_combo} states"))
    return reports


def _pair_world(st, dynamics="fully_actuated"):
    agents = [
        AgentState(st.shape_i, st.pose_i, dynamics, 0.1, st.pose_i.rho, "I"),
        AgentState(st.shape_j, st.pose_j, dynamics, 0.1, st.pose_j.rho, "J"),
    ]
    return World.build(agents, [st.plane])


def validity_suite(rng, n_cases: int, drift_steps: int = 10_000):
    """Zero input feasibility, unit offset coefficients, nonzero mu and normal drift."""
    infeasible, dmax, mumin = 0, 0.0, np.inf
    alpha = ClassKappa(20.0)
    for k in range(n_cases):
        d = 2 if k % 2 == 0 else 3
        st = random_separated_pair(rng, d)
        w = _pair_world(st)
        prob = assemble_cbf_qp(w, np.zeros(w.scene.n_phys), alpha)
        if np.any(prob.A @ np.zeros(prob.n) < prob.b):
            infeasible += 1
        _, _, _, _, dc = kernels.pair_terms(w.R, w.rho, w.scene.Q, w.scene.q, w.scene.pairs[:, 0], w.scene.pairs[:, 1], w.normals, w.gammas)
        dmax = max(dmax, float(np.max(np.abs(np.abs(dc) - 1.0))))
        for shape, pose, s in ((st.shape_i, st.pose_i, 1.0), (st.shape_j, st.pose_j, -1.0)):
            mumin = min(mumin, float(np.linalg.norm(s * (pose.R @ shape.Q).T @ st.plane.n)))
    # normal drift under a strong hyperplane input
    st = random_separated_pair(rng, 2)
    w = _pair_world(st)
    eta = rng.normal(size=2)
    eta *= 10.0 / np.linalg.norm(eta)
    virt = np.append(eta, 0.0)[None, :]
    zero = np.zeros(w.scene.n_phys)
    drift = 0.0
    for _ in range(drift_steps):
        w = step(w, zero, virt, 1e-3)
        drift = max(drift, abs(float(np.linalg.norm(w.normals[0])) - 1.0))
    return [
        OracleReport.flag("zero input feasible at safe states", infeasible == 0, f"{infeasible}/{n_cases} infeasible", n_cases),
        OracleReport.compare("| |d_i|,|d_j| - 1 |", dmax, 0.0, 1e-15, f"{n_cases} states"),
        OracleReport.flag("||mu||_2 > 0 at sampled states", mumin > 0.0, f"min ||mu||_2 = {mumin:.3g}", n_cases),
        OracleReport.compare("normal drift | ||n|| - 1 |", drift, 0.0, 1e-9, f"{drift_steps} steps, |eta|=10, dt=1e-3"),
    ]


def random_qp(rng, n: int, m: int) -> QpProblem:
    """Strictly convex QP with a feasible region around a random point."""
    G = rng.normal(size=(n, n))
    H = G @ G.T + 0.1 * np.eye(n)
    f = rng.normal(size=n) * 3.0
    A = rng.normal(size=(m, n))
    x0 = rng.normal(size=n)
    b = A @ x0 - rng.uniform(0.0, 1.0, size=m) * (rng.uniform(size=m) < 0.7)
    return QpProblem(H, f, A, b)


def qp_suite(rng, n_cases: int, n_max: int = 20, m_max: int = 12):
    """Dual active-set solver against exhaustive active-set enumeration."""
    errs, missing = [], 0
    for _ in range(n_cases):
        n = int(rng.integers(2, n_max + 1))
        m = int(rng.integers(1, m_max + 1))
        prob = random_qp(rng, n, m)
        ref, _ = brute_force_qp(prob)
        if ref is None:
            missing += 1
            continue
        x = solve_qp(prob).x
        errs.append(float(np.max(np.abs(x - ref))))
    return [
        _worst("QP solution vs active-set enumeration", errs, 1e-7, f"{n_cases} QPs, n<={n_max}, m<={m_max}"),
        OracleReport.flag("enumeration found a KKT point", missing == 0, f"{missing} without", n_cases),
    ]


def margin_optimality_suite(rng, n_cases: int):
    """Analytic unit-disc case and random planar pairs against the direction grid."""
    disc = Superellipsoid(np.eye(2), 2.0)
    res = max_margin_hyperplane(disc, Pose(np.eye(2), [2.0, 0.0]), disc, Pose(np.eye(2), [-2.0, 0.0]))
    reports = [
        OracleReport.compare("discs at (+-2,0): n_x", res.plane.n[0], 1.0, 1e-6),
        OracleReport.compare("discs at (+-2,0): n_y", res.plane.n[1], 0.0, 1e-6),
        OracleReport.compare("discs at (+-2,0): gamma", res.plane.gamma, 0.0, 1e-6),
        OracleReport.compare("discs at (+-2,0): distance bound", res.distance_lower_bound, 2.0, 1e-6),
    ]
    errs = []
    for _ in range(n_cases):
        st = random_separated_pair(rng, 2, clearance=(0.1, 1.5))
        mm = max_margin_hyperplane(st.shape_i, st.pose_i, st.shape_j, st.pose_j)
        ref, _ = grid_max_margin(st.shape_i, st.pose_i, st.shape_j, st.pose_j)
        ana = float(mm.n_tilde @ mm.n_tilde)
        errs.append(abs(ana - ref) / max(1.0, ref))
    reports.append(_worst("max-margin |n~|^2 vs direction grid", errs, 1e-6, f"{n_cases} pairs, 3600 angles"))
    return reports


SUITES = {
    "margin": lambda rng, z: margin_suite(rng, z["margin"]),
    # a sphere needs many more samples than a circle for the same spacing
    "margin-3d": lambda rng, z: margin_suite(rng, z["margin"] // 5, m=32768, d=3),
    "overlap": lambda rng, z: overlap_suite(rng, z["pairs"]),
    "derivatives": lambda rng, z: derivative_suite(rng, z["deriv"]),
    "validity": lambda rng, z: validity_suite(rng, z["validity"], z["drift"]),
    "qp": lambda rng, z: qp_suite(rng, z["qp"]),
    "max-margin": lambda rng, z: margin_optimality_suite(rng, z["grid"]),
}


def run_checks(level: str = "fast", seed: int = 0, suites=None, out=None):
    """Run the named suites (all by default); returns ``(reports, elapsed)`` per suite as a dict."""
    if level not in SIZES:
        raise ValueError(f"unknown level {level!r}")
    sizes = SIZES[level]
    results = {}
    for name in suites or SUITES:
        rng = np.random.default_rng([seed, list(SUITES).index(name)])
        t0 = time.perf_counter()
        reports = SUITES[name](rng, sizes)
        results[name] = (reports, time.perf_counter() - t0)
        if out is not None:
            out(f"[{name}] {results[name][1]:.1f} s")
            for rep in reports:
                out("  " + rep.line())
    return results
