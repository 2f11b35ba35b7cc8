"""Brute-force references used to cross-check the analytic machinery.

Every function here trades speed for obviousness: boundary sampling instead
of dual norms, numerical integration plus central differences instead of the
closed-form barrier derivatives, exhaustive active-set enumeration instead of
the dual active-set solver, and a direction grid instead of the barrier
method for the max-margin plane.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize_scalar

from . import kernels
from .geometry import DomainError, Pose, Superellipsoid, boundary_points, hat, orthonormalize, pnorm, rot2
from .opt.qp import QpProblem
from .separation import Hyperplane, Side, side_barrier

BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class OracleReport:
    quantity: str
    analytic: float
    oracle: float
    abs_error: float
    rel_error: float
    passed: bool
    tolerance: float
    resolution: str = ""

    @classmethod
    def compare(cls, quantity, analytic, oracle, tol, resolution="", relative=False) -> "OracleReport":
        """Report for ``|analytic - oracle| <= tol``; with ``relative`` the error is scaled by ``max(1, |oracle|)``."""
        analytic, oracle = float(analytic), float(oracle)
        err = abs(analytic - oracle)
        rel = err / max(1.0, abs(oracle))
        passed = bool((rel if relative else err) <= tol)
        return cls(quantity, analytic, oracle, err, rel, passed, tol, resolution)

    @classmethod
    def flag(cls, quantity, ok, detail="", count=1.0) -> "OracleReport":
        """Report for a yes/no property; ``count`` is the number of cases it covers."""
        ok = bool(ok)
        return cls(quantity, float(count), float(count) if ok else 0.0, 0.0 if ok else 1.0, 0.0 if ok else 1.0, ok, 0.0, detail)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return (
            f"{mark}  {self.quantity:<44s} analytic={self.analytic:<13.6g} oracle={self.oracle:<13.6g} "
            f"err={self.abs_error:.2e} tol={self.tolerance:.1e} {self.resolution}"
        )


# ---------------------------------------------------------------------------
# sampling references


def sampled_halfspace_margin(shape: Superellipsoid, pose: Pose, plane: Hyperplane, m: int = 2048) -> float:
    """Smallest ``n^T y - gamma`` over ``m`` boundary points of the body."""
    if m < 256:
        raise DomainError(f"sampling margin needs m >= 256, got {m}")
    pts = boundary_points(shape, pose, m)
    return float(np.min(pts @ plane.n - plane.gamma))


def _inside(shape, pose, pts) -> np.ndarray:
    vals = kernels.body_pnorms(pts, pose.R, pose.rho, shape.Qinv, shape.p)
    return vals <= 1.0 + BOUNDARY_TOL


def bodies_overlap(
    shape_i: Superellipsoid, pose_i: Pose, shape_j: Superellipsoid, pose_j: Pose, m: int = 2048
) -> bool:
    """Whether a boundary sample or the center of either body lies in the other.

    Contact counts as overlap: points within ``BOUNDARY_TOL`` of the other
    body's boundary are treated as inside.
    """
    if m < 1024:
        raise DomainError(f"overlap oracle needs m >= 1024, got {m}")
    pi = np.vstack([boundary_points(shape_i, pose_i, m), pose_i.rho])
    pj = np.vstack([boundary_points(shape_j, pose_j, m), pose_j.rho])
    return bool(_inside(shape_j, pose_j, pi).any() or _inside(shape_i, pose_i, pj).any())


# ---------------------------------------------------------------------------
# finite-difference barrier rates


@dataclass(frozen=True)
class PairState:
    """Two bodies and the plane between them (body I on the positive side)."""

    shape_i: Superellipsoid
    pose_i: Pose
    shape_j: Superellipsoid
    pose_j: Pose
    plane: Hyperplane

    @property
    def dim(self) -> int:
        return self.shape_i.dim

    def barriers(self) -> np.ndarray:
        return np.array(
            [
                side_barrier(self.shape_i, self.pose_i, self.plane, Side.I),
                side_barrier(self.shape_j, self.pose_j, self.plane, Side.J),
            ]
        )


@dataclass(frozen=True)
class InputDirection:
    """Constant body-frame rates for both bodies and hyperplane inputs; omitted parts are zero."""

    w_i: np.ndarray | float | None = None
    v_i: np.ndarray | None = None
    w_j: np.ndarray | float | None = None
    v_j: np.ndarray | None = None
    eta: np.ndarray | None = None
    delta: float = 0.0

    def parts(self, d: int):
        r = 1 if d == 2 else 3

        def vec(x, size):
            return np.zeros(size) if x is None else np.atleast_1d(np.asarray(x, dtype=float)).reshape(size)

        return (
            vec(self.w_i, r),
            vec(self.v_i, d),
            vec(self.w_j, r),
            vec(self.v_j, d),
            vec(self.eta, d),
            float(self.delta),
        )


def _flow_pose(pose: Pose, w, v, t) -> Pose:
    """Exact rigid flow ``R' = R hat(w)``, ``rho' = R v`` for constant ``(w, v)``."""
    d = pose.dim
    W = hat(w[0] if d == 2 else w)
    twist = np.zeros((d + 1, d + 1))
    twist[:d, :d] = W
    twist[:d, d] = v
    E = expm(t * twist)
    return Pose(orthonormalize(pose.R @ E[:d, :d]), pose.rho + pose.R @ E[:d, d])


def _flow_normal(n, eta, t, substeps=16):
    """RK4 for ``n' = (I - n n^T) eta`` with constant ``eta``."""

    def f(x):
        return eta - x * (x @ eta)

    h = t / substeps
    x = np.array(n, dtype=float)
    for _ in range(substeps):
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        x = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x / np.linalg.norm(x)


def flow_pair(state: PairState, direction: InputDirection, t: float) -> PairState:
    w_i, v_i, w_j, v_j, eta, delta = direction.parts(state.dim)
    return PairState(
        state.shape_i,
        _flow_pose(state.pose_i, w_i, v_i, t),
        state.shape_j,
        _flow_pose(state.pose_j, w_j, v_j, t),
        Hyperplane(_flow_normal(state.plane.n, eta, t), state.plane.gamma + delta * t),
    )


def finite_difference_hdot(state: PairState, direction: InputDirection, step: float = 1e-6, side=None):
    """Central difference of ``(h_i, h_j)`` along the flow of ``direction``.

    Returns both rates, or only the one for ``side`` (a :class:`Side`).
    """
    if not 1e-8 <= step <= 1e-4:
        raise DomainError(f"finite-difference step must lie in [1e-8, 1e-4], got {step}")
    plus = flow_pair(state, direction, step).barriers()
    minus = flow_pair(state, direction, -step).barriers()
    rates = (plus - minus) / (2.0 * step)
    if side is None:
        return rates
    return float(rates[0 if Side(side) is Side.I else 1])


# ---------------------------------------------------------------------------
# QP by exhaustive active-set enumeration


def brute_force_qp(prob: QpProblem, tol: float = 1e-9):
    """Solve a small strictly convex QP by trying every active set.

    Returns ``(x, active)`` for the feasible KKT point with the lowest
    objective, or ``(None, None)`` if no active set yields one.
    """
    n, m = prob.n, prob.m
    if m > 16:
        raise ValueError("enumeration is limited to 16 constraints")
    best, best_val, best_set = None, np.inf, None
    scale = 1.0 + np.abs(prob.b).max(initial=0.0)
    for k in range(min(m, n) + 1):
        for act in combinations(range(m), k):
            act = list(act)
            Aa = prob.A[act]
            K = np.zeros((n + k, n + k))
            K[:n, :n] = prob.H
            K[:n, n:] = -Aa.T
            K[n:, :n] = Aa
            rhs = np.concatenate([-prob.f, prob.b[act]])
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            x, lam = sol[:n], sol[n:]
            if np.any(lam < -tol * scale) or np.any(prob.A @ x - prob.b < -tol * scale):
                continue
            val = prob.objective(x)
            if val < best_val - 1e-14:
                best, best_val, best_set = x, val, act
    return best, best_set


# ---------------------------------------------------------------------------
# max-margin plane by direction search (planar)


def _reach(M, U, q):
    """``||M^T u||_q`` for each row ``u`` of ``U`` (support extent of a centered body)."""
    a = np.abs(U @ M)
    big = a.max(axis=1)
    safe = np.where(big > 0.0, big, 1.0)
    return big * np.sum((a / safe[:, None]) ** q, axis=1) ** (1.0 / q)


def support_gap(shape_i, pose_i, shape_j, pose_j, u):
    """``min_{G_i} u^T y - max_{G_j} u^T y`` for a unit direction ``u`` or rows of directions."""
    U = np.atleast_2d(np.asarray(u, dtype=float))
    low_i = U @ pose_i.rho - _reach(pose_i.R @ shape_i.Q, U, shape_i.q)
    high_j = U @ pose_j.rho + _reach(pose_j.R @ shape_j.Q, U, shape_j.q)
    gap = low_i - high_j
    return float(gap[0]) if np.ndim(u) == 1 else gap


def grid_max_margin(shape_i, pose_i, shape_j, pose_j, n_angles: int = 3600):
    """Planar max-margin reference.

    For a fixed direction ``u`` the unit-margin problem is solved in closed
    form by ``n_tilde = u / gap(u)``, so ``|n_tilde|^2 = 1 / gap^2``. The best
    grid angle is refined with a bounded scalar search. Returns
    ``(|n_tilde|^2, n)``, or ``(inf, None)`` if no direction separates.
    """
    if shape_i.dim != 2:
        raise DomainError("the grid oracle is planar only")
    th = 2.0 * np.pi * np.arange(n_angles) / n_angles

    def gap(theta):
        return support_gap(shape_i, pose_i, shape_j, pose_j, np.array([np.cos(theta), np.sin(theta)]))

    gaps = support_gap(shape_i, pose_i, shape_j, pose_j, np.column_stack([np.cos(th), np.sin(th)]))
    k = int(np.argmax(gaps))
    width = 2.0 * np.pi / n_angles
    res = minimize_scalar(lambda t: -gap(t), bounds=(th[k] - width, th[k] + width), method="bounded",
                          options={"xatol": 1e-12})
    theta, g = (res.x, -res.fun) if -res.fun > gaps[k] else (th[k], gaps[k])
    if g <= 0.0:
        return np.inf, None
    return 1.0 / g**2, np.array([np.cos(theta), np.sin(theta)])


# ---------------------------------------------------------------------------
# random cases


def random_rotation(rng, d: int) -> np.ndarray:
    if d == 2:
        return rot2(rng.uniform(-np.pi, np.pi))
    Qm, Rm = np.linalg.qr(rng.normal(size=(3, 3)))
    Qm = Qm * np.sign(np.diag(Rm))
    if np.linalg.det(Qm) < 0:
        Qm[:, 0] *= -1.0
    return Qm


def random_shape(rng, d: int, orders=(1.5, 2.0, 3.0, 4.0), size=(0.3, 1.5)) -> Superellipsoid:
    """Random superellipsoid; ``Q`` may be a general (non-diagonal) invertible matrix."""
    U = random_rotation(rng, d)
    Q = U @ np.diag(rng.uniform(*size, size=d))
    return Superellipsoid(Q, float(rng.choice(orders)))


def random_pose(rng, d: int, spread: float = 3.0) -> Pose:
    return Pose(random_rotation(rng, d), rng.uniform(-spread, spread, size=d))


def random_plane(rng, d: int, spread: float = 3.0) -> Hyperplane:
    n = rng.normal(size=d)
    return Hyperplane(n / np.linalg.norm(n), float(rng.uniform(-spread, spread)))


def random_separated_pair(rng, d: int, clearance=(0.05, 1.5)) -> PairState:
    """Two random bodies with a plane placed inside their separating gap.

    Body J is shifted along a random direction ``u`` until the support gap
    reaches a random clearance; the plane sits at a random point in that gap,
    so both barriers are positive.
    """
    shape_i, shape_j = random_shape(rng, d), random_shape(rng, d)
    pose_i = random_pose(rng, d)
    Rj = random_rotation(rng, d)
    u = rng.normal(size=d)
    u /= np.linalg.norm(u)
    # place J's support plane in direction u right at I's, then back off
    reach_i = pnorm((pose_i.R @ shape_i.Q).T @ u, shape_i.q)
    reach_j = pnorm((Rj @ shape_j.Q).T @ u, shape_j.q)
    gap = rng.uniform(*clearance)
    rho_j = pose_i.rho - (reach_i + reach_j + gap) * u
    pose_j = Pose(Rj, rho_j)
    low_i = pose_i.rho @ u - reach_i
    gamma = low_i - rng.uniform(0.1, 0.9) * gap
    return PairState(shape_i, pose_i, shape_j, pose_j, Hyperplane(u, gamma))


def random_direction(rng, d: int, scale: float = 1.0) -> InputDirection:
    r = 1 if d == 2 else 3
    return InputDirection(
        scale * rng.normal(size=r),
        scale * rng.normal(size=d),
        scale * rng.normal(size=r),
        scale * rng.normal(size=d),
        scale * rng.normal(size=d),
        float(scale * rng.normal()),
    )
