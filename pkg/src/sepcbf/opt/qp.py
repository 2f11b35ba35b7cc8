"""Dense dual active-set solver for strictly convex QPs.

Solves ``min 1/2 x^T H x + f^T x  s.t.  A x >= b`` with ``H`` positive
definite, following Goldfarb and Idnani: start from the unconstrained
minimizer and repeatedly add the most violated constraint, dropping active
constraints whose multipliers would turn negative. Everything runs in the
whitened variable ``y = L^T x`` (``H = L L^T``) so the active-set algebra is a
plain orthogonal projection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular


class QpInfeasible(RuntimeError):
    """The constraint set is empty (or numerically so)."""

    def __init__(self, message: str, constraint: int, violation: float):
        super().__init__(message)
        self.constraint = constraint
        self.violation = violation


@dataclass
class QpProblem:
    H: np.ndarray
    f: np.ndarray
    A: np.ndarray
    b: np.ndarray
    layout: object = None

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=float)
        self.f = np.asarray(self.f, dtype=float).reshape(-1)
        n = self.f.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        if self.H.shape != (n, n):
            raise ValueError(f"H must be {n}x{n}, got {self.H.shape}")
        if self.A.shape[0] != self.b.size:
            raise ValueError("A and b disagree on the number of constraints")

    @property
    def n(self) -> int:
        return self.f.size

    @property
    def m(self) -> int:
        return self.b.size

    def objective(self, x) -> float:
        return float(0.5 * x @ self.H @ x + self.f @ x)


@dataclass
class QpSolution:
    x: np.ndarray
    active_set: list[int]
    multipliers: np.ndarray
    kkt_residual: float
    iterations: int = 0
    extras: dict = field(default_factory=dict)


def kkt_residual(prob: QpProblem, x, lam) -> float:
    """Largest violation among stationarity, primal/dual feasibility, complementarity."""
    slack = prob.A @ x - prob.b
    stat = prob.H @ x + prob.f - prob.A.T @ lam
    parts = [np.abs(stat).max(initial=0.0)]
    parts.append(np.maximum(-slack, 0.0).max(initial=0.0))
    parts.append(np.maximum(-lam, 0.0).max(initial=0.0))
    parts.append(np.abs(lam * slack).max(initial=0.0))
    return float(max(parts))


def _project(N: np.ndarray, v: np.ndarray):
    """Split ``v`` into ``N r`` plus a part orthogonal to the columns of ``N``."""
    if N.shape[1] == 0:
        return v.copy(), np.zeros(0)
    Y, Rr = np.linalg.qr(N)
    coef = Y.T @ v
    r = solve_triangular(Rr, coef)
    return v - Y @ coef, r


def solve_qp(prob: QpProblem, feas_tol: float = 1e-12, max_iter: int | None = None) -> QpSolution:
    H, f, A, b = prob.H, prob.f, prob.A, prob.b
    n, m = prob.n, prob.m
    if np.abs(H - H.T).max(initial=0.0) > 1e-12 * max(1.0, np.abs(H).max(initial=0.0)):
        raise ValueError("H must be symmetric")
    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError as exc:
        raise ValueError("H must be positive definite") from exc

    # whitened problem: min 1/2 |y|^2 + ft^T y  s.t.  At y >= b
    ft = solve_triangular(L, f, lower=True)
    At = solve_triangular(L, A.T, lower=True).T if m else np.zeros((0, n))
    row_norm = np.linalg.norm(At, axis=1)
    row_norm[row_norm == 0.0] = 1.0

    y = -ft
    active: list[int] = []
    u = np.zeros(0)
    max_iter = max_iter or 10 * (m + n) + 50
    it = 0
    while True:
        slack = At @ y - b
        scaled = slack / row_norm
        if m == 0 or scaled.min() >= -feas_tol:
            break
        cand = np.argsort(scaled)
        p = next((int(k) for k in cand if k not in active and scaled[k] < -feas_tol), None)
        if p is None:
            break
        a_p = At[p]
        u_plus = np.append(u, 0.0)
        while True:
            it += 1
            if it > max_iter:
                raise RuntimeError(f"active-set iteration limit ({max_iter}) reached")
            N = At[active].T if active else np.zeros((n, 0))
            z, r = _project(N, a_p)
            # partial step: largest t keeping active multipliers non-negative
            t1, k_drop = np.inf, -1
            for idx in range(len(active)):
                if r[idx] > 1e-14 * max(1.0, np.abs(r).max()):
                    ratio = u_plus[idx] / r[idx]
                    if ratio < t1:
                        t1, k_drop = ratio, idx
            # full step: makes constraint p active
            zz = float(z @ a_p)
            s_p = float(a_p @ y - b[p])
            t2 = -s_p / zz if np.linalg.norm(z) > 1e-12 * np.linalg.norm(a_p) and zz > 0.0 else np.inf
            t = min(t1, t2)
            if not np.isfinite(t):
                raise QpInfeasible(
                    f"constraint {p} cannot be satisfied together with the active set {active}",
                    constraint=p,
                    violation=float(-slack[p]),
                )
            if np.isfinite(t2):
                y = y + t * z
            u_plus[: len(active)] -= t * r
            u_plus[-1] += t
            if t == t2:
                active.append(p)
                u = u_plus
                break
            active.pop(k_drop)
            u_plus = np.delete(u_plus, k_drop)

    # re-solve the equality problem on the final active set to shed drift
    if active:
        N = At[active].T
        Y, Rr = np.linalg.qr(N)
        rhs = b[active] + N.T @ ft
        lam_a = solve_triangular(Rr, solve_triangular(Rr.T, rhs, lower=True))
        y_ref = -ft + N @ lam_a
        if lam_a.min() >= -1e-10 * max(1.0, np.abs(lam_a).max()) and (
            (At @ y_ref - b) / row_norm
        ).min() >= -1e-10:
            y, u = y_ref, np.maximum(lam_a, 0.0)
        # refine against the residual in the original variables: with a tiny
        # weight on some inputs the whitened rows are long and small whitened
        # errors become visible slack errors
        for _ in range(3):
            r = b[active] - A[active] @ solve_triangular(L.T, y, lower=False)
            if np.abs(r).max() <= 1e-15 * (1.0 + np.abs(b[active]).max()):
                break
            dlam = solve_triangular(Rr, solve_triangular(Rr.T, r, lower=True))
            y = y + N @ dlam
            u = u + dlam
    x = solve_triangular(L.T, y, lower=False)
    lam = np.zeros(m)
    lam[active] = u
    return QpSolution(x, sorted(active), lam, kkt_residual(prob, x, lam), it)
