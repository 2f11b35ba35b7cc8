"""Maximum-margin separating hyperplane between two superellipsoids.

Solves, over an unnormalized normal ``nt`` and offset ``gt``::

    min  nt^T nt
    s.t. ||(R_i Q_i)^T nt||_{q_i} <= rho_i^T nt - gt - 1
         ||(R_j Q_j)^T nt||_{q_j} <= -rho_j^T nt + gt

Any feasible point puts body I in ``nt^T y >= gt + 1`` and body J in
``nt^T y <= gt``, so the bodies are at least ``1/|nt|`` apart. The optimum is
normalized to the plane halfway between the two supporting planes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import Pose, Superellipsoid, unit_directions
from ..separation import Hyperplane

# clearances below 1/sqrt(NORMAL_BOUND) are rejected as numerical contact
NORMAL_BOUND = 1e8
_BARRIER_START = 1.0
_BARRIER_END = 1e-9
_BARRIER_FACTOR = 10.0


class SeparationFailure(RuntimeError):
    """No separating hyperplane with positive clearance exists (overlap or contact)."""


@dataclass(frozen=True)
class MarginResult:
    n_tilde: np.ndarray
    gamma_tilde: float
    plane: Hyperplane
    distance_lower_bound: float
    constraint_values: tuple[float, float]


def _qnorm_terms(M, nt, q):
    """Value, gradient and Hessian (in ``nt``) of ``||M^T nt||_q``."""
    mu = M.T @ nt
    a = np.abs(mu)
    big = a.max()
    if big == 0.0:
        # only reachable from infeasible iterates; the barrier rejects them anyway
        return 0.0, np.zeros_like(nt), np.zeros((nt.size, nt.size))
    val = big * np.sum((a / big) ** q) ** (1.0 / q)
    rel = a / val
    w = np.sign(mu) * rel ** (q - 1.0)
    # |mu_k|^(q-2) is unbounded at mu_k = 0 when q < 2; a floor keeps Newton finite
    diag = np.maximum(rel, 1e-12) ** (q - 2.0)
    Hmu = (q - 1.0) / val * (np.diag(diag) - np.outer(w, w))
    return val, M @ w, M @ Hmu @ M.T


class _Problem:
    def __init__(self, shape_i, pose_i, shape_j, pose_j):
        self.d = shape_i.dim
        self.Mi = pose_i.R @ shape_i.Q
        self.Mj = pose_j.R @ shape_j.Q
        self.qi, self.qj = shape_i.q, shape_j.q
        self.ri, self.rj = pose_i.rho, pose_j.rho

    def constraints(self, x):
        """Values, gradients and Hessians of both constraints ``g(x) <= 0`` at ``x = (nt, gt)``."""
        d = self.d
        nt = x[:d]
        vi, gi, Hi = _qnorm_terms(self.Mi, nt, self.qi)
        vj, gj, Hj = _qnorm_terms(self.Mj, nt, self.qj)
        vals = np.array([vi - self.ri @ nt + x[d] + 1.0, vj + self.rj @ nt - x[d]])
        grads = np.zeros((2, d + 1))
        grads[0, :d] = gi - self.ri
        grads[0, d] = 1.0
        grads[1, :d] = gj + self.rj
        grads[1, d] = -1.0
        hess = np.zeros((2, d + 1, d + 1))
        hess[0, :d, :d] = Hi
        hess[1, :d, :d] = Hj
        return vals, grads, hess


def _newton_center(x, oracle, max_iter=200, tol=1e-10):
    """Minimize a barrier-augmented objective from a strictly feasible ``x``.

    ``oracle(x)`` returns ``(value, grad, hess)`` or ``None`` outside the domain.
    """
    val, grad, hess = oracle(x)
    for _ in range(max_iter):
        try:
            dx = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            dx = -np.linalg.lstsq(hess, grad, rcond=None)[0]
        dec = -grad @ dx
        # at large barrier weights the objective is ~1e9, so decrements below
        # its rounding level cannot be resolved by the line search
        if dec / 2.0 <= max(tol, 1e-13 * abs(val)):
            break
        step = 1.0
        while step > 1e-14:
            trial = oracle(x + step * dx)
            if trial is not None and trial[0] <= val - 0.25 * step * dec:
                break
            step *= 0.5
        else:
            break
        x = x + step * dx
        val, grad, hess = trial
    return x


def _barrier_oracle(f0, cons, t):
    """``t * f0(x) - sum(log(-g_k(x)))`` with derivatives."""

    def oracle(x):
        g, G, Hg = cons(x)
        if np.any(g >= 0.0):
            return None
        v0, g0, H0 = f0(x)
        inv = -1.0 / g
        val = t * v0 - np.sum(np.log(-g))
        grad = t * g0 + G.T @ inv
        hess = t * H0 + (G.T * inv**2) @ G + np.einsum("k,kij->ij", inv, Hg)
        return val, grad, hess

    return oracle


def _rows_qnorm(Y, q):
    a = np.abs(Y)
    big = a.max(axis=1)
    safe = np.where(big > 0.0, big, 1.0)
    return big * np.sum((a / safe[:, None]) ** q, axis=1) ** (1.0 / q)


def _best_direction(prob: _Problem):
    """Unit direction with the largest support gap among a coarse set."""
    U = unit_directions(prob.d, 64 if prob.d == 2 else 512)
    gaps = U @ (prob.ri - prob.rj) - _rows_qnorm(U @ prob.Mi, prob.qi) - _rows_qnorm(U @ prob.Mj, prob.qj)
    k = int(np.argmax(gaps))
    return U[k], float(gaps[k])


def _feasible_start(prob: _Problem, u):
    """Strictly feasible ``(nt, gt)`` along a direction ``u`` with positive gap ``g``.

    ``nt = (2/g) u`` and ``gt = (2/g) max_{G_j} u^T y + 1/2`` leave slack 1/2
    on both constraints.
    """
    g = _gap_terms(prob, u)[0]
    c = 2.0 / g
    high_j = prob.rj @ u + _qnorm_terms(prob.Mj, u, prob.qj)[0]
    return np.append(c * u, c * high_j + 0.5)


def _gap_terms(prob: _Problem, n):
    """Support gap ``G(n) = min_{G_i} n^T y - max_{G_j} n^T y`` with derivatives (concave in ``n``)."""
    vi, gi, Hi = _qnorm_terms(prob.Mi, n, prob.qi)
    vj, gj, Hj = _qnorm_terms(prob.Mj, n, prob.qj)
    return (prob.ri - prob.rj) @ n - vi - vj, prob.ri - prob.rj - gi - gj, -(Hi + Hj)


def _gap_ascent(prob: _Problem, u0):
    """Maximize the support gap over ``|n| <= 1`` from ``n = u0 / 2``.

    ``G`` is positively homogeneous, so its maximum over the ball is the
    largest separating gap when the bodies are disjoint and 0 otherwise.
    Stops as soon as a direction with a positive gap is found.
    """

    def f0(n):
        val, grad, hess = _gap_terms(prob, n)
        return -val, -grad, -hess

    def cons(n):
        return np.array([n @ n - 1.0]), 2.0 * n[None, :], 2.0 * np.eye(prob.d)[None]

    n = 0.5 * u0
    weight = _BARRIER_START
    while weight >= _BARRIER_END * 0.999:
        n = _newton_center(n, _barrier_oracle(f0, cons, 1.0 / weight))
        length = np.linalg.norm(n)
        if length > 0.0 and _gap_terms(prob, n / length)[0] > 0.0:
            return n / length
        weight /= _BARRIER_FACTOR
    return None


def max_margin_hyperplane(
    shape_i: Superellipsoid, pose_i: Pose, shape_j: Superellipsoid, pose_j: Pose
) -> MarginResult:
    """Max-margin plane with body I on the ``n^T y >= gamma`` side."""
    if not (shape_i.dim == shape_j.dim == pose_i.dim == pose_j.dim):
        raise ValueError("bodies must share one dimension")
    prob = _Problem(shape_i, pose_i, shape_j, pose_j)
    d = prob.d
    u, g = _best_direction(prob)
    if g <= 0.0:
        u = _gap_ascent(prob, u)
        if u is None:
            raise SeparationFailure("bodies overlap, touch, or are closer than the numerical margin")
    x = _feasible_start(prob, u)
    if prob.constraints(x)[0].max() >= 0.0 or np.linalg.norm(x[:d]) ** 2 > NORMAL_BOUND:
        raise SeparationFailure("bodies overlap, touch, or are closer than the numerical margin")

    def f0(x):
        H = np.zeros((d + 1, d + 1))
        H[:d, :d] = 2.0 * np.eye(d)
        return x[:d] @ x[:d], np.append(2.0 * x[:d], 0.0), H

    weight = _BARRIER_START
    while weight >= _BARRIER_END * 0.999:
        x = _newton_center(x, _barrier_oracle(f0, prob.constraints, 1.0 / weight))
        weight /= _BARRIER_FACTOR

    nt, gt = x[:d], float(x[d])
    length = float(np.linalg.norm(nt))
    plane = Hyperplane(nt / length, (2.0 * gt + 1.0) / (2.0 * length))
    g = prob.constraints(x)[0]
    return MarginResult(nt, gt, plane, 1.0 / length, (float(g[0]), float(g[1])))

