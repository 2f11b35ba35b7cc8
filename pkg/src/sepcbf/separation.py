"""Separating-hyperplane state and the analytic one-sided separation test.

A plane ``{y : n^T y = gamma}`` keeps body I in the half-space ``n^T y >= gamma``
and body J in ``n^T y <= gamma``. For a superellipsoid with dual order ``q``
the one-sided condition is equivalent to ``lambda - ||mu||_q >= 0`` where

    side I:  lambda =  rho^T n - gamma,   mu =  (R Q)^T n
    side J:  lambda = -rho^T n + gamma,   mu = -(R Q)^T n
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .geometry import Pose, Superellipsoid, pnorm


class Side(enum.Enum):
    I = 1
    J = -1

    @property
    def sign(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class Hyperplane:
    n: np.ndarray
    gamma: float

    def __post_init__(self):
        n = np.array(self.n, dtype=float).reshape(-1)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise ValueError(f"hyperplane normal must be unit length, |n| = {np.linalg.norm(n)}")
        n.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "gamma", float(self.gamma))

    def transformed(self, S, t) -> "Hyperplane":
        """The same plane after the rigid map ``y -> S y + t``."""
        n = np.asarray(S, dtype=float) @ self.n
        return Hyperplane(n, self.gamma + float(n @ np.asarray(t, dtype=float)))


@dataclass(frozen=True)
class SideIntermediates:
    lam: float
    mu: np.ndarray


def intermediates(shape: Superellipsoid, pose: Pose, plane: Hyperplane, side: Side) -> SideIntermediates:
    s = side.sign
    lam = s * (float(pose.rho @ plane.n) - plane.gamma)
    mu = s * ((pose.R @ shape.Q).T @ plane.n)
    return SideIntermediates(lam, mu)


def barrier_value(im: SideIntermediates, q: float) -> float:
    """``h = lambda - ||mu||_q``; non-negative iff the body is on its side of the plane."""
    nrm = pnorm(im.mu, q)
    # mu = 0 needs a zero normal or a singular R Q, both excluded by construction
    assert nrm > 0.0, "mu vanished: corrupted hyperplane or pose state"
    return im.lam - nrm


def side_barrier(shape: Superellipsoid, pose: Pose, plane: Hyperplane, side: Side) -> float:
    return barrier_value(intermediates(shape, pose, plane, side), shape.q)


def barrier_pair(shape_i, pose_i, shape_j, pose_j, plane: Hyperplane) -> tuple[float, float]:
    return (
        side_barrier(shape_i, pose_i, plane, Side.I),
        side_barrier(shape_j, pose_j, plane, Side.J),
    )


def is_separating(shape_i, pose_i, shape_j, pose_j, plane: Hyperplane) -> bool:
    h_i, h_j = barrier_pair(shape_i, pose_i, shape_j, pose_j, plane)
    return h_i >= 0.0 and h_j >= 0.0
