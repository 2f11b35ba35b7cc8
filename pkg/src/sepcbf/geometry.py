"""Superellipsoid shapes, rigid poses and p-norm helpers.

A body is the set ``{R x + rho : ||Q^-1 x||_p <= 1}`` with ``Q`` invertible and
``p > 1``. Only planar (d=2) and spatial (d=3) bodies are supported.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SUPPORTED_DIMS = (2, 3)


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


def check_dim(d: int) -> int:
    if d not in SUPPORTED_DIMS:
        raise DomainError(f"dimension must be 2 or 3, got {d}")
    return d


def dual_order(p: float) -> float:
    """Return the Hoelder conjugate ``q`` with ``1/p + 1/q = 1``."""
    p = float(p)
    if not p > 1.0:
        raise DomainError(f"norm order must be > 1, got {p}")
    return p / (p - 1.0)


def pnorm(x, p: float) -> float:
    """p-norm of a vector, scaled by the largest entry to avoid overflow."""
    x = np.abs(np.asarray(x, dtype=float))
    m = x.max()
    if m == 0.0:
        return 0.0
    return float(m * np.sum((x / m) ** p) ** (1.0 / p))


def pnorm_grad(x, p: float) -> np.ndarray:
    """Gradient of ``||x||_p`` for ``x != 0``; lies on the dual-norm unit sphere."""
    x = np.asarray(x, dtype=float)
    nrm = pnorm(x, p)
    assert nrm > 0.0, "p-norm gradient is undefined at the origin"
    return np.sign(x) * (np.abs(x) / nrm) ** (p - 1.0)


def hat(w) -> np.ndarray:
    """Skew-symmetric matrix of a planar rate (scalar) or spatial rate (3-vector)."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if w.size == 1:
        return np.array([[0.0, -w[0]], [w[0], 0.0]])
    if w.size == 3:
        return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])
    raise DomainError(f"hat expects 1 or 3 components, got {w.size}")


def rot2(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def axis_angle(axis, angle: float) -> np.ndarray:
    """Rotation matrix about ``axis`` by ``angle`` (Rodrigues)."""
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    K = hat(k)
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def orthonormalize(R) -> np.ndarray:
    """Nearest rotation matrix (polar factor) of a near-orthogonal matrix."""
    U, _, Vt = np.linalg.svd(R)
    out = U @ Vt
    if np.linalg.det(out) < 0.0:
        U[:, -1] = -U[:, -1]
        out = U @ Vt
    return out


def rotation_dim(d: int) -> int:
    """Number of angular-rate components for dimension ``d`` (1 or 3)."""
    return d * (d - 1) // 2


@dataclass(frozen=True)
class Superellipsoid:
    """Body-frame shape ``{x : ||Q^-1 x||_p <= 1}``."""

    Q: np.ndarray
    p: float
    q: float = field(init=False)
    Qinv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise DomainError(f"Q must be square, got shape {Q.shape}")
        check_dim(Q.shape[0])
        if abs(np.linalg.det(Q)) <= 1e-12:
            raise DomainError("Q must be invertible")
        q = dual_order(self.p)
        Q.setflags(write=False)
        Qinv = np.linalg.inv(Q)
        Qinv.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "Qinv", Qinv)

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    def scaled(self, factor: float) -> "Superellipsoid":
        return Superellipsoid(self.Q * factor, self.p)


@dataclass(frozen=True)
class Pose:
    """Rigid transform body -> inertial: ``y = R x + rho``."""

    R: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        R = np.array(self.R, dtype=float)
        rho = np.array(self.rho, dtype=float).reshape(-1)
        d = check_dim(rho.size)
        if R.shape != (d, d):
            raise DomainError(f"R must be {d}x{d}, got {R.shape}")
        if np.abs(R.T @ R - np.eye(d)).max() > 1e-9 or np.linalg.det(R) <= 0.0:
            raise DomainError("R is not a rotation matrix")
        R.setflags(write=False)
        rho.setflags(write=False)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def identity(cls, d: int) -> "Pose":
        return cls(np.eye(d), np.zeros(d))

    @property
    def dim(self) -> int:
        return self.rho.size


def compose(S, t, pose: Pose) -> Pose:
    """Apply the rigid transform ``y -> S y + t`` after ``pose``."""
    S = np.asarray(S, dtype=float)
    return Pose(S @ pose.R, S @ pose.rho + np.asarray(t, dtype=float))


def body_coords(shape: Superellipsoid, pose: Pose, y) -> np.ndarray:
    """Map inertial points (``(..., d)``) to normalized body coordinates ``Q^-1 R^T (y - rho)``."""
    y = np.asarray(y, dtype=float)
    return (y - pose.rho) @ pose.R @ shape.Qinv.T


def contains(shape: Superellipsoid, pose: Pose, y) -> bool:
    return pnorm(body_coords(shape, pose, y), shape.p) <= 1.0 + 1e-12


def unit_directions(d: int, m: int) -> np.ndarray:
    """``m`` roughly uniform unit vectors: equal angles for d=2, a Fibonacci sphere for d=3."""
    check_dim(d)
    if d == 2:
        th = 2.0 * np.pi * np.arange(m) / m
        return np.column_stack([np.cos(th), np.sin(th)])
    k = np.arange(m) + 0.5
    z = 1.0 - 2.0 * k / m
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = np.pi * (3.0 - np.sqrt(5.0)) * k
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def boundary_points(shape: Superellipsoid, pose: Pose, m: int) -> np.ndarray:
    """Return ``m`` points on the body surface, shape ``(m, d)``.

    Directions are pushed onto the unit p-sphere by ``u / ||u||_p`` so every
    point lies exactly on the boundary regardless of ``p``.
    """
    if m < 8:
        raise DomainError(f"need at least 8 boundary points, got {m}")
    u = unit_directions(shape.dim, m)
    a = np.abs(u)
    scale = a.max(axis=1, keepdims=True)
    norms = scale * np.sum((a / scale) ** shape.p, axis=1, keepdims=True) ** (1.0 / shape.p)
    z = u / norms
    return z @ (pose.R @ shape.Q).T + pose.rho
