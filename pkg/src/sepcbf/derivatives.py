"""Gradients and time-derivative coefficients of the separation barriers.

Along the body dynamics ``R' = R hat(w)``, ``rho' = R v`` and the hyperplane
dynamics ``n' = (I - n n^T) eta``, ``gamma' = delta`` each barrier is affine in
the inputs::

    h_i' = a_i . w_i + b_i . v_i + c_i . eta + d_i * delta
    h_j' = a_j . w_j + b_j . v_j + c_j . eta + d_j * delta
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import DomainError, Pose, Superellipsoid, check_dim, hat, pnorm_grad
from .separation import Hyperplane, Side, SideIntermediates, intermediates

J2 = hat(1.0)


@dataclass(frozen=True)
class BarrierGradient:
    dh_dlambda: float
    dh_dmu: np.ndarray


@dataclass(frozen=True)
class SideCoefficients:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.a, self.b, self.c, [self.d]])


@dataclass(frozen=True)
class PairCoefficients:
    i: SideCoefficients
    j: SideCoefficients

    # flat accessors mirror the usual a_i, b_i, ... naming
    a_i = property(lambda self: self.i.a)
    b_i = property(lambda self: self.i.b)
    c_i = property(lambda self: self.i.c)
    d_i = property(lambda self: self.i.d)
    a_j = property(lambda self: self.j.a)
    b_j = property(lambda self: self.j.b)
    c_j = property(lambda self: self.j.c)
    d_j = property(lambda self: self.j.d)


def barrier_gradient(im: SideIntermediates, q: float) -> BarrierGradient:
    return BarrierGradient(1.0, -pnorm_grad(im.mu, q))


def side_coefficients(shape: Superellipsoid, pose: Pose, plane: Hyperplane, side: Side) -> SideCoefficients:
    d = check_dim(shape.dim)
    if pose.dim != d or plane.n.size != d:
        raise DomainError("shape, pose and plane dimensions disagree")
    s = side.sign
    n = plane.n
    grad = barrier_gradient(intermediates(shape, pose, plane, side), shape.q)
    g = grad.dh_dmu
    m = pose.R.T @ n
    P = np.eye(d) - np.outer(n, n)
    b = s * m * grad.dh_dlambda
    c = s * (P @ (pose.rho * grad.dh_dlambda + pose.R @ shape.Q @ g))
    dcoef = -s * grad.dh_dlambda
    if d == 2:
        a = np.array([s * (n @ pose.R @ J2 @ shape.Q @ g)])
    else:
        a = s * (hat(m).T @ shape.Q @ g)
    return SideCoefficients(a, b, c, dcoef)


def pair_coefficients(shape_i, pose_i, shape_j, pose_j, plane: Hyperplane) -> PairCoefficients:
    return PairCoefficients(
        side_coefficients(shape_i, pose_i, plane, Side.I),
        side_coefficients(shape_j, pose_j, plane, Side.J),
    )


def hdot(coeffs: PairCoefficients, w_i, v_i, w_j, v_j, eta, delta) -> tuple[float, float]:
    ci, cj = coeffs.i, coeffs.j
    hi = ci.a @ np.atleast_1d(w_i) + ci.b @ np.asarray(v_i) + ci.c @ np.asarray(eta) + ci.d * delta
    hj = cj.a @ np.atleast_1d(w_j) + cj.b @ np.asarray(v_j) + cj.c @ np.asarray(eta) + cj.d * delta
    return float(hi), float(hj)


def unicycle_input_map(L: float) -> np.ndarray:
    """Map unicycle inputs ``(v, w)`` to body rates ``(w, v_x, v_y)``.

    The geometric center sits a distance ``L`` ahead of the rear axle, so its
    body-frame velocity is ``(v, L w)``.
    """
    return np.array([[0.0, 1.0], [1.0, 0.0], [0.0, L]])


def nonholonomic_coefficients(shape: Superellipsoid, pose: Pose, plane: Hyperplane, side: Side, L: float):
    """Coefficients ``(a_v, a_w, c, d)`` of ``h'`` for a planar unicycle body."""
    if shape.dim != 2:
        raise DomainError("nonholonomic dynamics are planar only")
    if not L > 0.0:
        raise DomainError(f"axle offset must be positive, got {L}")
    sc = side_coefficients(shape, pose, plane, side)
    a_v, a_w = np.concatenate([sc.a, sc.b]) @ unicycle_input_map(L)
    return float(a_v), float(a_w), sc.c, sc.d
