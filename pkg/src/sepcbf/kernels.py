"""Batched numeric kernels on the simulation hot path.

Each kernel has a loop implementation (compiled with numba when available)
and a vectorized numpy implementation with identical semantics. The public
functions dispatch on :data:`sepcbf._accel.USE_NUMBA`; :func:`set_backend`
switches at runtime.

Array conventions (``N`` bodies, ``P`` pairs, ``d`` in {2, 3}, ``r = d(d-1)/2``):

``R``      (N, d, d) rotations
``rho``    (N, d)    positions
``Q``      (N, d, d) shape matrices
``q``      (N,)      dual norm orders
``pi, pj`` (P,)      body indices on side I / side J of each pair
``nrm``    (P, d)    unit normals
``gam``    (P,)      offsets
"""

from __future__ import annotations

import numpy as np

from . import _accel
from ._accel import njit

_backend = "numba" if _accel.USE_NUMBA else "numpy"


def set_backend(name: str) -> None:
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not _accel.NUMBA_AVAILABLE:
        raise RuntimeError("numba is not installed")
    _backend = name


def get_backend() -> str:
    return _backend


# ---------------------------------------------------------------------------
# pair barrier values and derivative coefficients


@njit
def _pair_terms_loops(R, rho, Q, q, pi, pj, nrm, gam):
    P = nrm.shape[0]
    d = nrm.shape[1]
    r = (d * (d - 1)) // 2
    h = np.empty((P, 2))
    a = np.empty((P, 2, r))
    b = np.empty((P, 2, d))
    c = np.empty((P, 2, d))
    dc = np.empty((P, 2))
    m = np.empty(d)
    mu = np.empty(d)
    g = np.empty(d)
    qg = np.empty(d)
    w = np.empty(d)
    for p in range(P):
        for side in range(2):
            if side == 0:
                k = pi[p]
                s = 1.0
            else:
                k = pj[p]
                s = -1.0
            lam = 0.0
            for u in range(d):
                lam += rho[k, u] * nrm[p, u]
            lam = s * (lam - gam[p])
            # m = R^T n, mu = s Q^T m
            for u in range(d):
                acc = 0.0
                for v in range(d):
                    acc += R[k, v, u] * nrm[p, v]
                m[u] = acc
            big = 0.0
            for u in range(d):
                acc = 0.0
                for v in range(d):
                    acc += Q[k, v, u] * m[v]
                mu[u] = s * acc
                if abs(mu[u]) > big:
                    big = abs(mu[u])
            qk = q[k]
            tot = 0.0
            for u in range(d):
                tot += (abs(mu[u]) / big) ** qk
            norm = big * tot ** (1.0 / qk)
            h[p, side] = lam - norm
            for u in range(d):
                sg = 1.0 if mu[u] > 0.0 else (-1.0 if mu[u] < 0.0 else 0.0)
                g[u] = -sg * (abs(mu[u]) / norm) ** (qk - 1.0)
            for u in range(d):
                acc = 0.0
                for v in range(d):
                    acc += Q[k, u, v] * g[v]
                qg[u] = acc
            # w = rho + R Q g, then c = s (I - n n^T) w
            ndotw = 0.0
            for u in range(d):
                acc = rho[k, u]
                for v in range(d):
                    acc += R[k, u, v] * qg[v]
                w[u] = acc
                ndotw += nrm[p, u] * acc
            for u in range(d):
                c[p, side, u] = s * (w[u] - nrm[p, u] * ndotw)
                b[p, side, u] = s * m[u]
            dc[p, side] = -s
            if d == 2:
                a[p, side, 0] = s * (qg[0] * m[1] - qg[1] * m[0])
            else:
                a[p, side, 0] = s * (qg[1] * m[2] - qg[2] * m[1])
                a[p, side, 1] = s * (qg[2] * m[0] - qg[0] * m[2])
                a[p, side, 2] = s * (qg[0] * m[1] - qg[1] * m[0])
    return h, a, b, c, dc


def _pair_terms_numpy(R, rho, Q, q, pi, pj, nrm, gam):
    P, d = nrm.shape
    r = d * (d - 1) // 2
    h = np.empty((P, 2))
    a = np.empty((P, 2, r))
    b = np.empty((P, 2, d))
    c = np.empty((P, 2, d))
    dc = np.empty((P, 2))
    for side, (idx, s) in enumerate(((pi, 1.0), (pj, -1.0))):
        Rk, Qk, rk, qk = R[idx], Q[idx], rho[idx], q[idx][:, None]
        lam = s * (np.einsum("pi,pi->p", rk, nrm) - gam)
        m = np.einsum("pji,pj->pi", Rk, nrm)
        mu = s * np.einsum("pji,pj->pi", Qk, m)
        big = np.abs(mu).max(axis=1, keepdims=True)
        norm = big * np.sum((np.abs(mu) / big) ** qk, axis=1, keepdims=True) ** (1.0 / qk)
        g = -np.sign(mu) * (np.abs(mu) / norm) ** (qk - 1.0)
        qg = np.einsum("pij,pj->pi", Qk, g)
        w = rk + np.einsum("pij,pj->pi", Rk, qg)
        h[:, side] = lam - norm[:, 0]
        c[:, side] = s * (w - nrm * np.einsum("pi,pi->p", nrm, w)[:, None])
        b[:, side] = s * m
        dc[:, side] = -s
        if d == 2:
            a[:, side, 0] = s * (qg[:, 0] * m[:, 1] - qg[:, 1] * m[:, 0])
        else:
            a[:, side] = s * np.cross(qg, m)
    return h, a, b, c, dc


def pair_terms(R, rho, Q, q, pi, pj, nrm, gam):
    """Barrier values and derivative coefficients for every pair.

    Returns ``(h, a, b, c, dcoef)`` with shapes ``(P, 2)``, ``(P, 2, r)``,
    ``(P, 2, d)``, ``(P, 2, d)``, ``(P, 2)``; index 0 on the second axis is
    side I and index 1 side J.
    """
    args = (
        np.ascontiguousarray(R, dtype=float),
        np.ascontiguousarray(rho, dtype=float),
        np.ascontiguousarray(Q, dtype=float),
        np.ascontiguousarray(q, dtype=float),
        np.ascontiguousarray(pi, dtype=np.int64),
        np.ascontiguousarray(pj, dtype=np.int64),
        np.ascontiguousarray(nrm, dtype=float),
        np.ascontiguousarray(gam, dtype=float),
    )
    if _backend == "numba":
        return _pair_terms_loops(*args)
    return _pair_terms_numpy(*args)


# ---------------------------------------------------------------------------
# p-norm of many points in a body frame


@njit
def _body_pnorms_loops(Y, R, rho, Qinv, p):
    M, d = Y.shape
    out = np.empty(M)
    x = np.empty(d)
    z = np.empty(d)
    for k in range(M):
        for u in range(d):
            acc = 0.0
            for v in range(d):
                acc += R[v, u] * (Y[k, v] - rho[v])
            x[u] = acc
        big = 0.0
        for u in range(d):
            acc = 0.0
            for v in range(d):
                acc += Qinv[u, v] * x[v]
            z[u] = abs(acc)
            if z[u] > big:
                big = z[u]
        if big == 0.0:
            out[k] = 0.0
            continue
        tot = 0.0
        for u in range(d):
            tot += (z[u] / big) ** p
        out[k] = big * tot ** (1.0 / p)
    return out


def _body_pnorms_numpy(Y, R, rho, Qinv, p):
    z = np.abs((Y - rho) @ R @ Qinv.T)
    big = z.max(axis=1)
    safe = np.where(big > 0.0, big, 1.0)
    return np.where(big > 0.0, big * np.sum((z / safe[:, None]) ** p, axis=1) ** (1.0 / p), 0.0)


def body_pnorms(Y, R, rho, Qinv, p: float) -> np.ndarray:
    """``||Q^-1 R^T (y - rho)||_p`` for every row ``y`` of ``Y``."""
    args = (
        np.ascontiguousarray(Y, dtype=float),
        np.ascontiguousarray(R, dtype=float),
        np.ascontiguousarray(rho, dtype=float),
        np.ascontiguousarray(Qinv, dtype=float),
        float(p),
    )
    if _backend == "numba":
        return _body_pnorms_loops(*args)
    return _body_pnorms_numpy(*args)
