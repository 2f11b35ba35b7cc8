"""CBF quadratic program over all bodies and pair hyperplanes.

Decision vector layout: every body's physical inputs in body order (static
bodies contribute nothing), then ``(eta, delta)`` for each pair in pair order.
The objective tracks the nominal physical inputs; the hyperplane inputs only
carry a tiny Tikhonov weight so the minimizer is unique and picks the
(near) minimum-norm hyperplane motion. Each pair adds the two rows
``h_i' >= -alpha(h_i)`` and ``h_j' >= -alpha(h_j)``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..world import ConfigurationError, World
from .qp import QpProblem, QpSolution, solve_qp

VIRTUAL_WEIGHT = 1e-8


@dataclass(frozen=True)
class ClassKappa:
    """Linear extended class-K function ``alpha(h) = gain * h``."""

    gain: float = 20.0
    kind: str = "linear"

    def __post_init__(self):
        if self.kind != "linear":
            raise ValueError(f"unsupported class-K function {self.kind!r}")
        if not self.gain > 0.0:
            raise ValueError("class-K gain must be positive")

    def __call__(self, h):
        return self.gain * np.asarray(h)


@dataclass(frozen=True)
class QpLayout:
    n_phys: int
    n_pairs: int
    dim: int
    input_slices: tuple

    @property
    def n(self) -> int:
        return self.n_phys + self.n_pairs * (self.dim + 1)

    @property
    def m(self) -> int:
        return 2 * self.n_pairs

    def virtual_slice(self, p: int) -> slice:
        start = self.n_phys + p * (self.dim + 1)
        return slice(start, start + self.dim + 1)

    def split(self, x):
        """Split a decision vector into physical inputs and ``(P, d+1)`` hyperplane inputs."""
        x = np.asarray(x)
        return x[: self.n_phys], x[self.n_phys :].reshape(self.n_pairs, self.dim + 1)


def pair_terms(world: World):
    sc = world.scene
    if not (np.all(np.isfinite(world.normals)) and np.all(np.isfinite(world.gammas))):
        raise ConfigurationError("a pair is missing its separating hyperplane")
    return kernels.pair_terms(world.R, world.rho, sc.Q, sc.q, sc.pairs[:, 0], sc.pairs[:, 1], world.normals, world.gammas)


def assemble_cbf_qp(
    world: World, nominal, alpha: ClassKappa, terms=None, virtual_weight: float = VIRTUAL_WEIGHT
) -> QpProblem:
    if not virtual_weight > 0.0:
        raise ConfigurationError("the hyperplane input weight must be positive")
    sc = world.scene
    d = sc.dim
    layout = QpLayout(sc.n_phys, sc.n_pairs, d, tuple(sc.input_slices))
    nominal = np.asarray(nominal, dtype=float).reshape(-1)
    if nominal.size != sc.n_phys:
        raise ConfigurationError(f"nominal input has {nominal.size} entries, bodies take {sc.n_phys}")
    h, a, b, c, dc = pair_terms(world) if terms is None else terms

    n, m = layout.n, layout.m
    A = np.zeros((m, n))
    rates = np.concatenate([a, b], axis=2)  # (P, 2, r + d) coefficients on (w, v)
    for p, pair in enumerate(sc.pairs):
        vs = layout.virtual_slice(p)
        for side in range(2):
            k = pair[side]
            row = 2 * p + side
            A[row, sc.input_slices[k]] = rates[p, side] @ sc.input_maps[k]
            A[row, vs.start : vs.stop - 1] = c[p, side]
            A[row, vs.stop - 1] = dc[p, side]
    rhs = -alpha(h.reshape(-1))
    H = np.diag(np.concatenate([np.ones(sc.n_phys), np.full(n - sc.n_phys, virtual_weight)]))
    f = np.concatenate([-nominal, np.zeros(n - sc.n_phys)])
    return QpProblem(H, f, A, rhs, layout=layout)


@dataclass
class FilterResult:
    inputs: np.ndarray  # physical inputs, stacked in body order
    virtual: np.ndarray  # (P, d+1) hyperplane inputs (eta, delta)
    h: np.ndarray  # (P, 2) barrier values
    hdot: np.ndarray  # (P, 2) barrier rates under the filtered inputs
    solution: QpSolution
    problem: QpProblem
    solve_time: float  # seconds spent in the QP solver


def safety_filter(world: World, nominal, alpha: ClassKappa, virtual_weight: float = VIRTUAL_WEIGHT) -> FilterResult:
    """Minimally modify ``nominal`` so every pair barrier obeys its CBF condition."""
    terms = pair_terms(world)
    prob = assemble_cbf_qp(world, nominal, alpha, terms=terms, virtual_weight=virtual_weight)
    t0 = time.perf_counter()
    sol = solve_qp(prob)
    elapsed = time.perf_counter() - t0
    u, w = prob.layout.split(sol.x)
    hdot = (prob.A @ sol.x).reshape(-1, 2)
    return FilterResult(u, w, terms[0], hdot, sol, prob, elapsed)
