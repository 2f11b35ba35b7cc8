"""Closed-loop simulation: nominal controllers, Euler stepping and scenario runs."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .config import AgentConfig, ScenarioConfig
from .geometry import rotation_dim
from .opt.cbfqp import VIRTUAL_WEIGHT, ClassKappa, safety_filter
from .opt.margin import SeparationFailure, max_margin_hyperplane
from .opt.qp import QpInfeasible
from .world import AgentState, ConfigurationError, Dynamics, World, default_pairs

log = logging.getLogger(__name__)

BARRIER_TOLERANCE = 1e-6


class ScenarioFailure(RuntimeError):
    """A run stopped early; ``log`` holds the records up to the failing step."""

    def __init__(self, message, step, log=None):
        super().__init__(message)
        self.step = step
        self.log = log


class BarrierViolation(ScenarioFailure):
    pass


class QpFailure(ScenarioFailure):
    pass


# ---------------------------------------------------------------------------
# nominal controllers


def _position_error(agent: AgentState) -> np.ndarray:
    if agent.target is None:
        raise ConfigurationError(f"body {agent.name or '?'} has no target")
    return agent.pose.R.T @ (agent.pose.rho - agent.target)


def nominal_fully_actuated(agent: AgentState, k_rho: float) -> np.ndarray:
    """Proportional position controller ``w = 0, v = -k R^T (rho - rho_d)``; returns ``(w, v)``."""
    e = _position_error(agent)
    return np.concatenate([np.zeros(rotation_dim(agent.dim)), -k_rho * e])


def nominal_nonholonomic(agent: AgentState, k_rho: float, L: float | None = None) -> np.ndarray:
    """Unicycle controller for the off-axle point; returns ``(v, w)``."""
    if agent.dim != 2:
        raise ConfigurationError("nonholonomic control is planar only")
    L = agent.L if L is None else L
    e = _position_error(agent)
    return -k_rho * np.array([e[0], e[1] / L])


def nominal_inputs(world: World, k_rho: float) -> np.ndarray:
    out = []
    for k, spec in enumerate(world.scene.agents):
        if spec.dynamics is Dynamics.STATIC:
            continue
        agent = world.agent(k)
        if spec.dynamics is Dynamics.FULLY_ACTUATED:
            out.append(nominal_fully_actuated(agent, k_rho))
        else:
            out.append(nominal_nonholonomic(agent, k_rho))
    return np.concatenate(out) if out else np.zeros(0)


# ---------------------------------------------------------------------------
# integration


def _hat_batch(W: np.ndarray, d: int) -> np.ndarray:
    n = W.shape[0]
    out = np.zeros((n, d, d))
    if d == 2:
        out[:, 0, 1] = -W[:, 0]
        out[:, 1, 0] = W[:, 0]
    else:
        out[:, 0, 1], out[:, 0, 2] = -W[:, 2], W[:, 1]
        out[:, 1, 0], out[:, 1, 2] = W[:, 2], -W[:, 0]
        out[:, 2, 0], out[:, 2, 1] = -W[:, 1], W[:, 0]
    return out


def _polar_batch(M: np.ndarray) -> np.ndarray:
    U, _, Vt = np.linalg.svd(M)
    R = U @ Vt
    flip = np.linalg.det(R) < 0.0
    if np.any(flip):
        U[flip, :, -1] *= -1.0
        R[flip] = U[flip] @ Vt[flip]
    return R


def body_rates(world: World, inputs) -> tuple[np.ndarray, np.ndarray]:
    """Angular and body-frame translational rates ``(N, r)``, ``(N, d)`` from stacked inputs."""
    sc = world.scene
    d = sc.dim
    r = rotation_dim(d)
    inputs = np.asarray(inputs, dtype=float)
    rates = np.zeros((len(sc.agents), r + d))
    for k, (B, sl) in enumerate(zip(sc.input_maps, sc.input_slices)):
        if B.shape[1]:
            rates[k] = B @ inputs[sl]
    return rates[:, :r], rates[:, r:]


def step(world: World, inputs, virtual, dt: float) -> World:
    """One explicit Euler step of bodies and hyperplanes.

    Rotations are re-projected onto SO(d) and normals onto the unit sphere
    after the update.
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    d = world.dim
    W, V = body_rates(world, inputs)
    R, rho = world.R.copy(), world.rho.copy()
    moving = np.any(V != 0.0, axis=1)
    rho[moving] += np.einsum("kij,kj->ki", world.R[moving], V[moving]) * dt
    turning = np.any(W != 0.0, axis=1)
    if np.any(turning):
        Rt = world.R[turning]
        R[turning] = _polar_batch(Rt + Rt @ _hat_batch(W[turning], d) * dt)

    virtual = np.asarray(virtual, dtype=float).reshape(-1, d + 1)
    normals, gammas = world.normals.copy(), world.gammas + virtual[:, d] * dt
    eta = virtual[:, :d]
    active = np.any(eta != 0.0, axis=1)
    if np.any(active):
        n = world.normals[active]
        e = eta[active]
        n = n + (e - n * np.einsum("pi,pi->p", n, e)[:, None]) * dt
        normals[active] = n / np.linalg.norm(n, axis=1, keepdims=True)
    return World(world.scene, R, rho, normals, gammas)


# ---------------------------------------------------------------------------
# scenario runs


@dataclass
class TrajectoryLog:
    names: list[str]
    pairs: np.ndarray
    dim: int
    input_sizes: list[int]
    t: list = field(default_factory=list)
    R: list = field(default_factory=list)
    rho: list = field(default_factory=list)
    normals: list = field(default_factory=list)
    gammas: list = field(default_factory=list)
    h: list = field(default_factory=list)
    hdot: list = field(default_factory=list)
    inputs: list = field(default_factory=list)
    nominal: list = field(default_factory=list)
    virtual: list = field(default_factory=list)
    qp_time: list = field(default_factory=list)
    kkt: list = field(default_factory=list)

    def append(self, t, world: World, res, nominal):
        self.t.append(t)
        self.R.append(world.R.copy())
        self.rho.append(world.rho.copy())
        self.normals.append(world.normals.copy())
        self.gammas.append(world.gammas.copy())
        self.h.append(res.h.copy())
        self.hdot.append(res.hdot.copy())
        self.inputs.append(np.array(res.inputs, dtype=float))
        self.nominal.append(np.array(nominal, dtype=float))
        self.virtual.append(res.virtual.copy())
        self.qp_time.append(res.solve_time)
        self.kkt.append(res.solution.kkt_residual)

    def __len__(self):
        return len(self.t)

    def array(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name))

    @property
    def min_h(self) -> float:
        h = self.array("h")
        return float(h.min()) if h.size else float("inf")

    def pair_label(self, p: int) -> str:
        i, j = self.pairs[p]
        return f"{self.names[i]}|{self.names[j]}"

    def header(self) -> list[str]:
        axes = "xyz"[: self.dim]
        cols = ["t"]
        for name in self.names:
            cols += [f"{name}.{a}" for a in axes]
            cols += [f"{name}.R{r}{c}" for r in range(self.dim) for c in range(self.dim)]
        for p in range(len(self.pairs)):
            lab = self.pair_label(p)
            cols += [f"{lab}.n{a}" for a in axes]
            cols += [f"{lab}.gamma", f"{lab}.h_i", f"{lab}.h_j"]
        for name, size in zip(self.names, self.input_sizes):
            cols += [f"{name}.u{k}" for k in range(size)]
        for name, size in zip(self.names, self.input_sizes):
            cols += [f"{name}.ud{k}" for k in range(size)]
        cols.append("qp_time_ms")
        return cols

    def rows(self):
        for k in range(len(self)):
            row = [self.t[k]]
            for a in range(len(self.names)):
                row += list(self.rho[k][a]) + list(self.R[k][a].ravel())
            for p in range(len(self.pairs)):
                row += list(self.normals[k][p]) + [self.gammas[k][p], self.h[k][p, 0], self.h[k][p, 1]]
            row += list(self.inputs[k]) + list(self.nominal[k])
            row.append(1e3 * self.qp_time[k])
            yield row

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.header())
            for row in self.rows():
                writer.writerow([repr(float(v)) for v in row])

    def summary(self, targets) -> dict:
        rho = self.array("rho")
        qp = 1e3 * self.array("qp_time")
        final = {}
        for k, (name, target) in enumerate(zip(self.names, targets)):
            if target is not None and len(rho):
                final[name] = float(np.linalg.norm(rho[-1, k] - target))
        return {
            "steps": len(self),
            "final_time": float(self.t[-1]) if self.t else 0.0,
            "final_distance_to_target": final,
            "min_h": self.min_h,
            "qp_time_ms_mean": float(qp.mean()) if qp.size else 0.0,
            "qp_time_ms_max": float(qp.max()) if qp.size else 0.0,
            "max_kkt_residual": float(np.max(self.kkt)) if self.kkt else 0.0,
        }


def initial_world(agents, pairs=None) -> World:
    """World with every pair hyperplane seeded by the max-margin solve."""
    agents = list(agents)
    pairs = default_pairs(agents) if pairs is None else np.asarray(pairs).reshape(-1, 2)
    planes = []
    for i, j in pairs:
        try:
            res = max_margin_hyperplane(agents[i].shape, agents[i].pose, agents[j].shape, agents[j].pose)
        except SeparationFailure as exc:
            raise SeparationFailure(f"bodies {agents[i].name or i} and {agents[j].name or j}: {exc}") from None
        planes.append(res.plane)
    return World.build(agents, planes, pairs)


def run_world(
    world: World,
    n_steps: int,
    dt: float,
    alpha: ClassKappa,
    k_rho: float,
    virtual_weight: float = VIRTUAL_WEIGHT,
) -> TrajectoryLog:
    sc = world.scene
    log_ = TrajectoryLog(
        [a.name or f"agent{k}" for k, a in enumerate(sc.agents)],
        sc.pairs.copy(),
        sc.dim,
        [B.shape[1] for B in sc.input_maps],
    )
    for k in range(n_steps + 1):
        t = k * dt
        nominal = nominal_inputs(world, k_rho)
        try:
            res = safety_filter(world, nominal, alpha, virtual_weight)
        except QpInfeasible as exc:
            raise QpFailure(f"step {k} (t={t:.4f}): CBF-QP infeasible: {exc}", k, log_) from None
        log_.append(t, world, res, nominal)
        worst = float(res.h.min()) if res.h.size else np.inf
        if worst < -BARRIER_TOLERANCE:
            p, side = np.unravel_index(np.argmin(res.h), res.h.shape)
            raise BarrierViolation(
                f"step {k} (t={t:.4f}): barrier {'ij'[side]} of pair {log_.pair_label(p)} is {worst:.3e}",
                k,
                log_,
            )
        if k < n_steps:
            world = step(world, res.inputs, res.virtual, dt)
    return log_


def run_scenario(cfg: ScenarioConfig) -> TrajectoryLog:
    world = initial_world(cfg.agent_states())
    log.info("running %d steps of dt=%g with %d pairs", cfg.n_steps, cfg.dt, world.scene.n_pairs)
    return run_world(world, cfg.n_steps, cfg.dt, ClassKappa(cfg.alpha_gain), cfg.k_rho, cfg.virtual_weight)


def random_scenario(
    n_agents: int,
    seed: int,
    box: float | None = None,
    dt: float = 1e-3,
    duration: float = 1.0,
    min_clearance: float = 0.2,
) -> ScenarioConfig:
    """Random position stabilization of planar fully-actuated bodies.

    Shapes, orders, headings, start and goal positions are drawn from a seeded
    RNG; start layouts are redrawn until every pair admits a max-margin plane
    with at least ``min_clearance`` of guaranteed distance.
    """
    if n_agents < 2:
        raise ValueError("need at least two bodies")
    rng = np.random.default_rng(seed)
    box = box if box is not None else 3.0 * np.sqrt(n_agents)
    Qs = [np.diag(rng.uniform(0.3, 0.8, size=2)) for _ in range(n_agents)]
    ps = rng.choice([1.5, 2.0, 3.0, 4.0], size=n_agents)
    radius = max(np.abs(Q).max() for Q in Qs) * np.sqrt(2.0)

    def spread():
        # centers at least two bounding radii apart, drawn by sequential rejection
        pts = []
        while len(pts) < n_agents:
            c = rng.uniform(-box / 2, box / 2, size=2)
            if all(np.linalg.norm(c - o) > 2.0 * radius + min_clearance for o in pts):
                pts.append(c)
        return pts

    for _ in range(1000):
        starts, goals = spread(), spread()
        headings = rng.uniform(-np.pi, np.pi, size=n_agents)
        agents = []
        for k in range(n_agents):
            c, s = np.cos(headings[k]), np.sin(headings[k])
            agents.append(
                AgentConfig(
                    name=f"A{k}",
                    Q=tuple(tuple(r) for r in Qs[k]),
                    p=float(ps[k]),
                    R=((c, -s), (s, c)),
                    rho=tuple(starts[k]),
                    target=tuple(goals[k]),
                )
            )
        states = [a.to_state() for a in agents]
        try:
            ok = all(
                max_margin_hyperplane(states[i].shape, states[i].pose, states[j].shape, states[j].pose).distance_lower_bound
                >= min_clearance
                for i, j in combinations(range(n_agents), 2)
            )
        except SeparationFailure:
            ok = False
        if ok:
            return ScenarioConfig(2, dt, duration, tuple(agents), 20.0, 0.3, seed)
    raise RuntimeError("could not draw a separable random layout")
