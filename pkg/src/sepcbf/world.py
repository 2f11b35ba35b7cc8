"""Array-backed multi-body state: bodies, their input models and pair hyperplanes."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np

from .derivatives import unicycle_input_map
from .geometry import DomainError, Pose, Superellipsoid, check_dim, rotation_dim
from .separation import Hyperplane


class ConfigurationError(ValueError):
    """Inconsistent scenario or world description."""


class Dynamics(str, enum.Enum):
    FULLY_ACTUATED = "fully_actuated"
    NONHOLONOMIC = "nonholonomic"
    STATIC = "static"


@dataclass(frozen=True)
class AgentState:
    shape: Superellipsoid
    pose: Pose
    dynamics: Dynamics = Dynamics.FULLY_ACTUATED
    L: float = 0.0
    target: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "dynamics", Dynamics(self.dynamics))
        if self.shape.dim != self.pose.dim:
            raise DomainError("shape and pose dimensions disagree")
        if self.dynamics is Dynamics.NONHOLONOMIC:
            if self.shape.dim != 2:
                raise DomainError("nonholonomic dynamics are planar only")
            if not self.L > 0.0:
                raise DomainError(f"nonholonomic axle offset must be positive, got {self.L}")
        if self.target is not None:
            target = np.array(self.target, dtype=float).reshape(-1)
            if target.size != self.shape.dim:
                raise DomainError("target dimension disagrees with the body")
            object.__setattr__(self, "target", target)

    @property
    def dim(self) -> int:
        return self.shape.dim

    @property
    def input_dim(self) -> int:
        return self.input_map().shape[1]

    def input_map(self) -> np.ndarray:
        """Matrix taking this body's inputs to body rates ``(w, v)``."""
        d = self.dim
        full = rotation_dim(d) + d
        if self.dynamics is Dynamics.FULLY_ACTUATED:
            return np.eye(full)
        if self.dynamics is Dynamics.NONHOLONOMIC:
            return unicycle_input_map(self.L)
        return np.zeros((full, 0))


@dataclass
class Scene:
    """The parts of a world that never change while it runs."""

    agents: tuple[AgentState, ...]
    pairs: np.ndarray  # (P, 2) body indices, column 0 is side I
    dim: int
    Q: np.ndarray = field(init=False, repr=False)
    q: np.ndarray = field(init=False, repr=False)
    input_maps: list = field(init=False, repr=False)
    input_slices: list = field(init=False, repr=False)
    n_phys: int = field(init=False)

    def __post_init__(self):
        self.pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        self.Q = np.stack([a.shape.Q for a in self.agents])
        self.q = np.array([a.shape.q for a in self.agents])
        self.input_maps = [a.input_map() for a in self.agents]
        self.input_slices = []
        start = 0
        for B in self.input_maps:
            self.input_slices.append(slice(start, start + B.shape[1]))
            start += B.shape[1]
        self.n_phys = start

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)

    @property
    def n_virtual(self) -> int:
        return self.n_pairs * (self.dim + 1)


def default_pairs(agents) -> np.ndarray:
    """Every pair ``i < j`` except static-static ones."""
    out = [
        (i, j)
        for i, j in combinations(range(len(agents)), 2)
        if not (agents[i].dynamics is Dynamics.STATIC and agents[j].dynamics is Dynamics.STATIC)
    ]
    return np.array(out, dtype=np.int64).reshape(-1, 2)


@dataclass
class World:
    scene: Scene
    R: np.ndarray
    rho: np.ndarray
    normals: np.ndarray
    gammas: np.ndarray

    @classmethod
    def build(cls, agents, planes, pairs=None) -> "World":
        agents = tuple(agents)
        if not agents:
            raise ConfigurationError("a world needs at least one body")
        d = check_dim(agents[0].dim)
        if any(a.dim != d for a in agents):
            raise ConfigurationError("all bodies must share one dimension")
        pairs = default_pairs(agents) if pairs is None else np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        planes = list(planes)
        if len(planes) != len(pairs) or any(pl is None for pl in planes):
            raise ConfigurationError("every pair needs a separating hyperplane")
        scene = Scene(agents, pairs, d)
        return cls(
            scene,
            np.stack([a.pose.R for a in agents]),
            np.stack([a.pose.rho for a in agents]),
            np.array([pl.n for pl in planes], dtype=float).reshape(-1, d),
            np.array([pl.gamma for pl in planes], dtype=float),
        )

    @property
    def dim(self) -> int:
        return self.scene.dim

    def pose(self, k: int) -> Pose:
        return Pose(self.R[k], self.rho[k])

    def plane(self, p: int) -> Hyperplane:
        return Hyperplane(self.normals[p], self.gammas[p])

    def agent(self, k: int) -> AgentState:
        return replace(self.scene.agents[k], pose=self.pose(k))

    def copy(self) -> "World":
        return World(self.scene, self.R.copy(), self.rho.copy(), self.normals.copy(), self.gammas.copy())
