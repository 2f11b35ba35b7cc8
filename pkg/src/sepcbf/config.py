"""JSON scenario configuration.

Example::

    {
      "dim": 2, "dt": 0.001, "duration": 10.0,
      "alpha_gain": 20.0, "k_rho": 0.3, "seed": 0, "virtual_weight": 1e-8,
      "agents": [
        {"name": "G0", "Q": [[1.2, 0], [0, 0.6]], "p": 4,
         "R": [[1, 0], [0, 1]], "rho": [-8, 0],
         "dynamics": "fully_actuated", "target": [8, 0]}
      ]
    }

Matrices are row-major nested lists. Rotations are given as matrices and
must lie in SO(d). ``dynamics`` is one of ``fully_actuated``,
``nonholonomic`` (requires ``L``) or ``static``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .geometry import DomainError, Pose, Superellipsoid
from .world import AgentState, Dynamics

try:
    from importlib.resources import files as _resource_files
except ImportError:  # pragma: no cover
    _resource_files = None


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def _matrix(value, d, where):
    try:
        rows = tuple(tuple(float(x) for x in row) for row in value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a {d}x{d} array of numbers") from None
    if len(rows) != d or any(len(r) != d for r in rows):
        raise ConfigError(f"{where}: expected a {d}x{d} array of numbers")
    return rows


def _vector(value, d, where):
    try:
        vec = tuple(float(x) for x in value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected {d} numbers") from None
    if len(vec) != d:
        raise ConfigError(f"{where}: expected {d} numbers, got {len(vec)}")
    return vec


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class AgentConfig:
    name: str
    Q: tuple
    p: float
    R: tuple
    rho: tuple
    dynamics: str = "fully_actuated"
    L: float | None = None
    target: tuple | None = None

    def to_state(self) -> AgentState:
        return AgentState(
            Superellipsoid(self.Q, self.p),
            Pose(self.R, self.rho),
            Dynamics(self.dynamics),
            0.0 if self.L is None else self.L,
            self.target,
            self.name,
        )


@dataclass(frozen=True)
class ScenarioConfig:
    dim: int
    dt: float
    duration: float
    agents: tuple[AgentConfig, ...]
    alpha_gain: float = 20.0
    k_rho: float = 0.3
    seed: int = 0
    virtual_weight: float = 1e-8
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def n_steps(self) -> int:
        return int(self.duration / self.dt + 1e-9)

    def agent_states(self) -> list[AgentState]:
        return [a.to_state() for a in self.agents]

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("extra")
        out["agents"] = []
        for a in self.agents:
            entry = {k: v for k, v in asdict(a).items() if v is not None}
            entry["Q"] = [list(r) for r in a.Q]
            entry["R"] = [list(r) for r in a.R]
            entry["rho"] = list(a.rho)
            if a.target is not None:
                entry["target"] = list(a.target)
            out["agents"].append(entry)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def parse_config(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level: expected a JSON object")
    for key in ("dim", "dt", "duration", "agents"):
        if key not in data:
            raise ConfigError(f"{key}: missing required field")
    d = data["dim"]
    if d not in (2, 3) or isinstance(d, bool):
        raise ConfigError(f"dim: must be 2 or 3, got {d!r}")
    dt = _number(data["dt"], "dt")
    duration = _number(data["duration"], "duration")
    if not dt > 0.0:
        raise ConfigError(f"dt: must be positive, got {dt}")
    if not duration >= dt:
        raise ConfigError(f"duration: must be at least dt, got {duration}")
    alpha_gain = _number(data.get("alpha_gain", 20.0), "alpha_gain")
    if not alpha_gain > 0.0:
        raise ConfigError("alpha_gain: must be positive")
    k_rho = _number(data.get("k_rho", 0.3), "k_rho")
    if not k_rho > 0.0:
        raise ConfigError("k_rho: must be positive")
    virtual_weight = _number(data.get("virtual_weight", 1e-8), "virtual_weight")
    if not virtual_weight > 0.0:
        raise ConfigError("virtual_weight: must be positive")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError(f"seed: expected an integer, got {seed!r}")
    raw_agents = data["agents"]
    if not isinstance(raw_agents, list) or not raw_agents:
        raise ConfigError("agents: expected a non-empty list")

    agents = []
    for k, raw in enumerate(raw_agents):
        where = f"agents[{k}]"
        if not isinstance(raw, dict):
            raise ConfigError(f"{where}: expected an object")
        for key in ("Q", "p", "R", "rho"):
            if key not in raw:
                raise ConfigError(f"{where}.{key}: missing required field")
        dyn = raw.get("dynamics", "fully_actuated")
        try:
            Dynamics(dyn)
        except ValueError:
            raise ConfigError(f"{where}.dynamics: unknown dynamics {dyn!r}") from None
        L = raw.get("L")
        if L is not None:
            L = _number(L, f"{where}.L")
        target = raw.get("target")
        agent = AgentConfig(
            name=str(raw.get("name", f"agent{k}")),
            Q=_matrix(raw["Q"], d, f"{where}.Q"),
            p=_number(raw["p"], f"{where}.p"),
            R=_matrix(raw["R"], d, f"{where}.R"),
            rho=_vector(raw["rho"], d, f"{where}.rho"),
            dynamics=dyn,
            L=L,
            target=None if target is None else _vector(target, d, f"{where}.target"),
        )
        try:
            state = agent.to_state()
        except DomainError as exc:
            raise ConfigError(f"{where}: {exc}") from None
        if state.dynamics is not Dynamics.STATIC and state.target is None:
            raise ConfigError(f"{where}.target: controlled bodies need a target")
        agents.append(agent)
    names = [a.name for a in agents]
    if len(set(names)) != len(names):
        raise ConfigError("agents: names must be unique")
    extra = {k: v for k, v in data.items() if k not in ScenarioConfig.__dataclass_fields__}
    return ScenarioConfig(d, dt, duration, tuple(agents), alpha_gain, k_rho, seed, virtual_weight, extra)


def loads_config(text: str) -> ScenarioConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(data)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return loads_config(text)


def bundled_path(name: str) -> Path:
    """Path of a scenario shipped with the package (``sv_nav.json`` etc.)."""
    return Path(str(_resource_files("sepcbf") / "scenarios" / name))


def bundled_config(name: str) -> ScenarioConfig:
    return load_config(bundled_path(name))
