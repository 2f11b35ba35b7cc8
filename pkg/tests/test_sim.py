import numpy as np
import pytest
from conftest import disc

from sepcbf import kernels
from sepcbf.config import AgentConfig, ScenarioConfig, bundled_config
from sepcbf.geometry import Pose, Superellipsoid, rot2
from sepcbf.opt import ClassKappa, max_margin_hyperplane
from sepcbf.sim import (
    BarrierViolation,
    initial_world,
    nominal_fully_actuated,
    nominal_nonholonomic,
    random_scenario,
    run_scenario,
    run_world,
    step,
)
from sepcbf.world import AgentState, ConfigurationError, World


def agent(rho, target, R=np.eye(2), dynamics="fully_actuated", L=0.1):
    shape = Superellipsoid(np.diag([1.2, 0.6]), 4)
    return AgentState(shape, Pose(R, rho), dynamics, L, target)


def test_nominal_fully_actuated_examples():
    np.testing.assert_allclose(nominal_fully_actuated(agent([-8, 0], [8, 0]), 0.3), [0, 4.8, 0], atol=1e-15)
    np.testing.assert_array_equal(nominal_fully_actuated(agent([1, 2], [1, 2]), 0.3), [0, 0, 0])
    np.testing.assert_allclose(nominal_fully_actuated(agent([1, 0], [0, 0], rot2(np.pi)), 1.0), [0, 1, 0], atol=1e-15)
    with pytest.raises(ConfigurationError):
        nominal_fully_actuated(agent([0, 0], None), 0.3)


def test_nominal_nonholonomic_examples():
    a = agent([1, 2], [1, 2], dynamics="nonholonomic")
    np.testing.assert_array_equal(nominal_nonholonomic(a, 0.3), [0, 0])
    np.testing.assert_allclose(nominal_nonholonomic(agent([1, 0], [0, 0], dynamics="nonholonomic"), 0.3, 0.1), [-0.3, 0])
    np.testing.assert_allclose(nominal_nonholonomic(agent([0, 1], [0, 0], dynamics="nonholonomic"), 0.3, 0.1), [0, -3])


def one_pair_world():
    s, p = disc(2.0)
    t, q = disc(-2.0)
    agents = [AgentState(s, p, target=[2, 0]), AgentState(t, q, target=[-2, 0])]
    plane = max_margin_hyperplane(s, p, t, q).plane
    return World.build(agents, [plane])


def test_step_with_zero_inputs_changes_nothing():
    world = one_pair_world()
    after = step(world, np.zeros(6), np.zeros((1, 3)), 1e-3)
    for name in ("R", "rho", "normals", "gammas"):
        np.testing.assert_array_equal(getattr(after, name), getattr(world, name))
    with pytest.raises(ValueError):
        step(world, np.zeros(6), np.zeros((1, 3)), 0.0)


def test_step_rotation_tracks_closed_form():
    world = one_pair_world()
    dt = 1e-3
    inputs = np.array([np.pi, 0, 0, 0, 0, 0])
    for _ in range(1000):
        world = step(world, inputs, np.zeros((1, 3)), dt)
        R = world.R[0]
        assert np.abs(R.T @ R - np.eye(2)).max() <= 1e-9
    angle = np.arctan2(world.R[0][1, 0], world.R[0][0, 0])
    assert abs(abs(angle) - np.pi) < 1e-3
    np.testing.assert_array_equal(world.R[1], np.eye(2))


def test_step_keeps_the_normal_on_the_sphere(rng):
    world = one_pair_world()
    eta = rng.normal(size=2)
    eta *= 10 / np.linalg.norm(eta)
    virtual = np.append(eta, 0.0)[None]
    worst = 0.0
    for _ in range(10_000):
        world = step(world, np.zeros(6), virtual, 1e-3)
        worst = max(worst, abs(np.linalg.norm(world.normals[0]) - 1))
    assert worst <= 1e-12


def test_single_agent_follows_the_proportional_loop(backend):
    a = AgentConfig("solo", ((1.0, 0.0), (0.0, 0.5)), 3.0, ((0.0, -1.0), (1.0, 0.0)), (-3.0, 1.0), target=(2.0, -1.0))
    cfg = ScenarioConfig(2, 1e-3, 2.0, (a,), k_rho=0.7)
    log = run_scenario(cfg)
    assert len(log) == 2001
    rho = np.array([-3.0, 1.0])
    R = np.array(a.R)
    target = np.array(a.target)
    ref = [rho.copy()]
    for _ in range(2000):
        v = -0.7 * R.T @ (rho - target)
        rho = rho + R @ v * 1e-3
        ref.append(rho.copy())
    np.testing.assert_allclose(log.array("rho")[:, 0], ref, atol=1e-7)
    np.testing.assert_allclose(log.array("inputs"), log.array("nominal"), atol=1e-12)


def test_log_shape_and_times():
    cfg = bundled_config("two_vehicle.json")
    short = ScenarioConfig(cfg.dim, cfg.dt, 0.25, cfg.agents, cfg.alpha_gain, cfg.k_rho, cfg.seed)
    log = run_scenario(short)
    assert len(log) == int(np.floor(0.25 / cfg.dt + 1e-9)) + 1
    assert np.all(np.diff(log.t) > 0)
    assert log.min_h > 0
    assert max(log.kkt) <= 1e-8
    assert np.abs(np.linalg.norm(log.array("normals"), axis=2) - 1).max() <= 1e-12


def strip_timing(log):
    return {k: log.array(k) for k in ("t", "R", "rho", "normals", "gammas", "h", "hdot", "inputs", "nominal", "virtual")}


def test_runs_are_deterministic():
    cfg = bundled_config("two_vehicle.json")
    short = ScenarioConfig(cfg.dim, cfg.dt, 0.2, cfg.agents, cfg.alpha_gain, cfg.k_rho, cfg.seed)
    a, b = strip_timing(run_scenario(short)), strip_timing(run_scenario(short))
    for key in a:
        assert np.array_equal(a[key], b[key]), key
    assert random_scenario(5, 7) == random_scenario(5, 7)


def test_backends_agree_on_a_run():
    if "numba" not in __import__("conftest").BACKENDS:
        pytest.skip("numba not installed")
    cfg = bundled_config("sv_nav.json")
    out = {}
    before = kernels.get_backend()
    for name in ("numpy", "numba"):
        kernels.set_backend(name)
        world = initial_world(cfg.agent_states())
        out[name] = run_world(world, 200, cfg.dt, ClassKappa(cfg.alpha_gain), cfg.k_rho)
    kernels.set_backend(before)
    np.testing.assert_allclose(out["numpy"].array("rho"), out["numba"].array("rho"), atol=1e-9)
    np.testing.assert_allclose(out["numpy"].array("h"), out["numba"].array("h"), atol=1e-9)


def test_barrier_violation_carries_the_partial_log():
    cfg = bundled_config("sv_nav.json")
    with pytest.raises(BarrierViolation) as err:
        run_scenario(cfg)
    exc = err.value
    assert exc.log is not None and len(exc.log) == exc.step + 1
    assert exc.log.min_h < -1e-6


def test_random_scenario_layouts():
    cfg = random_scenario(10, 0)
    assert len(cfg.agents) == 10 and cfg.seed == 0
    world = initial_world(cfg.agent_states())
    assert world.scene.n_pairs == 45
    with pytest.raises(ValueError):
        random_scenario(1, 0)


@pytest.mark.slow
def test_euler_error_is_first_order():
    # pose deviation from a dt=1e-4 reference over the first 0.2 s of the navigation scenario
    cfg = bundled_config("sv_nav.json")
    horizon = 0.2

    def positions(dt):
        world = initial_world(cfg.agent_states())
        log = run_world(world, int(round(horizon / dt)), dt, ClassKappa(cfg.alpha_gain), cfg.k_rho)
        return log.array("rho")[:, 0]

    ref = positions(1e-4)
    errs = []
    for dt in (4e-3, 2e-3, 1e-3):
        stride = int(round(dt / 1e-4))
        errs.append(np.abs(positions(dt) - ref[::stride]).max())
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 1.6) & (ratios < 2.6)), ratios
