"""Compare the numba and numpy backends of the hot kernels.

Times ``pair_terms`` (barrier values and rate coefficients for all pairs),
``body_pnorms`` (body-frame p-norms of sample points) and one full safety
filter step on random layouts, and checks that both backends agree.

    python3 benchmarks/bench_kernels.py [--repeat 50]
"""

import argparse
import timeit
from itertools import combinations

import numpy as np

from sepcbf import kernels
from sepcbf.opt.cbfqp import ClassKappa, safety_filter
from sepcbf.oracle import random_pose, random_shape
from sepcbf.sim import initial_world, nominal_inputs, random_scenario


def pair_inputs(rng, n_bodies, d=2):
    shapes = [random_shape(rng, d) for _ in range(n_bodies)]
    poses = [random_pose(rng, d, spread=5.0) for _ in range(n_bodies)]
    pairs = np.array(list(combinations(range(n_bodies), 2)), dtype=np.int64)
    nrm = rng.normal(size=(len(pairs), d))
    nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
    return (
        np.array([p.R for p in poses]),
        np.array([p.rho for p in poses]),
        np.array([s.Q for s in shapes]),
        np.array([s.q for s in shapes]),
        pairs[:, 0],
        pairs[:, 1],
        nrm,
        rng.normal(size=len(pairs)),
    )


def pnorm_inputs(rng, m, d=2):
    shape, pose = random_shape(rng, d), random_pose(rng, d)
    return rng.normal(size=(m, d)) * 3.0, pose.R, pose.rho, shape.Qinv, shape.p


def best_time(fn, repeat):
    fn()  # compile / warm caches
    number = max(1, int(0.02 / max(timeit.timeit(fn, number=1), 1e-7)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def compare(label, fn, args, repeat):
    times, outs = {}, {}
    for backend in ("numpy", "numba"):
        kernels.set_backend(backend)
        outs[backend] = fn(*args)
        times[backend] = best_time(lambda: fn(*args), repeat)
    a, b = outs["numpy"], outs["numba"]
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    diff = max(float(np.max(np.abs(x - y))) for x, y in zip(a, b))
    speedup = times["numpy"] / times["numba"]
    print(f"{label:<32s} numpy={1e6 * times['numpy']:10.1f} us  numba={1e6 * times['numba']:10.1f} us  "
          f"speedup={speedup:6.2f}x  max|diff|={diff:.1e}")


def filter_step(world, nominal, alpha):
    return safety_filter(world, nominal, alpha)


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)

    for n in (3, 10, 100):
        compare(f"pair_terms N={n} (P={n * (n - 1) // 2})", kernels.pair_terms, pair_inputs(rng, n), args.repeat)
    compare("pair_terms d=3 N=10", kernels.pair_terms, pair_inputs(rng, 10, d=3), args.repeat)
    for m in (2048, 100_000):
        compare(f"body_pnorms M={m}", kernels.body_pnorms, pnorm_inputs(rng, m), args.repeat)

    cfg = random_scenario(10, args.seed)
    world = initial_world(cfg.agent_states())
    nominal = nominal_inputs(world, cfg.k_rho)
    alpha = ClassKappa(cfg.alpha_gain)
    times = {}
    for backend in ("numpy", "numba"):
        kernels.set_backend(backend)
        times[backend] = best_time(lambda: filter_step(world, nominal, alpha), args.repeat)
    print(f"{'safety_filter step, 10 agents':<32s} numpy={1e6 * times['numpy']:10.1f} us  "
          f"numba={1e6 * times['numba']:10.1f} us  speedup={times['numpy'] / times['numba']:6.2f}x")


if __name__ == "__main__":
    main()
