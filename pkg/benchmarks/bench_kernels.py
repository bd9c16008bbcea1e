"""Compare the numba and numpy kernel paths.

Run with ``python3 benchmarks/bench_kernels.py``. Both paths are timed in the
same process regardless of FDRL_SLICE_NUMBA; numba compile time is excluded
by a warm-up call.
"""
import argparse
import time

import numpy as np

from fdrl_slice import _accel, kernels
from fdrl_slice.env import SUM_TOLERANCE, EnvConfig, MvnoScenario, draw_states
from fdrl_slice.oracle import _grid, user_tables


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def physics_case(n_states, cfg):
    states = draw_states(MvnoScenario(1, 5, 0.5, 1e6), cfg, n_states, np.random.default_rng(0))
    frac = np.random.default_rng(1).uniform(0, cfg.f_max, size=states.gains.shape)
    args = (states.gains, frac, states.is_urllc, states.live, states.tx_power, states.packet_size,
            1e6, cfg.noise_density, cfg.f_max, cfg.delta_min, cfg.d_max, cfg.w_e, cfg.w_u,
            cfg.eps_pad, SUM_TOLERANCE)
    return args


def search_case(cfg, grid_step):
    states = draw_states(MvnoScenario(1, 5, 0.5, 1e6), cfg, 1, np.random.default_rng(2))
    fractions, units = _grid(cfg, grid_step)
    rewards, ok = user_tables(states.gains[0], states.is_urllc[0], states.tx_power[0],
                              states.packet_size[0], 1e6, cfg, fractions)
    return rewards, ok, units


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--states", type=int, default=100_000)
    p.add_argument("--grid-step", type=float, default=0.01)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    if not _accel.HAVE_NUMBA:
        print("numba is not installed; only the numpy path can be timed")
    cfg = EnvConfig()

    phys = physics_case(args.states, cfg)
    search = search_case(cfg, args.grid_step)
    rows = []
    for name, nb_fn, np_fn, call_args in (
            (f"evaluate_allocations ({args.states} states)", kernels.evaluate_allocations_nb,
             kernels.evaluate_allocations_np, phys),
            (f"grid_search (5 users, step {args.grid_step})", kernels.grid_search_nb,
             kernels.grid_search_np, search)):
        t_np = best_of(lambda: np_fn(*call_args), args.repeat)
        t_nb = float("nan")
        if _accel.HAVE_NUMBA:
            nb_fn(*call_args)  # compile
            t_nb = best_of(lambda: nb_fn(*call_args), args.repeat)
        rows.append((name, t_np, t_nb))

    print(f"{'kernel':<42}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>9}")
    for name, t_np, t_nb in rows:
        print(f"{name:<42}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>9.1f}")


if __name__ == "__main__":
    main()
