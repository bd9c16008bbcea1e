import itertools

import numpy as np
import pytest

from fdrl_slice import kernels
from fdrl_slice.env import SUM_TOLERANCE, EnvConfig


def random_inputs(n, c, seed):
    rng = np.random.default_rng(seed)
    gains = 10 ** rng.uniform(-14, -7, size=(n, c))
    frac = rng.uniform(0, 0.35, size=(n, c))
    frac[rng.random((n, c)) < 0.15] = 0.0
    is_urllc = rng.random((n, c)) < 0.5
    live = np.arange(c)[None, :] < rng.integers(0, c + 1, size=n)[:, None]
    tx = np.full((n, c), 0.1)
    pkt = np.where(is_urllc, 160.0, 1e5)
    return gains, frac, is_urllc, live, tx, pkt


def scalars(cfg=EnvConfig()):
    return (1e6, cfg.noise_density, cfg.f_max, cfg.delta_min, cfg.d_max, cfg.w_e, cfg.w_u,
            cfg.eps_pad, SUM_TOLERANCE)


def test_evaluate_paths_agree():
    args = random_inputs(3000, 5, 0)
    a = kernels.evaluate_allocations_nb(*args, *scalars())
    b = kernels.evaluate_allocations_np(*args, *scalars())
    assert len(a) == len(b)
    for x, y in zip(a, b):
        if x.dtype == bool:
            assert np.array_equal(x, y)
        else:
            np.testing.assert_allclose(x, y, rtol=1e-12, atol=0)


def test_evaluate_has_valid_and_invalid_rows():
    out = kernels.evaluate_allocations_np(*random_inputs(3000, 5, 1), *scalars())
    valid = out[6]
    assert 0 < valid.sum() < valid.size


def brute_force(rewards, ok, units):
    n, k1 = rewards.shape
    best, best_k = -np.inf, None
    for ks in itertools.product(range(k1), repeat=n):
        if sum(ks) > units or not all(ok[i, k] for i, k in enumerate(ks)):
            continue
        r = sum(rewards[i, k] for i, k in enumerate(ks))
        if r > best:
            best, best_k = r, ks
    return best_k, best


@pytest.mark.parametrize("seed", range(12))
def test_grid_search_paths_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    n, k1 = rng.integers(1, 4), rng.integers(2, 8)
    rewards = np.sort(rng.uniform(0, 5, size=(n, k1)), axis=1)
    ok = rng.random((n, k1)) < 0.8
    units = int(rng.integers(1, n * (k1 - 1) + 1))
    k_ref, best_ref = brute_force(rewards, ok, units)
    for search in (kernels.grid_search_nb, kernels.grid_search_np):
        k, best, found = search(rewards, ok, units)
        assert found == (k_ref is not None)
        if found:
            assert best == pytest.approx(best_ref, rel=1e-12)
            ks = [int(v) for v in k]
            assert sum(ks) <= units and all(ok[i, v] for i, v in enumerate(ks))
            assert sum(rewards[i, v] for i, v in enumerate(ks)) == pytest.approx(best_ref, rel=1e-12)


def test_public_names_follow_flag():
    from fdrl_slice import _accel
    expected = kernels.grid_search_nb if _accel.USE_NUMBA else kernels.grid_search_np
    assert kernels.grid_search is expected


def test_grid_search_paths_identical_on_oracle_tables():
    from fdrl_slice.env import MvnoScenario, draw_states
    from fdrl_slice.oracle import _grid, user_tables
    cfg = EnvConfig()
    fractions, units = _grid(cfg, 0.01)
    states = draw_states(MvnoScenario(1, 5, 0.5, 1e6), cfg, 10, np.random.default_rng(4))
    for s in range(10):
        r, ok = user_tables(states.gains[s], states.is_urllc[s], states.tx_power[s], states.packet_size[s],
                            1e6, cfg, fractions)
        a, b = kernels.grid_search_nb(r, ok, units), kernels.grid_search_np(r, ok, units)
        assert np.array_equal(a[0], b[0]) and a[1] == b[1] and a[2] == b[2]
