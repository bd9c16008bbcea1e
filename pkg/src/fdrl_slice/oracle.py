"""Exhaustive grid search for the best valid allocation of one state."""
from __future__ import annotations

import math

import numpy as np

from . import kernels
from .env import SUM_TOLERANCE, EnvConfig, User
from .errors import ContractError, SearchBudgetExceeded

DEFAULT_BUDGET = 2_000_000_000


def _grid(config: EnvConfig, grid_step: float):
    if not grid_step > 0:
        raise ContractError("grid_step must be > 0")
    k_max = int(math.floor(config.f_max / grid_step + 1e-9))
    fractions = np.minimum(np.arange(k_max + 1) * grid_step, config.f_max)
    units = int(math.floor(1.0 / grid_step + 1e-9))
    return fractions, units


def user_tables(gains, is_urllc, tx_power, packet_size, b_i, config: EnvConfig, fractions):
    """Per-user reward and SLA feasibility for every grid fraction.

    Returns two (n_users, n_grid) arrays.
    """
    n = len(gains)
    k1 = len(fractions)
    shape = (k1, n)
    frac = np.broadcast_to(fractions[:, None], shape).copy()
    out = kernels.evaluate_allocations(
        np.broadcast_to(np.asarray(gains, float), shape).copy(), frac,
        np.broadcast_to(np.asarray(is_urllc, bool), shape).copy(), np.ones(shape, dtype=bool),
        np.broadcast_to(np.asarray(tx_power, float), shape).copy(),
        np.broadcast_to(np.asarray(packet_size, float), shape).copy(),
        float(b_i), config.noise_density, config.f_max, config.delta_min, config.d_max,
        config.w_e, config.w_u, config.eps_pad, SUM_TOLERANCE)
    user_reward, rate_v, delay_v = out[2], out[3], out[4]
    ok = ~(rate_v | delay_v)
    return np.ascontiguousarray(user_reward.T), np.ascontiguousarray(ok.T)


def reward_resolution(rewards: np.ndarray) -> float:
    """Largest reward change one grid step can make, summed over users."""
    if rewards.shape[1] < 2:
        return 0.0
    return float(np.sum(np.max(np.diff(rewards, axis=1), axis=1)))


def search_state(gains, is_urllc, tx_power, packet_size, b_i, config: EnvConfig,
                 grid_step: float = 0.01, budget: int = DEFAULT_BUDGET):
    """Best grid allocation for the live users of one state.

    Returns (fractions of length c_max, reward, resolution).
    """
    n = len(gains)
    if n > config.c_max:
        raise ContractError(f"{n} users exceed c_max={config.c_max}")
    fractions, units = _grid(config, grid_step)
    points = len(fractions) ** n
    if points > budget:
        raise SearchBudgetExceeded(
            f"{points} grid points for {n} users exceeds budget {budget}; use a larger grid_step")
    rewards, ok = user_tables(gains, is_urllc, tx_power, packet_size, b_i, config, fractions)
    best_k, _, found = kernels.grid_search(rewards, ok, units)
    action = np.zeros(config.c_max)
    if found:
        action[:n] = fractions[best_k]
    c = config.c_max
    live = np.zeros((1, c), dtype=bool)
    live[0, :n] = True

    def pad(v, dtype=float):
        out = np.zeros((1, c), dtype=dtype)
        out[0, :n] = v
        return out

    res = kernels.evaluate_allocations(
        pad(gains), action[None, :].copy(), pad(is_urllc, bool), live, pad(tx_power), pad(packet_size),
        float(b_i), config.noise_density, config.f_max, config.delta_min, config.d_max,
        config.w_e, config.w_u, config.eps_pad, SUM_TOLERANCE)
    return action, float(res[5][0]), reward_resolution(rewards)


def oracle_allocate(users: list[User], gains, b_i: float, config: EnvConfig,
                    grid_step: float = 0.01, budget: int = DEFAULT_BUDGET):
    """Highest-reward valid allocation on the fraction grid.

    Dead slots always get zero. When no grid point satisfies every SLA the
    zero action is returned with the invalid-action reward.
    """
    action, reward, _ = search_state(
        np.asarray(gains, float)[:len(users)], [u.is_urllc for u in users],
        [u.tx_power for u in users], [u.packet_size for u in users], b_i, config, grid_step, budget)
    return action, reward
