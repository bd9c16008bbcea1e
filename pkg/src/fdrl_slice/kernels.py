"""Hot numeric kernels: batched allocation physics and the grid search.

Each kernel has a numba loop version (``*_nb``) and a vectorized numpy
version (``*_np``). The public names bind to one of them according to
:data:`fdrl_slice._accel.USE_NUMBA`.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit

LN2 = math.log(2.0)
INVALID_REWARD = -0.1
PADDING_PENALTY = 0.1


@njit
def evaluate_allocations_nb(gains, fractions, is_urllc, live, tx_power, packet_size,
                            b_i, noise_density, f_max, delta_min, d_max, w_e, w_u,
                            eps_pad, sum_tol):
    n, c = gains.shape
    rates = np.zeros((n, c))
    delays = np.full((n, c), np.inf)
    user_reward = np.zeros((n, c))
    rate_viol = np.zeros((n, c), dtype=np.bool_)
    delay_viol = np.zeros((n, c), dtype=np.bool_)
    reward = np.zeros(n)
    valid = np.zeros(n, dtype=np.bool_)
    over_budget = np.zeros(n, dtype=np.bool_)
    out_of_box = np.zeros(n, dtype=np.bool_)
    padded = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        total = 0.0
        ok = True
        pad = False
        for j in range(c):
            f = fractions[i, j]
            if not live[i, j]:
                if f > eps_pad:
                    pad = True
                continue
            total += f
            if f < 0.0 or f > f_max:
                out_of_box[i] = True
                ok = False
            if f > 0.0:
                rho = tx_power[i, j] * gains[i, j] / (f * b_i * noise_density)
                r = f * b_i * math.log1p(rho) / LN2
                rates[i, j] = r
                if r > 0.0:
                    delays[i, j] = packet_size[i, j] / r
            if is_urllc[i, j]:
                d = delays[i, j]
                if d > d_max:
                    delay_viol[i, j] = True
                    ok = False
                if d < np.inf:
                    user_reward[i, j] = w_u * (d_max / d)
            else:
                if rates[i, j] < delta_min:
                    rate_viol[i, j] = True
                    ok = False
                user_reward[i, j] = w_e * (rates[i, j] / delta_min)
        if total > 1.0 + sum_tol:
            over_budget[i] = True
            ok = False
        valid[i] = ok
        padded[i] = pad
        if ok:
            s = 0.0
            for j in range(c):
                s += user_reward[i, j]
            if pad:
                s -= PADDING_PENALTY
            reward[i] = s
        else:
            reward[i] = INVALID_REWARD
    return rates, delays, user_reward, rate_viol, delay_viol, reward, valid, over_budget, out_of_box, padded


def evaluate_allocations_np(gains, fractions, is_urllc, live, tx_power, packet_size,
                            b_i, noise_density, f_max, delta_min, d_max, w_e, w_u,
                            eps_pad, sum_tol):
    f = np.where(live, fractions, 0.0)
    pos = live & (f > 0.0)
    safe_f = np.where(pos, f, 1.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        rho = tx_power * gains / (safe_f * b_i * noise_density)
        rates = np.where(pos, safe_f * b_i * np.log1p(rho) / LN2, 0.0)
        has_rate = rates > 0.0
        delays = np.where(has_rate, packet_size / np.where(has_rate, rates, 1.0), np.inf)
        urllc_reward = np.where(np.isfinite(delays), w_u * (d_max / delays), 0.0)
    embb_reward = w_e * (rates / delta_min)
    user_reward = np.where(live, np.where(is_urllc, urllc_reward, embb_reward), 0.0)
    rate_viol = live & ~is_urllc & (rates < delta_min)
    delay_viol = live & is_urllc & (delays > d_max)
    total = np.zeros(f.shape[0])
    for j in range(f.shape[1]):  # sequential order, same as the loop kernel
        total = total + f[:, j]
    over_budget = total > 1.0 + sum_tol
    out_of_box = np.any(live & ((fractions < 0.0) | (fractions > f_max)), axis=1)
    padded = np.any(~live & (fractions > eps_pad), axis=1)
    valid = ~(over_budget | out_of_box | rate_viol.any(axis=1) | delay_viol.any(axis=1))
    summed = np.zeros(f.shape[0])
    for j in range(f.shape[1]):
        summed = summed + user_reward[:, j]
    reward = np.where(valid, summed - np.where(padded, PADDING_PENALTY, 0.0), INVALID_REWARD)
    return rates, delays, user_reward, rate_viol, delay_viol, reward, valid, over_budget, out_of_box, padded


@njit
def grid_search_nb(rewards, ok, max_units):
    """Exact max-plus dynamic program over users and spent grid units.

    ``value[u]`` holds the best summed reward of the users seen so far using at
    most ``u`` units; infeasible grid points never enter a sum. Equivalent to
    enumerating every allocation with sum(k) <= max_units.
    """
    n, k1 = rewards.shape
    best_k = np.zeros(n, dtype=np.int64)
    if n == 0:
        return best_k, 0.0, True
    value = np.zeros(max_units + 1)
    nxt = np.empty(max_units + 1)
    choices = np.zeros((n, max_units + 1), dtype=np.int64)
    for j in range(n):
        for u in range(max_units + 1):
            best, arg = -np.inf, 0
            for k in range(min(k1 - 1, u) + 1):
                if ok[j, k]:
                    cand = value[u - k] + rewards[j, k]
                    if cand > best:
                        best, arg = cand, k
            nxt[u] = best
            choices[j, u] = arg
        value[:] = nxt
    best = value[max_units]
    if not best > -np.inf:
        return best_k, -np.inf, False
    left = max_units
    for j in range(n - 1, -1, -1):
        best_k[j] = choices[j, left]
        left -= best_k[j]
    return best_k, best, True


def grid_search_np(rewards, ok, max_units):
    """Exact max-plus dynamic program over the same grid (numpy fallback)."""
    n, k1 = rewards.shape
    if n == 0:
        return np.zeros(0, dtype=np.int64), 0.0, True
    u = np.arange(max_units + 1)
    ks = np.arange(k1)
    src = u[:, None] - ks[None, :]
    reachable = src >= 0
    src = np.clip(src, 0, None)
    value = np.zeros(max_units + 1)
    choices = []
    for j in range(n):
        r = np.where(ok[j], rewards[j], -np.inf)
        cand = np.where(reachable, value[src] + r[None, :], -np.inf)
        arg = np.argmax(cand, axis=1)
        value = cand[u, arg]
        choices.append(arg)
    best = value[max_units]
    if not np.isfinite(best):
        return np.zeros(n, dtype=np.int64), -np.inf, False
    best_k = np.zeros(n, dtype=np.int64)
    left = max_units
    for j in range(n - 1, -1, -1):
        best_k[j] = choices[j][left]
        left -= best_k[j]
    return best_k, float(best), True


if USE_NUMBA:
    evaluate_allocations = evaluate_allocations_nb
    grid_search = grid_search_nb
else:
    evaluate_allocations = evaluate_allocations_np
    grid_search = grid_search_np
