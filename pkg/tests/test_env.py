import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fdrl_slice import env as E
from fdrl_slice.env import EnvConfig, MvnoScenario, SliceEnv, UserType
from fdrl_slice.errors import ConfigError, ContractError

from conftest import EMBB, URLLC, make_user


def mp_rate(p, g, f, b, s2):
    mpmath.mp.dps = 50
    rho = mpmath.mpf(p) * mpmath.mpf(g) / (mpmath.mpf(f) * mpmath.mpf(b) * mpmath.mpf(s2))
    return rho, mpmath.mpf(f) * mpmath.mpf(b) * mpmath.log(1 + rho, 2)


# --- users and channel -----------------------------------------------------

def test_spawn_users_count_and_bounds(cfg, rng):
    users = E.spawn_users(MvnoScenario(1, 5, 0.75, 1e6), cfg, rng)
    assert len(users) == 5
    for u in users:
        assert 0 <= u.position[0] <= cfg.cell_side and 0 <= u.position[1] <= cfg.cell_side
        assert u.packet_size == cfg.packet_size(u.kind)
        assert u.kind.indicators in ((1, 0), (0, 1))


def test_spawn_users_urllc_frequency(cfg):
    rng = np.random.default_rng(0)
    kinds = [u.is_urllc for _ in range(4000) for u in E.spawn_users(MvnoScenario(1, 5, 0.75, 1e6), cfg, rng)]
    n = len(kinds)
    assert abs(np.mean(kinds) - 0.75) < 4 * math.sqrt(0.75 * 0.25 / n)


def test_spawn_users_degenerate_and_seeded(cfg):
    one = E.spawn_users(MvnoScenario(1, 1, 0.0, 1e6), cfg, np.random.default_rng(5))
    assert len(one) == 1 and one[0].kind is UserType.EMBB
    a = E.spawn_users(MvnoScenario(1, 4, 0.5, 1e6), cfg, np.random.default_rng(0))
    b = E.spawn_users(MvnoScenario(1, 4, 0.5, 1e6), cfg, np.random.default_rng(0))
    assert a == b


def test_spawn_users_rejects_too_many(cfg, rng):
    with pytest.raises(ConfigError):
        E.spawn_users(MvnoScenario(1, 6, 0.5, 1e6), cfg, rng)


class UnitFading:
    def exponential(self, scale=1.0, size=None):
        return 1.0 if size is None else np.ones(size)


def test_channel_gain_examples(cfg):
    u1 = make_user(0, EMBB, (251.0, 250.0))
    assert E.channel_gain(u1, cfg, UnitFading()) == 1.0
    u100 = make_user(0, EMBB, (350.0, 250.0))
    assert E.channel_gain(u100, cfg, UnitFading()) == pytest.approx(100.0 ** -3, rel=1e-15)
    # distance clamp at the base station itself
    u0 = make_user(0, EMBB, cfg.bs_position)
    assert E.channel_gain(u0, cfg, UnitFading()) == 1.0


def test_channel_gain_seeded_sequence(cfg):
    u = make_user(0, EMBB)
    a = [E.channel_gain(u, cfg, r) for r in [np.random.default_rng(3)] for _ in range(5)]
    b = [E.channel_gain(u, cfg, r) for r in [np.random.default_rng(3)] for _ in range(5)]
    assert a == b and all(g > 0 for g in a)


# --- physics ---------------------------------------------------------------

def test_snr_example():
    rho_mp, _ = mp_rate(0.1, 1e-12, 0.1, 1e6, 3.98e-21)
    rho = E.snr(0.1, 1e-12, 0.1, 1e6, 3.98e-21)
    assert rho == pytest.approx(float(rho_mp), rel=1e-12)
    assert rho == pytest.approx(251.26, abs=5e-3)


def test_snr_properties():
    assert E.snr(0.1, 1e-12, 0.2, 1e6, 3.98e-21) == pytest.approx(E.snr(0.1, 1e-12, 0.1, 1e6, 3.98e-21) / 2)
    assert E.snr(0.1, 0.0, 0.1, 1e6, 3.98e-21) == 0.0
    with pytest.raises(ContractError):
        E.snr(0.1, 1e-12, 0.0, 1e6, 3.98e-21)


def test_data_rate_examples():
    _, rate_mp = mp_rate(0.1, 1e-12, 0.1, 1e6, 3.98e-21)
    rho = E.snr(0.1, 1e-12, 0.1, 1e6, 3.98e-21)
    assert E.data_rate(0.1, 1e6, rho) == pytest.approx(float(rate_mp), rel=1e-12)
    mpmath.mp.dps = 30
    assert E.data_rate(0.1, 1e6, 251.26) == pytest.approx(float(0.1 * 1e6 * mpmath.log(1 + mpmath.mpf("251.26"), 2)), rel=1e-12)
    assert E.data_rate(0.1, 1e6, 251.26) == pytest.approx(7.979e5, rel=1e-4)
    assert E.data_rate(0.0, 1e6, 251.26) == 0.0
    assert E.data_rate(0.1, 1e6, 0.0) == 0.0


def test_tx_delay_examples():
    assert E.tx_delay(1000, 1e6) == pytest.approx(1e-3, rel=1e-15)
    assert E.tx_delay(160, 8e5) == pytest.approx(2e-4, rel=1e-15)
    assert E.tx_delay(160, 0.0) == math.inf


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-12, 1e-3), st.floats(0.01, 1.0), st.floats(1e5, 3e6))
def test_rate_monotone_and_delay_decreasing(g, p, b):
    f = np.linspace(0.001, 0.3, 60)
    rho = E.snr(p, g, f, b, 3.98e-21)
    rate = E.data_rate(f, b, rho)
    delay = E.tx_delay(160.0, rate)
    assert np.all(np.diff(rho) < 0)
    assert np.all(np.diff(rate) > 0)
    assert np.all(np.diff(delay) < 0)


def test_per_user_reward_examples(cfg):
    e = make_user(0, EMBB)
    u = make_user(1, URLLC)
    assert E.per_user_reward(e, cfg.delta_min, 1.0, cfg) == 1.0
    assert E.per_user_reward(u, 0.0, cfg.d_max, cfg) == 2.0
    assert E.per_user_reward(u, 0.0, cfg.d_max / 2, cfg) == pytest.approx(4.0, rel=1e-15)
    assert E.per_user_reward(u, 0.0, math.inf, cfg) == 0.0


# --- validity --------------------------------------------------------------

def _good_rates(users, cfg):
    rates = np.array([2 * cfg.delta_min] * len(users))
    delays = np.array([cfg.d_max / 2] * len(users))
    return rates, delays


def test_validate_sum_boundary(cfg):
    users = [make_user(i, EMBB) for i in range(5)]
    rates, delays = _good_rates(users, cfg)
    assert E.validate_action(np.full(5, 0.2), users, rates, delays, cfg).valid
    a = np.array([0.2, 0.2, 0.2, 0.2, 0.2 + 1e-9])
    rep = E.validate_action(a, users, rates, delays, cfg)
    assert not rep.valid and rep.over_budget


def test_validate_box_and_slas(cfg):
    users = [make_user(0, EMBB), make_user(1, URLLC)]
    rates, delays = _good_rates(users, cfg)
    rep = E.validate_action(np.array([0.31, 0.1, 0, 0, 0]), users, rates, delays, cfg)
    assert not rep.valid and rep.box_violation.tolist() == [True, False]
    rep = E.validate_action(np.array([0.1, 0.1, 0, 0, 0]), users, [cfg.delta_min * 0.99, 1e9], delays, cfg)
    assert not rep.valid and rep.rate_violation.tolist() == [True, False]
    rep = E.validate_action(np.array([0.1, 0.1, 0, 0, 0]), users, rates, [0.0, cfg.d_max * 1.01], cfg)
    assert not rep.valid and rep.delay_violation.tolist() == [False, True]


# --- observation -----------------------------------------------------------

def test_encode_observation_layout(cfg):
    users = [make_user(0, EMBB), make_user(1, URLLC), make_user(2, EMBB)]
    gains = np.array([1e-9, 1e-10, 1e-11])
    obs = E.encode_observation(users, gains, cfg)
    v = obs.vector
    assert v.shape == (10,)
    assert v[3:5].tolist() == [0, 0] and v[8:10].tolist() == [0, 0]
    assert v[5:8].tolist() == [cfg.w_e, cfg.w_u, cfg.w_e]
    np.testing.assert_allclose(v[:3], [(-90 + 140) / 80, (-100 + 140) / 80, (-110 + 140) / 80], rtol=1e-12)


def test_encode_observation_full_and_empty(cfg):
    users = [make_user(i, EMBB) for i in range(5)]
    v = E.encode_observation(users, np.full(5, 1e-10), cfg).vector
    assert np.all(v != 0)
    assert np.all(E.encode_observation([], [], cfg).vector == 0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-140, -60), st.booleans()), min_size=0, max_size=5))
def test_encode_observation_prefix_bijection(items):
    cfg = EnvConfig()
    users = [make_user(i, URLLC if u else EMBB) for i, (_, u) in enumerate(items)]
    gains = np.array([10 ** (db / 10) for db, _ in items])
    v = E.encode_observation(users, gains, cfg).vector
    n = len(items)
    back_db = v[:n] * 80 - 140
    np.testing.assert_allclose(back_db, [db for db, _ in items], atol=1e-9)
    assert [x == cfg.w_u for x in v[5:5 + n]] == [u for _, u in items]
    assert np.all(v[n:5] == 0) and np.all(v[5 + n:] == 0)
    assert np.all((v[:5] >= 0) & (v[:5] <= 1))


# --- step ------------------------------------------------------------------

def test_step_rewards_and_penalties(cfg, rng):
    env = SliceEnv(cfg, MvnoScenario(1, 3, 0.5, 1e6), rng)
    env.reset()
    out, nxt = env.step(np.array([0.3, 0.3, 0.3, 0.3, 0.3]))
    # slots 4 and 5 are padding but the live sum 0.9 is fine; padding triggers the penalty
    assert nxt.shape == (10,)
    if out.valid:
        assert out.padding_penalized
    out, _ = env.step(np.array([0.3, 0.3, 0.3, 0.0, 0.0]))
    assert not out.padding_penalized
    env2 = SliceEnv(cfg, MvnoScenario(1, 5, 0.0, 1e6), np.random.default_rng(0))
    env2.reset()
    out, _ = env2.step(np.full(5, 0.3))
    assert not out.valid and out.reward == -0.1
    out, _ = env2.step(np.zeros(5))
    assert not out.valid and out.reward == -0.1 and out.violations["embb_rate"] == 5


def test_step_valid_reward_is_sum_of_user_rewards(cfg):
    env = SliceEnv(cfg, MvnoScenario(1, 5, 0.5, 1e6), np.random.default_rng(7))
    env.reset()
    checked = 0
    r = np.random.default_rng(8)
    for _ in range(300):
        users, gains = env.users, env.gains.copy()
        a = r.uniform(0.05, 0.2, size=5)
        out, _ = env.step(a)
        if not out.valid:
            assert out.reward == -0.1
            continue
        expected = 0.0
        for j, u in enumerate(users):
            rho = E.snr(u.tx_power, gains[j], a[j], 1e6, cfg.noise_density)
            rate = E.data_rate(a[j], 1e6, rho)
            expected += E.per_user_reward(u, rate, E.tx_delay(u.packet_size, rate), cfg)
        assert out.reward == pytest.approx(expected, rel=1e-12)
        checked += 1
    assert checked > 100


def test_step_contract_and_clipping(cfg, rng):
    env = SliceEnv(cfg, MvnoScenario(1, 2, 0.0, 1e6), rng)
    with pytest.raises(ContractError):
        env.step(np.zeros(5))
    env.reset()
    with pytest.raises(ContractError):
        env.step(np.zeros(4))
    # entries above f_max are clipped, not rejected
    out, _ = env.step(np.array([0.9, 0.9, 0, 0, 0]))
    assert out.valid


def test_reset_cadence(cfg):
    env = SliceEnv(cfg, MvnoScenario(1, 4, 0.5, 1e6), np.random.default_rng(2))
    env.reset()
    first = env.users
    for _ in range(24):
        env.reset()
        assert env.users is first
    env.reset()
    assert env.users is not first
    g0 = env.gains.copy()
    env.step(np.full(5, 0.1))
    assert not np.array_equal(g0, env.gains)


def test_episode_traces_are_deterministic(cfg):
    def trace(seed):
        env = SliceEnv(cfg, MvnoScenario(1, 5, 0.5, 1e6), np.random.default_rng(seed))
        out = [env.reset()]
        for t in range(30):
            o, nxt = env.step(np.full(5, 0.15))
            out += [nxt, np.array([o.reward])]
        return np.concatenate(out)
    assert trace(11).tobytes() == trace(11).tobytes()
    assert trace(11).tobytes() != trace(12).tobytes()


def test_env_config_validation():
    with pytest.raises(ConfigError):
        EnvConfig(f_max=1.5)
    with pytest.raises(ConfigError):
        EnvConfig(w_e=3.0, w_u=2.0)
    with pytest.raises(ConfigError):
        EnvConfig(c_max=0)
    with pytest.raises(ConfigError):
        EnvConfig(noise_density=0.0)
