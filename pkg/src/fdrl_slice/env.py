"""Uplink bandwidth-allocation environment for a single MVNO.

Physics: OFDMA uplink, user j of MVNO i gets a fraction f of the leased
bandwidth b_i and reaches

    rho   = P g / (f b_i sigma2)
    delta = f b_i log2(1 + rho)
    D     = xi / delta

eMBB users must satisfy delta >= delta_min, URLLC users D <= d_max.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, ContractError

SUM_TOLERANCE = 1e-12


class UserType(enum.Enum):
    EMBB = "eMBB"
    URLLC = "URLLC"

    @property
    def indicators(self) -> tuple[int, int]:
        """(z_e, z_u) indicator pair."""
        return (1, 0) if self is UserType.EMBB else (0, 1)


@dataclass(frozen=True)
class User:
    id: int
    kind: UserType
    position: tuple[float, float]
    tx_power: float
    packet_size: float

    def __post_init__(self):
        if not self.tx_power > 0:
            raise ConfigError(f"user {self.id}: tx_power must be > 0")
        if not self.packet_size > 0:
            raise ConfigError(f"user {self.id}: packet_size must be > 0")

    @property
    def is_urllc(self) -> bool:
        return self.kind is UserType.URLLC


@dataclass(frozen=True)
class EnvConfig:
    total_bandwidth: float = 3e6
    noise_density: float = 3.98e-21
    f_max: float = 0.3
    c_max: int = 5
    cell_side: float = 500.0
    path_loss_exponent: float = 3.0
    d_max: float = 2e-3
    delta_min: float = 1e6
    w_e: float = 1.0
    w_u: float = 2.0
    bs_position: tuple[float, float] = (250.0, 250.0)
    tx_power: float = 0.1
    packet_size_embb: float = 100_000.0
    packet_size_urllc: float = 160.0
    gain_db_min: float = -140.0
    gain_db_max: float = -60.0
    eps_pad: float = 1e-3
    position_reset_episodes: int = 25
    gain_reset_steps: int = 1
    fixed_gain: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "bs_position", tuple(float(v) for v in self.bs_position))
        if not 0 < self.f_max <= 1:
            raise ConfigError(f"f_max must lie in (0, 1], got {self.f_max}")
        if not (self.w_u >= self.w_e > 0):
            raise ConfigError("priority weights must satisfy w_u >= w_e > 0")
        if int(self.c_max) != self.c_max or self.c_max < 1:
            raise ConfigError("c_max must be an integer >= 1")
        for name in ("total_bandwidth", "noise_density", "cell_side", "path_loss_exponent",
                     "d_max", "delta_min", "tx_power", "packet_size_embb", "packet_size_urllc"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        if not self.gain_db_max > self.gain_db_min:
            raise ConfigError("gain_db_max must exceed gain_db_min")
        if self.eps_pad < 0:
            raise ConfigError("eps_pad must be >= 0")
        if self.position_reset_episodes < 1 or self.gain_reset_steps < 1:
            raise ConfigError("reset cadences must be >= 1")
        if self.fixed_gain is not None and not self.fixed_gain > 0:
            raise ConfigError("fixed_gain must be > 0 when set")
        if len(self.bs_position) != 2:
            raise ConfigError("bs_position must have two coordinates")

    def packet_size(self, kind: UserType) -> float:
        return self.packet_size_urllc if kind is UserType.URLLC else self.packet_size_embb

    def priority(self, kind: UserType) -> float:
        return self.w_u if kind is UserType.URLLC else self.w_e


@dataclass(frozen=True)
class MvnoScenario:
    mvno_id: int
    n_users: int
    urllc_prob: float
    leased_bandwidth: float

    def __post_init__(self):
        if self.n_users < 1:
            raise ConfigError(f"MVNO {self.mvno_id}: n_users must be >= 1")
        if not 0.0 <= self.urllc_prob <= 1.0:
            raise ConfigError(f"MVNO {self.mvno_id}: urllc_prob must be in [0, 1]")
        if not self.leased_bandwidth > 0:
            raise ConfigError(f"MVNO {self.mvno_id}: leased_bandwidth must be > 0")


@dataclass(frozen=True)
class Observation:
    gains: np.ndarray
    types: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.gains, self.types])


@dataclass(frozen=True)
class AllocationAction:
    fractions: np.ndarray

    @classmethod
    def clipped(cls, raw, f_max: float) -> "AllocationAction":
        return cls(np.clip(np.asarray(raw, dtype=float), 0.0, f_max))


@dataclass(frozen=True)
class ValidityReport:
    valid: bool
    box_violation: np.ndarray  # per live user, C1
    over_budget: bool  # C2
    rate_violation: np.ndarray  # per live user, eMBB only
    delay_violation: np.ndarray  # per live user, URLLC only


@dataclass(frozen=True)
class StepOutcome:
    reward: float
    per_user_rate: np.ndarray
    per_user_delay: np.ndarray
    valid: bool
    violations: dict = field(default_factory=dict)
    padding_penalized: bool = False


def spawn_users(scenario: MvnoScenario, config: EnvConfig, rng: np.random.Generator) -> list[User]:
    if scenario.n_users > config.c_max:
        raise ConfigError(f"MVNO {scenario.mvno_id}: {scenario.n_users} users exceed c_max={config.c_max}")
    n = scenario.n_users
    urllc = rng.random(n) < scenario.urllc_prob
    pos = rng.uniform(0.0, config.cell_side, size=(n, 2))
    users = []
    for j in range(n):
        kind = UserType.URLLC if urllc[j] else UserType.EMBB
        users.append(User(j, kind, (float(pos[j, 0]), float(pos[j, 1])),
                          config.tx_power, config.packet_size(kind)))
    return users


def path_gain(distance, exponent: float):
    return np.maximum(distance, 1.0) ** (-exponent)


def channel_gain(user: User, config: EnvConfig, rng: np.random.Generator) -> float:
    if config.fixed_gain is not None:
        return float(config.fixed_gain)
    d = math.dist(user.position, config.bs_position)
    return float(path_gain(d, config.path_loss_exponent) * rng.exponential(1.0))


def channel_gains(positions: np.ndarray, config: EnvConfig, rng: np.random.Generator) -> np.ndarray:
    """Vectorized :func:`channel_gain` over positions of shape (..., 2)."""
    positions = np.asarray(positions, dtype=float)
    if config.fixed_gain is not None:
        return np.full(positions.shape[:-1], float(config.fixed_gain))
    d = np.linalg.norm(positions - np.asarray(config.bs_position), axis=-1)
    return path_gain(d, config.path_loss_exponent) * rng.exponential(1.0, size=d.shape)


def gain_feature(gains, config: EnvConfig) -> np.ndarray:
    """Min-max normalized log-gain, clipped to [0, 1]."""
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(np.asarray(gains, dtype=float))
    return np.clip((db - config.gain_db_min) / (config.gain_db_max - config.gain_db_min), 0.0, 1.0)


def snr(p, g, f, b_i, noise_density):
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ContractError("snr is undefined for a zero bandwidth fraction")
    if np.any(np.asarray(b_i) <= 0):
        raise ContractError("leased bandwidth must be positive")
    return p * g / (f * b_i * noise_density)


def data_rate(f, b_i, rho):
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ContractError("bandwidth fraction must be >= 0")
    out = f * b_i * np.log1p(rho) / kernels.LN2
    out = np.where(f > 0, out, 0.0)
    return float(out) if out.ndim == 0 else out


def tx_delay(packet_size, delta):
    delta = np.asarray(delta, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.where(delta > 0, packet_size / np.where(delta > 0, delta, 1.0), np.inf)
    return float(out) if out.ndim == 0 else out


def per_user_reward(user: User, delta: float, d: float, config: EnvConfig) -> float:
    if user.is_urllc:
        if not math.isfinite(d):
            return 0.0
        return config.w_u * (config.d_max / d)
    return config.w_e * (delta / config.delta_min)


def validate_action(action, users: list[User], rates, delays, config: EnvConfig) -> ValidityReport:
    fractions = np.asarray(getattr(action, "fractions", action), dtype=float)
    n = len(users)
    live = fractions[:n]
    rates = np.asarray(rates, dtype=float)[:n]
    delays = np.asarray(delays, dtype=float)[:n]
    urllc = np.array([u.is_urllc for u in users], dtype=bool)
    box = (live < 0.0) | (live > config.f_max)
    over = sum(float(v) for v in live) > 1.0 + SUM_TOLERANCE
    rate_v = ~urllc & (rates < config.delta_min)
    delay_v = urllc & (delays > config.d_max)
    valid = not (box.any() or over or rate_v.any() or delay_v.any())
    return ValidityReport(bool(valid), box, bool(over), rate_v, delay_v)


def encode_observation(users: list[User], gains, config: EnvConfig) -> Observation:
    c = config.c_max
    n = len(users)
    if n > c:
        raise ContractError(f"{n} users exceed c_max={c}")
    g = np.zeros(c)
    t = np.zeros(c)
    if n:
        g[:n] = gain_feature(np.asarray(gains, dtype=float)[:n], config)
        t[:n] = [config.priority(u.kind) for u in users]
    return Observation(g, t)


@dataclass
class StateBatch:
    """Many independent environment states of one MVNO, padded to c_max."""
    gains: np.ndarray
    is_urllc: np.ndarray
    live: np.ndarray
    tx_power: np.ndarray
    packet_size: np.ndarray
    obs: np.ndarray
    leased_bandwidth: float

    def __len__(self):
        return self.gains.shape[0]


def draw_states(scenario: MvnoScenario, config: EnvConfig, n: int, rng: np.random.Generator) -> StateBatch:
    """Draw n i.i.d. states, respawning users (types and positions) for each."""
    c = config.c_max
    k = scenario.n_users
    if k > c:
        raise ConfigError(f"MVNO {scenario.mvno_id}: {k} users exceed c_max={c}")
    urllc = np.zeros((n, c), dtype=bool)
    urllc[:, :k] = rng.random((n, k)) < scenario.urllc_prob
    pos = rng.uniform(0.0, config.cell_side, size=(n, k, 2))
    gains = np.zeros((n, c))
    gains[:, :k] = channel_gains(pos, config, rng)
    live = np.zeros((n, c), dtype=bool)
    live[:, :k] = True
    tx = np.where(live, config.tx_power, 0.0)
    xi = np.where(live, np.where(urllc, config.packet_size_urllc, config.packet_size_embb), 0.0)
    feat = np.where(live, gain_feature(np.where(live, gains, 1.0), config), 0.0)
    types = np.where(live, np.where(urllc, config.w_u, config.w_e), 0.0)
    return StateBatch(gains, urllc, live, tx, xi, np.concatenate([feat, types], axis=1),
                      scenario.leased_bandwidth)


def evaluate_batch(states: StateBatch, fractions: np.ndarray, config: EnvConfig):
    """Run the allocation kernel for one action per state."""
    return kernels.evaluate_allocations(
        states.gains, np.ascontiguousarray(fractions, dtype=float), states.is_urllc, states.live,
        states.tx_power, states.packet_size, float(states.leased_bandwidth), config.noise_density,
        config.f_max, config.delta_min, config.d_max, config.w_e, config.w_u, config.eps_pad,
        SUM_TOLERANCE)


class SliceEnv:
    """Step-based environment for one MVNO.

    ``reset`` starts an episode and returns the first observation vector;
    users are respawned every ``position_reset_episodes`` episodes and gains
    redrawn every ``gain_reset_steps`` steps.
    """

    def __init__(self, config: EnvConfig, scenario: MvnoScenario, rng: np.random.Generator):
        if scenario.n_users > config.c_max:
            raise ConfigError(f"MVNO {scenario.mvno_id}: {scenario.n_users} users exceed c_max={config.c_max}")
        self.config = config
        self.scenario = scenario
        self.rng = rng
        self.users: list[User] = []
        self.gains = np.zeros(0)
        self.episodes = 0
        self.steps = 0
        c = config.c_max
        self._live = np.zeros((1, c), dtype=bool)
        self._urllc = np.zeros((1, c), dtype=bool)
        self._tx = np.zeros((1, c))
        self._xi = np.zeros((1, c))
        self._gains = np.zeros((1, c))

    def _respawn(self):
        self.users = spawn_users(self.scenario, self.config, self.rng)
        n = len(self.users)
        self._live[:] = False
        self._live[0, :n] = True
        self._urllc[:] = False
        self._urllc[0, :n] = [u.is_urllc for u in self.users]
        self._tx[:] = 0.0
        self._tx[0, :n] = [u.tx_power for u in self.users]
        self._xi[:] = 0.0
        self._xi[0, :n] = [u.packet_size for u in self.users]

    def _redraw_gains(self):
        pos = np.array([u.position for u in self.users], dtype=float).reshape(-1, 2)
        self.gains = channel_gains(pos, self.config, self.rng)
        self._gains[:] = 0.0
        self._gains[0, :len(self.users)] = self.gains

    def reset(self) -> np.ndarray:
        if self.episodes % self.config.position_reset_episodes == 0:
            self._respawn()
        self.episodes += 1
        self.steps = 0
        self._redraw_gains()
        return self.observation().vector

    def observation(self) -> Observation:
        return encode_observation(self.users, self.gains, self.config)

    def step(self, action) -> tuple[StepOutcome, np.ndarray]:
        if not self.users:
            raise ContractError("environment used before reset()")
        raw = np.asarray(getattr(action, "fractions", action), dtype=float)
        if raw.shape != (self.config.c_max,):
            raise ContractError(f"action must have length c_max={self.config.c_max}, got shape {raw.shape}")
        frac = np.clip(raw, 0.0, self.config.f_max).reshape(1, -1)
        cfg = self.config
        (rates, delays, _, rate_v, delay_v, reward, valid, _, _, padded) = kernels.evaluate_allocations(
            self._gains, frac, self._urllc, self._live, self._tx, self._xi,
            float(self.scenario.leased_bandwidth), cfg.noise_density, cfg.f_max, cfg.delta_min,
            cfg.d_max, cfg.w_e, cfg.w_u, cfg.eps_pad, SUM_TOLERANCE)
        n = len(self.users)
        outcome = StepOutcome(
            reward=float(reward[0]),
            per_user_rate=rates[0, :n].copy(),
            per_user_delay=delays[0, :n].copy(),
            valid=bool(valid[0]),
            violations={"embb_rate": int(rate_v[0].sum()), "urllc_delay": int(delay_v[0].sum())},
            padding_penalized=bool(valid[0] and padded[0]),
        )
        self.steps += 1
        if self.steps % cfg.gain_reset_steps == 0:
            self._redraw_gains()
        return outcome, self.observation().vector
