"""DDPG learner for one MVNO: actor/critic with targets, replay, OU noise."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .errors import BufferNotReady, ConfigError, ContractError

NETWORKS = ("actor", "critic", "actor_target", "critic_target")


@dataclass(frozen=True)
class AgentConfig:
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    gamma: float = 0.99
    tau: float = 1e-3
    batch_size: int = 128
    buffer_capacity: int = 100_000
    noise_scale: float = 0.1
    f_max: float = 0.3
    ou_theta: float = 0.15
    ou_mu: float = 0.0
    ou_sigma: float = 0.2
    hidden: tuple[int, ...] = (400, 300)
    grad_clip: float = 1.0
    reward_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if not 0 <= self.gamma <= 1:
            raise ConfigError("gamma must lie in [0, 1]")
        if not 0 < self.tau <= 1:
            raise ConfigError("tau must lie in (0, 1]")
        if self.batch_size < 1 or self.batch_size > self.buffer_capacity:
            raise ConfigError("batch_size must be in [1, buffer_capacity]")
        if not 0 < self.f_max <= 1:
            raise ConfigError("f_max must lie in (0, 1]")
        if self.actor_lr <= 0 or self.critic_lr <= 0:
            raise ConfigError("learning rates must be > 0")
        if self.noise_scale < 0 or self.ou_theta < 0 or self.ou_sigma < 0:
            raise ConfigError("noise parameters must be >= 0")
        if any(h < 1 for h in self.hidden):
            raise ConfigError("hidden sizes must be positive")
        if not self.reward_scale > 0:
            raise ConfigError("reward_scale must be > 0")
        if not self.grad_clip > 0:
            raise ConfigError("grad_clip must be > 0")


def actor_spec(c_max: int, hidden) -> list[nn.LayerSpec]:
    return nn.mlp_spec([2 * c_max, *hidden, c_max], output_activation=nn.Activation.SIGMOID)


def critic_spec(c_max: int, hidden) -> list[nn.LayerSpec]:
    return nn.mlp_spec([3 * c_max, *hidden, 1], output_activation=nn.Activation.IDENTITY)


@dataclass
class Transition:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray


class ReplayBuffer:
    """Fixed-capacity FIFO of transitions stored in preallocated arrays."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        if capacity < 1:
            raise ConfigError("buffer capacity must be >= 1")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self._next = 0
        self.size = 0

    def __len__(self):
        return self.size

    def clear(self):
        self._next = 0
        self.size = 0

    def add(self, t: Transition):
        i = self._next
        self.states[i] = t.state
        self.actions[i] = t.action
        self.rewards[i] = t.reward
        self.next_states[i] = t.next_state
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def ordered_indices(self) -> np.ndarray:
        """Storage slots from oldest to newest."""
        if self.size < self.capacity:
            return np.arange(self.size)
        return (np.arange(self.capacity) + self._next) % self.capacity

    def sample_indices(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if n > self.size:
            raise BufferNotReady(f"need {n} transitions, have {self.size}")
        return rng.choice(self.size, size=n, replace=False)

    def sample(self, n: int, rng: np.random.Generator):
        idx = self.sample_indices(n, rng)
        return self.states[idx], self.actions[idx], self.rewards[idx], self.next_states[idx]


@dataclass
class OUProcess:
    size: int
    theta: float = 0.15
    mu: float = 0.0
    sigma: float = 0.2
    dt: float = 1.0
    x: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.theta < 0 or self.sigma < 0:
            raise ConfigError("OU theta and sigma must be >= 0")
        if self.x is None:
            self.x = np.full(self.size, self.mu, dtype=float)

    def reset(self):
        self.x = np.full(self.size, self.mu, dtype=float)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Advance one step and return the absolute value of the state."""
        dx = self.theta * (self.mu - self.x) * self.dt + self.sigma * np.sqrt(self.dt) * rng.standard_normal(self.size)
        self.x = self.x + dx
        return np.abs(self.x)


@dataclass
class TrainDiagnostics:
    ready: bool
    critic_loss: float = float("nan")
    actor_objective: float = float("nan")


class Agent:
    """Actor, critic, their targets, Adam states, replay buffer and OU noise.

    ``rng`` drives exploration noise and minibatch sampling; network
    initialization uses its own generator so agents can share initial weights.
    """

    def __init__(self, c_max: int, config: AgentConfig, rng: np.random.Generator,
                 init_rng: np.random.Generator | None = None):
        self.c_max = c_max
        self.config = config
        self.rng = rng
        init_rng = rng if init_rng is None else init_rng
        self.actor = nn.init_params(actor_spec(c_max, config.hidden), init_rng)
        self.critic = nn.init_params(critic_spec(c_max, config.hidden), init_rng)
        self.actor_target = self.actor.copy()
        self.critic_target = self.critic.copy()
        self.reset_optimizers()
        self.buffer = ReplayBuffer(config.buffer_capacity, 2 * c_max, c_max)
        self.ou = OUProcess(c_max, config.ou_theta, config.ou_mu, config.ou_sigma)
        self.noise_scale = config.noise_scale

    def reset_optimizers(self):
        self.actor_opt = nn.AdamState.zeros(self.actor)
        self.critic_opt = nn.AdamState.zeros(self.critic)

    def policy(self, obs, params: nn.NetParams | None = None) -> np.ndarray:
        """Greedy fractions f_max * sigmoid(head) for one or many observations."""
        return self.config.f_max * nn.predict(self.actor if params is None else params, obs)

    def act(self, obs, explore: bool = False) -> np.ndarray:
        obs = np.asarray(obs, dtype=float)
        if obs.shape[-1] != 2 * self.c_max:
            raise ContractError(f"observation must have length {2 * self.c_max}")
        a = self.policy(obs)
        if explore:
            a = a + self.noise_scale * self.ou.sample(self.rng)
        return np.clip(a, 0.0, self.config.f_max)

    def store(self, t: Transition):
        self.buffer.add(t)

    def sample(self, n: int):
        return self.buffer.sample(n, self.rng)

    def compute_targets(self, rewards, next_states) -> np.ndarray:
        rewards = np.asarray(rewards, dtype=float)
        if rewards.size == 0:
            raise ContractError("empty batch")
        next_a = self.policy(next_states, self.actor_target)
        q_next = nn.predict(self.critic_target, np.concatenate([next_states, next_a], axis=1))[:, 0]
        return self.config.reward_scale * rewards + self.config.gamma * q_next

    def critic_update(self, states, actions, targets) -> float:
        q, cache = nn.forward(self.critic, np.concatenate([states, actions], axis=1))
        loss, grad = nn.mse_loss(q[:, 0], targets)
        grads, _ = nn.backward(self.critic, cache, grad[:, None])
        nn.adam_step(self.critic, nn.clip_by_global_norm(grads, self.config.grad_clip),
                     self.critic_opt, self.config.critic_lr)
        return loss

    def actor_gradient(self, states) -> tuple[float, nn.NetParams]:
        """Objective -mean Q(s, mu(s)) and its gradient w.r.t. the actor."""
        n = states.shape[0]
        head, a_cache = nn.forward(self.actor, states)
        actions = self.config.f_max * head
        q, c_cache = nn.forward(self.critic, np.concatenate([states, actions], axis=1))
        _, d_in = nn.backward(self.critic, c_cache, np.full((n, 1), -1.0 / n))
        d_head = self.config.f_max * d_in[:, 2 * self.c_max:]
        grads, _ = nn.backward(self.actor, a_cache, d_head)
        return -float(np.mean(q)), grads

    def train_step(self) -> TrainDiagnostics:
        cfg = self.config
        try:
            s, a, r, s2 = self.sample(cfg.batch_size)
        except BufferNotReady:
            return TrainDiagnostics(False)
        y = self.compute_targets(r, s2)
        loss = self.critic_update(s, a, y)
        objective, grads = self.actor_gradient(s)
        nn.adam_step(self.actor, nn.clip_by_global_norm(grads, cfg.grad_clip), self.actor_opt, cfg.actor_lr)
        self.actor_target = nn.soft_update(self.actor_target, self.actor, cfg.tau)
        self.critic_target = nn.soft_update(self.critic_target, self.critic, cfg.tau)
        return TrainDiagnostics(True, loss, objective)

    def export_params(self) -> dict[str, np.ndarray]:
        return {name: nn.flatten(getattr(self, name)) for name in NETWORKS}

    def import_params(self, payload: dict[str, np.ndarray]):
        for name in NETWORKS:
            current = getattr(self, name)
            setattr(self, name, nn.unflatten(current.spec, payload[name]))
