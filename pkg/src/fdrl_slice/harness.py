"""Training loops (federated and local-only), SLA evaluation and oracle runs."""
from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .ddpg import Agent, AgentConfig, Transition
from .env import EnvConfig, SliceEnv, StateBatch, draw_states, evaluate_batch
from .errors import ConfigError, ContractError
from .federation import Coordinator, GlobalModel, weighted_mean
from .oracle import search_state
from .scenarios import ScenarioSpec

log = logging.getLogger(__name__)

GLOBAL = "global"
EVAL_STREAM = 0x5E1A  # mixes into evaluation seeds so they never alias training streams
ORACLE_STREAM = 0x0AC1


@dataclass(frozen=True)
class FdrlParams:
    rounds: int = 5
    episodes: int = 500
    steps: int = 50
    noise_decay: float = 0.7
    eval_states: int = 32
    aggregate: bool = True

    def __post_init__(self):
        if self.rounds < 1 or self.episodes < 1 or self.steps < 1:
            raise ConfigError("rounds, episodes and steps must be >= 1")
        if not 0 < self.noise_decay <= 1:
            raise ConfigError("noise_decay must lie in (0, 1]")
        if self.eval_states < 1:
            raise ConfigError("eval_states must be >= 1")


PAPER_PROFILE = FdrlParams()
DESK_PROFILE = FdrlParams(rounds=3, episodes=100, steps=50)


@dataclass(frozen=True)
class TrainRow:
    round: int
    episode: int
    mvno_id: int | str
    mean_reward: float
    noise_scale: float
    seed: int


@dataclass
class TrainReport:
    seed: int
    rows: list[TrainRow] = field(default_factory=list)
    env_steps: dict[int, int] = field(default_factory=dict)
    wall_clock: float = 0.0

    def series(self, mvno_id) -> np.ndarray:
        return np.array([r.mean_reward for r in self.rows if r.mvno_id == mvno_id])

    def round_mean(self, round_index: int, mvno_id) -> float:
        vals = [r.mean_reward for r in self.rows if r.round == round_index and r.mvno_id == mvno_id]
        return float(np.mean(vals))


@dataclass
class TrainResult:
    report: TrainReport
    agents: dict[int, Agent]
    global_model: GlobalModel | None
    local_payloads: dict[int, dict[str, np.ndarray]]


def _streams(seed: int, n_mvno: int):
    root = np.random.SeedSequence(seed)
    init_seq, env_seq, agent_seq, eval_seq = root.spawn(4)
    return init_seq, env_seq.spawn(n_mvno), agent_seq.spawn(n_mvno), eval_seq


def _check(spec: ScenarioSpec, env_config: EnvConfig, agent_config: AgentConfig) -> AgentConfig:
    spec.check(env_config.total_bandwidth, env_config.c_max)
    if agent_config.f_max != env_config.f_max:
        agent_config = dataclasses.replace(agent_config, f_max=env_config.f_max)
    return agent_config


def greedy_reward(actor: nn.NetParams, batches: list[StateBatch], env_config: EnvConfig) -> float:
    """Mean greedy per-step reward of an actor over fixed state batches."""
    total, count = 0.0, 0
    for states in batches:
        frac = np.clip(env_config.f_max * nn.predict(actor, states.obs), 0.0, env_config.f_max)
        reward = evaluate_batch(states, frac, env_config)[5]
        total += float(reward.sum())
        count += reward.size
    return total / count


def run_episode(env: SliceEnv, agent: Agent, steps: int, train: bool = True) -> tuple[float, np.ndarray]:
    """One episode of explore-store-train; returns (mean reward, mean greedy action)."""
    obs = env.reset()
    agent.ou.reset()
    total = 0.0
    greedy = np.zeros(env.config.c_max)
    for _ in range(steps):
        greedy += agent.act(obs, explore=False)
        a = agent.act(obs, explore=True)
        outcome, nxt = env.step(a)
        agent.store(Transition(obs, a, outcome.reward, nxt))
        if train:
            agent.train_step()
        total += outcome.reward
        obs = nxt
    return total / steps, greedy / steps


def run_training(spec: ScenarioSpec, env_config: EnvConfig, agent_config: AgentConfig,
                 params: FdrlParams, seed: int, on_round_end=None) -> TrainResult:
    """Shared loop for federated and local-only training.

    MVNOs advance in lockstep episode by episode; agents never share state,
    so this ordering gives the same result as training them one after the
    other. With ``params.aggregate`` the weighted aggregate of the current
    actors is also scored greedily on held-out states after every episode.
    """
    agent_config = _check(spec, env_config, agent_config)
    start = time.perf_counter()
    mvnos = spec.mvnos
    init_seq, env_seqs, agent_seqs, eval_seq = _streams(seed, len(mvnos))
    envs, agents = {}, {}
    for m, es, ag in zip(mvnos, env_seqs, agent_seqs):
        envs[m.mvno_id] = SliceEnv(env_config, m, np.random.default_rng(es))
        # same init stream for everyone: central initialization
        agents[m.mvno_id] = Agent(env_config.c_max, agent_config, np.random.default_rng(ag),
                                  init_rng=np.random.default_rng(init_seq))
    eval_rng = np.random.default_rng(eval_seq)
    held_out = [draw_states(m, env_config, params.eval_states, eval_rng) for m in mvnos]
    counts = [m.n_users for m in mvnos]
    coordinator = Coordinator(spec.user_counts)
    report = TrainReport(seed, env_steps={m.mvno_id: 0 for m in mvnos})
    global_model = None
    local_payloads = {}
    actor_spec = next(iter(agents.values())).actor.spec

    for r in range(1, params.rounds + 1):
        noise = agent_config.noise_scale * params.noise_decay ** (r - 1)
        for agent in agents.values():
            agent.buffer.clear()
            agent.reset_optimizers()
            agent.noise_scale = noise
        for e in range(1, params.episodes + 1):
            for m in mvnos:
                try:
                    mean_r, _ = run_episode(envs[m.mvno_id], agents[m.mvno_id], params.steps)
                except (ContractError, ConfigError, FloatingPointError) as exc:
                    raise type(exc)(f"round {r}, MVNO {m.mvno_id}, episode {e}: {exc}") from exc
                report.env_steps[m.mvno_id] += params.steps
                report.rows.append(TrainRow(r, e, m.mvno_id, mean_r, noise, seed))
            if params.aggregate:
                flat = weighted_mean([nn.flatten(agents[m.mvno_id].actor) for m in mvnos], counts)
                score = greedy_reward(nn.unflatten(actor_spec, flat), held_out, env_config)
                report.rows.append(TrainRow(r, e, GLOBAL, score, noise, seed))
        local_payloads = {i: a.export_params() for i, a in agents.items()}
        if params.aggregate:
            global_model = coordinator.run_round(agents)
        log.info("seed %d round %d done (%.1fs)", seed, r, time.perf_counter() - start)
        if on_round_end is not None:
            on_round_end(r, local_payloads, global_model)
    report.wall_clock = time.perf_counter() - start
    return TrainResult(report, agents, global_model, local_payloads)


def run_fdrl(spec, env_config, agent_config, params: FdrlParams, seed: int, on_round_end=None) -> TrainResult:
    return run_training(spec, env_config, agent_config, dataclasses.replace(params, aggregate=True),
                        seed, on_round_end)


def run_local_baseline(spec, env_config, agent_config, params: FdrlParams, seed: int,
                       on_round_end=None) -> TrainResult:
    return run_training(spec, env_config, agent_config, dataclasses.replace(params, aggregate=False),
                        seed, on_round_end)


@dataclass
class EvalReport:
    n_obs: int
    seed: int
    # counts[model_id][mvno_id] = {"URLLC": v, "eMBB": v}
    counts: dict[str, dict[int, dict[str, int]]] = field(default_factory=dict)
    mean_reward: dict[str, float] = field(default_factory=dict)

    def total(self, model_id: str, user_type: str | None = None) -> int:
        cells = self.counts[model_id].values()
        if user_type is None:
            return sum(c["URLLC"] + c["eMBB"] for c in cells)
        return sum(c[user_type] for c in cells)

    def rows(self):
        for model_id, per_mvno in self.counts.items():
            for mvno_id, cell in per_mvno.items():
                for user_type in ("URLLC", "eMBB"):
                    yield model_id, mvno_id, user_type, cell[user_type], self.n_obs, self.seed


def eval_states(spec: ScenarioSpec, env_config: EnvConfig, n_obs: int, seed: int) -> list[StateBatch]:
    seqs = np.random.SeedSequence([seed, EVAL_STREAM]).spawn(len(spec.mvnos))
    return [draw_states(m, env_config, n_obs, np.random.default_rng(s)) for m, s in zip(spec.mvnos, seqs)]


def evaluate(models: dict[str, nn.NetParams], spec: ScenarioSpec, env_config: EnvConfig,
             n_obs: int = 20_000, seed: int = 0) -> EvalReport:
    """Count per-user SLA violations of greedy actions on shared test states.

    An allocation that exceeds the leased bandwidth cannot be served, so all
    live users of that observation count as violated.
    """
    spec.check(env_config.total_bandwidth, env_config.c_max)
    if n_obs < 1:
        raise ContractError("n_obs must be >= 1")
    specs = {p.spec for p in models.values()}
    if len(specs) > 1:
        raise ContractError("models do not share one architecture")
    batches = eval_states(spec, env_config, n_obs, seed)
    report = EvalReport(n_obs, seed)
    for model_id, actor in models.items():
        if actor.spec[0].in_dim != 2 * env_config.c_max or actor.spec[-1].out_dim != env_config.c_max:
            raise ContractError(f"model '{model_id}' does not match c_max={env_config.c_max}")
        per_mvno = {}
        rewards = []
        for m, states in zip(spec.mvnos, batches):
            frac = np.clip(env_config.f_max * nn.predict(actor, states.obs), 0.0, env_config.f_max)
            out = evaluate_batch(states, frac, env_config)
            rate_v, delay_v, reward, over, box = out[3], out[4], out[5], out[7], out[8]
            infeasible = (over | box)[:, None] & states.live
            urllc = (delay_v | infeasible) & states.is_urllc
            embb = (rate_v | infeasible) & ~states.is_urllc & states.live
            per_mvno[m.mvno_id] = {"URLLC": int(urllc.sum()), "eMBB": int(embb.sum())}
            rewards.append(reward)
        report.counts[model_id] = per_mvno
        report.mean_reward[model_id] = float(np.mean(np.concatenate(rewards)))
    return report


@dataclass
class OracleRow:
    state_id: int
    mvno_id: int
    best_reward: float
    best_fractions: np.ndarray
    resolution: float
    wall_clock: float


def oracle_campaign(spec: ScenarioSpec, env_config: EnvConfig, n_states: int, seed: int,
                    grid_step: float = 0.01, actor: nn.NetParams | None = None):
    """Oracle allocation on n_states sampled states, cycling over the MVNOs.

    With ``actor`` the greedy reward of that policy on the same states is
    returned alongside.
    """
    spec.check(env_config.total_bandwidth, env_config.c_max)
    rng = np.random.default_rng(np.random.SeedSequence([seed, ORACLE_STREAM]))
    rows, policy_rewards = [], []
    for s in range(n_states):
        m = spec.mvnos[s % len(spec.mvnos)]
        states = draw_states(m, env_config, 1, rng)
        n = m.n_users
        t0 = time.perf_counter()
        action, reward, resolution = search_state(
            states.gains[0, :n], states.is_urllc[0, :n], states.tx_power[0, :n], states.packet_size[0, :n],
            m.leased_bandwidth, env_config, grid_step)
        rows.append(OracleRow(s, m.mvno_id, reward, action, resolution, time.perf_counter() - t0))
        if actor is not None:
            frac = np.clip(env_config.f_max * nn.predict(actor, states.obs), 0.0, env_config.f_max)
            policy_rewards.append(float(evaluate_batch(states, frac, env_config)[5][0]))
    return rows, policy_rewards
