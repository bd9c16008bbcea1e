"""User-count weighted model aggregation and the synchronous round barrier."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AggregationError, ContractError


@dataclass
class ModelUpdate:
    mvno_id: int
    user_count: int
    payload: dict[str, np.ndarray]
    round_index: int


@dataclass
class GlobalModel:
    round_index: int
    payload: dict[str, np.ndarray]
    total_users: int


def weighted_mean(vectors, counts) -> np.ndarray:
    """sum_i C_i * theta_i / sum_i C_i, elementwise."""
    total = float(sum(counts))
    acc = np.zeros_like(vectors[0], dtype=float)
    # normalized weights keep a single contributor exact
    for c, v in zip(counts, vectors):
        acc += (c / total) * v
    return acc


def aggregate(updates: list[ModelUpdate]) -> GlobalModel:
    if not updates:
        raise AggregationError("no updates to aggregate")
    ids = [u.mvno_id for u in updates]
    if len(set(ids)) != len(ids):
        raise AggregationError(f"duplicate mvno_id in updates: {ids}")
    rounds = {u.round_index for u in updates}
    if len(rounds) != 1:
        raise AggregationError(f"updates come from different rounds: {sorted(rounds)}")
    for u in updates:
        if u.user_count < 1:
            raise AggregationError(f"MVNO {u.mvno_id}: user_count must be >= 1")
    keys = list(updates[0].payload)
    for u in updates[1:]:
        if list(u.payload) != keys:
            raise AggregationError(f"MVNO {u.mvno_id}: payload networks differ")
    counts = [u.user_count for u in updates]
    payload = {}
    for k in keys:
        vecs = [np.asarray(u.payload[k], dtype=float) for u in updates]
        if any(v.shape != vecs[0].shape for v in vecs):
            raise AggregationError(f"payload '{k}' lengths differ: {[v.size for v in vecs]}")
        payload[k] = weighted_mean(vecs, counts)
    return GlobalModel(rounds.pop(), payload, int(sum(counts)))


def broadcast(model: GlobalModel, agents) -> None:
    """Replace every agent's networks with the global payload."""
    for i, agent in enumerate(agents):
        current = agent.export_params()
        for k, v in model.payload.items():
            if k not in current or current[k].shape != v.shape:
                raise ContractError(f"agent {i}: payload '{k}' does not fit its architecture")
    for agent in agents:
        agent.import_params({k: v.copy() for k, v in model.payload.items()})


class Coordinator:
    """Round barrier: collects one update per MVNO, aggregates, broadcasts."""

    def __init__(self, user_counts: dict[int, int]):
        self.user_counts = dict(user_counts)
        self.round_index = 0
        self.history: list[GlobalModel] = []

    def collect(self, agents: dict[int, object]) -> list[ModelUpdate]:
        return [ModelUpdate(i, self.user_counts[i], a.export_params(), self.round_index)
                for i, a in agents.items()]

    def run_round(self, agents: dict[int, object]) -> GlobalModel:
        model = aggregate(self.collect(agents))
        broadcast(model, list(agents.values()))
        self.history.append(model)
        self.round_index += 1
        return model
