"""Checkpoint files: one text header line, then raw little-endian float64.

Layout::

    FDRL-CKPT <version>\\n
    <header JSON, sorted keys>\\n
    <actor><critic><actor_target><critic_target>   (float64, canonical order)
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import nn
from .ddpg import NETWORKS
from .errors import ContractError

MAGIC = b"FDRL-CKPT"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    model_id: str
    actor_spec: tuple[nn.LayerSpec, ...]
    critic_spec: tuple[nn.LayerSpec, ...]
    round_index: int
    payload: dict[str, np.ndarray]
    config_digest: str
    seed: int
    format_version: int = FORMAT_VERSION

    def actor(self) -> nn.NetParams:
        return nn.unflatten(self.actor_spec, self.payload["actor"])

    def header(self) -> dict:
        return {
            "format_version": self.format_version,
            "model_id": self.model_id,
            "round_index": self.round_index,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "architecture": {"actor": _spec_list(self.actor_spec), "critic": _spec_list(self.critic_spec)},
            "networks": list(NETWORKS),
            "lengths": {k: int(self.payload[k].size) for k in NETWORKS},
            "dtype": "<f8",
        }


def _spec_list(spec):
    return [[layer.in_dim, layer.out_dim, layer.activation.value] for layer in spec]


def _spec_from(items):
    return tuple(nn.LayerSpec(int(a), int(b), nn.Activation(c)) for a, b, c in items)


def from_agent(agent, model_id: str, round_index: int, config_digest: str, seed: int, payload=None) -> Checkpoint:
    payload = agent.export_params() if payload is None else payload
    return Checkpoint(model_id, agent.actor.spec, agent.critic.spec, round_index,
                      {k: np.asarray(payload[k], dtype=float) for k in NETWORKS}, config_digest, seed)


def to_bytes(ckpt: Checkpoint) -> bytes:
    header = ckpt.header()
    for k, spec in (("actor", ckpt.actor_spec), ("critic", ckpt.critic_spec)):
        expected = nn.spec_param_count(spec)
        for name in (k, f"{k}_target"):
            if ckpt.payload[name].size != expected:
                raise ContractError(f"{name} has {ckpt.payload[name].size} values, architecture needs {expected}")
    head = MAGIC + f" {ckpt.format_version}\n".encode() + \
        json.dumps(header, sort_keys=True, separators=(",", ":")).encode() + b"\n"
    body = b"".join(np.ascontiguousarray(ckpt.payload[k], dtype="<f8").tobytes() for k in NETWORKS)
    return head + body


def from_bytes(blob: bytes) -> Checkpoint:
    first, sep, rest = blob.partition(b"\n")
    if not sep or not first.startswith(MAGIC):
        raise ContractError("not a checkpoint file")
    version = int(first[len(MAGIC):].strip() or 0)
    if version != FORMAT_VERSION:
        raise ContractError(f"unsupported checkpoint version {version}")
    header_line, sep, body = rest.partition(b"\n")
    if not sep:
        raise ContractError("truncated checkpoint header")
    header = json.loads(header_line)
    actor_spec = _spec_from(header["architecture"]["actor"])
    critic_spec = _spec_from(header["architecture"]["critic"])
    lengths = header["lengths"]
    if any(lengths[k] != nn.spec_param_count(actor_spec if k.startswith("actor") else critic_spec)
           for k in NETWORKS):
        raise ContractError("checkpoint lengths do not match its architecture")
    total = sum(lengths[k] for k in NETWORKS)
    if len(body) != 8 * total:
        raise ContractError(f"checkpoint body has {len(body)} bytes, expected {8 * total}")
    flat = np.frombuffer(body, dtype="<f8").astype(float)
    payload, i = {}, 0
    for k in NETWORKS:
        payload[k] = flat[i:i + lengths[k]].copy()
        i += lengths[k]
    return Checkpoint(header["model_id"], actor_spec, critic_spec, int(header["round_index"]), payload,
                      header["config_digest"], int(header["seed"]), version)


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(to_bytes(ckpt))


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise ContractError(f"checkpoint not found: {path}")
    return from_bytes(path.read_bytes())
