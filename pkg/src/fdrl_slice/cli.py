"""Command-line entry points: train, evaluate, oracle, inspect-checkpoint."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__, _accel
from .checkpoint import from_agent, load_checkpoint, save_checkpoint
from .config import RunConfig, config_digest, config_from_dict, dump_config, load_config
from .ddpg import Agent
from .errors import ConfigError, ContractError, SearchBudgetExceeded
from .harness import GLOBAL, evaluate, oracle_campaign, run_fdrl, run_local_baseline

log = logging.getLogger("fdrl_slice")

TRAIN_COLUMNS = ("round", "episode", "mvno_id", "mean_reward", "noise_scale", "seed")
EVAL_COLUMNS = ("model_id", "mvno_id", "user_type", "violations", "n_obs", "seed")
ORACLE_COLUMNS = ("state_id", "best_reward", "best_fractions", "wall_clock")


def fmt(x) -> str:
    """Locale-independent, round-trippable number formatting."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: Path, columns, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else config_from_dict({})
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seeds"] = (args.seed,)
    if getattr(args, "scenario", None):
        changes["scenario"] = args.scenario
    if getattr(args, "out", None):
        changes["output_dir"] = str(args.out)
    cfg = dataclasses.replace(cfg, **changes)
    cfg.scenario_spec()
    return cfg


def cmd_train(args) -> int:
    cfg = _load(args)
    spec = cfg.scenario_spec()
    out = Path(cfg.output_dir)
    digest = config_digest(cfg)
    runner = run_fdrl if args.mode == "fdrl" else run_local_baseline
    rows, env_steps, clocks = [], {}, {}
    # template agent only supplies the architecture for checkpoint headers
    template = Agent(cfg.env.c_max, cfg.ddpg, np.random.default_rng(0))
    for seed in cfg.seeds:
        ckpt_dir = out / "checkpoints" / f"seed{seed}"

        def on_round_end(r, local_payloads, global_model, seed=seed, ckpt_dir=ckpt_dir):
            for mvno_id, payload in local_payloads.items():
                save_checkpoint(ckpt_dir / f"round{r}_mvno{mvno_id}.ckpt",
                                from_agent(template, f"local-mvno{mvno_id}", r, digest, seed, payload))
            if global_model is not None:
                save_checkpoint(ckpt_dir / f"round{r}_global.ckpt",
                                from_agent(template, GLOBAL, r, digest, seed, global_model.payload))

        result = runner(spec, cfg.env, cfg.ddpg, cfg.federation, seed, on_round_end)
        rows.extend((r.round, r.episode, r.mvno_id, r.mean_reward, r.noise_scale, r.seed)
                    for r in result.report.rows)
        env_steps[str(seed)] = {str(k): v for k, v in result.report.env_steps.items()}
        clocks[str(seed)] = round(result.report.wall_clock, 3)
        log.info("seed %d finished in %.1fs", seed, result.report.wall_clock)
    write_csv(out / "train_report.csv", TRAIN_COLUMNS, rows)
    (out / "config.yaml").write_text(dump_config(cfg))
    manifest = {
        "command": "train",
        "mode": args.mode,
        "config_digest": digest,
        "scenario": spec.name,
        "seeds": list(cfg.seeds),
        "env_steps": env_steps,
        "wall_clock_s": clocks,
        "versions": {"fdrl_slice": __version__, "numpy": np.__version__, "python": platform.python_version()},
        "numba": _accel.USE_NUMBA,
    }
    (out / "run_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load(args)
    spec = cfg.scenario_spec()
    models = {}
    for path in args.checkpoint:
        ckpt = load_checkpoint(path)
        model_id = ckpt.model_id if ckpt.model_id not in models else Path(path).stem
        if model_id in models:
            raise ContractError(f"duplicate model id '{model_id}' ({path})")
        models[model_id] = ckpt.actor()
    seed = cfg.seeds[0]
    report = evaluate(models, spec, cfg.env, args.n_obs, seed)
    out = Path(cfg.output_dir)
    write_csv(out / "eval_report.csv", EVAL_COLUMNS, report.rows())
    return 0


def cmd_oracle(args) -> int:
    cfg = _load(args)
    spec = cfg.scenario_spec()
    rows, _ = oracle_campaign(spec, cfg.env, args.n_states, cfg.seeds[0], args.grid_step)
    out = Path(cfg.output_dir)
    write_csv(out / "oracle_report.csv", ORACLE_COLUMNS, (
        (r.state_id, r.best_reward, " ".join(fmt(float(f)) for f in r.best_fractions),
         fmt(r.wall_clock) if args.timing else "")
        for r in rows))
    return 0


def cmd_inspect(args) -> int:
    ckpt = load_checkpoint(args.path)
    header = ckpt.header()
    header["n_params"] = {k: int(v.size) for k, v in ckpt.payload.items()}
    print(json.dumps(header, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fdrl-slice", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="run federated or local-only training")
    t.add_argument("--config", type=Path)
    t.add_argument("--seed", type=int)
    t.add_argument("--mode", choices=("fdrl", "local"), default="fdrl")
    t.add_argument("--scenario")
    t.add_argument("--out", type=Path)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="count SLA violations of saved models")
    e.add_argument("--checkpoint", type=Path, nargs="+", required=True)
    e.add_argument("--config", type=Path)
    e.add_argument("--scenario")
    e.add_argument("--n-obs", type=int, default=20_000)
    e.add_argument("--seed", type=int)
    e.add_argument("--out", type=Path)
    e.set_defaults(func=cmd_evaluate)

    o = sub.add_parser("oracle", help="exhaustive grid allocation on sampled states")
    o.add_argument("--config", type=Path)
    o.add_argument("--scenario")
    o.add_argument("--grid-step", type=float, default=0.01)
    o.add_argument("--n-states", type=int, default=200)
    o.add_argument("--seed", type=int)
    o.add_argument("--out", type=Path)
    o.add_argument("--timing", action="store_true",
                   help="fill the wall_clock column (makes the report non-reproducible)")
    o.set_defaults(func=cmd_oracle)

    i = sub.add_parser("inspect-checkpoint", help="print a checkpoint header")
    i.add_argument("path", type=Path)
    i.set_defaults(func=cmd_inspect)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ContractError, SearchBudgetExceeded, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
