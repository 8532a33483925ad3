"""Command-line interface.

Subcommands: train, sample, eval, reproduce, count-params, print-config.
Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .datasets import PointCloud, get_experiment, sample_cloud
from .experiments import (
    DEFAULT_CONFIG,
    reproduce_table,
    resolve_config,
    run_cell,
)
from .io import cloud_from_csv, cloud_to_csv, load_checkpoint, read_json, trajectory_to_csv, ensure_dir, write_json
from .losses import ConfigError, LossConfig
from .metrics import count_params, estimate_flops, euclidean_distance_loss
from .nn import NumericError
from .rng import Rng
from .sampling import SamplerConfig, sample


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        doc = read_json(path)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    return doc


def cmd_train(args) -> int:
    doc = _load_config(args.config)
    for key, val in (
        ("seed", args.seed), ("out", args.out), ("steps", args.steps),
        ("dataset", args.dataset), ("losses", args.losses),
    ):
        if val is not None:
            doc[key] = val
    if args.order is not None or args.sample_steps is not None:
        sampler = dict(doc.get("sampler", {}))
        if args.order is not None:
            sampler["order"] = args.order
        if args.sample_steps is not None:
            sampler["steps"] = args.sample_steps
        doc["sampler"] = sampler
    cell = resolve_config(doc)
    report = run_cell(cell, write_artifacts=cell.out is not None)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return 0


def cmd_sample(args) -> int:
    fields, meta = load_checkpoint(args.checkpoint)
    cfg = SamplerConfig(steps=args.steps, order=args.order)
    rng = Rng(args.seed)
    if args.dataset:
        spec = get_experiment(args.dataset).dataset
        x_init = sample_cloud(spec, rng, "source", args.n)
    else:
        x_init = rng.points(args.n)
    traj = sample(fields, cfg, x_init)
    out = ensure_dir(args.out)
    cloud_to_csv(PointCloud(traj[-1], "generated"), out / "generated.csv")
    if args.traj:
        trajectory_to_csv(traj, out / "traj.csv")
    print(f"wrote {args.n} endpoints after {args.steps} steps to {out / 'generated.csv'}")
    return 0


def cmd_eval(args) -> int:
    gen = [c for c in cloud_from_csv(args.generated)]
    tgt = [c for c in cloud_from_csv(args.target)]
    gen_pts = np.concatenate([c.points for c in gen])
    tgt_pts = np.concatenate([c.points for c in tgt])
    value = euclidean_distance_loss(gen_pts, tgt_pts)
    doc = {"euclidean_distance": value}
    if args.out:
        write_json(doc, args.out)
    print(json.dumps(doc, sort_keys=True))
    return 0


def cmd_reproduce(args) -> int:
    seeds = tuple(range(args.seeds))
    summary = reproduce_table(
        args.table, seeds=seeds, out_dir=args.out,
        sampler_steps=args.sample_steps, steps_override=args.steps,
        workers=args.workers,
    )
    from .experiments import render_table

    print(render_table(args.table, summary))
    return 0


def cmd_count_params(args) -> int:
    cfg = LossConfig.from_label(args.losses)
    hidden = tuple(int(h) for h in args.hidden.split(",") if h)
    params = count_params(cfg, hidden)
    flops = estimate_flops(cfg, hidden, batch=args.batch)
    print(json.dumps({"losses": cfg.label(), "param_count": params,
                      "flop_estimate": flops}, sort_keys=True))
    return 0


def cmd_print_config(args) -> int:
    doc = _load_config(args.config)
    merged = json.loads(json.dumps(DEFAULT_CONFIG))
    resolve_config(doc)  # validate before echoing
    for key, val in doc.items():
        if isinstance(DEFAULT_CONFIG.get(key), dict) and isinstance(val, dict):
            merged[key].update(val)
        else:
            merged[key] = val
    print(json.dumps(merged, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="homoflow",
                                     description="High-order shortcut flow matching on 2-D data")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one run and emit its artifacts")
    p.add_argument("--config", help="JSON config file (defaults otherwise)")
    p.add_argument("--dataset", help="named dataset, e.g. eight_mode")
    p.add_argument("--losses", help="loss combination label, e.g. M1+M2+SC")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="artifact directory")
    p.add_argument("--steps", type=int, help="training steps")
    p.add_argument("--order", type=int, choices=(1, 2, 3), help="sampler order")
    p.add_argument("--sample-steps", type=int, help="sampler step count M")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", help="sample from a saved checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--steps", type=int, default=128)
    p.add_argument("--order", type=int, choices=(1, 2, 3))
    p.add_argument("--n", type=int, default=800)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dataset", help="draw starting points from this dataset's source")
    p.add_argument("--traj", action="store_true", help="also write the full trajectory CSV")
    p.add_argument("--out", default="samples")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("eval", help="euclidean distance between two cloud CSVs")
    p.add_argument("--generated", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--out", help="write metrics JSON here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("reproduce", help="run a published comparison grid")
    p.add_argument("table", choices=("t1", "t2", "t3"))
    p.add_argument("--seeds", type=int, default=5, help="number of seeds (0..n-1)")
    p.add_argument("--steps", type=int, help="override training steps for every cell")
    p.add_argument("--sample-steps", type=int, help="override sampler M")
    p.add_argument("--workers", type=int, help="process pool size")
    p.add_argument("--out", default="reproduce")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("count-params", help="parameter/FLOP accounting for a loss config")
    p.add_argument("--losses", required=True)
    p.add_argument("--hidden", default="100,100")
    p.add_argument("--batch", type=int, default=1)
    p.set_defaults(func=cmd_count_params)

    p = sub.add_parser("print-config", help="dump the fully defaulted config JSON")
    p.add_argument("--config", help="merge this file over the defaults first")
    p.set_defaults(func=cmd_print_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, KeyError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
