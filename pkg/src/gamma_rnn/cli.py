"""Command-line front end.

Subcommands: ``train``, ``eval``, ``count-params``, ``grad-check``,
``trace-attention``. Every command is deterministic given config plus
seed. Exit codes: 0 success, 1 usage/config error, 2 data or format
error, 3 numerical failure (divergence or a failed gradient check).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import ndmath as nd
from .cells import ConfigurationError
from .config import (
    ConfigError,
    apply_overrides,
    build_run_config,
    default_config_dict,
    effective_config_dict,
    load_config_file,
)
from .data import RESHAPE_MODES, IdxFormatError
from .model import CheckpointError, SequenceClassifier, count_params, load_checkpoint, save_checkpoint
from .train import DivergenceError, build_data_source, evaluate, spec_from_model_config, train_loop
from .verify import CHECK_TOLERANCE, bptt_max_rel_err, make_cell_stack

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


def _load_effective(args) -> dict:
    config = load_config_file(args.config) if args.config else default_config_dict()
    overrides = list(args.set or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    if getattr(args, "data", None):
        overrides.append(f"data.dir={args.data}")
    if getattr(args, "out", None):
        overrides.append(f"out={args.out}")
    return apply_overrides(config, overrides)


def _metadata_for_count(cfg) -> tuple[int, int]:
    """(input_size, classes) implied by the data section, no files needed."""
    if cfg.data.source == "mnist":
        return RESHAPE_MODES[cfg.data.mode][1], 10
    if cfg.data.source == "delay":
        return 1, 2
    return 2, 2


def cmd_train(args) -> int:
    effective = _load_effective(args)
    cfg = build_run_config(effective)
    if not cfg.out:
        raise ConfigError("train needs an output directory: pass --out or set 'out'")
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.echo.json").write_text(effective_config_dict(effective))
    data = build_data_source(cfg)
    result = train_loop(cfg, data, out_dir=out_dir)
    # checkpoint bytes must not depend on where the run wrote its outputs
    stored = dict(effective, out=None)
    save_checkpoint(out_dir / "checkpoint.bin", result.spec, result.state.params,
                    extra={"config": stored})
    print(json.dumps(result.summary))
    return EXIT_OK


def cmd_eval(args) -> int:
    spec, params, extra = load_checkpoint(args.checkpoint)
    stored = extra.get("config", default_config_dict())
    cfg = build_run_config(stored)
    data = build_data_source(cfg, data_dir=args.data)
    model = SequenceClassifier(spec)
    accuracy = evaluate(model, params, data.test)
    print(json.dumps({"accuracy": accuracy, "n": len(data.test), "model": spec.kind}))
    return EXIT_OK


def cmd_count_params(args) -> int:
    cfg = build_run_config(_load_effective(args))
    input_size, classes = _metadata_for_count(cfg)
    print(count_params(spec_from_model_config(cfg.model, input_size, classes)))
    return EXIT_OK


def cmd_grad_check(args) -> int:
    cfg = build_run_config(_load_effective(args))
    seed = cfg.seed
    worst = 0.0
    for kind in ("lstm", "stacked_lstm", "gamma_lstm"):
        cells = make_cell_stack(
            kind,
            memory_order=cfg.model.memory_order,
            readout_lag=cfg.model.readout_lag,
            shared_forget=cfg.model.shared_forget,
        )
        err = bptt_max_rel_err(cells, seed=seed)
        worst = max(worst, err)
        print(f"{kind} max_rel_err={err:.3e}")
    if worst > CHECK_TOLERANCE:
        print(f"FAIL: worst {worst:.3e} exceeds {CHECK_TOLERANCE:.0e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_trace_attention(args) -> int:
    spec, params, extra = load_checkpoint(args.checkpoint)
    if spec.kind != "gamma_lstm":
        raise ConfigError(f"attention traces need a gamma_lstm checkpoint, got {spec.kind!r}")
    stored = extra.get("config", default_config_dict())
    cfg = build_run_config(stored)
    data = build_data_source(cfg, data_dir=args.data)
    if not 0 <= args.index < len(data.test):
        raise ConfigError(f"--index {args.index} out of range for test split of {len(data.test)}")
    model = SequenceClassifier(spec)
    tape = nd.Tape(record=False)
    pvars = {k: tape.variable(p) for k, p in params.items()}
    example = data.test.inputs[args.index:args.index + 1]
    _, attention = model.forward(tape, pvars, example, collect_attention=True)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "attention.csv"
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"a{k}" for k in range(spec.memory_order + 1)])
        for t, att in enumerate(attention):
            writer.writerow([t] + [f"{v:.12g}" for v in att.value[0]])
    print(str(out_path))
    return EXIT_OK


def _add_config_flags(p: argparse.ArgumentParser, seed=True, data=True, out=False):
    p.add_argument("--config", help="JSON config file (defaults apply if omitted)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override one config entry, e.g. --set train.lr=0.001")
    if seed:
        p.add_argument("--seed", type=int, help="override the run seed")
    if data:
        p.add_argument("--data", help="dataset directory (or set GAMMA_RNN_DATA)")
    if out:
        p.add_argument("--out", help="output directory for run artifacts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gamma-rnn",
                                     description="Gamma-memory LSTM laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model; writes metrics + checkpoint")
    _add_config_flags(p, out=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint on the test split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", help="dataset directory (or set GAMMA_RNN_DATA)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("count-params", help="print the exact learnable-scalar count")
    _add_config_flags(p, seed=False, data=False)
    p.set_defaults(func=cmd_count_params)

    p = sub.add_parser("grad-check", help="verify BPTT gradients for every cell kind")
    _add_config_flags(p, data=False)
    p.set_defaults(func=cmd_grad_check)

    p = sub.add_parser("trace-attention", help="dump per-step attention weights to CSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--index", type=int, default=0, help="test example index")
    p.add_argument("--data", help="dataset directory (or set GAMMA_RNN_DATA)")
    p.add_argument("--out", help="directory for attention.csv (default: cwd)")
    p.set_defaults(func=cmd_trace_attention)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IdxFormatError, CheckpointError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DivergenceError, nd.ContractError, nd.ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
