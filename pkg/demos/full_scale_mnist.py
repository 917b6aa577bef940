#!/usr/bin/env python3
"""Extended run: full 60k/10k pixel-sequence MNIST, h=128, 10 epochs.

This is the long version of demos/desk_scale_mnist.py. It needs the full
official MNIST IDX files (train-images-idx3-ubyte[.gz] etc.) in a
directory passed via --data or GAMMA_RNN_DATA; the checked-in subset is
deliberately too small for it. Expect several hours per model on one CPU
core. Full-scale runs of these architectures are commonly reported in
the low-to-high 90s percent range; treat the printout as a qualitative
comparison, not a benchmark.
"""

import argparse
import sys
import time

from gamma_rnn.config import apply_overrides, build_run_config, default_config_dict
from gamma_rnn.data import mnist_data_source, resolve_data_dir
from gamma_rnn.train import train_loop

CONFIGS = {
    "lstm": [
        "model.kind=lstm",
        "model.forget_bias=2.0",
        "model.fanin_input=true",
    ],
    "stacked_lstm_2": [
        "model.kind=stacked_lstm",
        "model.layers=2",
        "model.forget_bias=2.0",
        "model.fanin_input=true",
    ],
    "stacked_lstm_3": [
        "model.kind=stacked_lstm",
        "model.layers=3",
        "model.forget_bias=2.0",
        "model.fanin_input=true",
    ],
    "gamma_lstm": [
        "model.kind=gamma_lstm",
        "model.memory_order=3",
        "model.level_timescales=[2,6,20]",
    ],
}

COMMON = [
    "model.hidden=128",
    "train.epochs=10",
    "train.batch_size=64",
    "train.lr=0.001",
    "train.log_every=100",
    "seed=7",
]

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--data", help="directory with the full MNIST IDX files")
parser.add_argument("--models", nargs="*", default=list(CONFIGS),
                    help=f"subset of {list(CONFIGS)}")
parser.add_argument("--out", help="directory for metrics/checkpoints (optional)")
args = parser.parse_args()

data_dir = resolve_data_dir(args.data)
if data_dir is None:
    sys.exit("full MNIST directory required: pass --data or set GAMMA_RNN_DATA")

data = mnist_data_source(data_dir, mode="seq112x7")
print(f"data: {len(data.train)} train / {len(data.test)} test sequences")
if len(data.train) < 60000:
    print("warning: fewer than 60000 training images; this is not the full set")

for name in args.models:
    overrides = COMMON + CONFIGS[name]
    if args.out:
        overrides.append(f"out={args.out}/{name}")
    cfg = build_run_config(apply_overrides(default_config_dict(), overrides))
    start = time.perf_counter()
    result = train_loop(cfg, data, out_dir=f"{args.out}/{name}" if args.out else None)
    wall = time.perf_counter() - start
    per_epoch = [f"{r.test_accuracy:.4f}" for r in result.records if r.test_accuracy is not None]
    print(f"{name}: epochs {per_epoch} ({wall / 3600:.1f}h)")
