#!/usr/bin/env python3
"""Desk-scale pixel-sequence MNIST: 2000 train / 1000 test, h=32, 3 epochs.

Each 28x28 digit becomes a 112-step sequence of 7 pixels, so the
classifier must carry stroke information across dozens of steps before
the readout at the final step. Trains the single-layer LSTM, a 2-layer
stack, and the gamma-memory cell, then prints the accuracy ordering.

Uses the subset under data/mnist_subset by default; point --data (or
GAMMA_RNN_DATA) at a directory with the standard IDX files to override.
Runtime is a few minutes per model on one core.
"""

import argparse
import sys
import time
from pathlib import Path

from gamma_rnn.config import apply_overrides, build_run_config, default_config_dict
from gamma_rnn.data import mnist_data_source, resolve_data_dir

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from test_acceptance import DESK_CONFIGS  # single source of truth for these runs

from gamma_rnn.train import train_loop

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--data", help="directory with MNIST IDX files")
args = parser.parse_args()

data_dir = resolve_data_dir(args.data) or Path(__file__).resolve().parents[1] / "data" / "mnist_subset"
data = mnist_data_source(data_dir, mode="seq112x7", train_limit=2000, test_limit=1000)
print(f"data: {len(data.train)} train / {len(data.test)} test sequences of "
      f"{data.seq_len} steps x {data.input_size} pixels\n")

results = {}
for name, overrides in DESK_CONFIGS.items():
    cfg = build_run_config(apply_overrides(default_config_dict(), overrides))
    start = time.perf_counter()
    result = train_loop(cfg, data)
    wall = time.perf_counter() - start
    s = result.summary
    results[name] = s["final_test_accuracy"]
    print(f"{name:>13}: test accuracy {s['final_test_accuracy']:.3f}, "
          f"train loss {s['initial_train_loss']:.3f} -> {s['final_train_loss']:.3f} "
          f"({wall:.0f}s)")

ranking = sorted(results, key=results.get, reverse=True)
print("\naccuracy ordering:", " > ".join(f"{n}({results[n]:.3f})" for n in ranking))
