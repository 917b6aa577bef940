#!/usr/bin/env python3
"""Convert per-digit MNIST JSON files into standard IDX files.

Input: a directory of files ``0.json`` .. ``9.json``, each of the form
``{"data": [...]}`` where the array is a flat concatenation of 28x28
images with pixel intensities in [0, 1] (rounded to three decimals, as
shipped by the npm ``mnist`` package). Intensities are mapped back to
exact bytes via round(v * 255), which is injective at that rounding.

Output: ``train-images-idx3-ubyte.gz``, ``train-labels-idx1-ubyte.gz``,
``t10k-images-idx3-ubyte.gz``, ``t10k-labels-idx1-ubyte.gz`` holding a
balanced, disjoint train/test subset drawn with a fixed shuffle seed.
"""

import argparse
import gzip
import json
from pathlib import Path

import numpy as np

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


def load_digit_file(path: Path) -> np.ndarray:
    flat = np.asarray(json.loads(path.read_text())["data"], dtype=np.float64)
    if flat.size % 784:
        raise ValueError(f"{path}: length {flat.size} is not a multiple of 784")
    pixels = np.rint(flat * 255.0)
    if np.any(np.abs(pixels / 255.0 - flat) > 5e-4):
        raise ValueError(f"{path}: intensities are not 3-decimal roundings of k/255")
    return pixels.astype(np.uint8).reshape(-1, 28, 28)


def _write_gzip(path: Path, payload: bytes) -> None:
    # mtime=0 keeps rebuilds byte-identical
    with open(path, "wb") as raw:
        with gzip.GzipFile(fileobj=raw, mode="wb", compresslevel=9, mtime=0) as fh:
            fh.write(payload)


def write_idx_images(path: Path, images: np.ndarray) -> None:
    header = IMAGES_MAGIC.to_bytes(4, "big") + len(images).to_bytes(4, "big")
    header += (28).to_bytes(4, "big") + (28).to_bytes(4, "big")
    _write_gzip(path, header + images.tobytes())


def write_idx_labels(path: Path, labels: np.ndarray) -> None:
    header = LABELS_MAGIC.to_bytes(4, "big") + len(labels).to_bytes(4, "big")
    _write_gzip(path, header + labels.astype(np.uint8).tobytes())


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("json_dir", type=Path, help="directory holding 0.json .. 9.json")
    parser.add_argument("out_dir", type=Path, help="where to write the four IDX .gz files")
    parser.add_argument("--train-per-digit", type=int, default=200)
    parser.add_argument("--test-per-digit", type=int, default=100)
    parser.add_argument("--seed", type=int, default=20260809)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    train_images, train_labels, test_images, test_labels = [], [], [], []
    for digit in range(10):
        images = load_digit_file(args.json_dir / f"{digit}.json")
        need = args.train_per_digit + args.test_per_digit
        if len(images) < need:
            raise ValueError(f"digit {digit}: only {len(images)} images, need {need}")
        picks = rng.permutation(len(images))[:need]
        train_images.append(images[picks[:args.train_per_digit]])
        test_images.append(images[picks[args.train_per_digit:]])
        train_labels.append(np.full(args.train_per_digit, digit))
        test_labels.append(np.full(args.test_per_digit, digit))

    def interleave(parts):
        stacked = np.stack(parts)  # [10, per_digit, ...]
        return np.swapaxes(stacked, 0, 1).reshape(-1, *stacked.shape[2:])

    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_idx_images(args.out_dir / "train-images-idx3-ubyte.gz", interleave(train_images))
    write_idx_labels(args.out_dir / "train-labels-idx1-ubyte.gz", interleave(train_labels))
    write_idx_images(args.out_dir / "t10k-images-idx3-ubyte.gz", interleave(test_images))
    write_idx_labels(args.out_dir / "t10k-labels-idx1-ubyte.gz", interleave(test_labels))
    print(f"wrote {10 * args.train_per_digit} train / {10 * args.test_per_digit} test "
          f"examples to {args.out_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
