"""Dataset ingestion: MNIST IDX files, pixel-sequence reshaping, synthetic tasks.

IDX parsing is bit-exact and strict: big-endian magics 0x00000803
(images) and 0x00000801 (labels), sizes checked against the payload, and
the two files must agree on the example count. Files may be gzip
compressed; that is sniffed from the 0x1f 0x8b prefix, not the name.

Images become sequences by scaling bytes to [0,1] (exact in float64),
flattening row-major to 784 values and chunking into T steps of equal
width. Synthetic generators are pure functions of (n, T, seed) and build
disjoint train/test splits from one seeded stream.
"""

from __future__ import annotations

import gzip
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "IdxFormatError",
    "SequenceDataset",
    "DataSource",
    "RESHAPE_MODES",
    "load_idx",
    "reshape_pixels",
    "mnist_data_source",
    "make_delay_task",
    "make_adding_task",
    "resolve_data_dir",
    "DATA_DIR_ENV",
]

DATA_DIR_ENV = "GAMMA_RNN_DATA"

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801

# mode -> (seq_len, input_size); seq_len * input_size == 784
RESHAPE_MODES = {
    "seq784x1": (784, 1),
    "seq112x7": (112, 7),
    "seq28x28": (28, 28),
}

MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


class IdxFormatError(ValueError):
    """An IDX file violates the format contract."""


@dataclass
class SequenceDataset:
    """One split: inputs [N, T, input_size] float64, labels [N] int64."""

    inputs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.inputs.ndim != 3 or self.inputs.shape[1] < 1:
            raise ValueError(f"inputs must be [N, T, D] with T > 0, got {self.inputs.shape}")
        if len(self.labels) != len(self.inputs):
            raise ValueError(f"{len(self.inputs)} inputs vs {len(self.labels)} labels")

    def __len__(self) -> int:
        return len(self.labels)


@dataclass
class DataSource:
    """Train and test splits plus the metadata the model needs."""

    train: SequenceDataset
    test: SequenceDataset
    seq_len: int
    input_size: int
    classes: int
    name: str = "dataset"


def _read_maybe_gzip(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        return gzip.decompress(raw)
    return raw


def _be32(buf: bytes, offset: int, path, what: str) -> int:
    if offset + 4 > len(buf):
        raise IdxFormatError(f"{path}: truncated reading {what} at offset {offset}")
    return int.from_bytes(buf[offset:offset + 4], "big")


def load_idx(images_path, labels_path) -> tuple[np.ndarray, np.ndarray]:
    """Parse an IDX image/label file pair.

    Returns (images [N, rows, cols] uint8, labels [N] int64). Raises
    :class:`IdxFormatError` naming the offending offset for wrong magic,
    truncation, or a count mismatch between the two files.
    """
    img_buf = _read_maybe_gzip(images_path)
    magic = _be32(img_buf, 0, images_path, "magic")
    if magic != IMAGES_MAGIC:
        raise IdxFormatError(
            f"{images_path}: bad magic 0x{magic:08x} at offset 0, expected 0x{IMAGES_MAGIC:08x}"
        )
    n = _be32(img_buf, 4, images_path, "image count")
    rows = _be32(img_buf, 8, images_path, "row count")
    cols = _be32(img_buf, 12, images_path, "column count")
    need = 16 + n * rows * cols
    if len(img_buf) < need:
        raise IdxFormatError(
            f"{images_path}: truncated pixel data, file ends at {len(img_buf)} but needs {need}"
        )
    images = np.frombuffer(img_buf[16:need], dtype=np.uint8).reshape(n, rows, cols)

    lbl_buf = _read_maybe_gzip(labels_path)
    magic = _be32(lbl_buf, 0, labels_path, "magic")
    if magic != LABELS_MAGIC:
        raise IdxFormatError(
            f"{labels_path}: bad magic 0x{magic:08x} at offset 0, expected 0x{LABELS_MAGIC:08x}"
        )
    n_labels = _be32(lbl_buf, 4, labels_path, "label count")
    if len(lbl_buf) < 8 + n_labels:
        raise IdxFormatError(
            f"{labels_path}: truncated label data, file ends at {len(lbl_buf)} but needs {8 + n_labels}"
        )
    if n_labels != n:
        raise IdxFormatError(
            f"count mismatch: {images_path} holds {n} images but {labels_path} holds {n_labels} labels"
        )
    labels = np.frombuffer(lbl_buf[8:8 + n_labels], dtype=np.uint8).astype(np.int64)
    return images, labels


def reshape_pixels(image: np.ndarray, mode: str) -> np.ndarray:
    """Turn one 28x28 image into a [T, input_size] sequence in [0, 1]."""
    if mode not in RESHAPE_MODES:
        raise ValueError(f"unknown mode {mode!r}, expected one of {sorted(RESHAPE_MODES)}")
    image = np.asarray(image)
    if image.shape != (28, 28):
        raise ValueError(f"image must be 28x28, got {image.shape}")
    seq_len, width = RESHAPE_MODES[mode]
    flat = image.reshape(784).astype(np.float64) / 255.0
    return flat.reshape(seq_len, width)


def _sequence_split(images: np.ndarray, labels: np.ndarray, mode: str, limit) -> SequenceDataset:
    if limit is not None:
        images, labels = images[:limit], labels[:limit]
    seq_len, width = RESHAPE_MODES[mode]
    inputs = images.reshape(len(images), 784).astype(np.float64) / 255.0
    return SequenceDataset(inputs.reshape(len(images), seq_len, width), labels.copy())


def resolve_data_dir(explicit=None):
    """Dataset directory: explicit argument, else the environment variable."""
    if explicit:
        return Path(explicit)
    env = os.environ.get(DATA_DIR_ENV)
    return Path(env) if env else None


def _find_idx_file(data_dir: Path, base: str) -> Path:
    for candidate in (data_dir / base, data_dir / (base + ".gz")):
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"{base}[.gz] not found under {data_dir}")


def mnist_data_source(
    data_dir,
    mode: str = "seq112x7",
    train_limit: int | None = None,
    test_limit: int | None = None,
) -> DataSource:
    """Load the four standard MNIST IDX files from a directory."""
    data_dir = Path(data_dir)
    train_images, train_labels = load_idx(
        _find_idx_file(data_dir, MNIST_FILES["train_images"]),
        _find_idx_file(data_dir, MNIST_FILES["train_labels"]),
    )
    test_images, test_labels = load_idx(
        _find_idx_file(data_dir, MNIST_FILES["test_images"]),
        _find_idx_file(data_dir, MNIST_FILES["test_labels"]),
    )
    seq_len, width = RESHAPE_MODES[mode]
    return DataSource(
        train=_sequence_split(train_images, train_labels, mode, train_limit),
        test=_sequence_split(test_images, test_labels, mode, test_limit),
        seq_len=seq_len,
        input_size=width,
        classes=10,
        name="mnist",
    )


def _split_counts(n: int) -> tuple[int, int]:
    return n, max(n // 5, 1)


def make_delay_task(n: int, T: int, lag: int, seed: int) -> DataSource:
    """Random +/-1 streams; the label is the sign of the input ``lag`` steps
    before the end (lag=0 means the final input).

    A pure delay line of order >= lag solves this exactly, which makes the
    task a behavioral probe for the memory cascade.
    """
    if not 0 <= lag < T:
        raise ValueError(f"lag must lie in [0, T), got lag={lag}, T={T}")
    rng = np.random.default_rng(seed)
    n_train, n_test = _split_counts(n)
    xs = rng.choice([-1.0, 1.0], size=(n_train + n_test, T, 1))
    labels = (xs[:, T - 1 - lag, 0] > 0).astype(np.int64)
    return DataSource(
        train=SequenceDataset(xs[:n_train], labels[:n_train]),
        test=SequenceDataset(xs[n_train:], labels[n_train:]),
        seq_len=T,
        input_size=1,
        classes=2,
        name=f"delay(lag={lag})",
    )


def make_adding_task(n: int, T: int, seed: int) -> DataSource:
    """Two-channel adding problem, classified by thresholding the sum.

    Channel 0 carries uniform values in [0, 1]; channel 1 marks exactly
    two positions. The label is whether the two marked values sum above 1.
    """
    if T < 2:
        raise ValueError(f"adding task needs T >= 2, got {T}")
    rng = np.random.default_rng(seed)
    n_train, n_test = _split_counts(n)
    total = n_train + n_test
    values = rng.uniform(0.0, 1.0, size=(total, T))
    marks = np.zeros((total, T))
    sums = np.empty(total)
    for row in range(total):
        a, b = rng.choice(T, size=2, replace=False)
        marks[row, a] = 1.0
        marks[row, b] = 1.0
        sums[row] = values[row, a] + values[row, b]
    xs = np.stack([values, marks], axis=2)
    labels = (sums > 1.0).astype(np.int64)
    return DataSource(
        train=SequenceDataset(xs[:n_train], labels[:n_train]),
        test=SequenceDataset(xs[n_train:], labels[n_train:]),
        seq_len=T,
        input_size=2,
        classes=2,
        name="adding",
    )
