"""Sequence classifiers built from the recurrent cells, plus checkpoints.

A model is one or more cells followed by a linear head on the final
hidden state. Parameters of layer ``n`` are prefixed ``l{n}.`` in the
flat namespace; the head uses ``head.W`` / ``head.b``.

Checkpoints are a flat binary container: an 8-byte little-endian header
length, a JSON header (format tag, model description, tensor directory
with shapes and byte offsets), then the raw tensors as little-endian
64-bit reals in row-major order.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from . import ndmath as nd
from .cells import ConfigurationError, GammaLstmCell, LstmCell, run_sequence
from .ndmath import Var

__all__ = [
    "MODEL_KINDS",
    "ModelSpec",
    "SequenceClassifier",
    "count_params",
    "CheckpointError",
    "save_checkpoint",
    "load_checkpoint",
]

MODEL_KINDS = ("lstm", "stacked_lstm", "gamma_lstm")

CHECKPOINT_FORMAT = "gamma-rnn/params-v1"


@dataclass(frozen=True)
class ModelSpec:
    """Everything needed to build a classifier and count its parameters.

    The last three fields tune initialization only and never change the
    parameter count: ``forget_bias`` offsets every forget-gate input
    bias, ``level_timescales`` seeds each cascade gate k so its level
    initially turns over about once per tau_k steps, and ``fanin_input``
    scales input-path weights by their own fan-in instead of the hidden
    width.
    """

    kind: str
    input_size: int = 7
    hidden: int = 128
    classes: int = 10
    layers: int = 1
    memory_order: int = 3
    readout_lag: bool = False
    shared_forget: bool = False
    forget_bias: float | None = None
    level_timescales: tuple[float, ...] | None = None
    fanin_input: bool = False

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigurationError(f"unknown model kind {self.kind!r}, expected one of {MODEL_KINDS}")
        if min(self.input_size, self.hidden, self.classes) < 1:
            raise ConfigurationError("input_size, hidden and classes must be >= 1")
        if self.kind == "lstm" and self.layers != 1:
            raise ConfigurationError("kind 'lstm' is single-layer; use 'stacked_lstm' for layers > 1")
        if self.kind == "stacked_lstm" and self.layers < 1:
            raise ConfigurationError(f"stacked_lstm needs layers >= 1, got {self.layers}")
        if self.kind == "gamma_lstm":
            if self.memory_order < 1:
                raise ConfigurationError(f"gamma_lstm needs memory_order >= 1, got {self.memory_order}")
            if self.layers != 1:
                raise ConfigurationError("gamma_lstm is single-layer")
        if self.level_timescales is not None:
            object.__setattr__(self, "level_timescales", tuple(float(t) for t in self.level_timescales))
            if self.kind != "gamma_lstm":
                raise ConfigurationError("level_timescales applies to gamma_lstm only")
            if self.shared_forget:
                raise ConfigurationError("level_timescales needs per-level forget gates")
            if len(self.level_timescales) != self.memory_order:
                raise ConfigurationError(
                    f"level_timescales needs {self.memory_order} entries, got {len(self.level_timescales)}"
                )
            if any(t <= 1.0 for t in self.level_timescales):
                raise ConfigurationError("every level timescale must exceed 1 step")


class SequenceClassifier:
    """Recurrent encoder plus a linear head on the final hidden state."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self.cells = []
        if spec.kind == "gamma_lstm":
            self.cells.append(
                GammaLstmCell(
                    spec.input_size,
                    spec.hidden,
                    spec.memory_order,
                    readout_lag=spec.readout_lag,
                    shared_forget=spec.shared_forget,
                )
            )
        else:
            layers = spec.layers if spec.kind == "stacked_lstm" else 1
            width = spec.input_size
            for _ in range(layers):
                self.cells.append(LstmCell(width, spec.hidden))
                width = spec.hidden

    def param_shapes(self) -> dict[str, tuple]:
        shapes: dict[str, tuple] = {}
        for n, cell in enumerate(self.cells):
            for name, shape in cell.param_shapes().items():
                shapes[f"l{n}.{name}"] = shape
        shapes["head.W"] = (self.spec.hidden, self.spec.classes)
        shapes["head.b"] = (self.spec.classes,)
        return shapes

    def init_params(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        """Seeded initialization, one tensor per draw in namespace order.

        Base scheme is uniform(-1/sqrt(h), 1/sqrt(h)) for every tensor;
        the spec's init fields adjust forget-gate biases and input-path
        weight scales on top (see :class:`ModelSpec`).
        """
        spec = self.spec
        bound = 1.0 / np.sqrt(spec.hidden)
        params: dict[str, np.ndarray] = {}
        for name, shape in self.param_shapes().items():
            tail = name.rsplit(".", 1)[-1]
            b = bound
            if spec.fanin_input and tail.startswith("W_x"):
                b = 1.0 / np.sqrt(shape[0])
            arr = rng.uniform(-b, b, size=shape)
            if spec.level_timescales is not None and tail.startswith("b_xf") and tail != "b_xf":
                tau = spec.level_timescales[int(tail[4:]) - 1]
                leak = 1.0 / tau
                arr = np.log(leak / (1.0 - leak)) + rng.uniform(-0.5, 0.5, size=shape)
            elif spec.forget_bias is not None and tail.startswith("b_xf"):
                arr = arr + spec.forget_bias
            params[name] = arr
        return params

    def forward(
        self,
        tape: nd.Tape,
        params: Mapping[str, Var],
        inputs: np.ndarray,
        collect_attention: bool = False,
    ):
        """Run a [B, T, D] batch; returns (logits, attention-per-step or None)."""
        if inputs.ndim != 3 or inputs.shape[2] != self.spec.input_size:
            raise nd.ShapeError(
                f"inputs must be [B, T, {self.spec.input_size}], got {inputs.shape}"
            )
        batch, seq_len = inputs.shape[0], inputs.shape[1]
        xs = [tape.variable(np.ascontiguousarray(inputs[:, t, :])) for t in range(seq_len)]
        attention = None
        final_h = None
        for n, cell in enumerate(self.cells):
            prefix = f"l{n}."
            layer_params = {
                name[len(prefix):]: var for name, var in params.items() if name.startswith(prefix)
            }
            run = run_sequence(cell, layer_params, cell.zero_state(tape, batch), xs)
            xs = run.hidden
            final_h = run.final_state.h
            if run.attention is not None:
                attention = run.attention
        logits = nd.matmul(final_h, params["head.W"]) + params["head.b"]
        return (logits, attention) if collect_attention else (logits, None)


def count_params(spec: ModelSpec) -> int:
    """Exact number of learnable scalars, classifier head included."""
    shapes = SequenceClassifier(spec).param_shapes()
    return int(sum(np.prod(shape, dtype=np.int64) for shape in shapes.values()))


class CheckpointError(ValueError):
    """Checkpoint file is malformed or inconsistent."""


def save_checkpoint(path, spec: ModelSpec, params: Mapping[str, np.ndarray], extra: dict | None = None) -> None:
    """Write params to a flat binary container with a JSON header."""
    names = list(params.keys())
    directory = []
    offset = 0
    blobs = []
    for name in names:
        arr = np.ascontiguousarray(params[name], dtype="<f8")
        directory.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blob = arr.tobytes()
        blobs.append(blob)
        offset += len(blob)
    header = {
        "format": CHECKPOINT_FORMAT,
        "model": asdict(spec),
        "tensors": directory,
    }
    if extra:
        header["extra"] = extra
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(len(header_bytes).to_bytes(8, "little"))
        fh.write(header_bytes)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path) -> tuple[ModelSpec, dict[str, np.ndarray], dict]:
    """Read a checkpoint; returns (model spec, params, extra metadata)."""
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise CheckpointError(f"{path}: truncated before header length")
    header_len = int.from_bytes(raw[:8], "little")
    if len(raw) < 8 + header_len:
        raise CheckpointError(f"{path}: truncated header ({header_len} bytes declared)")
    try:
        header = json.loads(raw[8:8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: bad JSON header: {exc}") from exc
    if header.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path}: unknown format {header.get('format')!r}")
    spec = ModelSpec(**header["model"])
    data = raw[8 + header_len:]
    params: dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * 8
        start = entry["offset"]
        if start + nbytes > len(data):
            raise CheckpointError(f"{path}: tensor {entry['name']!r} overruns data section")
        arr = np.frombuffer(data[start:start + nbytes], dtype="<f8").reshape(shape)
        params[entry["name"]] = arr.astype(np.float64)
    expected = set(SequenceClassifier(spec).param_shapes())
    if set(params) != expected:
        missing = sorted(expected - set(params))
        surplus = sorted(set(params) - expected)
        raise CheckpointError(f"{path}: tensor names mismatch (missing {missing}, surplus {surplus})")
    return spec, params, header.get("extra", {})
