"""Loss, optimizers, and the mini-batch training loop with BPTT.

The loop is fully reproducible: one seeded generator drives parameter
initialization and every epoch's shuffle, in a fixed order. Wall-clock
readings come from an injectable ``clock`` so that the computation's
determinism can be tested independently of timing.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from . import ndmath as nd
from .config import RunConfig
from .data import DataSource, SequenceDataset, make_adding_task, make_delay_task, mnist_data_source, resolve_data_dir
from .model import ModelSpec, SequenceClassifier
from .ndmath import Var

__all__ = [
    "DivergenceError",
    "MetricRecord",
    "TrainState",
    "TrainResult",
    "cross_entropy",
    "batch_accuracy",
    "init_train_state",
    "sgd_step",
    "adam_step",
    "clip_grad_norm",
    "evaluate",
    "spec_from_model_config",
    "build_model_spec",
    "build_data_source",
    "train_loop",
    "METRICS_HEADER",
]

METRICS_HEADER = ["epoch", "step", "train_loss", "train_acc", "test_acc", "wall_seconds"]


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""


@dataclass
class MetricRecord:
    epoch: int
    step: int
    train_loss: float
    train_accuracy: float
    test_accuracy: float | None
    wall_seconds: float


@dataclass
class TrainState:
    """Parameters plus optimizer moments, all mirrored by name."""

    params: dict[str, np.ndarray]
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0


@dataclass
class TrainResult:
    records: list[MetricRecord]
    state: TrainState
    spec: ModelSpec
    summary: dict = field(default_factory=dict)


def cross_entropy(logits: Var, labels) -> Var:
    """Mean over the batch of -log softmax(logits)[label], lse-stabilized."""
    labels = np.asarray(labels)
    x = logits.value
    if x.ndim != 2:
        raise nd.ShapeError(f"logits must be [batch, classes], got {x.shape}")
    if labels.shape != (x.shape[0],):
        raise nd.ShapeError(f"labels must be [{x.shape[0]}], got {labels.shape}")
    if labels.min() < 0 or labels.max() >= x.shape[1]:
        raise nd.ContractError(f"labels must lie in [0, {x.shape[1]}), got range "
                               f"[{labels.min()}, {labels.max()}]")
    batch = x.shape[0]
    rows = np.arange(batch)
    m = x.max(axis=1, keepdims=True)
    lse = np.log(np.exp(x - m).sum(axis=1, keepdims=True)) + m
    value = np.asarray((lse[:, 0] - x[rows, labels]).mean())
    probs = np.exp(x - lse)

    def vjp(g):
        d = probs.copy()
        d[rows, labels] -= 1.0
        return (d * (float(g) / batch),)

    return nd.defop([logits], value, vjp)


def batch_accuracy(logits: Var, labels) -> float:
    pred = np.argmax(logits.value, axis=1)
    return float(np.mean(pred == np.asarray(labels)))


def init_train_state(params: Mapping[str, np.ndarray]) -> TrainState:
    return TrainState(
        params=dict(params),
        m={k: np.zeros_like(p) for k, p in params.items()},
        v={k: np.zeros_like(p) for k, p in params.items()},
        step=0,
    )


def _check_mirrors(params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray]):
    if set(params) != set(grads):
        raise nd.ContractError("gradient names do not mirror parameter names")
    for name, p in params.items():
        if grads[name].shape != p.shape:
            raise nd.ShapeError(f"gradient for {name!r} has shape {grads[name].shape}, "
                                f"parameter has {p.shape}")


def sgd_step(state: TrainState, grads: Mapping[str, np.ndarray], lr: float) -> TrainState:
    _check_mirrors(state.params, grads)
    params = {k: p - lr * grads[k] for k, p in state.params.items()}
    return TrainState(params=params, m=dict(state.m), v=dict(state.v), step=state.step + 1)


def adam_step(
    state: TrainState,
    grads: Mapping[str, np.ndarray],
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> TrainState:
    """Adam with bias correction; deterministic given the incoming state."""
    _check_mirrors(state.params, grads)
    t = state.step + 1
    params, m, v = {}, {}, {}
    for k, p in state.params.items():
        g = grads[k]
        m[k] = beta1 * state.m[k] + (1.0 - beta1) * g
        v[k] = beta2 * state.v[k] + (1.0 - beta2) * g * g
        m_hat = m[k] / (1.0 - beta1**t)
        v_hat = v[k] / (1.0 - beta2**t)
        params[k] = p - lr * m_hat / (np.sqrt(v_hat) + eps)
    return TrainState(params=params, m=m, v=v, step=t)


def clip_grad_norm(grads: Mapping[str, np.ndarray], max_norm: float) -> dict[str, np.ndarray]:
    """Rescale so the global L2 norm is at most ``max_norm`` (direction kept)."""
    if max_norm <= 0:
        raise nd.ContractError(f"max_norm must be positive, got {max_norm}")
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if norm <= max_norm:
        return dict(grads)
    factor = max_norm / norm
    return {k: g * factor for k, g in grads.items()}


def evaluate(model: SequenceClassifier, params: Mapping[str, np.ndarray],
             split: SequenceDataset, batch_size: int = 256) -> float:
    """Classification accuracy on a split; no tape is recorded."""
    correct = 0
    for start in range(0, len(split), batch_size):
        stop = min(start + batch_size, len(split))
        tape = nd.Tape(record=False)
        pvars = {k: tape.variable(p, checked=False) for k, p in params.items()}
        logits, _ = model.forward(tape, pvars, split.inputs[start:stop])
        pred = np.argmax(logits.value, axis=1)
        correct += int(np.sum(pred == split.labels[start:stop]))
    return correct / len(split)


def build_data_source(cfg: RunConfig, data_dir=None) -> DataSource:
    """Materialize the configured dataset; ``data_dir`` overrides config/env."""
    d = cfg.data
    if d.source == "mnist":
        directory = resolve_data_dir(data_dir or d.dir)
        if directory is None:
            raise FileNotFoundError(
                "no MNIST directory: pass --data, set data.dir, or export GAMMA_RNN_DATA"
            )
        return mnist_data_source(directory, mode=d.mode,
                                 train_limit=d.train_limit, test_limit=d.test_limit)
    if d.source == "delay":
        return make_delay_task(d.n, d.seq_len, d.lag, cfg.seed)
    if d.source == "adding":
        return make_adding_task(d.n, d.seq_len, cfg.seed)
    raise ValueError(f"unknown data source {d.source!r}")


def spec_from_model_config(m, input_size: int, classes: int) -> ModelSpec:
    return ModelSpec(
        kind=m.kind,
        input_size=input_size,
        hidden=m.hidden,
        classes=classes,
        layers=m.layers if m.kind == "stacked_lstm" else 1,
        memory_order=m.memory_order,
        readout_lag=m.readout_lag,
        shared_forget=m.shared_forget,
        forget_bias=m.forget_bias,
        level_timescales=tuple(m.level_timescales) if m.level_timescales else None,
        fanin_input=m.fanin_input,
    )


def build_model_spec(cfg: RunConfig, data: DataSource) -> ModelSpec:
    return spec_from_model_config(cfg.model, data.input_size, data.classes)


class _MetricsWriter:
    """CSV plus JSON-lines mirror of every metric record."""

    def __init__(self, out_dir: Path):
        out_dir.mkdir(parents=True, exist_ok=True)
        self._csv_file = open(out_dir / "metrics.csv", "w", newline="")
        self._csv = csv.writer(self._csv_file)
        self._csv.writerow(METRICS_HEADER)
        self._jsonl = open(out_dir / "metrics.jsonl", "w")

    def write(self, rec: MetricRecord):
        test = "" if rec.test_accuracy is None else f"{rec.test_accuracy:.12g}"
        self._csv.writerow([
            rec.epoch,
            rec.step,
            f"{rec.train_loss:.12g}",
            f"{rec.train_accuracy:.12g}",
            test,
            f"{rec.wall_seconds:.3f}",
        ])
        self._jsonl.write(json.dumps({
            "epoch": rec.epoch,
            "step": rec.step,
            "train_loss": rec.train_loss,
            "train_acc": rec.train_accuracy,
            "test_acc": rec.test_accuracy,
            "wall_seconds": round(rec.wall_seconds, 3),
        }) + "\n")

    def close(self):
        self._csv_file.close()
        self._jsonl.close()


def train_loop(
    cfg: RunConfig,
    data: DataSource,
    out_dir=None,
    clock: Callable[[], float] = time.perf_counter,
) -> TrainResult:
    """Run the configured experiment; returns all metric records.

    Shuffling is a seeded permutation per epoch; the test split is scored
    at every epoch end. A non-finite loss aborts with the failing step
    named. ``out_dir`` (or ``cfg.out``) receives metrics.csv/metrics.jsonl.
    """
    rng = np.random.default_rng(cfg.seed)
    spec = build_model_spec(cfg, data)
    model = SequenceClassifier(spec)
    state = init_train_state(model.init_params(rng))

    out = out_dir or cfg.out
    writer = _MetricsWriter(Path(out)) if out else None
    records: list[MetricRecord] = []

    def emit(rec: MetricRecord):
        records.append(rec)
        if writer:
            writer.write(rec)

    t = cfg.train
    started = clock()
    global_step = 0
    first_epoch_loss = None
    try:
        for epoch in range(1, t.epochs + 1):
            order = rng.permutation(len(data.train))
            loss_sum = 0.0
            correct = 0.0
            seen = 0
            for start in range(0, len(order), t.batch_size):
                batch = order[start:start + t.batch_size]
                inputs = data.train.inputs[batch]
                labels = data.train.labels[batch]

                # unchecked on purpose: divergence must surface as a
                # non-finite loss, not as a tensor-construction error
                tape = nd.Tape()
                pvars = {k: tape.variable(p, checked=False) for k, p in state.params.items()}
                logits, _ = model.forward(tape, pvars, inputs)
                loss = cross_entropy(logits, labels)
                loss_value = float(loss.value)
                if not np.isfinite(loss_value):
                    raise DivergenceError(
                        f"non-finite loss {loss_value} at epoch {epoch}, step {global_step + 1}"
                    )
                by_id = nd.backward(loss)
                grads = {k: by_id[v.tape_id] for k, v in pvars.items()}
                if t.clip_norm is not None:
                    grads = clip_grad_norm(grads, t.clip_norm)
                if t.optimizer == "adam":
                    state = adam_step(state, grads, t.lr, t.beta1, t.beta2, t.eps)
                else:
                    state = sgd_step(state, grads, t.lr)
                global_step += 1

                acc = batch_accuracy(logits, labels)
                loss_sum += loss_value * len(batch)
                correct += acc * len(batch)
                seen += len(batch)
                if first_epoch_loss is None:
                    first_epoch_loss = loss_value
                if global_step % t.log_every == 0:
                    emit(MetricRecord(epoch, global_step, loss_value, acc, None,
                                      clock() - started))
            test_acc = evaluate(model, state.params, data.test,
                                batch_size=max(t.batch_size, 256))
            emit(MetricRecord(epoch, global_step, loss_sum / seen, correct / seen,
                              test_acc, clock() - started))
    finally:
        if writer:
            writer.close()

    summary = {
        "model": spec.kind,
        "dataset": data.name,
        "epochs": t.epochs,
        "steps": global_step,
        "initial_train_loss": first_epoch_loss,
        "final_train_loss": records[-1].train_loss if records else None,
        "final_test_accuracy": records[-1].test_accuracy if records else None,
    }
    return TrainResult(records=records, state=state, spec=spec, summary=summary)
