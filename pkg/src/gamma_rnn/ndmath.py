"""Dense float64 tensors and a reverse-mode automatic differentiation tape.

Values are plain numpy ``float64`` arrays. A :class:`Var` is a handle to one
value recorded on a :class:`Tape`; every op appends its node in execution
order, so the tape itself is a valid topological order and :func:`backward`
is a single reverse sweep with additive fan-out accumulation.

A tape constructed with ``record=False`` runs the same op code without
recording anything, which keeps repeated numeric evaluation (finite
differences in :func:`grad_check`) cheap.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

__all__ = [
    "ShapeError",
    "ContractError",
    "as_tensor",
    "Tape",
    "Var",
    "defop",
    "add",
    "sub",
    "mul",
    "neg",
    "scale",
    "sigmoid",
    "tanh",
    "matmul",
    "softmax",
    "total",
    "rowwise_dot",
    "concat_columns",
    "column",
    "segment",
    "reshape",
    "take_flat",
    "backward",
    "grad_check",
]


class ShapeError(ValueError):
    """Operand shapes do not fit the requested operation."""


class ContractError(ValueError):
    """An operation was invoked outside its stated contract."""


def as_tensor(data, checked: bool = True) -> np.ndarray:
    """Coerce ``data`` to a float64 array; reject NaN/Inf when ``checked``."""
    arr = np.asarray(data, dtype=np.float64)
    if checked and not np.all(np.isfinite(arr)):
        raise ContractError("tensor contains non-finite entries")
    return arr


class _Node:
    __slots__ = ("parents", "vjp")

    def __init__(self, parents: tuple[int, ...], vjp):
        self.parents = parents
        self.vjp = vjp  # None marks a leaf


class Tape:
    """Append-only operation record; insertion order is topological order."""

    __slots__ = ("record", "_nodes", "_values")

    def __init__(self, record: bool = True):
        self.record = record
        self._nodes: list[_Node] = []
        self._values: list[np.ndarray] = []

    def __len__(self) -> int:
        return len(self._nodes)

    def variable(self, data, checked: bool = True) -> "Var":
        """Register a leaf tensor that will receive a gradient."""
        return self._emit(as_tensor(data, checked), (), None)

    def _emit(self, value: np.ndarray, parents: tuple["Var", ...], vjp) -> "Var":
        if not self.record:
            return Var(self, -1, value)
        self._nodes.append(_Node(tuple(p.tape_id for p in parents), vjp))
        self._values.append(value)
        return Var(self, len(self._nodes) - 1, value)


class Var:
    """Handle to a tape-recorded tensor."""

    __slots__ = ("tape", "tape_id", "value")

    def __init__(self, tape: Tape, tape_id: int, value: np.ndarray):
        self.tape = tape
        self.tape_id = tape_id
        self.value = value

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Var(id={self.tape_id}, shape={self.value.shape})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def _tape_of(*operands) -> Tape:
    tape = None
    for op in operands:
        if isinstance(op, Var):
            if tape is None:
                tape = op.tape
            elif op.tape is not tape:
                raise ContractError("operands recorded on different tapes")
    if tape is None:
        raise ContractError("at least one operand must be a Var")
    return tape


def defop(parents: Sequence[Var], value: np.ndarray, vjp: Callable) -> Var:
    """Record an externally computed op.

    ``vjp(g)`` must return one gradient array per entry of ``parents``.
    This is the extension point for fused ops (e.g. losses) defined outside
    this module; such ops carry the same contract as the built-ins.
    """
    tape = _tape_of(*parents)
    return tape._emit(value, tuple(parents), vjp if tape.record else None)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _binary(a, b, forward, da, db) -> Var:
    tape = _tape_of(a, b)
    av = a.value if isinstance(a, Var) else as_tensor(a)
    bv = b.value if isinstance(b, Var) else as_tensor(b)
    try:
        value = forward(av, bv)
    except ValueError:
        raise ShapeError(f"incompatible operand shapes {av.shape} and {bv.shape}")
    parents = []
    sides = []
    if isinstance(a, Var):
        parents.append(a)
        sides.append(lambda g: _unbroadcast(da(g, av, bv), av.shape))
    if isinstance(b, Var):
        parents.append(b)
        sides.append(lambda g: _unbroadcast(db(g, av, bv), bv.shape))

    def vjp(g):
        return tuple(side(g) for side in sides)

    return tape._emit(value, tuple(parents), vjp if tape.record else None)


def add(a, b) -> Var:
    return _binary(a, b, np.add, lambda g, av, bv: g, lambda g, av, bv: g)


def sub(a, b) -> Var:
    return _binary(a, b, np.subtract, lambda g, av, bv: g, lambda g, av, bv: -g)


def mul(a, b) -> Var:
    return _binary(a, b, np.multiply, lambda g, av, bv: g * bv, lambda g, av, bv: g * av)


def neg(a: Var) -> Var:
    return a.tape._emit(-a.value, (a,), (lambda g: (-g,)) if a.tape.record else None)


def scale(a: Var, k: float) -> Var:
    k = float(k)
    return a.tape._emit(k * a.value, (a,), (lambda g: (k * g,)) if a.tape.record else None)


def sigmoid(a: Var) -> Var:
    x = a.value
    # piecewise form avoids overflow in exp for large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)

    def vjp(g):
        return (g * out * (1.0 - out),)

    return a.tape._emit(out, (a,), vjp if a.tape.record else None)


def tanh(a: Var) -> Var:
    out = np.tanh(a.value)

    def vjp(g):
        return (g * (1.0 - out * out),)

    return a.tape._emit(out, (a,), vjp if a.tape.record else None)


def matmul(a: Var, b: Var) -> Var:
    av, bv = a.value, b.value
    if av.ndim != 2 or bv.ndim != 2 or av.shape[1] != bv.shape[0]:
        raise ShapeError(f"matmul needs [m,k] @ [k,n], got {av.shape} and {bv.shape}")
    tape = _tape_of(a, b)
    value = av @ bv

    def vjp(g):
        return (g @ bv.T, av.T @ g)

    return tape._emit(value, (a, b), vjp if tape.record else None)


def softmax(a: Var) -> Var:
    """Softmax over the last axis, stabilized by max subtraction."""
    x = a.value
    if x.ndim == 0 or x.shape[-1] < 1:
        raise ShapeError(f"softmax needs a non-empty last axis, got shape {x.shape}")
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=-1, keepdims=True)

    def vjp(g):
        inner = (g * out).sum(axis=-1, keepdims=True)
        return (out * (g - inner),)

    return a.tape._emit(out, (a,), vjp if a.tape.record else None)


def total(a: Var) -> Var:
    """Sum of all elements, as a scalar."""
    shape = a.value.shape

    def vjp(g):
        return (np.ones(shape) * g,)

    return a.tape._emit(a.value.sum(), (a,), vjp if a.tape.record else None)


def rowwise_dot(a: Var, b: Var) -> Var:
    """Per-row dot product of two equal-shape matrices -> column [B,1]."""
    av, bv = a.value, b.value
    if av.ndim != 2 or av.shape != bv.shape:
        raise ShapeError(f"rowwise_dot needs equal 2-d shapes, got {av.shape} and {bv.shape}")
    tape = _tape_of(a, b)
    value = np.sum(av * bv, axis=1, keepdims=True)

    def vjp(g):
        return (g * bv, g * av)

    return tape._emit(value, (a, b), vjp if tape.record else None)


def concat_columns(parts: Sequence[Var]) -> Var:
    """Concatenate matrices along the last axis."""
    if not parts:
        raise ShapeError("concat_columns needs at least one operand")
    tape = _tape_of(*parts)
    values = [p.value for p in parts]
    if any(v.ndim != 2 or v.shape[0] != values[0].shape[0] for v in values):
        raise ShapeError(f"row counts differ: {[v.shape for v in values]}")
    widths = [v.shape[1] for v in values]
    value = np.concatenate(values, axis=1)
    bounds = np.cumsum([0] + widths)

    def vjp(g):
        return tuple(g[:, bounds[i]:bounds[i + 1]] for i in range(len(parts)))

    return tape._emit(value, tuple(parts), vjp if tape.record else None)


def column(a: Var, j: int) -> Var:
    """Select column ``j`` of a matrix, kept as shape [B,1]."""
    av = a.value
    if av.ndim != 2 or not 0 <= j < av.shape[1]:
        raise ShapeError(f"column {j} out of range for shape {av.shape}")

    def vjp(g):
        out = np.zeros_like(av)
        out[:, j:j + 1] = g
        return (out,)

    return a.tape._emit(av[:, j:j + 1].copy(), (a,), vjp if a.tape.record else None)


def segment(a: Var, start: int, stop: int) -> Var:
    """Slice of a 1-d tensor."""
    av = a.value
    if av.ndim != 1 or not 0 <= start <= stop <= av.shape[0]:
        raise ShapeError(f"segment [{start}:{stop}] invalid for shape {av.shape}")

    def vjp(g):
        out = np.zeros_like(av)
        out[start:stop] = g
        return (out,)

    return a.tape._emit(av[start:stop].copy(), (a,), vjp if a.tape.record else None)


def reshape(a: Var, shape: Sequence[int]) -> Var:
    shape = tuple(shape)
    if int(np.prod(shape)) != a.value.size:
        raise ShapeError(f"cannot reshape {a.value.shape} to {shape}")
    old = a.value.shape

    def vjp(g):
        return (g.reshape(old),)

    return a.tape._emit(a.value.reshape(shape), (a,), vjp if a.tape.record else None)


def take_flat(a: Var, i: int) -> Var:
    """Element ``i`` of the row-major flattening, as a scalar."""
    av = a.value
    if not 0 <= i < av.size:
        raise ShapeError(f"flat index {i} out of range for shape {av.shape}")

    def vjp(g):
        out = np.zeros(av.size)
        out[i] = g
        return (out.reshape(av.shape),)

    return a.tape._emit(av.reshape(-1)[i].copy(), (a,), vjp if a.tape.record else None)


def backward(loss: Var) -> dict[int, np.ndarray]:
    """Reverse sweep from a scalar loss.

    Returns a gradient for every leaf of the tape, keyed by ``tape_id``;
    leaves unreachable from ``loss`` get zeros.
    """
    tape = loss.tape
    if not tape.record:
        raise ContractError("backward needs a recording tape")
    if loss.value.shape != ():
        raise ContractError(f"loss must be scalar, got shape {loss.value.shape}")
    grads: list[np.ndarray | None] = [None] * len(tape)
    grads[loss.tape_id] = np.ones(())
    for nid in range(loss.tape_id, -1, -1):
        g = grads[nid]
        node = tape._nodes[nid]
        if g is None or node.vjp is None:
            continue
        for pid, pg in zip(node.parents, node.vjp(g)):
            grads[pid] = pg if grads[pid] is None else grads[pid] + pg
    out: dict[int, np.ndarray] = {}
    for nid, node in enumerate(tape._nodes):
        if node.vjp is None:
            g = grads[nid]
            out[nid] = np.zeros_like(tape._values[nid]) if g is None else np.asarray(g)
    return out


def grad_check(f: Callable[[Var], Var], x, eps: float = 1e-5) -> float:
    """Max relative error between autodiff and central-difference gradients.

    ``f`` takes one leaf Var and returns a scalar Var; it must be pure, so
    it can be re-evaluated at perturbed inputs on throwaway tapes.
    """
    if eps <= 0:
        raise ContractError("eps must be positive")
    x = as_tensor(x)
    tape = Tape()
    xv = tape.variable(x)
    loss = f(xv)
    analytic = backward(loss)[xv.tape_id].reshape(-1)

    def value_at(arr: np.ndarray) -> float:
        t = Tape(record=False)
        return float(f(t.variable(arr)).value)

    flat = x.reshape(-1)
    numeric = np.empty_like(flat)
    for i in range(flat.size):
        bumped = flat.copy()
        bumped[i] = flat[i] + eps
        hi = value_at(bumped.reshape(x.shape))
        bumped[i] = flat[i] - eps
        lo = value_at(bumped.reshape(x.shape))
        numeric[i] = (hi - lo) / (2.0 * eps)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    rel = np.abs(analytic - numeric) / denom
    return float(rel.max()) if rel.size else 0.0
