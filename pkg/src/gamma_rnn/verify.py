"""BPTT gradient verification for every cell kind.

Packs parameters, initial state, and the whole input sequence into one
flat vector, runs the unrolled cell(s) as a function of that vector, and
compares the tape's gradients against central finite differences. The
loss is the summed square of every hidden output, so every weight, state
entry, and input influences it.
"""

from __future__ import annotations

import numpy as np

from . import ndmath as nd
from .cells import GammaLstmCell, GammaLstmState, LstmCell, LstmState, run_sequence

__all__ = ["make_cell_stack", "bptt_max_rel_err", "CHECK_TOLERANCE"]

CHECK_TOLERANCE = 1e-5


def make_cell_stack(
    kind: str,
    input_size: int = 3,
    hidden: int = 5,
    layers: int = 2,
    memory_order: int = 3,
    readout_lag: bool = False,
    shared_forget: bool = False,
):
    """Cells chained input -> output for one model kind."""
    if kind == "lstm":
        return [LstmCell(input_size, hidden)]
    if kind == "stacked_lstm":
        cells = [LstmCell(input_size, hidden)]
        for _ in range(layers - 1):
            cells.append(LstmCell(hidden, hidden))
        return cells
    if kind == "gamma_lstm":
        return [GammaLstmCell(input_size, hidden, memory_order,
                              readout_lag=readout_lag, shared_forget=shared_forget)]
    raise ValueError(f"unknown cell kind {kind!r}")


def _state_shapes(cell, batch: int) -> dict[str, tuple]:
    if isinstance(cell, GammaLstmCell):
        shapes = {"h": (batch, cell.hidden)}
        for k in range(cell.memory_order + 1):
            shapes[f"c{k}"] = (batch, cell.hidden)
        return shapes
    return {"h": (batch, cell.hidden), "c": (batch, cell.hidden)}


def _assemble_state(cell, tensors: dict[str, nd.Var]):
    if isinstance(cell, GammaLstmCell):
        levels = [tensors[f"c{k}"] for k in range(cell.memory_order + 1)]
        return GammaLstmState(h=tensors["h"], levels=levels)
    return LstmState(h=tensors["h"], c=tensors["c"])


def bptt_max_rel_err(
    cells,
    seq_len: int = 6,
    seed: int = 0,
    eps: float = 1e-5,
    batch: int = 1,
) -> float:
    """Max relative error between tape and finite-difference gradients.

    The differentiated vector covers every parameter, every entry of the
    initial states, and every input step.
    """
    layout: list[tuple[str, tuple]] = []
    for n, cell in enumerate(cells):
        for name, shape in cell.param_shapes().items():
            layout.append((f"l{n}.{name}", shape))
        for name, shape in _state_shapes(cell, batch).items():
            layout.append((f"l{n}.state.{name}", shape))
    for t in range(seq_len):
        layout.append((f"x{t}", (batch, cells[0].input_size)))

    sizes = [int(np.prod(shape)) for _, shape in layout]
    rng = np.random.default_rng(seed)
    flat = rng.uniform(-0.8, 0.8, size=sum(sizes))

    def unpack(v: nd.Var) -> dict[str, nd.Var]:
        out = {}
        offset = 0
        for (name, shape), size in zip(layout, sizes):
            out[name] = nd.reshape(nd.segment(v, offset, offset + size), shape)
            offset += size
        return out

    def f(v: nd.Var) -> nd.Var:
        tensors = unpack(v)
        xs = [tensors[f"x{t}"] for t in range(seq_len)]
        loss = None
        for n, cell in enumerate(cells):
            params = {name: tensors[f"l{n}.{name}"] for name in cell.param_shapes()}
            state_tensors = {name: tensors[f"l{n}.state.{name}"]
                             for name in _state_shapes(cell, batch)}
            run = run_sequence(cell, params, _assemble_state(cell, state_tensors), xs)
            xs = run.hidden
        for h in xs:
            term = nd.total(h * h)
            loss = term if loss is None else loss + term
        return loss

    return nd.grad_check(f, flat, eps=eps)
