"""Recurrent cell families behind one common step interface.

Three cells: the standard LSTM, a stacked variant, and the gamma-memory
LSTM whose internal state is a gated cascade of levels c_0..c_K with a
softmax attention readout across levels.

Conventions shared by all cells:

* activations are row-batched: states and inputs are [B, width] matrices;
* weights multiply on the right (x @ W_x, h @ W_h);
* every gate carries two bias vectors, one on the input path and one on
  the recurrent path (the double-bias convention the parameter-count
  audit expects);
* parameters live in flat name->tensor maps so optimizers, serialization
  and the tape all see one namespace.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import ndmath as nd
from .ndmath import Var

__all__ = [
    "ConfigurationError",
    "LstmState",
    "GammaLstmState",
    "LstmCell",
    "GammaLstmCell",
    "lstm_step",
    "gamma_lstm_step",
    "run_sequence",
    "SequenceRun",
    "init_uniform",
]

GATE_NAMES = ("i", "f", "g", "o")


class ConfigurationError(ValueError):
    """A cell was configured outside its valid parameter space."""


@dataclass
class LstmState:
    h: Var
    c: Var


@dataclass
class GammaLstmState:
    h: Var
    levels: list[Var]

    @property
    def memory_order(self) -> int:
        return len(self.levels) - 1


def _gate_shapes(name: str, input_size: int, hidden: int) -> dict[str, tuple]:
    return {
        f"W_x{name}": (input_size, hidden),
        f"W_h{name}": (hidden, hidden),
        f"b_x{name}": (hidden,),
        f"b_h{name}": (hidden,),
    }


def init_uniform(shapes: Mapping[str, tuple], hidden: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Draw every tensor from uniform(-1/sqrt(h), 1/sqrt(h)), in dict order."""
    bound = 1.0 / np.sqrt(hidden)
    return {name: rng.uniform(-bound, bound, size=shape) for name, shape in shapes.items()}


def _gate(params: Mapping[str, Var], name: str, x: Var, h: Var) -> Var:
    pre = nd.matmul(x, params[f"W_x{name}"]) + nd.matmul(h, params[f"W_h{name}"])
    return pre + params[f"b_x{name}"] + params[f"b_h{name}"]


def lstm_step(params: Mapping[str, Var], state: LstmState, x: Var) -> LstmState:
    """One standard LSTM step.

    i, f, o are logistic gates, g the tanh candidate; the cell keeps
    c_t = f*c + i*g and exposes h_t = o*tanh(c_t).
    """
    i = nd.sigmoid(_gate(params, "i", x, state.h))
    f = nd.sigmoid(_gate(params, "f", x, state.h))
    g = nd.tanh(_gate(params, "g", x, state.h))
    o = nd.sigmoid(_gate(params, "o", x, state.h))
    c = f * state.c + i * g
    h = o * nd.tanh(c)
    return LstmState(h=h, c=c)


def gamma_lstm_step(
    params: Mapping[str, Var],
    state: GammaLstmState,
    x: Var,
    readout_lag: bool = False,
    shared_forget: bool = False,
) -> tuple[GammaLstmState, Var]:
    """One gamma-LSTM step; returns the new state and attention weights.

    The cascade bottom is fed by the gated candidate, c_0 = i*g. Each
    higher level blends its own previous value with the previous value of
    the level below under its own forget gate (all reads hit the old
    state). A query built from h_{t-1} scores every level; softmax over
    the scores yields attention weights whose convex combination of levels
    is the effective cell value.

    ``readout_lag`` scores and combines the pre-update levels instead of
    the fresh ones. ``shared_forget`` uses one forget-gate parameter set
    for every level (all levels then move in lockstep).
    """
    K = state.memory_order
    if K < 1:
        raise ConfigurationError("gamma cell needs memory order >= 1")
    h_prev = state.h
    i = nd.sigmoid(_gate(params, "i", x, h_prev))
    g = nd.tanh(_gate(params, "g", x, h_prev))
    o = nd.sigmoid(_gate(params, "o", x, h_prev))

    old = state.levels
    new = [i * g]
    for k in range(1, K + 1):
        f_k = nd.sigmoid(_gate(params, "f" if shared_forget else f"f{k}", x, h_prev))
        new.append((1.0 - f_k) * old[k] + f_k * old[k - 1])

    levels = old if readout_lag else new
    query = nd.matmul(h_prev, params["W_a"]) + params["b_a"]
    scores = nd.concat_columns([nd.rowwise_dot(query, c_k) for c_k in levels])
    attention = nd.softmax(scores)
    c_eff = nd.column(attention, 0) * levels[0]
    for k in range(1, K + 1):
        c_eff = c_eff + nd.column(attention, k) * levels[k]

    h = o * nd.tanh(c_eff)
    return GammaLstmState(h=h, levels=new), attention


class LstmCell:
    """Standard LSTM cell over a flat parameter namespace."""

    def __init__(self, input_size: int, hidden: int):
        if input_size < 1 or hidden < 1:
            raise ConfigurationError("input_size and hidden must be >= 1")
        self.input_size = input_size
        self.hidden = hidden

    def param_shapes(self) -> dict[str, tuple]:
        shapes: dict[str, tuple] = {}
        for gate in GATE_NAMES:
            shapes.update(_gate_shapes(gate, self.input_size, self.hidden))
        return shapes

    def init_params(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        return init_uniform(self.param_shapes(), self.hidden, rng)

    def zero_state(self, tape: nd.Tape, batch: int) -> LstmState:
        zeros = np.zeros((batch, self.hidden))
        return LstmState(h=tape.variable(zeros), c=tape.variable(zeros))

    def step(self, params, state, x):
        return lstm_step(params, state, x), None


class GammaLstmCell:
    """LSTM whose memory is a gated cascade with attention readout."""

    def __init__(
        self,
        input_size: int,
        hidden: int,
        memory_order: int,
        readout_lag: bool = False,
        shared_forget: bool = False,
    ):
        if memory_order < 1:
            raise ConfigurationError(f"memory order must be >= 1, got {memory_order}")
        if input_size < 1 or hidden < 1:
            raise ConfigurationError("input_size and hidden must be >= 1")
        self.input_size = input_size
        self.hidden = hidden
        self.memory_order = memory_order
        self.readout_lag = readout_lag
        self.shared_forget = shared_forget

    def param_shapes(self) -> dict[str, tuple]:
        shapes: dict[str, tuple] = {}
        for gate in ("i", "g", "o"):
            shapes.update(_gate_shapes(gate, self.input_size, self.hidden))
        if self.shared_forget:
            shapes.update(_gate_shapes("f", self.input_size, self.hidden))
        else:
            for k in range(1, self.memory_order + 1):
                shapes.update(_gate_shapes(f"f{k}", self.input_size, self.hidden))
        shapes["W_a"] = (self.hidden, self.hidden)
        shapes["b_a"] = (self.hidden,)
        return shapes

    def init_params(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        return init_uniform(self.param_shapes(), self.hidden, rng)

    def zero_state(self, tape: nd.Tape, batch: int) -> GammaLstmState:
        zeros = np.zeros((batch, self.hidden))
        levels = [tape.variable(zeros) for _ in range(self.memory_order + 1)]
        return GammaLstmState(h=tape.variable(zeros), levels=levels)

    def step(self, params, state, x):
        return gamma_lstm_step(
            params, state, x,
            readout_lag=self.readout_lag,
            shared_forget=self.shared_forget,
        )


@dataclass
class SequenceRun:
    """Unrolled pass over one input sequence."""

    final_state: object
    hidden: list[Var]
    attention: list[Var] | None


def run_sequence(cell, params: Mapping[str, Var], init_state, xs: Sequence[Var]) -> SequenceRun:
    """Fold the cell's step over ``xs`` on one tape.

    Because every step records onto the same tape, a backward pass from
    any scalar of the result is full backpropagation through time. An
    empty ``xs`` returns the initial state untouched.
    """
    state = init_state
    hidden: list[Var] = []
    attention: list[Var] = []
    for x in xs:
        state, aux = cell.step(params, state, x)
        hidden.append(state.h)
        if aux is not None:
            attention.append(aux)
    return SequenceRun(
        final_state=state,
        hidden=hidden,
        attention=attention if attention else None,
    )
