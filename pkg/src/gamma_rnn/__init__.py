"""Recurrent-network laboratory around a gated gamma-memory LSTM.

The package is a small numpy library: a reverse-mode autodiff tape
(:mod:`~gamma_rnn.ndmath`), the classic leaky-integrator cascade
(:mod:`~gamma_rnn.gamma_memory`), three recurrent cell families
(:mod:`~gamma_rnn.cells`), sequence classifiers with checkpointing
(:mod:`~gamma_rnn.model`), a reproducible training loop
(:mod:`~gamma_rnn.train`), dataset ingestion (:mod:`~gamma_rnn.data`),
and a command-line front end (:mod:`~gamma_rnn.cli`).
"""

from . import cells, cli, config, data, gamma_memory, model, ndmath, train, verify
from .cells import GammaLstmCell, GammaLstmState, LstmCell, LstmState, gamma_lstm_step, lstm_step, run_sequence
from .gamma_memory import GammaMemoryConfig, GammaMemoryState, GammaReadoutWeights, gamma_readout, gamma_step
from .model import ModelSpec, SequenceClassifier, count_params, load_checkpoint, save_checkpoint
from .ndmath import Tape, Var, backward, grad_check
from .train import cross_entropy, train_loop

__all__ = [
    "cells",
    "cli",
    "config",
    "data",
    "gamma_memory",
    "model",
    "ndmath",
    "train",
    "verify",
    "GammaLstmCell",
    "GammaLstmState",
    "LstmCell",
    "LstmState",
    "gamma_lstm_step",
    "lstm_step",
    "run_sequence",
    "GammaMemoryConfig",
    "GammaMemoryState",
    "GammaReadoutWeights",
    "gamma_readout",
    "gamma_step",
    "ModelSpec",
    "SequenceClassifier",
    "count_params",
    "load_checkpoint",
    "save_checkpoint",
    "Tape",
    "Var",
    "backward",
    "grad_check",
    "cross_entropy",
    "train_loop",
]
