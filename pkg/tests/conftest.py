from pathlib import Path

import numpy as np
import pytest

import gamma_rnn.ndmath as nd

REPO_ROOT = Path(__file__).resolve().parents[1]
MNIST_SUBSET_DIR = REPO_ROOT / "data" / "mnist_subset"


def mnist_subset_available() -> bool:
    return (MNIST_SUBSET_DIR / "train-images-idx3-ubyte.gz").exists()


requires_mnist_subset = pytest.mark.skipif(
    not mnist_subset_available(),
    reason="MNIST subset fixtures missing; regenerate with tools/mnist_json_to_idx.py",
)


@pytest.fixture
def tape():
    return nd.Tape()


def as_vars(tape, params):
    return {k: tape.variable(p) for k, p in params.items()}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
