#!/usr/bin/env python3
"""Tour of the classic gamma memory: a cascade of leaky integrators.

Shows the three regimes of the leak coefficient mu:
  mu = 1   -> pure delay line (level k holds the input from k steps ago)
  mu = 0   -> frozen memory (levels never move)
  0 < mu < 1 -> gamma kernels: each level is a smoothed, delayed view
and the linear per-level readout that mixes the levels into one vector.
"""

import numpy as np

from gamma_rnn.gamma_memory import (
    GammaMemoryConfig,
    GammaMemoryState,
    GammaReadoutWeights,
    gamma_readout,
    gamma_step,
    impulse_response,
    zero_state,
)


def banner(title):
    print(f"\n=== {title} ===")


banner("mu = 1: the cascade is a delay line")
cfg = GammaMemoryConfig(K=3, mu=1.0, dim=1)
state = zero_state(cfg)
inputs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
print("input stream:", inputs)
for t, x in enumerate(inputs):
    state = gamma_step(state, np.array([x]), cfg)
    levels = [float(lv[0]) for lv in state.levels]
    print(f"  t={t}: levels c0..c3 = {levels}")
print("each level is an exact k-step delayed copy of the input.")

banner("mu = 0: the memory is frozen")
cfg = GammaMemoryConfig(K=2, mu=0.0, dim=1)
state = GammaMemoryState((np.array([0.0]), np.array([0.5]), np.array([-0.25])))
for x in (1.0, -1.0, 2.0):
    state = gamma_step(state, np.array([x]), cfg)
print("after any inputs, levels 1..K keep their initial values:",
      [float(lv[0]) for lv in state.levels[1:]])

banner("mu = 0.5: gamma impulse responses")
cfg = GammaMemoryConfig(K=3, mu=0.5, dim=1)
state = zero_state(cfg)
rows = []
for t in range(10):
    x = np.array([1.0]) if t == 0 else np.array([0.0])
    state = gamma_step(state, x, cfg)
    rows.append([float(lv[0]) for lv in state.levels])
print("response of each level to a unit impulse at t=0:")
print("  t   c0      c1      c2      c3")
for t, row in enumerate(rows):
    print(f"  {t:<3d} " + " ".join(f"{v:7.4f}" for v in row))
print("closed form check, level 2 at t=5:",
      impulse_response(2, 0.5, 5), "vs simulated:", rows[4][2])
print("deeper levels peak later and spread wider: depth vs resolution.")

banner("linear readout across levels")
rng = np.random.default_rng(0)
cfg = GammaMemoryConfig(K=2, mu=0.5, dim=4)
state = zero_state(cfg)
for _ in range(6):
    state = gamma_step(state, rng.normal(size=4), cfg)
weights = GammaReadoutWeights(tuple(rng.normal(size=4) for _ in range(3)))
print("levels:")
for k, lv in enumerate(state.levels):
    print(f"  c{k} =", np.round(lv, 3))
print("readout sum_k W_k * c_k =", np.round(gamma_readout(state, weights), 3))
