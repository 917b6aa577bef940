#!/usr/bin/env python3
"""The reverse-mode tape in five minutes.

Builds a few expressions on a tape, pulls gradients out of a single
backward sweep, and cross-checks them against central finite differences
with the built-in checker.
"""

import numpy as np

import gamma_rnn.ndmath as nd

print("=== recording and differentiating an expression ===")
tape = nd.Tape()
x = tape.variable([1.0, 2.0, 3.0])
y = tape.variable([0.5, -1.0, 2.0])
loss = nd.total(nd.tanh(x * y) + nd.scale(x, 0.1))
print("loss value:", float(loss.value))
grads = nd.backward(loss)
print("dloss/dx:", np.round(grads[x.tape_id], 6))
print("dloss/dy:", np.round(grads[y.tape_id], 6))

print("\n=== matrices and softmax ===")
tape = nd.Tape()
w = tape.variable(np.arange(6.0).reshape(2, 3) / 10)
v = tape.variable([[1.0], [2.0], [3.0]])
scores = nd.matmul(w, v)            # [2, 1]
print("w @ v =", scores.value.ravel())
att = nd.softmax(nd.reshape(scores, (1, 2)))
print("softmax over the two scores:", att.value.ravel(), "sum:", att.value.sum())

print("\n=== gradient checking against finite differences ===")
rng = np.random.default_rng(0)


def fn(v):
    m = nd.reshape(v, (3, 3))
    return nd.total(nd.sigmoid(nd.matmul(m, m)))


err = nd.grad_check(fn, rng.normal(size=9), eps=1e-5)
print(f"max relative error for sigmoid(M @ M): {err:.2e}")

print("\n=== the tape is an exact record: unreachable leaves get zeros ===")
tape = nd.Tape()
a = tape.variable([1.0])
unused = tape.variable([42.0])
grads = nd.backward(nd.total(a * a))
print("gradient of a leaf the loss never touched:", grads[unused.tape_id])
