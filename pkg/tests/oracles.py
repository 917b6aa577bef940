"""Independent scalar-loop reimplementations used as oracles.

Everything here works on plain Python floats and lists via ``math``,
deliberately avoiding the package's vectorized paths so the two sides of
every comparison stay independent.
"""

import math


def sig(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _gate_scalar(Wx, Wh, bx, bh, x, h):
    """Pre-activation of one gate: x@Wx + h@Wh + bx + bh, per output unit."""
    width = len(bx)
    out = []
    for j in range(width):
        acc = bx[j] + bh[j]
        for i, xi in enumerate(x):
            acc += xi * Wx[i][j]
        for i, hi in enumerate(h):
            acc += hi * Wh[i][j]
        out.append(acc)
    return out


def _unpack(params):
    return {k: v.tolist() for k, v in params.items()}


def lstm_step_scalar(params, h, c, x):
    """One standard-cell step on row 0, everything in Python floats."""
    p = _unpack(params)
    h, c, x = list(h), list(c), list(x)

    def gate(name):
        return _gate_scalar(p[f"W_x{name}"], p[f"W_h{name}"], p[f"b_x{name}"], p[f"b_h{name}"], x, h)

    i = [sig(z) for z in gate("i")]
    f = [sig(z) for z in gate("f")]
    g = [math.tanh(z) for z in gate("g")]
    o = [sig(z) for z in gate("o")]
    c_new = [f[j] * c[j] + i[j] * g[j] for j in range(len(c))]
    h_new = [o[j] * math.tanh(c_new[j]) for j in range(len(c))]
    return h_new, c_new


def gamma_lstm_step_scalar(params, h, levels, x, readout_lag=False, shared_forget=False):
    """One gamma-cell step on row 0; returns (h', levels', attention)."""
    p = _unpack(params)
    h, x = list(h), list(x)
    levels = [list(lv) for lv in levels]
    K = len(levels) - 1
    width = len(h)

    def gate(name):
        return _gate_scalar(p[f"W_x{name}"], p[f"W_h{name}"], p[f"b_x{name}"], p[f"b_h{name}"], x, h)

    i = [sig(z) for z in gate("i")]
    g = [math.tanh(z) for z in gate("g")]
    o = [sig(z) for z in gate("o")]

    new = [[i[j] * g[j] for j in range(width)]]
    for k in range(1, K + 1):
        f_k = [sig(z) for z in gate("f" if shared_forget else f"f{k}")]
        new.append([(1.0 - f_k[j]) * levels[k][j] + f_k[j] * levels[k - 1][j]
                    for j in range(width)])

    read = levels if readout_lag else new
    q = [p["b_a"][j] + sum(h[i2] * p["W_a"][i2][j] for i2 in range(width)) for j in range(width)]
    scores = [sum(q[j] * read[k][j] for j in range(width)) for k in range(K + 1)]
    peak = max(scores)
    exps = [math.exp(s - peak) for s in scores]
    z = sum(exps)
    att = [e / z for e in exps]
    c_eff = [sum(att[k] * read[k][j] for k in range(K + 1)) for j in range(width)]
    h_new = [o[j] * math.tanh(c_eff[j]) for j in range(width)]
    return h_new, new, att


def gamma_kernel(k: int, mu: float, t: int) -> float:
    """Impulse response of cascade level k at time t (independent form)."""
    if k == 0:
        return 1.0 if t == 0 else 0.0
    if t < k:
        return 0.0
    return math.comb(t - 1, k - 1) * mu**k * (1.0 - mu) ** (t - k)


def gamma_levels_by_convolution(xs, mu: float, K: int):
    """Level trajectories for an input sequence, by direct convolution.

    ``xs`` is a list of per-step vectors (lists); returns levels[t][k][j]
    for t = 1..len(xs) (state after consuming xs[:t]).
    """
    out = []
    for t in range(1, len(xs) + 1):
        step_levels = []
        for k in range(K + 1):
            vec = [0.0] * len(xs[0])
            for s, x in enumerate(xs[:t], start=1):
                w = gamma_kernel(k, mu, t - s)
                for j, xj in enumerate(x):
                    vec[j] += w * xj
            step_levels.append(vec)
        out.append(step_levels)
    return out


def cross_entropy_scalar(logits, labels) -> float:
    """Direct per-sample summation, no log-sum-exp shortcut reuse."""
    total = 0.0
    for row, label in zip(logits, labels):
        row = list(row)
        exps = [math.exp(v) for v in row]
        z = sum(exps)
        total += -math.log(exps[label] / z)
    return total / len(labels)


def adam_single(p, g, m, v, t, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """Textbook Adam on one scalar coordinate."""
    m = beta1 * m + (1 - beta1) * g
    v = beta2 * v + (1 - beta2) * g * g
    m_hat = m / (1 - beta1**t)
    v_hat = v / (1 - beta2**t)
    return p - lr * m_hat / (math.sqrt(v_hat) + eps), m, v
