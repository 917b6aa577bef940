import numpy as np
import pytest

import gamma_rnn.ndmath as nd
from gamma_rnn.cells import (
    ConfigurationError,
    GammaLstmCell,
    GammaLstmState,
    LstmCell,
    LstmState,
    gamma_lstm_step,
    lstm_step,
    run_sequence,
)
from gamma_rnn.verify import bptt_max_rel_err, make_cell_stack

from conftest import as_vars
from oracles import gamma_lstm_step_scalar, lstm_step_scalar, sig


def random_lstm_setup(seed, input_size=3, hidden=4, batch=1):
    rng = np.random.default_rng(seed)
    cell = LstmCell(input_size, hidden)
    params = cell.init_params(rng)
    h = rng.normal(size=(batch, hidden))
    c = rng.normal(size=(batch, hidden))
    x = rng.normal(size=(batch, input_size))
    return cell, params, h, c, x


def random_gamma_setup(seed, input_size=3, hidden=4, K=3, batch=1, **kw):
    rng = np.random.default_rng(seed)
    cell = GammaLstmCell(input_size, hidden, K, **kw)
    params = cell.init_params(rng)
    h = rng.normal(size=(batch, hidden))
    levels = [rng.normal(size=(batch, hidden)) for _ in range(K + 1)]
    x = rng.normal(size=(batch, input_size))
    return cell, params, h, levels, x


def step_lstm(cell, params, h, c, x):
    tape = nd.Tape()
    state = LstmState(h=tape.variable(h), c=tape.variable(c))
    new, _ = cell.step(as_vars(tape, params), state, tape.variable(x))
    return new


def step_gamma(cell, params, h, levels, x):
    tape = nd.Tape()
    state = GammaLstmState(h=tape.variable(h), levels=[tape.variable(lv) for lv in levels])
    return cell.step(as_vars(tape, params), state, tape.variable(x))


class TestLstmStep:
    def test_zero_params_halve_the_cell_state(self):
        cell = LstmCell(3, 4)
        params = {k: np.zeros(s) for k, s in cell.param_shapes().items()}
        rng = np.random.default_rng(0)
        c = rng.normal(size=(1, 4))
        x = rng.normal(size=(1, 3))
        new = step_lstm(cell, params, np.zeros((1, 4)), c, x)
        assert np.array_equal(new.c.value, 0.5 * c)
        assert np.array_equal(new.h.value, 0.5 * np.tanh(0.5 * c))

    def test_zero_params_zero_state_give_zero_hidden(self):
        cell = LstmCell(2, 3)
        params = {k: np.zeros(s) for k, s in cell.param_shapes().items()}
        new = step_lstm(cell, params, np.zeros((1, 3)), np.zeros((1, 3)), np.ones((1, 2)))
        assert np.array_equal(new.h.value, np.zeros((1, 3)))

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_scalar_loop_oracle(self, seed):
        cell, params, h, c, x = random_lstm_setup(seed)
        new = step_lstm(cell, params, h, c, x)
        h_ref, c_ref = lstm_step_scalar(params, h[0], c[0], x[0])
        assert np.allclose(new.h.value[0], h_ref, rtol=0, atol=1e-12)
        assert np.allclose(new.c.value[0], c_ref, rtol=0, atol=1e-12)

    def test_width_mismatch_rejected(self):
        cell, params, h, c, x = random_lstm_setup(0)
        with pytest.raises(nd.ShapeError):
            step_lstm(cell, params, h, c, np.zeros((1, 5)))

    def test_step_is_deterministic(self):
        cell, params, h, c, x = random_lstm_setup(3)
        a = step_lstm(cell, params, h, c, x)
        b = step_lstm(cell, params, h, c, x)
        assert a.h.value.tobytes() == b.h.value.tobytes()
        assert a.c.value.tobytes() == b.c.value.tobytes()


class TestGammaLstmStep:
    def test_zero_params_uniform_attention_and_zero_hidden(self):
        cell = GammaLstmCell(3, 4, memory_order=3)
        params = {k: np.zeros(s) for k, s in cell.param_shapes().items()}
        new, att = step_gamma(cell, params, np.zeros((1, 4)),
                              [np.zeros((1, 4))] * 4, np.ones((1, 3)))
        assert np.array_equal(att.value, np.full((1, 4), 0.25))
        assert np.array_equal(new.h.value, np.zeros((1, 4)))
        for lv in new.levels:
            assert np.array_equal(lv.value, np.zeros((1, 4)))

    def test_saturated_forget_gates_act_as_shift_register(self):
        rng = np.random.default_rng(2)
        K, hidden = 3, 4
        cell = GammaLstmCell(2, hidden, K)
        params = cell.init_params(rng)
        for k in range(1, K + 1):
            params[f"W_xf{k}"] = np.zeros_like(params[f"W_xf{k}"])
            params[f"W_hf{k}"] = np.zeros_like(params[f"W_hf{k}"])
            params[f"b_xf{k}"] = np.full(hidden, 50.0)
            params[f"b_hf{k}"] = np.zeros(hidden)
        h = np.zeros((1, hidden))
        levels = [np.zeros((1, hidden))] * (K + 1)
        bottom_history = []
        for t in range(10):
            x = rng.normal(size=(1, 2))
            state, _ = step_gamma(cell, params, h, levels, x)
            h = state.h.value
            levels = [lv.value for lv in state.levels]
            bottom_history.append(levels[0])
            for k in range(1, K + 1):
                expected = bottom_history[t - k] if t >= k else np.zeros((1, hidden))
                assert np.allclose(levels[k], expected, rtol=0, atol=1e-9)

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_scalar_loop_oracle(self, seed):
        cell, params, h, levels, x = random_gamma_setup(seed)
        new, att = step_gamma(cell, params, h, levels, x)
        h_ref, levels_ref, att_ref = gamma_lstm_step_scalar(
            params, h[0], [lv[0] for lv in levels], x[0])
        assert np.allclose(new.h.value[0], h_ref, rtol=0, atol=1e-12)
        assert np.allclose(att.value[0], att_ref, rtol=0, atol=1e-12)
        for lv, ref in zip(new.levels, levels_ref):
            assert np.allclose(lv.value[0], ref, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("readout_lag,shared_forget",
                             [(True, False), (False, True), (True, True)])
    def test_variant_flags_match_scalar_oracle(self, readout_lag, shared_forget):
        cell, params, h, levels, x = random_gamma_setup(
            5, readout_lag=readout_lag, shared_forget=shared_forget)
        new, att = step_gamma(cell, params, h, levels, x)
        h_ref, levels_ref, att_ref = gamma_lstm_step_scalar(
            params, h[0], [lv[0] for lv in levels], x[0],
            readout_lag=readout_lag, shared_forget=shared_forget)
        assert np.allclose(new.h.value[0], h_ref, rtol=0, atol=1e-12)
        assert np.allclose(att.value[0], att_ref, rtol=0, atol=1e-12)
        for lv, ref in zip(new.levels, levels_ref):
            assert np.allclose(lv.value[0], ref, rtol=0, atol=1e-12)

    def test_readout_lag_uses_old_levels(self):
        cell, params, h, levels, x = random_gamma_setup(8, readout_lag=True)
        zero_levels = [np.zeros_like(lv) for lv in levels]
        new, att = step_gamma(cell, params, h, zero_levels, x)
        # old levels are all zero -> scores zero -> uniform attention,
        # readout zero -> h exactly zero regardless of gates
        assert np.array_equal(att.value, np.full_like(att.value, 0.25))
        assert np.array_equal(new.h.value, np.zeros_like(new.h.value))
        assert not np.array_equal(new.levels[0].value, np.zeros_like(h))

    def test_attention_is_distribution_at_every_step(self):
        cell, params, h, levels, x = random_gamma_setup(4, hidden=5, K=2)
        state_h, state_levels = h, levels
        rng = np.random.default_rng(99)
        for _ in range(20):
            x = rng.normal(size=(1, 3)) * 3.0
            state, att = step_gamma(cell, params, state_h, state_levels, x)
            assert np.all(att.value > 0)
            assert abs(att.value.sum() - 1.0) <= 1e-12
            state_h = state.h.value
            state_levels = [lv.value for lv in state.levels]

    def test_hidden_output_is_bounded(self):
        rng = np.random.default_rng(13)
        cell = GammaLstmCell(3, 4, 2)
        params = {k: rng.normal(size=s) * 10.0 for k, s in cell.param_shapes().items()}
        h = rng.normal(size=(1, 4))
        levels = [rng.normal(size=(1, 4)) for _ in range(3)]
        for _ in range(5):
            state, _ = step_gamma(cell, params, h, levels, rng.normal(size=(1, 3)) * 10)
            h = state.h.value
            levels = [lv.value for lv in state.levels]
            assert np.all(np.abs(h) < 1.0)

    def test_level_update_preserves_elementwise_bounds(self):
        rng = np.random.default_rng(17)
        lo, hi = -0.7, 0.9
        cell, params, h, _, x = random_gamma_setup(17, hidden=4, K=3)
        levels = [rng.uniform(lo, hi, size=(1, 4)) for _ in range(4)]
        state, _ = step_gamma(cell, params, h, levels, x)
        for lv in state.levels[1:]:
            assert np.all(lv.value >= lo - 1e-15) and np.all(lv.value <= hi + 1e-15)

    def test_order_one_reduces_to_coupled_gate_update(self):
        # with K=1 the cascade level obeys c1(t) = (1-f)c1(t-1) + f*(i*g)(t-1),
        # and forcing the readout onto level 1 gives h = o * tanh(c1)
        cell, params, h, levels, x0 = random_gamma_setup(21, hidden=4, K=1)
        rng = np.random.default_rng(77)
        h_hist, lvl_hist, x_hist = [h], [levels], []
        for _ in range(6):
            x = rng.normal(size=(1, 3))
            x_hist.append(x)
            state, _ = step_gamma(cell, params, h_hist[-1], lvl_hist[-1], x)
            h_hist.append(state.h.value)
            lvl_hist.append([lv.value for lv in state.levels])
        for t in range(1, 6):
            h_prev = h_hist[t][0]
            x_t = x_hist[t][0]
            gates = {}
            for name in ("i", "g", "o", "f1"):
                pre = (params[f"W_x{name}"].T @ x_t + params[f"W_h{name}"].T @ h_prev
                       + params[f"b_x{name}"] + params[f"b_h{name}"])
                gates[name] = np.tanh(pre) if name == "g" else 1 / (1 + np.exp(-pre))
            f = gates["f1"]
            expected_c1 = (1 - f) * lvl_hist[t][1][0] + f * lvl_hist[t][0][0]
            assert np.allclose(lvl_hist[t + 1][1][0], expected_c1, rtol=0, atol=1e-12)
            assert np.allclose(lvl_hist[t][0][0],
                               lvl_hist[t][0][0], rtol=0, atol=0)
            forced_h = gates["o"] * np.tanh(expected_c1)
            assert np.all(np.abs(forced_h) < 1.0)

    def test_zero_memory_order_rejected(self):
        with pytest.raises(ConfigurationError):
            GammaLstmCell(3, 4, 0)
        cell, params, h, _, x = random_gamma_setup(0)
        tape = nd.Tape()
        bad = GammaLstmState(h=tape.variable(h), levels=[tape.variable(h)])
        with pytest.raises(ConfigurationError):
            gamma_lstm_step(as_vars(tape, params), bad, tape.variable(x))

    def test_width_mismatch_rejected(self):
        cell, params, h, levels, _ = random_gamma_setup(0)
        with pytest.raises(nd.ShapeError):
            step_gamma(cell, params, h, levels, np.zeros((1, 7)))


class TestRunSequence:
    def test_empty_sequence_returns_initial_state(self):
        cell, params, h, c, _ = random_lstm_setup(0)
        tape = nd.Tape()
        state = LstmState(h=tape.variable(h), c=tape.variable(c))
        run = run_sequence(cell, as_vars(tape, params), state, [])
        assert run.final_state is state
        assert run.hidden == []
        assert run.attention is None

    def test_length_one_equals_single_step(self):
        cell, params, h, c, x = random_lstm_setup(6)
        tape = nd.Tape()
        state = LstmState(h=tape.variable(h), c=tape.variable(c))
        run = run_sequence(cell, as_vars(tape, params), state, [tape.variable(x)])
        direct = step_lstm(cell, params, h, c, x)
        assert np.array_equal(run.final_state.h.value, direct.h.value)
        assert len(run.hidden) == 1

    def test_gamma_sequence_collects_attention(self):
        cell, params, h, levels, x = random_gamma_setup(6)
        tape = nd.Tape()
        state = GammaLstmState(h=tape.variable(h),
                               levels=[tape.variable(lv) for lv in levels])
        xs = [tape.variable(x) for _ in range(4)]
        run = run_sequence(cell, as_vars(tape, params), state, xs)
        assert run.attention is not None and len(run.attention) == 4

    @pytest.mark.parametrize("kind", ["lstm", "gamma_lstm"])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_bptt_gradients_match_finite_differences(self, kind, seed):
        cells = make_cell_stack(kind, memory_order=2)
        assert bptt_max_rel_err(cells, seq_len=5, seed=seed) < 1e-5


class TestParamShapes:
    def test_lstm_param_count_formula(self):
        cell = LstmCell(7, 128)
        total = sum(np.prod(s) for s in cell.param_shapes().values())
        assert total == 4 * (128 * 7 + 128 * 128 + 2 * 128)

    def test_gamma_has_per_level_forget_sets(self):
        cell = GammaLstmCell(7, 128, 3)
        shapes = cell.param_shapes()
        for k in (1, 2, 3):
            assert f"W_xf{k}" in shapes
        total = sum(np.prod(s) for s in shapes.values())
        assert total == 6 * (128 * 7 + 128 * 128 + 2 * 128) + 128 * 128 + 128

    def test_shared_forget_uses_one_set(self):
        cell = GammaLstmCell(7, 128, 3, shared_forget=True)
        shapes = cell.param_shapes()
        assert "W_xf" in shapes and "W_xf1" not in shapes
        total = sum(np.prod(s) for s in shapes.values())
        assert total == 4 * (128 * 7 + 128 * 128 + 2 * 128) + 128 * 128 + 128

    def test_init_params_match_declared_shapes(self):
        cell = GammaLstmCell(3, 5, 2)
        params = cell.init_params(np.random.default_rng(0))
        assert {k: v.shape for k, v in params.items()} == cell.param_shapes()
        bound = 1 / np.sqrt(5)
        for arr in params.values():
            assert np.all(np.abs(arr) <= bound)
