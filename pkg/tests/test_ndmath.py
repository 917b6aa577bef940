import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import gamma_rnn.ndmath as nd


def leaf(arr, tape=None):
    tape = tape or nd.Tape()
    return tape.variable(np.asarray(arr, dtype=np.float64))


class TestTensorConstruction:
    def test_rejects_nan_in_checked_mode(self):
        with pytest.raises(nd.ContractError):
            nd.as_tensor([1.0, np.nan])

    def test_rejects_inf_in_checked_mode(self):
        with pytest.raises(nd.ContractError):
            nd.as_tensor([np.inf])

    def test_unchecked_passes_nonfinite(self):
        arr = nd.as_tensor([np.inf], checked=False)
        assert np.isinf(arr[0])

    def test_coerces_to_float64(self):
        assert nd.as_tensor([1, 2]).dtype == np.float64


class TestMatmul:
    def test_identity(self):
        a = leaf([[1.0, 0.0], [0.0, 1.0]])
        b = a.tape.variable([[3.0], [4.0]])
        assert np.array_equal(nd.matmul(a, b).value, [[3.0], [4.0]])

    def test_hand_arithmetic(self):
        a = leaf([[1.0, 2.0]])
        b = a.tape.variable([[3.0], [4.0]])
        assert np.array_equal(nd.matmul(a, b).value, [[11.0]])

    def test_shape_mismatch_names_both_shapes(self):
        a = leaf(np.zeros((2, 3)))
        b = a.tape.variable(np.zeros((2, 3)))
        with pytest.raises(nd.ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
            nd.matmul(a, b)

    def test_rejects_vectors(self):
        a = leaf(np.zeros(3))
        b = a.tape.variable(np.zeros(3))
        with pytest.raises(nd.ShapeError):
            nd.matmul(a, b)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        b_const = rng.normal(size=(3, 3))

        def f(a):
            b = a.tape.variable(b_const)
            return nd.total(nd.matmul(nd.reshape(a, (3, 3)), b))

        err = nd.grad_check(f, rng.normal(size=9))
        assert err < 1e-7


class TestElementwise:
    def test_sigmoid_at_zero(self):
        assert leaf(0.0).tape is not None
        assert nd.sigmoid(leaf([0.0])).value[0] == 0.5

    def test_tanh_at_zero(self):
        assert nd.tanh(leaf([0.0])).value[0] == 0.0

    def test_sigmoid_extreme_inputs_stay_finite(self):
        out = nd.sigmoid(leaf([-1e4, 1e4])).value
        assert np.all(np.isfinite(out))
        assert out[0] == 0.0 and out[1] == 1.0

    def test_mul_hand_arithmetic(self):
        a = leaf([2.0, 3.0])
        b = a.tape.variable([4.0, 5.0])
        assert np.array_equal(nd.mul(a, b).value, [8.0, 15.0])

    def test_binary_shape_mismatch(self):
        a = leaf(np.zeros(3))
        b = a.tape.variable(np.zeros(4))
        with pytest.raises(nd.ShapeError):
            nd.add(a, b)

    def test_operators_and_constants(self):
        x = leaf([1.0, 2.0])
        y = 1.0 - x
        assert np.array_equal(y.value, [0.0, -1.0])
        assert np.array_equal((-x).value, [-1.0, -2.0])
        assert np.array_equal(nd.scale(x, 3.0).value, [3.0, 6.0])

    def test_bias_broadcast_backward_sums_over_batch(self):
        m_const = np.arange(6.0).reshape(2, 3)

        def f(bias):
            m = bias.tape.variable(m_const)
            return nd.total(nd.add(m, bias))

        tape = nd.Tape()
        b = tape.variable(np.zeros(3))
        grads = nd.backward(f(b))
        assert np.array_equal(grads[b.tape_id], [2.0, 2.0, 2.0])
        assert nd.grad_check(f, np.zeros(3)) < 1e-8


class TestSoftmax:
    def test_uniform(self):
        out = nd.softmax(leaf([0.0, 0.0, 0.0, 0.0])).value
        assert np.array_equal(out, np.full(4, 0.25))

    def test_large_inputs_no_overflow(self):
        with np.errstate(over="raise"):
            out = nd.softmax(leaf([1000.0, 0.0])).value
        assert abs(out[0] - 1.0) < 1e-12 and abs(out[1]) < 1e-12

    def test_empty_rejected(self):
        with pytest.raises(nd.ShapeError):
            nd.softmax(leaf(np.zeros(0)))

    def test_jacobian_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=4)
        for j in range(4):
            err = nd.grad_check(lambda v, j=j: nd.take_flat(nd.softmax(v), j), x)
            assert err < 1e-7

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(min_value=-50, max_value=50), min_size=1, max_size=8))
    def test_distribution_invariants(self, xs):
        out = nd.softmax(leaf(xs)).value
        assert abs(out.sum() - 1.0) <= 1e-12
        assert np.all(out > 0.0) and np.all(out < 1.0 + 1e-15)

    def test_rowwise_on_matrices(self):
        out = nd.softmax(leaf([[0.0, 0.0], [1.0, 1.0]])).value
        assert np.allclose(out, 0.5, rtol=0, atol=0)


class TestBackward:
    def test_unreachable_leaf_gets_zero_gradient(self):
        tape = nd.Tape()
        x = tape.variable([1.0, 2.0])
        unused = tape.variable([5.0])
        grads = nd.backward(nd.total(x * x))
        assert np.array_equal(grads[unused.tape_id], [0.0])
        assert np.array_equal(grads[x.tape_id], [2.0, 4.0])

    def test_non_scalar_loss_rejected(self):
        x = leaf([1.0, 2.0])
        with pytest.raises(nd.ContractError):
            nd.backward(x)

    def test_fanout_accumulates_by_addition(self):
        tape = nd.Tape()
        x = tape.variable([3.0])
        grads = nd.backward(nd.total(x + x))
        assert np.array_equal(grads[x.tape_id], [2.0])

    def test_backward_is_deterministic(self):
        rng = np.random.default_rng(7)
        tape = nd.Tape()
        a = tape.variable(rng.normal(size=(4, 4)))
        b = tape.variable(rng.normal(size=(4, 4)))
        loss = nd.total(nd.tanh(nd.matmul(a, b)) * nd.sigmoid(a))
        g1 = nd.backward(loss)
        g2 = nd.backward(loss)
        assert g1[a.tape_id].tobytes() == g2[a.tape_id].tobytes()
        assert g1[b.tape_id].tobytes() == g2[b.tape_id].tobytes()

    def test_tape_order_is_topological(self):
        tape = nd.Tape()
        x = tape.variable(np.ones((2, 2)))
        y = nd.sigmoid(x * x + x)
        nd.total(y)
        for nid, node in enumerate(tape._nodes):
            assert all(pid < nid for pid in node.parents)

    def test_non_recording_tape_rejects_backward(self):
        tape = nd.Tape(record=False)
        x = tape.variable([1.0])
        with pytest.raises(nd.ContractError):
            nd.backward(nd.total(x))


class TestGradCheck:
    def test_quadratic_is_nearly_exact(self):
        err = nd.grad_check(lambda x: nd.total(x * x), np.array([1.0, 2.0]))
        assert err < 1e-9
        tape = nd.Tape()
        x = tape.variable([1.0, 2.0])
        grads = nd.backward(nd.total(x * x))
        assert np.allclose(grads[x.tape_id], [2.0, 4.0], rtol=0, atol=1e-15)

    def test_constant_function_both_sides_zero(self):
        def f(x):
            return nd.total(x.tape.variable([1.0]))

        assert nd.grad_check(f, np.array([0.3, -0.2])) == 0.0

    def test_eps_must_be_positive(self):
        with pytest.raises(nd.ContractError):
            nd.grad_check(lambda x: nd.total(x), np.ones(2), eps=0.0)


def _op_cases():
    """One scalar-valued wrapper per registered op, both operand slots live."""
    def split(x, n):
        return nd.reshape(nd.segment(x, 0, n), (2, n // 2)), \
            nd.reshape(nd.segment(x, n, 2 * n), (2, n // 2))

    return [
        ("add", 8, lambda x: nd.total(nd.add(*split(x, 4)))),
        ("sub", 8, lambda x: nd.total(nd.sub(*split(x, 4)))),
        ("mul", 8, lambda x: nd.total(nd.mul(*split(x, 4)))),
        ("neg", 6, lambda x: nd.total(nd.neg(x) * x)),
        ("scale", 6, lambda x: nd.total(nd.scale(x, 1.7) * x)),
        ("sigmoid", 6, lambda x: nd.total(nd.sigmoid(x))),
        ("tanh", 6, lambda x: nd.total(nd.tanh(x))),
        ("matmul", 8, lambda x: nd.total(nd.matmul(*split(x, 4)))),
        ("softmax", 6, lambda x: nd.total(nd.softmax(x) * x)),
        ("total", 6, lambda x: nd.total(x) * nd.total(x)),
        ("rowwise_dot", 8, lambda x: nd.total(nd.rowwise_dot(*split(x, 4)))),
        ("concat_columns", 8, lambda x: nd.total(nd.concat_columns(list(split(x, 4))) * 0.5
                                                 + nd.concat_columns(list(split(x, 4))))),
        ("column", 8, lambda x: nd.total(nd.column(split(x, 4)[0], 1) * split(x, 4)[1])),
        ("segment", 6, lambda x: nd.total(nd.segment(x, 1, 4) * nd.segment(x, 2, 5))),
        ("reshape", 6, lambda x: nd.total(nd.reshape(x, (3, 2)) * nd.reshape(x, (3, 2)))),
        ("take_flat", 6, lambda x: nd.take_flat(x, 2) * nd.take_flat(x, 4)),
        ("cross_entropy", 8, _cross_entropy_case),
    ]


def _cross_entropy_case(x):
    from gamma_rnn.train import cross_entropy

    logits = nd.reshape(x, (2, 4))
    return cross_entropy(logits, np.array([1, 3]))


@pytest.mark.parametrize("name,size,f", _op_cases(), ids=[c[0] for c in _op_cases()])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_every_registered_op_passes_grad_check(name, size, f, seed):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, size=size)
    assert nd.grad_check(f, x, eps=1e-5) < 1e-6
