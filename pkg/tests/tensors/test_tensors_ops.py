import numpy as np
import pytest

from apps.tensors import Tensor, backward, ops
from apps.tensors.exceptions import (
    DomainError,
    EmbeddingIndexError,
    EmptySequenceError,
    ShapeError,
)
from apps.tensors.nn import LSTMWeights, lstm_forward


def test_elementwise_and_reductions():
    assert ops.sigmoid(Tensor(0.0)).item() == 0.5
    assert ops.reduce_max(Tensor([0.1, 0.9, 0.4])).item() == 0.9
    np.testing.assert_allclose(ops.softmax(Tensor([1.0, 1.0, 1.0])).data, [1 / 3] * 3)


def test_softmax_rows_sum_to_one():
    logits = np.random.default_rng(0).normal(scale=20.0, size=(50, 7))
    out = ops.softmax(Tensor(logits), axis=-1).data
    np.testing.assert_allclose(out.sum(axis=-1), np.ones(50), atol=1e-12)
    assert np.all(out >= 0.0)
    np.testing.assert_allclose(np.exp(ops.log_softmax(Tensor(logits)).data), out, atol=1e-12)


def test_sigmoid_is_finite_for_extreme_inputs():
    out = ops.sigmoid(Tensor([-1000.0, 1000.0])).data
    assert np.all(np.isfinite(out))
    assert out[0] == pytest.approx(0.0) and out[1] == pytest.approx(1.0)


def test_log_rejects_non_positive_input():
    with pytest.raises(DomainError):
        ops.log(Tensor([1.0, 0.0]))


def test_matmul_examples():
    a = Tensor([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(ops.matmul(a, Tensor(np.eye(2))).data, a.data)
    np.testing.assert_array_equal(
        ops.matmul(Tensor(np.eye(2)), Tensor([[5.0], [7.0]])).data, [[5.0], [7.0]]
    )
    np.testing.assert_array_equal(ops.matmul(a, Tensor([[1.0], [1.0]])).data, [[3.0], [7.0]])


def test_matmul_shape_mismatch_names_both_shapes():
    with pytest.raises(ShapeError) as exc:
        ops.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))
    assert "(2, 3)" in str(exc.value)


def test_zero_size_dimensions_are_rejected():
    with pytest.raises(ShapeError):
        Tensor(np.zeros((3, 0)))


@pytest.mark.parametrize(
    "signal, kernel, expected",
    [
        ([1.0, 2.0, 3.0], [1.0, 0.0], [1.0, 2.0]),
        ([1.0, 1.0, 1.0, 1.0], [1.0, 1.0], [2.0, 2.0, 2.0]),
        ([0.3, -2.0, 5.0], [0.0, 0.0], [0.0, 0.0]),
    ],
)
def test_conv1d_valid_matches_reference(signal, kernel, expected):
    x = Tensor(np.array(signal).reshape(-1, 1))
    k = Tensor(np.array(kernel).reshape(-1, 1, 1))
    out = ops.conv1d_valid(x, k, Tensor([0.0]))
    np.testing.assert_array_equal(out.data.reshape(-1), expected)


def test_conv1d_rejects_kernel_longer_than_signal():
    with pytest.raises(ShapeError):
        ops.conv1d_valid(Tensor([[1.0]]), Tensor(np.ones((2, 1, 1))), Tensor([0.0]))


def test_global_max_pool_examples():
    assert ops.global_max_pool(Tensor([[0.1], [0.7], [0.3]])).data.tolist() == [0.7]
    assert ops.global_max_pool(Tensor([[1.0, 9.0], [5.0, 2.0]])).data.tolist() == [5.0, 9.0]
    assert ops.global_max_pool(Tensor(np.full((4, 2), 0.25))).data.tolist() == [0.25, 0.25]


def test_embedding_lookup_is_deterministic_and_scatters_gradient():
    table = Tensor(np.arange(12, dtype=float).reshape(4, 3), requires_grad=True)
    first = ops.embedding_lookup(table, 2)
    np.testing.assert_array_equal(first.data, ops.embedding_lookup(table, 2).data)
    grads = backward(ops.reduce_sum(first), {"table": table})
    expected = np.zeros((4, 3))
    expected[2] = 1.0
    np.testing.assert_array_equal(grads["table"], expected)


def test_embedding_lookup_out_of_range_names_token():
    table = Tensor(np.zeros((2, 3)))
    with pytest.raises(EmbeddingIndexError, match="'conv5'"):
        ops.take_rows(table, [5], ["conv5"])


def test_empty_sequence_is_rejected():
    weights = LSTMWeights.initialize(np.random.default_rng(0), 2, 3)
    with pytest.raises(EmptySequenceError):
        lstm_forward([], weights)
