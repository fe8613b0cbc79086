import math

import numpy as np
import pytest

from apps.core.exceptions import ConfigurationError
from apps.ranker.config import CurveEncoderVariant, ModelConfig
from apps.ranker.features import FeatureSpace
from apps.ranker.losses import (
    combined_loss,
    loss_ce,
    loss_rec,
    pair_target_array,
    pair_targets,
)
from apps.ranker.network import (
    clamp_final,
    encode_arch,
    encode_curve,
    encode_curves,
    encode_dataset,
    pair_probabilities,
    pair_probability,
    represent,
    score_batch,
)
from apps.ranker.params import DATASET_TABLE, RankerParams, dataset_row
from apps.tensors import Tensor
from apps.tensors.gradcheck import check_gradient


# ----------------------------
# pairwise probability and targets
# ----------------------------
def test_pair_probability_identities():
    assert pair_probability(0.7, 0.7) == 0.5
    assert pair_probability(math.log(3.0), 0.0) == pytest.approx(0.75, abs=1e-12)
    for a, b in [(0.3, -1.2), (5.0, 2.0), (-4.0, 4.0)]:
        assert pair_probability(a, b) + pair_probability(b, a) == pytest.approx(1.0, abs=1e-12)


def test_pair_probability_is_antisymmetric_and_translation_invariant():
    rng = np.random.default_rng(11)
    a, b, shift = (rng.uniform(-20.0, 20.0, size=10_000) for _ in range(3))
    forward = pair_probabilities(Tensor(a), Tensor(b)).data
    backward = pair_probabilities(Tensor(b), Tensor(a)).data
    shifted = pair_probabilities(Tensor(a + shift), Tensor(b + shift)).data
    np.testing.assert_allclose(forward + backward, 1.0, atol=1e-12)
    np.testing.assert_allclose(shifted, forward, atol=1e-9)
    for i in range(0, 10_000, 500):
        assert pair_probability(a[i], b[i]) == pytest.approx(forward[i], abs=1e-12)


def test_pair_targets():
    assert pair_targets(0.9, 0.8) == 1.0
    assert pair_targets(0.8, 0.8) == 0.5
    assert pair_targets(0.7, 0.8) == 0.0
    np.testing.assert_array_equal(
        pair_target_array(np.array([0.9, 0.8, 0.7]), np.array([0.8, 0.8, 0.8])), [1.0, 0.5, 0.0]
    )


def test_loss_ce_values():
    assert loss_ce([1.0], [0.5]).item() == pytest.approx(math.log(2.0))
    assert loss_ce([1.0, 0.0], [0.75, 0.25]).item() == pytest.approx(-math.log(0.75))
    assert loss_ce([1.0, 0.0], [1.0, 0.0]).item() < 1e-9


def test_loss_ce_of_tie_targets_is_minimal_at_one_half():
    at_half = loss_ce([0.5], [0.5]).item()
    assert at_half == pytest.approx(math.log(2.0))
    assert loss_ce([0.5], [0.6]).item() > at_half


# ----------------------------
# final-value clamp
# ----------------------------
@pytest.mark.parametrize(
    "raw, floor, cap, expected",
    [
        (0.9, 0.4, 0.7, 0.7),
        (0.2, 0.4, 0.7, 0.4),
        (0.5, 0.8, 0.7, 0.8),
        (0.5, None, None, 0.5),
    ],
)
def test_clamp_final(raw, floor, cap, expected):
    assert clamp_final(raw, floor, cap) == expected


# ----------------------------
# curve encoder
# ----------------------------
def _params(config, vocab_size=3, n_hparams=1, datasets=("d0",)):
    return RankerParams.initialize(
        config, vocab_size=vocab_size, n_hparams=n_hparams, dataset_ids=datasets
    )


def test_empty_curve_encodes_to_zeros(fast_config):
    w = _params(fast_config).tensors()
    out = encode_curves(np.zeros((3, 0)), fast_config, w)
    assert out.shape == (3, fast_config.curve_width)
    assert not out.data.any()


def test_kernels_longer_than_curve_contribute_zeros(fast_config):
    w = _params(fast_config).tensors()
    out = encode_curves(np.array([[0.4]]), fast_config, w)
    f = fast_config.filters_per_kernel
    assert out.shape == (1, 2 * f)
    assert not out.data[0, f:].any()


def test_best_value_only_variant(fast_config):
    config = fast_config.with_overrides(curve_encoder_variant=CurveEncoderVariant.BEST_VALUE_ONLY)
    w = _params(config).tensors()
    out = encode_curves(np.array([[0.1, 0.6, 0.3], [0.2, 0.2, 0.9]]), config, w)
    np.testing.assert_array_equal(out.data, [[0.6], [0.9]])
    assert "curve.k1.kernel" not in _params(config)


def test_single_item_encoders_match_batched_encoding(fast_config):
    params = _params(fast_config, datasets=("d0", "d1"))
    curves = np.array([[0.1, 0.5, 0.4], [0.3, 0.2, 0.8]])
    batch = encode_curves(curves, fast_config, params.tensors())
    np.testing.assert_allclose(encode_curve(curves[1], fast_config, params).data, batch.data[1])

    hidden, outputs = encode_arch([0, 2, 1], fast_config, params)
    assert hidden.shape == (fast_config.arch_width,)
    assert len(outputs) == 3

    np.testing.assert_array_equal(encode_dataset("d1", params).data, params[DATASET_TABLE][1])


def test_arch_encoding_depends_on_token_order(fast_config):
    params = _params(fast_config, vocab_size=4)
    forward, _ = encode_arch([0, 1, 2, 3], fast_config, params)
    reverse, _ = encode_arch([3, 2, 1, 0], fast_config, params)
    assert not np.allclose(forward.data, reverse.data)
    # the pooled embedding half ignores order; the encoder state half does not
    h = fast_config.arch_hidden_dim
    np.testing.assert_allclose(forward.data[h:], reverse.data[h:])


def _scored_batch(tiny_corpus, config):
    records = [r for r in tiny_corpus if r.dataset_id == "synth-01"][:5]
    features = FeatureSpace.fit(records, config)
    params = RankerParams.initialize(
        config,
        vocab_size=features.vocab_size,
        n_hparams=features.n_hparams,
        dataset_ids=["synth-00", "synth-01"],
    )
    return features.encode_many(records, 4), params


def _shift_dataset_row(params, row):
    table = params[DATASET_TABLE].copy()
    table[row] += 0.5
    return params.with_arrays({**params.arrays, DATASET_TABLE: table})


def test_score_depends_on_the_dataset_embedding_row(tiny_corpus, fast_config):
    batch, params = _scored_batch(tiny_corpus, fast_config)
    before = score_batch(batch, fast_config, params)
    assert not np.allclose(score_batch(batch, fast_config, _shift_dataset_row(params, 1)), before)
    # rows of other datasets are not read
    np.testing.assert_array_equal(
        score_batch(batch, fast_config, _shift_dataset_row(params, 0)), before
    )


def test_loss_rec_of_a_uniform_decoder_is_log_vocabulary(tiny_corpus, fast_config):
    batch, params = _scored_batch(tiny_corpus, fast_config)
    arrays = dict(params.arrays)
    arrays["decoder.out.w"] = np.zeros_like(arrays["decoder.out.w"])
    arrays["decoder.out.b"] = np.zeros_like(arrays["decoder.out.b"])
    uniform = params.with_arrays(arrays)
    w = uniform.tensors()
    rep = represent(batch, fast_config, uniform, w)
    start = arrays["arch.embedding"].shape[0] - 1
    loss = loss_rec(batch.tokens, batch.mask, rep.arch_outputs, rep.arch_state, w, start)
    vocab = arrays["decoder.out.b"].shape[0]
    assert loss.item() == pytest.approx(math.log(vocab), rel=1e-12)


# ----------------------------
# parameters
# ----------------------------
def test_dataset_rows_do_not_depend_on_registration_order(fast_config):
    a = _params(fast_config, datasets=("x", "y"))
    b = _params(fast_config, datasets=("x",))
    assert b.register_dataset("y") == 1
    np.testing.assert_array_equal(a[DATASET_TABLE], b[DATASET_TABLE])
    np.testing.assert_array_equal(
        b[DATASET_TABLE][1:2], dataset_row(fast_config.seed, 1, fast_config.dataset_embed_dim)
    )


def test_initialization_is_seeded(fast_config):
    a, b = _params(fast_config), _params(fast_config)
    for name in a.names:
        np.testing.assert_array_equal(a[name], b[name])
    c = _params(fast_config.with_overrides(seed=99))
    assert not np.array_equal(a["combiner.w"], c["combiner.w"])


def test_config_rejects_alpha_outside_unit_interval():
    with pytest.raises(ConfigurationError):
        ModelConfig(alpha=1.5)


# ----------------------------
# gradients of the full objective
# ----------------------------
CHECKED = (
    "curve.k2.kernel",
    "arch.embedding",
    "encoder.w_hidden",
    "decoder.w_input",
    "attention.key",
    "attention.v",
    "decoder.out.w",
    "combiner.w",
    "score.w",
    "final.w",
    DATASET_TABLE,
)


def test_combined_loss_gradients_match_finite_differences(tiny_corpus, fast_config):
    records = [r for r in tiny_corpus if r.dataset_id == "synth-00"][:6]
    config = fast_config.with_overrides(alpha=0.5, with_final_head=True)
    features = FeatureSpace.fit(records, config)
    batch = features.encode_many(records, 4)
    params = RankerParams.initialize(
        config,
        vocab_size=features.vocab_size,
        n_hparams=features.n_hparams,
        dataset_ids=["synth-00"],
    )
    finals = np.array([features.final_value(r) for r in records])
    pair_i, pair_j = np.array([0, 1, 2, 5]), np.array([3, 4, 5, 0])
    targets = pair_target_array(finals[pair_i], finals[pair_j])
    w = params.tensors(requires_grad=True)

    def loss():
        return combined_loss(
            batch, pair_i, pair_j, targets, finals, config, params, w, features.start_token
        ).total

    for name in CHECKED:
        report = check_gradient(loss, w[name], samples=6, rng=np.random.default_rng(1))
        assert report.passes(rel_tol=1e-4, abs_tol=1e-7), name
