"""Tests for per-state scaled MSE training."""

import numpy as np
import pytest

from btnn_spotter.errors import ContractViolationError, EmptyClassError, ShapeError
from btnn_spotter.models.features import FeatureFrame
from btnn_spotter.models.network import DenseLayer, ModelBundle, TailNet
from btnn_spotter.models.training import AlignedSample, TrainConfig
from btnn_spotter.services.training import (
    AdamOptimizer,
    SgdOptimizer,
    gradient_check,
    group_utterances,
    loss_gradients,
    sample_batch,
    state_loss,
    train,
    train_softmax_head,
)


def zero_tail_bundle(bundle):
    """Same embedding, every tail a single all-zero sigmoid layer."""
    dim = bundle.embedding.output_dim
    tails = {
        s: TailNet(s, (DenseLayer(np.zeros((1, dim)), np.zeros(1), "sigmoid"),))
        for s in bundle.state_ids
    }
    return ModelBundle(bundle.embedding, tails, bundle.num_states, bundle.feature_config)


class TestStateLoss:
    def test_positive_is_scaled(self):
        assert state_loss(0.9, 1, 4.0) == pytest.approx(0.04)

    def test_negative_is_unscaled(self):
        assert state_loss(0.3, 0, 4.0) == pytest.approx(0.09)

    def test_half_on_a_negative(self):
        assert state_loss(0.5, 0, 4.0) == pytest.approx(0.25)

    def test_quarter_on_a_positive(self):
        assert state_loss(0.25, 1, 4.0) == pytest.approx(2.25)

    def test_perfect_outputs_cost_nothing(self):
        assert state_loss(1.0, 1, 4.0) == 0.0
        assert state_loss(0.0, 0, 4.0) == 0.0


class TestSampleBatch:
    """Tests for balanced per-state batch sampling."""

    def test_all_positives_and_ratio_negatives(self, aligned_dataset, rng):
        batch = sample_batch(aligned_dataset, 2, 2.0, rng)

        assert batch.num_positive == 15
        assert batch.num_negative == 30
        assert len(set(batch.indices.tolist())) == len(batch)

    def test_ratio_three_with_four_positives(self, rng):
        dataset = [
            AlignedSample(FeatureFrame(np.zeros(2), i), int(i >= 4), 2, "u") for i in range(30)
        ]

        batch = sample_batch(dataset, 0, 3.0, rng)

        assert (batch.num_positive, batch.num_negative) == (4, 12)

    def test_labels_match_alignment(self, aligned_dataset, rng):
        batch = sample_batch(aligned_dataset, 1, 1.0, rng)

        for values, _ in batch.pairs(aligned_dataset):
            assert values.shape == (6,)
        for index, label in zip(batch.indices, batch.labels):
            assert label == int(aligned_dataset[index].state == 1)

    def test_negatives_are_capped(self, aligned_dataset, rng, caplog):
        batch = sample_batch(aligned_dataset, 0, 5.0, rng)

        assert batch.num_negative == 45
        assert "only 45 available" in caplog.text

    def test_state_without_frames(self, aligned_dataset, rng):
        with pytest.raises(EmptyClassError):
            sample_batch(aligned_dataset, 5, 1.0, rng)


class TestOptimizers:
    def test_sgd_step(self):
        params = {"w": np.array([1.0, 2.0])}
        SgdOptimizer(0.5).step(params, {"w": np.array([2.0, -2.0])})
        np.testing.assert_allclose(params["w"], [0.0, 3.0])

    def test_adam_first_step_moves_by_learning_rate(self):
        params = {"w": np.array([1.0, 1.0])}
        AdamOptimizer(0.1).step(params, {"w": np.array([3.0, -0.5])})
        np.testing.assert_allclose(params["w"], [0.9, 1.1], atol=1e-6)


class TestTrain:
    """Tests for tail-bank training."""

    def test_zero_learning_rate_returns_input_weights(self, aligned_dataset, small_bundle):
        for optimizer in ("sgd", "adam"):
            config = TrainConfig(learning_rate=0.0, epochs=2, optimizer=optimizer)
            assert train(aligned_dataset, small_bundle, config).bundle.same_as(small_bundle)

    def test_zero_learning_rate_joint(self, aligned_dataset, small_bundle):
        config = TrainConfig(learning_rate=0.0, epochs=1, joint=True)
        assert train(aligned_dataset, small_bundle, config).bundle.same_as(small_bundle)

    def test_same_seed_same_result(self, aligned_dataset, small_bundle):
        config = TrainConfig(learning_rate=0.05, epochs=3, rng_seed=9)

        a = train(aligned_dataset, small_bundle, config)
        b = train(aligned_dataset, small_bundle, config)

        assert a.bundle.same_as(b.bundle)
        assert a.loss_trace == b.loss_trace

    def test_frozen_mode_keeps_embedding(self, aligned_dataset, small_bundle):
        result = train(aligned_dataset, small_bundle, TrainConfig(learning_rate=0.05, epochs=2))

        assert result.bundle.embedding.same_as(small_bundle.embedding)
        assert not result.bundle.tails[0].same_as(small_bundle.tails[0])

    def test_loss_goes_down(self, aligned_dataset, small_bundle):
        config = TrainConfig(learning_rate=0.05, epochs=40, batch_size=16)

        result = train(aligned_dataset, small_bundle, config)

        assert set(result.loss_trace) == {0, 1, 2, 3}
        for trace in result.loss_trace.values():
            assert len(trace) == 40
            assert trace[-1] < trace[0]

    def test_joint_mode_updates_embedding(self, aligned_dataset, small_bundle):
        config = TrainConfig(learning_rate=0.01, epochs=2, joint=True)

        result = train(aligned_dataset, small_bundle, config)

        assert not result.bundle.embedding.same_as(small_bundle.embedding)
        assert all(np.isfinite(trace[-1]) for trace in result.loss_trace.values())

    def test_missing_state_in_data(self, aligned_dataset, small_bundle):
        dataset = [sample for sample in aligned_dataset if sample.state != 3]

        with pytest.raises(EmptyClassError):
            train(dataset, small_bundle, TrainConfig(epochs=1))

    def test_wrong_frame_dim(self, small_bundle):
        dataset = [AlignedSample(FeatureFrame(np.zeros(5), 0), 0, 4)]

        with pytest.raises(ShapeError):
            train(dataset, small_bundle, TrainConfig(epochs=1))

    def test_empty_dataset(self, small_bundle):
        with pytest.raises(ContractViolationError):
            train([], small_bundle, TrainConfig(epochs=1))

    def test_group_utterances_orders_by_frame(self, aligned_dataset):
        groups = group_utterances(list(reversed(aligned_dataset)))

        assert list(groups) == ["utt2", "utt1", "utt0"]
        assert all(len(positions) == 20 for positions in groups.values())


class TestGradients:
    """Tests for analytic gradients."""

    def test_bias_gradient_at_zero_weights(self, small_bundle):
        bundle = zero_tail_bundle(small_bundle)
        sample = AlignedSample(FeatureFrame(np.ones(6), 0), 1, 4)

        _, negative = loss_gradients(bundle, sample, 0, scale=4.0)
        _, positive = loss_gradients(bundle, sample, 1, scale=4.0)

        assert negative["tail.0.0.bias"][0] == pytest.approx(0.25)
        assert positive["tail.1.0.bias"][0] == pytest.approx(-1.0)

    def test_loss_value_matches_state_loss(self, small_bundle):
        bundle = zero_tail_bundle(small_bundle)
        sample = AlignedSample(FeatureFrame(np.ones(6), 0), 2, 4)

        loss, _ = loss_gradients(bundle, sample, 2, scale=4.0)

        assert loss == pytest.approx(state_loss(0.5, 1, 4.0))

    def test_zero_weight_tail_agrees_with_finite_differences(self, small_bundle, aligned_dataset):
        bundle = zero_tail_bundle(small_bundle)
        assert gradient_check(bundle, aligned_dataset[3], 1) < 1e-4

    @pytest.mark.parametrize("state", [0, 3])
    def test_analytic_matches_finite_differences(self, small_bundle, aligned_dataset, state):
        error = gradient_check(small_bundle, aligned_dataset[7], state, epsilon=1e-5)
        assert error < 1e-3

    def test_ten_random_networks(self, make_bundle, aligned_dataset):
        errors = [
            gradient_check(
                make_bundle(seed=seed), aligned_dataset[5 * seed + 2], seed % 4, epsilon=1e-4
            )
            for seed in range(10)
        ]

        assert max(errors) <= 1e-4

    def test_epsilon_out_of_range(self, small_bundle, aligned_dataset):
        with pytest.raises(ContractViolationError):
            gradient_check(small_bundle, aligned_dataset[0], 0, epsilon=1e-2)


class TestSoftmaxHead:
    def test_cross_entropy_goes_down(self, aligned_dataset, small_bundle):
        config = TrainConfig(learning_rate=0.05, epochs=20, batch_size=16)

        bundle, trace = train_softmax_head(aligned_dataset, small_bundle, config)

        assert bundle.softmax_head is not None
        assert bundle.softmax_head.num_states == 4
        assert trace[-1] < trace[0]
