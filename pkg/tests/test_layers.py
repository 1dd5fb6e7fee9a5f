"""Encoder building blocks: shapes, information flow, gradient reach."""

import numpy as np
import pytest

from argmine import autodiff as ad
from argmine.autodiff import ParameterStore, ShapeMismatchError, Tensor
from argmine.layers import (
    FeedForwardEncoder,
    GruEncoder,
    Linear,
    Mlp,
    TransformerEncoder,
    build_encoder,
)

RNG = np.random.default_rng(7)


def fresh_store(seed=0):
    return ParameterStore(np.random.default_rng(seed))


class TestLinearAndMlp:
    def test_linear_is_affine(self):
        store = fresh_store()
        lin = Linear(store, "lin", 3, 2)
        x = np.array([[1.0, 0.0, -2.0]])
        expected = x @ lin.weight.data + lin.bias.data
        np.testing.assert_allclose(lin(Tensor(x)).data, expected)

    def test_mlp_layer_count_and_shape(self):
        store = fresh_store()
        mlp = Mlp(store, "m", [5, 8, 8, 2])
        assert len(mlp.layers) == 3
        out = mlp(Tensor(RNG.normal(size=(4, 5))))
        assert out.shape == (4, 2)

    def test_mlp_no_activation_after_last(self):
        # A single-layer Mlp must be able to go negative.
        store = fresh_store()
        mlp = Mlp(store, "m", [2, 1])
        mlp.layers[0].weight.data[:] = [[-1.0], [-1.0]]
        out = mlp(Tensor(np.array([[1.0, 1.0]])))
        assert out.data[0, 0] < 0

    def test_mlp_hidden_relu(self):
        store = fresh_store()
        mlp = Mlp(store, "m", [1, 1, 1])
        mlp.layers[0].weight.data[:] = [[1.0]]
        mlp.layers[1].weight.data[:] = [[1.0]]
        # negative input is cut by the hidden ReLU, positive passes through
        assert mlp(Tensor(np.array([[-5.0]]))).data[0, 0] == 0.0
        assert mlp(Tensor(np.array([[5.0]]))).data[0, 0] == 5.0


ENCODERS = ["mlp", "bigru", "transformer"]


class TestEncoderContracts:
    @pytest.mark.parametrize("kind", ENCODERS)
    def test_shape_preserved(self, kind):
        store = fresh_store()
        enc = build_encoder(store, "enc", kind, d=16, layers=2, heads=4)
        for n in (1, 7):
            out = enc(Tensor(RNG.normal(size=(n, 16))))
            assert out.shape == (n, 16)

    @pytest.mark.parametrize("kind", ENCODERS)
    def test_eval_mode_deterministic(self, kind):
        store = fresh_store()
        enc = build_encoder(store, "enc", kind, d=8, layers=2, heads=2)
        x = RNG.normal(size=(5, 8))
        a = enc(Tensor(x.copy())).data
        b = enc(Tensor(x.copy())).data
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("kind", ENCODERS)
    def test_every_parameter_reachable(self, kind):
        store = fresh_store()
        enc = build_encoder(store, "enc", kind, d=8, layers=2, heads=2)
        out = enc(Tensor(RNG.normal(size=(4, 8))))
        ad.tensor_sum(ad.mul(out, out)).backward()
        dead = [name for name, t in store.items() if t.grad is None]
        assert dead == []

    @pytest.mark.parametrize("kind", ENCODERS)
    def test_gradients_match_finite_differences(self, kind):
        store = fresh_store(3)
        enc = build_encoder(store, "enc", kind, d=4, layers=1, heads=2)
        x_data = RNG.normal(size=(3, 4))
        weights = RNG.normal(size=(3, 4))
        target = store.names()[0]
        tensor = store[target]

        def build():
            return ad.tensor_sum(ad.mul(enc(Tensor(x_data)), weights))

        loss = build()
        loss.backward(free_graph=False)
        numeric = ad.numerical_gradient(build, tensor)
        err = ad.max_relative_error(tensor.grad, numeric)
        assert err < 1e-6, f"{kind}/{target}: {err:.2e}"

    @pytest.mark.parametrize("kind", ENCODERS)
    def test_train_dropout_varies_with_rng(self, kind):
        store = fresh_store()
        enc = build_encoder(store, "enc", kind, d=8, layers=2, heads=2)
        x = RNG.normal(size=(6, 8))
        a = enc(Tensor(x), train=True, rng=np.random.default_rng(1), dropout=0.5).data
        b = enc(Tensor(x), train=True, rng=np.random.default_rng(2), dropout=0.5).data
        assert not np.array_equal(a, b)


class TestFeedForwardLocality:
    def test_rows_are_independent(self):
        store = fresh_store()
        enc = FeedForwardEncoder(store, "enc", d=8, layers=3)
        x = RNG.normal(size=(5, 8))
        base = enc(Tensor(x)).data
        perturbed = x.copy()
        perturbed[2] += 1.0
        out = enc(Tensor(perturbed)).data
        # only row 2 may move; a positionwise encoder has no cross-talk
        np.testing.assert_array_equal(out[[0, 1, 3, 4]], base[[0, 1, 3, 4]])
        assert not np.array_equal(out[2], base[2])


class TestGru:
    def test_zero_weights_zero_output(self):
        # all-zero gates: update gate sigmoid(0)=0.5, candidate tanh(0)=0,
        # so the state update 0.5*0 + 0.5*0 never leaves zero.
        store = fresh_store()
        enc = GruEncoder(store, "enc", d=4, layers=1)
        for _, t in store.items():
            t.data[:] = 0.0
        out = enc(Tensor(RNG.normal(size=(3, 4))))
        np.testing.assert_array_equal(out.data, np.zeros((3, 4)))

    def test_information_flows_both_directions(self):
        store = fresh_store(11)
        enc = GruEncoder(store, "enc", d=6, layers=1)
        x = RNG.normal(size=(5, 6))
        base = enc(Tensor(x)).data
        bumped = x.copy()
        bumped[2] += 2.0
        out = enc(Tensor(bumped)).data
        # bidirectional recurrence: positions before and after 2 both shift
        assert not np.array_equal(out[0], base[0])
        assert not np.array_equal(out[4], base[4])

    def test_full_size_stack_shape(self):
        store = fresh_store()
        enc = GruEncoder(store, "enc", d=384, layers=3)
        out = enc(Tensor(RNG.normal(size=(7, 384))))
        assert out.shape == (7, 384)


class TestTransformer:
    def test_width_must_divide_heads(self):
        with pytest.raises(ShapeMismatchError, match="heads"):
            TransformerEncoder(fresh_store(), "enc", d=10, layers=1, heads=4)

    def test_single_position_attention_is_identity_weight(self):
        # with n=1 the softmax over one key is exactly 1.0 regardless of
        # scores, so the attended value equals the value projection itself.
        store = fresh_store(5)
        enc = TransformerEncoder(store, "enc", d=8, layers=1, heads=2)
        x = Tensor(RNG.normal(size=(1, 8)))
        out = enc(x)
        assert out.shape == (1, 8)
        assert np.isfinite(out.data).all()

    def test_context_changes_output(self):
        store = fresh_store(5)
        enc = TransformerEncoder(store, "enc", d=8, layers=1, heads=2)
        x = RNG.normal(size=(4, 8))
        base = enc(Tensor(x)).data
        bumped = x.copy()
        bumped[3] += 1.0
        out = enc(Tensor(bumped)).data
        assert not np.array_equal(out[0], base[0])


class TestBuildEncoder:
    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown encoder"):
            build_encoder(fresh_store(), "enc", "lstm", d=8, layers=1, heads=2)

    def test_kinds_produce_distinct_parameter_sets(self):
        names = {}
        for kind in ENCODERS:
            store = fresh_store()
            build_encoder(store, "enc", kind, d=8, layers=2, heads=2)
            names[kind] = set(store.names())
        assert names["mlp"] != names["bigru"] != names["transformer"]
