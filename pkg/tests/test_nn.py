import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gflowgnn import nn
from gflowgnn.errors import ShapeError, TrainingError, ValidationError

from gradcases import FAMILIES


@pytest.mark.parametrize("family", sorted(FAMILIES))
@pytest.mark.parametrize("seed", range(10))
def test_gradients_match_finite_differences(family, seed):
    assert FAMILIES[family](1000 + seed) < 1e-4


def test_forward_two_layer_by_hand():
    W0 = np.array([[1.0, -1.0]])
    W1 = np.array([[2.0], [3.0]])
    p = nn.DenseParams([W0, W1], [np.array([0.0, 0.5]), np.array([1.0])], ["relu", "identity"])
    out, _ = nn.forward(p, np.array([[2.0], [-1.0]]))
    # row 0: relu([2, -1.5]) = [2, 0] -> 5 ; row 1: relu([-1, 1.5]) = [0, 1.5] -> 5.5
    np.testing.assert_allclose(out, [[5.0], [5.5]])


def test_batched_propagation_matches_loop(small_graph):
    p = nn.init_dense([3, 4, 2], ["relu", "identity"], seed=0, propagate=[True, False])
    X = np.random.default_rng(0).normal(size=(3, small_graph.n, 3))
    batched, _ = nn.forward(p, X, small_graph.norm_adj)
    for k in range(3):
        single, _ = nn.forward(p, X[k], small_graph.norm_adj)
        np.testing.assert_allclose(batched[k], single, atol=1e-14)


def test_shape_errors():
    p = nn.init_dense([3, 2], ["identity"], seed=0)
    with pytest.raises(ShapeError):
        nn.forward(p, np.zeros((1, 4)))
    q = nn.init_dense([3, 2], ["identity"], seed=0, propagate=[True])
    with pytest.raises(ShapeError):
        nn.forward(q, np.zeros((2, 3)))
    with pytest.raises(ShapeError):
        nn.DenseParams([np.zeros((3, 2))], [np.zeros(3)], ["identity"])


def test_glorot_bounds_and_zero_bias():
    p = nn.init_dense([50, 30], ["identity"], seed=1)
    lim = np.sqrt(6 / 80)
    assert np.abs(p.weights[0]).max() <= lim
    assert np.abs(p.weights[0]).max() > 0.9 * lim
    assert not p.biases[0].any()


def test_softmax_stable_and_normalized():
    z = np.array([[1000.0, 1000.0], [-1000.0, 0.0]])
    s = nn.softmax(z)
    np.testing.assert_allclose(s.sum(axis=1), 1.0)
    np.testing.assert_allclose(s[0], [0.5, 0.5])
    np.testing.assert_allclose(np.exp(nn.log_softmax(z)), s)


def test_cross_entropy_value_and_bad_target():
    loss, _ = nn.softmax_cross_entropy(np.zeros((2, 4)), [0, 3])
    assert loss == pytest.approx(np.log(4))
    with pytest.raises(IndexError):
        nn.softmax_cross_entropy(np.zeros((1, 2)), [2])


def test_adam_matches_reference_recursion():
    rng = np.random.default_rng(0)
    p = nn.init_dense([3, 2], ["identity"], seed=0)
    ref = [a.copy() for a in p.arrays()]
    m = [np.zeros_like(a) for a in ref]
    v = [np.zeros_like(a) for a in ref]
    state = nn.AdamState.for_params(p)
    for t in range(1, 6):
        grads = [rng.normal(size=a.shape) for a in ref]
        nn.adam_step(p, grads, state, lr=0.1)
        for i, g in enumerate(grads):
            m[i] = 0.9 * m[i] + 0.1 * g
            v[i] = 0.999 * v[i] + 0.001 * g * g
            ref[i] = ref[i] - 0.1 * (m[i] / (1 - 0.9**t)) / (np.sqrt(v[i] / (1 - 0.999**t)) + 1e-8)
    for a, r in zip(p.arrays(), ref):
        np.testing.assert_allclose(a, r, atol=1e-14)
    assert state.t == 5


def test_adam_first_step_moves_by_lr():
    p = nn.init_dense([2, 2], ["identity"], seed=0)
    before = p.weights[0].copy()
    nn.adam_step(p, [np.full((2, 2), 3.0), np.zeros(2)], nn.AdamState.for_params(p), lr=0.01)
    np.testing.assert_allclose(before - p.weights[0], 0.01, rtol=1e-6)


def test_adam_rejects_non_finite_and_leaves_params():
    p = nn.init_dense([2, 2, 1], ["relu", "identity"], seed=0)
    before = [a.copy() for a in p.arrays()]
    grads = p.zeros_like()
    grads[2][0, 0] = np.nan
    state = nn.AdamState.for_params(p)
    with pytest.raises(TrainingError) as exc:
        nn.adam_step(p, grads, state, lr=0.1)
    assert exc.value.layer == 1
    assert state.t == 0
    for a, b in zip(p.arrays(), before):
        np.testing.assert_array_equal(a, b)


def test_relative_error():
    assert nn.relative_error(np.zeros(3), np.zeros(3)) == 0.0
    assert nn.relative_error(np.array([1.0, 0.0]), np.array([0.0, 0.0])) == 1.0


class TestCheckpoint:
    def test_round_trip_bitwise(self, tmp_path):
        p = nn.init_dense([4, 3, 2], ["relu", "identity"], seed=3)
        nn.save_checkpoint(tmp_path / "c.ckpt", p.arrays(), {"kind": "x"})
        arrays, manifest = nn.load_checkpoint(tmp_path / "c.ckpt")
        assert manifest["kind"] == "x" and manifest["n_arrays"] == 4
        for a, b in zip(arrays, p.arrays()):
            assert a.tobytes() == b.tobytes()

    def test_header_layout(self, tmp_path):
        nn.save_checkpoint(tmp_path / "c.ckpt", [np.arange(6.0).reshape(2, 3)], {})
        raw = (tmp_path / "c.ckpt").read_bytes()
        assert raw[:4] == b"GFCK"
        assert int.from_bytes(raw[4:8], "little") == 1
        assert raw[-48:] == np.arange(6.0).astype("<f8").tobytes()

    def test_bad_magic(self, tmp_path):
        (tmp_path / "c.ckpt").write_bytes(b"NOPE" + bytes(20))
        with pytest.raises(ValidationError):
            nn.load_checkpoint(tmp_path / "c.ckpt")

    def test_truncated(self, tmp_path):
        nn.save_checkpoint(tmp_path / "c.ckpt", [np.ones(4)], {})
        raw = (tmp_path / "c.ckpt").read_bytes()
        (tmp_path / "c.ckpt").write_bytes(raw + b"\0")
        with pytest.raises(ValidationError):
            nn.load_checkpoint(tmp_path / "c.ckpt")


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=2, max_size=8))
def test_log_softmax_shift_invariant(xs):
    z = np.array([xs])
    np.testing.assert_allclose(nn.log_softmax(z), nn.log_softmax(z + 7.5), atol=1e-10)
    assert nn.softmax(z).sum() == pytest.approx(1.0)
