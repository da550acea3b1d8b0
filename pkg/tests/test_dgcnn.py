import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circuitlink import dgcnn
from circuitlink.graph import stack_graphs
from circuitlink.subgraph import ExtractConfig, extract_enclosing_subgraph
from oracles import (
    finite_difference_grads,
    port_graph_from_nx,
    random_connected_graph,
    relative_error,
    toy_subgraphs,
)


def random_sub(seed, n=10, h=3):
    rng = np.random.default_rng(seed)
    s = stack_graphs([port_graph_from_nx(random_connected_graph(rng, n, 0.25), rng)])
    return extract_enclosing_subgraph(s, 0, 1, ExtractConfig(h=h))


def single_node_sub():
    sub = random_sub(0)
    return (np.zeros((1, 1)), sub.features[:1])


def test_zero_weights_give_one_half():
    sub = random_sub(1)
    m = dgcnn.zero_params(sub.features.shape[1], 10)
    assert dgcnn.forward(m, sub) == 0.5


def test_single_node_is_padded():
    adj, feats = single_node_sub()
    m = dgcnn.init_params(feats.shape[1], 10, seed=0)
    p = dgcnn.forward(m, (adj, feats))
    assert 0.0 < p < 1.0


def test_forward_is_deterministic():
    sub = random_sub(2)
    m = dgcnn.init_params(sub.features.shape[1], 12, seed=5)
    assert dgcnn.forward(m, sub) == dgcnn.forward(m, sub)


def test_width_mismatch():
    sub = random_sub(2)
    m = dgcnn.init_params(sub.features.shape[1] + 1, 10)
    with pytest.raises(ValueError):
        dgcnn.forward(m, sub)


def test_bce_values():
    assert dgcnn.loss_bce(0.5, 1) == pytest.approx(0.693147, abs=1e-6)
    assert dgcnn.loss_bce(0.5, 0) == pytest.approx(math.log(2), rel=1e-12)
    assert dgcnn.loss_bce(1 - 1e-7, 1) == pytest.approx(1e-7, rel=1e-3)
    assert math.isfinite(dgcnn.loss_bce(1.0, 0))


def test_zero_weight_gradients_cancel():
    # at p = 0.5 the output-bias gradients for y=1 and y=0 are -0.5 and +0.5
    sub = random_sub(3)
    m = dgcnn.zero_params(sub.features.shape[1], 10)
    _, g1 = dgcnn.backward(m, sub, 1)
    _, g0 = dgcnn.backward(m, sub, 0)
    assert g1["out.b"][0] == pytest.approx(-0.5)
    for name in g1:
        assert np.allclose((g1[name] + g0[name]) / 2, 0.0)


def test_sortpool_backward_drops_truncated_rows():
    order = np.array([3, 0])
    d = np.arange(6, dtype=float).reshape(2, 3)
    back = dgcnn.sortpool_backward(d, order, 5)
    assert back.shape == (5, 3)
    assert np.array_equal(back[3], d[0]) and np.array_equal(back[0], d[1])
    assert not back[[1, 2, 4]].any()


def test_propagation_rows_sum_to_one():
    sub = random_sub(4)
    prop = dgcnn.propagation_matrix(sub.adjacency)
    assert np.allclose(prop.sum(axis=1), 1.0)


def test_sortpool_size():
    assert dgcnn.sortpool_size([3, 4, 5]) == 10
    assert dgcnn.sortpool_size(list(range(1, 101))) == 60


def test_parameter_shapes():
    shapes = dgcnn.param_shapes(35, 10)
    assert shapes["conv1.w"] == (97, 16)
    assert shapes["conv2.w"] == (5, 16, 32)
    assert shapes["dense.w"] == (32, 128)
    with pytest.raises(ValueError):
        dgcnn.init_params(35, 9)


@pytest.mark.parametrize("seed", [0, 7])
def test_gradient_matches_finite_differences(seed):
    sub = random_sub(seed)
    m = dgcnn.init_params(sub.features.shape[1], 10, seed=seed)
    _, grads = dgcnn.backward(m, sub, seed % 2)
    fd, _, _ = finite_difference_grads(m, sub, seed % 2, None)
    for name in grads:
        assert relative_error(grads[name], fd[name]) < 1e-3, name


def test_dropout_gradient():
    sub = random_sub(9)
    m = dgcnn.init_params(sub.features.shape[1], 10, seed=9)
    mask = dgcnn.dropout_mask(np.random.default_rng(0), 0.5)
    _, grads = dgcnn.backward(m, sub, 1, mask)
    fd, _, _ = finite_difference_grads(m, sub, 1, mask)
    assert relative_error(grads["dense.w"], fd["dense.w"]) < 1e-3


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_forward_ignores_node_order(seed):
    sub = random_sub(seed)
    rng = np.random.default_rng(seed)
    m = dgcnn.init_params(sub.features.shape[1], 10, seed=seed)
    perm = rng.permutation(sub.num_nodes)
    adj = sub.adjacency[np.ix_(perm, perm)]
    assert dgcnn.forward(m, (adj, sub.features[perm])) == pytest.approx(dgcnn.forward(m, sub), abs=1e-12)


def test_early_stopping_trace():
    stop = dgcnn.EarlyStopping()
    fired = [stop.step(a) for a in [0.4, 0.6, 0.6, 0.6, 0.6]]
    assert fired == [False, False, False, False, True]


def test_early_stopping_waits_for_activation():
    stop = dgcnn.EarlyStopping()
    assert not any(stop.step(a) for a in [0.3, 0.4, 0.4, 0.4, 0.45, 0.45, 0.45, 0.45])


def test_zero_epochs():
    subs = toy_subgraphs(4, 0)
    m, history = dgcnn.train(subs, subs, dgcnn.TrainConfig(max_epochs=0))
    assert history == []
    assert m.all_finite()


def test_config_validation():
    with pytest.raises(ValueError):
        dgcnn.TrainConfig(learning_rate=0)
    with pytest.raises(ValueError):
        dgcnn.TrainConfig(batch_size=8)
    with pytest.raises(ValueError):
        dgcnn.TrainConfig.profile("nope")
    assert dgcnn.TrainConfig.profile("image2net").learning_rate == 6e-8


def test_learns_separable_toy_set():
    train, val = toy_subgraphs(60, 0), toy_subgraphs(30, 1)
    cfg = dgcnn.TrainConfig(learning_rate=1e-3, max_epochs=15, seed=0)
    m, history = dgcnn.train(train, val, cfg)
    assert len(history) <= 15
    labels = np.array([s.label for s in val])
    assert np.mean((dgcnn.predict(m, val) >= 0.5) == labels) > 0.95
    again, history2 = dgcnn.train(train, val, cfg)
    assert history == history2
    assert all(np.array_equal(m.arrays[k], again.arrays[k]) for k in m.arrays)


def test_checkpoint_round_trip(tmp_path):
    m = dgcnn.init_params(40, 12, seed=3)
    path = tmp_path / "model.json"
    dgcnn.save_checkpoint(path, m, {"note": "x"})
    back, meta = dgcnn.load_checkpoint(path)
    assert meta == {"note": "x"}
    assert all(np.array_equal(m.arrays[k], back.arrays[k]) for k in m.arrays)
    doc = dgcnn.to_checkpoint(m)
    doc["shapes"]["out.w"] = [3, 1]
    with pytest.raises(ValueError):
        dgcnn.from_checkpoint(doc)
