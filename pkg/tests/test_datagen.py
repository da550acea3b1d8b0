import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from circuitlink.datagen import DEFAULT_WEIGHTS, GenConfig, generate_circuit, generate_dataset
from circuitlink.graph import build_port_graph, graph_stats
from circuitlink.netlist import emit_spice, validate


def test_two_resistors():
    n = generate_circuit(GenConfig(n_components=(2, 2), class_weights={"Res": 1.0}, extra_net_prob=0.0))
    nets = [set(c.port_bindings.values()) for c in n.components]
    assert len(nets[0] & nets[1]) == 1
    g = build_port_graph(n)
    assert (g.num_nodes, g.num_edges) == (4, 3)


def test_pmos_only():
    n = generate_circuit(GenConfig(class_weights={"PMOS": 1.0}, seed=3))
    assert all(len(c.port_bindings) == 3 for c in n.components)
    assert build_port_graph(n).num_nodes == 3 * len(n.components)


def test_same_seed_same_text():
    cfg = GenConfig(seed=17)
    assert emit_spice(generate_circuit(cfg)) == emit_spice(generate_circuit(cfg))


def test_count_one():
    assert len(generate_dataset(GenConfig(), 1)) == 1
    with pytest.raises(ValueError):
        generate_dataset(GenConfig(), 0)


def test_config_validation():
    with pytest.raises(ValueError):
        GenConfig(n_components=(1, 3))
    with pytest.raises(ValueError):
        GenConfig(class_weights={"Res": 0.0})
    with pytest.raises(ValueError):
        GenConfig(class_weights={"Resistor": 1.0})
    with pytest.raises(ValueError):
        GenConfig(extra_net_prob=1.5)


def test_default_dataset():
    data = generate_dataset(GenConfig(seed=42), 200)
    assert all(validate(n).ok for n in data)
    graphs = [build_port_graph(n) for n in data]
    assert all(nx.is_connected(g.to_networkx()) for g in graphs)
    stats = graph_stats(graphs)
    assert 10 <= stats["avg_nodes"] <= 18
    assert stats["class_count"] == 10


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 100_000), st.floats(0, 1))
def test_circuits_valid_and_connected(seed, p):
    n = generate_circuit(GenConfig(seed=seed, extra_net_prob=p))
    assert not validate(n).errors
    assert nx.is_connected(build_port_graph(n).to_networkx())


def test_class_histogram_follows_weights():
    data = generate_dataset(GenConfig(seed=1), 2000)
    labels = list(DEFAULT_WEIGHTS)
    counts = np.array([sum(c.ctype == lab for n in data for c in n.components) for lab in labels])
    w = np.array([DEFAULT_WEIGHTS[lab] for lab in labels])
    assert chisquare(counts, counts.sum() * w / w.sum()).pvalue > 0.001
