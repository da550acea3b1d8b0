import json

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circuitlink.datagen import GenConfig, generate_circuit
from circuitlink.graph import (
    ClassVocabulary,
    build_port_graph,
    dump_jsonl,
    graph_fingerprint,
    graph_stats,
    stack_graphs,
)
from circuitlink.netlist import CLASS_PORTS, parse_spice
from circuitlink.netlist.types import Component, Netlist


def res(name, a, b):
    return Component(name, "Res", {"Pos": a, "Neg": b}, {})


def test_single_resistor():
    g = build_port_graph(Netlist("", [res("R1", "n1", "n2")]))
    assert (g.num_nodes, g.num_edges) == (2, 1)


def test_series_resistors():
    g = build_port_graph(Netlist("", [res("R1", "n1", "n2"), res("R2", "n2", "n3")]))
    assert (g.num_nodes, g.num_edges) == (4, 3)


def test_example1_graph(deck):
    g = build_port_graph(parse_spice(deck("example1.cir")))
    assert (g.num_nodes, g.num_edges) == (6, 5)
    # C1.Pos-L1.Neg and L1.Pos-R1.Pos are the only net edges
    by_name = {(n.component_id, n.port_name): n.node_id for n in g.nodes}
    pair = lambda a, b: tuple(sorted((by_name[a], by_name[b])))
    assert pair(("C1", "Pos"), ("L1", "Neg")) in g.edges
    assert pair(("L1", "Pos"), ("R1", "Pos")) in g.edges


def test_star_intra_topology():
    n = Netlist("", [Component("U1", "Dido_amp", {"InN": "a", "InP": "b", "OutN": "c", "OutP": "d"}, {})])
    assert build_port_graph(n, intra="clique").num_edges == 6
    assert build_port_graph(n, intra="star").num_edges == 3


def test_vocabulary():
    v = ClassVocabulary(("Res", "Cap"))
    assert v.k == 2 and v.index("Cap") == 1
    with pytest.raises(ValueError):
        v.index("Ind")
    with pytest.raises(ValueError):
        ClassVocabulary(("Res", "Res"))
    with pytest.raises(ValueError):
        build_port_graph(Netlist("", [Component("L1", "Ind", {"Pos": "a", "Neg": "b"}, {})]), v)


def test_type_codes_follow_class():
    v = ClassVocabulary(("Res", "Cap"))
    n = Netlist("", [res("R1", "a", "b"), Component("C1", "Cap", {"Pos": "b", "Neg": "c"}, {})])
    assert build_port_graph(n, v).type_codes.tolist() == [0, 0, 1, 1]


def test_stack_single_is_identity():
    g = build_port_graph(Netlist("", [res("R1", "n1", "n2"), res("R2", "n2", "n3")]))
    s = stack_graphs([g])
    assert s.member_offsets == ((0, 0, 4),)
    assert s.edges() == g.sorted_edges()
    assert np.array_equal(s.type_codes, g.type_codes)


def test_stack_is_block_diagonal(deck):
    a = build_port_graph(parse_spice(deck("example1.cir")))
    b = build_port_graph(Netlist("", [res("R1", "n1", "n2"), res("R2", "n2", "n3")]))
    s = stack_graphs([a, b])
    assert s.num_nodes == 10 and s.num_edges == 8
    assert not any(i < 6 <= j for i, j in s.edges())
    assert s.is_block_diagonal()
    assert s.type_features.shape == (10, a.vocab.k)
    assert np.all(s.type_features.sum(axis=1) == 1)
    with pytest.raises(ValueError):
        s.type_codes[0] = 1


def test_stack_rejects_empty_and_mixed():
    with pytest.raises(ValueError):
        stack_graphs([])
    n = Netlist("", [res("R1", "a", "b")])
    with pytest.raises(ValueError):
        stack_graphs([build_port_graph(n), build_port_graph(n, ClassVocabulary(("Res",)))])


def test_stats(deck):
    a = build_port_graph(parse_spice(deck("example1.cir")))
    b = build_port_graph(Netlist("", [res("R1", "n1", "n2"), res("R2", "n2", "n3")]))
    s1 = graph_stats([a])
    assert (s1["avg_nodes"], s1["avg_edges"]) == (6.0, 5.0)
    s2 = graph_stats([a, b])
    assert (s2["avg_nodes"], s2["avg_edges"]) == (5.0, 4.0)


def test_dump_format(deck):
    g = build_port_graph(parse_spice(deck("example1.cir")))
    recs = [json.loads(line) for line in dump_jsonl(g).splitlines()]
    assert [r["kind"] for r in recs] == ["node"] * 6 + ["edge"] * 5
    assert recs[0] == {"kind": "node", "id": 0, "component": "C1", "port": "Pos", "type": g.vocab.index("Cap"), "label": "Cap"}


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_node_count_law_and_symmetry(seed):
    n = generate_circuit(GenConfig(seed=seed))
    g = build_port_graph(n)
    assert g.num_nodes == sum(len(CLASS_PORTS[c.ctype]) for c in n.components)
    assert all(i < j for i, j in g.edges)
    a = g.adjacency()
    assert np.array_equal(a, a.T) and not a.diagonal().any()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.randoms(use_true_random=False))
def test_component_order_is_irrelevant(seed, rnd):
    n = generate_circuit(GenConfig(n_components=(2, 4), seed=seed))
    comps = list(n.components)
    rnd.shuffle(comps)
    g1 = build_port_graph(n)
    g2 = build_port_graph(Netlist(n.title, comps))
    assert g1.num_nodes <= 12
    assert graph_fingerprint(g1) == graph_fingerprint(g2)
    match = lambda a, b: a["type_code"] == b["type_code"]
    assert nx.is_isomorphic(g1.to_networkx(), g2.to_networkx(), node_match=match)
