"""Ansatz construction, connectivity, routing, and circuit serialization."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import oracle_unitary
from qscore.circuit import (
    CNOT,
    RX,
    RZ,
    SWAP,
    Circuit,
    GateOp,
    H,
    QaoaParams,
    all_to_all,
    build_qaoa_circuit,
    circuit_from_dict,
    circuit_to_dict,
    coupling_list,
    grid,
    grid_for,
    route,
)
from qscore.errors import RoutingError
from qscore.graphs import Graph, generate_erdos_renyi
from qscore.seeding import derive_seed
from qscore.sim import circuit_unitary

TRIANGLE = Graph(3, ((0, 1), (1, 2), (0, 2)))


# ---------------------------------------------------------------------------
# gates and circuits
# ---------------------------------------------------------------------------


def test_gate_validation():
    with pytest.raises(ValueError, match="unknown gate"):
        GateOp("cz", (0, 1))
    with pytest.raises(ValueError, match="takes 2"):
        GateOp("cnot", (0,))
    with pytest.raises(ValueError, match="takes 1"):
        GateOp("h", (0, 1))
    with pytest.raises(ValueError, match="distinct"):
        GateOp("swap", (1, 1))
    with pytest.raises(ValueError, match="finite angle"):
        GateOp("rx", (0,), None)
    with pytest.raises(ValueError, match="finite angle"):
        GateOp("rz", (0,), math.inf)
    with pytest.raises(ValueError, match="no angle"):
        GateOp("cnot", (0, 1), 0.5)


def test_circuit_validates_register():
    with pytest.raises(ValueError, match="outside register"):
        Circuit(2, (CNOT(0, 2),))
    with pytest.raises(ValueError, match="at least one"):
        Circuit(0, ())


def test_circuit_validates_permutation():
    with pytest.raises(ValueError, match="distinct wire"):
        Circuit(3, (), final_permutation=(0, 0))
    with pytest.raises(ValueError, match="out of range"):
        Circuit(3, (), final_permutation=(0, 3))
    c = Circuit(3, (), final_permutation=(2, 0))
    assert c.num_measured == 2
    assert Circuit(3, ()).num_measured == 3


def test_qaoa_params_round_trip():
    p = QaoaParams((0.1, 0.2), (0.3, 0.4))
    assert p.depth == 2
    assert QaoaParams.from_vector(p.to_vector()) == p
    with pytest.raises(ValueError, match="even length"):
        QaoaParams.from_vector([0.1, 0.2, 0.3])
    with pytest.raises(ValueError, match="equal length"):
        QaoaParams((0.1,), (0.2, 0.3))
    with pytest.raises(ValueError, match="equal length"):
        QaoaParams((), ())
    with pytest.raises(ValueError, match="finite"):
        QaoaParams((math.nan,), (0.0,))


def test_ansatz_gate_census():
    g = generate_erdos_renyi(8, 0.5, 11)
    for depth in (1, 2, 3):
        params = QaoaParams((0.3,) * depth, (0.7,) * depth)
        c = build_qaoa_circuit(g, params)
        kinds = [op.kind for op in c.ops]
        assert len(kinds) == g.n + depth * (3 * g.num_edges + g.n)
        assert kinds[: g.n] == ["h"] * g.n
        assert kinds.count("cnot") == 2 * depth * g.num_edges
        assert kinds.count("rz") == depth * g.num_edges
        assert kinds.count("rx") == depth * g.n
        assert c.metadata["depth"] == depth


def test_ansatz_rz_angle_is_gamma_rx_angle_is_beta():
    c = build_qaoa_circuit(TRIANGLE, QaoaParams((0.25, 0.5), (1.0, 2.0)))
    rz = [op.angle for op in c.ops if op.kind == "rz"]
    rx = [op.angle for op in c.ops if op.kind == "rx"]
    assert rz == [0.25] * 3 + [0.5] * 3
    assert rx == [1.0] * 3 + [2.0] * 3


def test_ansatz_matches_independent_dense_construction():
    g = generate_erdos_renyi(4, 0.6, 5)
    c = build_qaoa_circuit(g, QaoaParams((0.37,), (1.21,)))
    np.testing.assert_allclose(circuit_unitary(c), oracle_unitary(c), atol=1e-12)


def test_ansatz_zero_angles_is_uniform():
    c = build_qaoa_circuit(TRIANGLE, QaoaParams((0.0,), (0.0,)))
    u = circuit_unitary(c)
    np.testing.assert_allclose(np.abs(u[:, 0]) ** 2, np.full(8, 1 / 8), atol=1e-12)


# ---------------------------------------------------------------------------
# connectivity
# ---------------------------------------------------------------------------


def test_grid_shapes():
    g = grid(2, 3)
    assert g.num_wires(5) == 6
    assert set(g.coupled_pairs()) == {(0, 1), (1, 2), (3, 4), (4, 5), (0, 3), (1, 4), (2, 5)}
    with pytest.raises(RoutingError, match="wires"):
        g.num_wires(7)
    with pytest.raises(ValueError):
        grid(0, 3)


def test_grid_for_squarest():
    assert grid_for(1) == grid(1, 1)
    assert grid_for(2) == grid(2, 1)
    assert grid_for(4) == grid(2, 2)
    assert grid_for(8) == grid(3, 3)
    assert grid_for(9) == grid(3, 3)
    assert grid_for(11) == grid(4, 3)
    for n in range(1, 30):
        conn = grid_for(n)
        assert conn.rows * conn.cols >= n


def test_coupling_list_validation():
    c = coupling_list([(1, 0), (1, 2)])
    assert c.coupled_pairs() == ((0, 1), (1, 2))
    assert c.num_wires(3) == 3
    with pytest.raises(ValueError):
        coupling_list([])
    with pytest.raises(ValueError):
        coupling_list([(2, 2)])


def test_labels():
    assert all_to_all().label() == "all-to-all"
    assert grid(3, 4).label() == "grid(3x4)"
    assert coupling_list([(0, 1)]).label() == "coupling(1 pairs)"


# ---------------------------------------------------------------------------
# routing
# ---------------------------------------------------------------------------


def _assert_respects_coupling(c: Circuit, conn) -> None:
    allowed = {frozenset(p) for p in conn.coupled_pairs()}
    for op in c.ops:
        if len(op.qubits) == 2:
            assert frozenset(op.qubits) in allowed, f"{op} not coupled"


def test_route_all_to_all_is_identity():
    c = build_qaoa_circuit(TRIANGLE, QaoaParams((0.3,), (0.5,)))
    assert route(c, all_to_all()) is c


def test_route_inserts_only_swaps_and_respects_coupling():
    g = generate_erdos_renyi(6, 0.7, 3)
    c = build_qaoa_circuit(g, QaoaParams((0.3,), (0.5,)))
    conn = grid_for(6)
    r = route(c, conn)
    _assert_respects_coupling(r, conn)
    non_swap = [op for op in r.ops if op.kind != "swap"]
    assert [(op.kind, op.angle) for op in non_swap] == [(op.kind, op.angle) for op in c.ops]
    assert r.metadata["connectivity"] == conn.label()


def test_route_permutation_tracks_logical_positions():
    g = generate_erdos_renyi(5, 0.8, 9)
    c = build_qaoa_circuit(g, QaoaParams((0.3,), (0.5,)))
    r = route(c, grid_for(5))
    perm = r.final_permutation
    assert perm is not None
    assert len(perm) == 5
    assert len(set(perm)) == 5
    # replay the swap trace independently: wire_of starts as identity
    wire_of = list(range(r.num_qubits))
    for op in r.ops:
        if op.kind == "swap":
            a, b = op.qubits
            for l, w in enumerate(wire_of):
                if w == a:
                    wire_of[l] = b
                elif w == b:
                    wire_of[l] = a
    assert tuple(wire_of[:5]) == perm


def test_route_line_topology_distant_edge():
    # Edge (0, 3) on a 1x4 line needs swaps to meet.
    c = Circuit(4, (CNOT(0, 3),))
    r = route(c, grid(1, 4))
    _assert_respects_coupling(r, grid(1, 4))
    assert any(op.kind == "swap" for op in r.ops)


def test_route_rejects_double_routing():
    c = build_qaoa_circuit(TRIANGLE, QaoaParams((0.3,), (0.5,)))
    r = route(c, grid_for(3))
    with pytest.raises(ValueError, match="already routed"):
        route(r, grid_for(3))


def test_route_rejects_disconnected_coupling():
    c = Circuit(4, (CNOT(0, 3),))
    with pytest.raises(RoutingError, match="disconnected"):
        route(c, coupling_list([(0, 1), (2, 3)]))


def test_route_equivalent_distribution_small():
    # Routed and unrouted ansatz must induce the same logical distribution.
    g = generate_erdos_renyi(5, 0.6, 21)
    c = build_qaoa_circuit(g, QaoaParams((0.45,), (1.1,)))
    r = route(c, grid(1, 5))
    psi = circuit_unitary(c)[:, 0]
    phi = circuit_unitary(r)[:, 0]
    probs_logical = np.abs(psi) ** 2
    # project wire probabilities onto logical bit order via the permutation
    projected = np.zeros_like(probs_logical)
    perm = r.final_permutation
    for idx, p in enumerate(np.abs(phi) ** 2):
        logical = sum(((idx >> w) & 1) << l for l, w in enumerate(perm))
        projected[logical] += p
    np.testing.assert_allclose(projected, probs_logical, atol=1e-12)


@given(st.integers(0, 10**6), st.integers(4, 7))
def test_route_grid_always_legal(seed, n):
    g = generate_erdos_renyi(n, 0.6, seed)
    c = build_qaoa_circuit(g, QaoaParams((0.3,), (0.5,)))
    conn = grid_for(n)
    r = route(c, conn)
    _assert_respects_coupling(r, conn)
    assert sorted(r.final_permutation) == sorted(set(r.final_permutation))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def test_circuit_dict_round_trip():
    g = generate_erdos_renyi(4, 0.7, 2)
    c = build_qaoa_circuit(g, QaoaParams((0.3,), (0.5,)))
    doc = circuit_to_dict(c)
    assert doc["num_qubits"] == 4
    assert doc["final_permutation"] == [0, 1, 2, 3]
    back = circuit_from_dict(doc)
    assert back.num_qubits == c.num_qubits
    assert back.ops == c.ops
    assert back.final_permutation is None  # identity collapses to unrouted


def test_circuit_dict_round_trip_routed():
    g = generate_erdos_renyi(5, 0.8, 4)
    c = route(build_qaoa_circuit(g, QaoaParams((0.3,), (0.5,))), grid(1, 5))
    back = circuit_from_dict(circuit_to_dict(c))
    assert back.ops == c.ops
    assert back.final_permutation == c.final_permutation


def test_circuit_from_dict_rejects_malformed():
    good = circuit_to_dict(Circuit(1, (H(0),)))
    for breakage in (
        lambda d: d.pop("num_qubits"),
        lambda d: d.pop("ops"),
        lambda d: d["ops"].append({"kind": "h"}),
        lambda d: d.__setitem__("final_permutation", "xy"),
    ):
        doc = {"num_qubits": good["num_qubits"],
               "ops": [dict(o) for o in good["ops"]],
               "final_permutation": list(good["final_permutation"])}
        breakage(doc)
        with pytest.raises(ValueError, match="malformed circuit"):
            circuit_from_dict(doc)


def test_gate_helpers():
    assert H(2) == GateOp("h", (2,))
    assert RX(0.5, 1) == GateOp("rx", (1,), 0.5)
    assert RZ(0.25, 0) == GateOp("rz", (0,), 0.25)
    assert CNOT(1, 2) == GateOp("cnot", (1, 2))
    assert SWAP(0, 2) == GateOp("swap", (0, 2))
