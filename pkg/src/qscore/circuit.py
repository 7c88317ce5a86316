"""QAOA circuit construction and routing onto constrained connectivity.

Gate set: {h, rx, rz, cnot, swap}. The ansatz for a graph G and angles
(γ_i, β_i) is an H wall followed, per layer, by the cost block (for every
edge (a, b) in lexicographic order: cnot(a,b), rz(γ_i) on b, cnot(a,b), which
realizes exp(−i·(γ_i/2)·Z_a Z_b) up to global phase) and then an rx(β_i)
wall. The cost Hamiltonian's constant −|E|/2 is tracked classically, never
as gates.

Routing inserts swaps so every 2-qubit gate acts on a coupled wire pair. The
routed circuit is equivalent to the input up to the final logical-to-wire
permutation, which is recorded on the circuit and must be applied when
decoding measured bitstrings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import RoutingError
from .graphs import Graph

GATE_KINDS = ("h", "rx", "rz", "cnot", "swap")
_PARAMETERIZED = ("rx", "rz")


@dataclass(frozen=True)
class GateOp:
    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        expected_arity = 2 if self.kind in ("cnot", "swap") else 1
        if len(self.qubits) != expected_arity:
            raise ValueError(f"{self.kind} takes {expected_arity} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"{self.kind} qubits must be distinct, got {self.qubits}")
        if self.kind in _PARAMETERIZED:
            if self.angle is None or not math.isfinite(self.angle):
                raise ValueError(f"{self.kind} needs a finite angle, got {self.angle}")
        elif self.angle is not None:
            raise ValueError(f"{self.kind} takes no angle")


def H(q: int) -> GateOp:
    return GateOp("h", (q,))


def RX(theta: float, q: int) -> GateOp:
    return GateOp("rx", (q,), theta)


def RZ(theta: float, q: int) -> GateOp:
    return GateOp("rz", (q,), theta)


def CNOT(control: int, target: int) -> GateOp:
    return GateOp("cnot", (control, target))


def SWAP(a: int, b: int) -> GateOp:
    return GateOp("swap", (a, b))


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list on a fixed register; immutable after construction.

    `final_permutation` is None for unrouted circuits. After routing it maps
    logical qubit l to the wire holding l at the end of the circuit, so
    logical bit l of a measurement is wire bit final_permutation[l].
    """

    num_qubits: int
    ops: tuple[GateOp, ...]
    metadata: dict = field(default_factory=dict)
    final_permutation: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.num_qubits < 1:
            raise ValueError("register must hold at least one qubit")
        object.__setattr__(self, "ops", tuple(self.ops))
        for op in self.ops:
            if any(not 0 <= q < self.num_qubits for q in op.qubits):
                raise ValueError(f"{op} outside register of size {self.num_qubits}")
        perm = self.final_permutation
        if perm is not None:
            perm = tuple(perm)
            object.__setattr__(self, "final_permutation", perm)
            if len(perm) > self.num_qubits or len(set(perm)) != len(perm):
                raise ValueError("final_permutation must be distinct wire indices")
            if any(not 0 <= w < self.num_qubits for w in perm):
                raise ValueError("final_permutation wire index out of range")

    @property
    def num_measured(self) -> int:
        """Length of a decoded bitstring: logical qubits, not wires."""
        if self.final_permutation is None:
            return self.num_qubits
        return len(self.final_permutation)


@dataclass(frozen=True)
class QaoaParams:
    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if len(self.gammas) != len(self.betas) or not self.gammas:
            raise ValueError("gammas and betas must have equal length >= 1")
        if any(not math.isfinite(a) for a in self.gammas + self.betas):
            raise ValueError("angles must be finite")

    @property
    def depth(self) -> int:
        return len(self.gammas)

    @staticmethod
    def from_vector(vec) -> "QaoaParams":
        """Split a flat [γ_1..γ_d, β_1..β_d] vector."""
        if len(vec) % 2:
            raise ValueError("parameter vector must have even length")
        d = len(vec) // 2
        return QaoaParams(tuple(vec[:d]), tuple(vec[d:]))

    def to_vector(self) -> list[float]:
        return list(self.gammas) + list(self.betas)


def build_qaoa_circuit(g: Graph, params: QaoaParams) -> Circuit:
    """H wall, then per layer the ZZ cost block over sorted edges, then the RX wall."""
    ops: list[GateOp] = [H(q) for q in range(g.n)]
    for gamma, beta in zip(params.gammas, params.betas):
        for a, b in g.edges:
            ops.append(CNOT(a, b))
            ops.append(RZ(gamma, b))
            ops.append(CNOT(a, b))
        for q in range(g.n):
            ops.append(RX(beta, q))
    metadata = {
        "graph": f"{g.family.label()}-n{g.n}-s{g.seed}",
        "depth": params.depth,
        "gammas": params.gammas,
        "betas": params.betas,
    }
    return Circuit(g.n, tuple(ops), metadata)


# ---------------------------------------------------------------------------
# connectivity and routing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Connectivity:
    kind: str  # "all_to_all" | "grid" | "coupling_list"
    rows: int = 0
    cols: int = 0
    couplings: tuple[tuple[int, int], ...] = ()

    def num_wires(self, num_qubits: int) -> int:
        if self.kind == "all_to_all":
            return num_qubits
        if self.kind == "grid":
            wires = self.rows * self.cols
        else:
            wires = 1 + max(max(p) for p in self.couplings)
        if wires < num_qubits:
            raise RoutingError(
                f"{self.label()} offers {wires} wires for {num_qubits} qubits"
            )
        return wires

    def coupled_pairs(self) -> tuple[tuple[int, int], ...]:
        if self.kind == "grid":
            pairs = []
            for r in range(self.rows):
                for c in range(self.cols):
                    w = r * self.cols + c
                    if c + 1 < self.cols:
                        pairs.append((w, w + 1))
                    if r + 1 < self.rows:
                        pairs.append((w, w + self.cols))
            return tuple(pairs)
        if self.kind == "coupling_list":
            return tuple(tuple(sorted(p)) for p in self.couplings)
        raise ValueError("all_to_all has no coupling list")

    def label(self) -> str:
        if self.kind == "all_to_all":
            return "all-to-all"
        if self.kind == "grid":
            return f"grid({self.rows}x{self.cols})"
        return f"coupling({len(self.couplings)} pairs)"


def all_to_all() -> Connectivity:
    return Connectivity("all_to_all")


def grid(rows: int, cols: int) -> Connectivity:
    if rows < 1 or cols < 1:
        raise ValueError("grid dimensions must be positive")
    return Connectivity("grid", rows=rows, cols=cols)


def coupling_list(pairs) -> Connectivity:
    pairs = tuple(tuple(sorted(p)) for p in pairs)
    if not pairs:
        raise ValueError("coupling list must not be empty")
    if any(a == b or a < 0 for a, b in pairs):
        raise ValueError("couplings must join two distinct non-negative wires")
    return Connectivity("coupling_list", couplings=pairs)


def grid_for(n: int) -> Connectivity:
    """The squarest grid holding n qubits: ⌈√n⌉ rows."""
    if n < 1:
        raise ValueError("need n >= 1")
    rows = math.isqrt(n - 1) + 1 if n > 1 else 1
    cols = -(-n // rows)
    return grid(rows, cols)


def _distances(adjacency: list[set[int]]) -> list[list[int]]:
    # BFS from every wire; wire counts here are tiny.
    wires = len(adjacency)
    dist = []
    for start in range(wires):
        d = [-1] * wires
        d[start] = 0
        frontier = [start]
        while frontier:
            nxt = []
            for u in frontier:
                for v in adjacency[u]:
                    if d[v] < 0:
                        d[v] = d[u] + 1
                        nxt.append(v)
            frontier = nxt
        if any(x < 0 for x in d):
            raise RoutingError("coupling graph is disconnected")
        dist.append(d)
    return dist


def route(c: Circuit, conn: Connectivity) -> Circuit:
    """Insert swaps so every 2-qubit gate acts on a coupled pair.

    Greedy: while a gate's operands are not adjacent, apply the neighbor swap
    that most reduces their coupling-graph distance (ties broken by smallest
    wire pair). Guaranteed to terminate since some neighbor always lies on a
    shortest path.
    """
    if conn.kind == "all_to_all":
        return c
    if c.final_permutation is not None:
        raise ValueError("circuit is already routed")
    wires = conn.num_wires(c.num_qubits)
    adjacency: list[set[int]] = [set() for _ in range(wires)]
    for a, b in conn.coupled_pairs():
        if a >= wires or b >= wires:
            raise RoutingError(f"coupling ({a}, {b}) outside {wires} wires")
        adjacency[a].add(b)
        adjacency[b].add(a)
    dist = _distances(adjacency)

    wire_of = list(range(c.num_qubits))          # logical -> wire
    logical_at: list[int | None] = [None] * wires
    for l, w in enumerate(wire_of):
        logical_at[w] = l

    out: list[GateOp] = []

    def do_swap(p: int, w: int) -> None:
        out.append(SWAP(min(p, w), max(p, w)))
        lp, lw = logical_at[p], logical_at[w]
        logical_at[p], logical_at[w] = lw, lp
        if lp is not None:
            wire_of[lp] = w
        if lw is not None:
            wire_of[lw] = p

    for op in c.ops:
        if len(op.qubits) == 1:
            out.append(GateOp(op.kind, (wire_of[op.qubits[0]],), op.angle))
            continue
        a, b = op.qubits
        while dist[wire_of[a]][wire_of[b]] > 1:
            candidates = []
            for moving, anchor in ((a, b), (b, a)):
                p = wire_of[moving]
                goal = wire_of[anchor]
                for w in adjacency[p]:
                    candidates.append((dist[w][goal], min(p, w), max(p, w)))
            _, p, w = min(candidates)
            do_swap(p, w)
        out.append(GateOp(op.kind, (wire_of[a], wire_of[b]), op.angle))

    metadata = dict(c.metadata)
    metadata["connectivity"] = conn.label()
    return Circuit(
        num_qubits=wires,
        ops=tuple(out),
        metadata=metadata,
        final_permutation=tuple(wire_of),
    )


# ---------------------------------------------------------------------------
# wire-format serialization (consumed by the plugin protocol)
# ---------------------------------------------------------------------------

def circuit_to_dict(c: Circuit) -> dict:
    """Schema: num_qubits, ops = [{kind, qubits, angle?}], final_permutation."""
    perm = c.final_permutation
    if perm is None:
        perm = tuple(range(c.num_qubits))
    ops = []
    for op in c.ops:
        entry: dict = {"kind": op.kind, "qubits": list(op.qubits)}
        if op.angle is not None:
            entry["angle"] = op.angle
        ops.append(entry)
    return {"num_qubits": c.num_qubits, "ops": ops, "final_permutation": list(perm)}


def circuit_from_dict(doc: dict) -> Circuit:
    try:
        num_qubits = int(doc["num_qubits"])
        ops = tuple(
            GateOp(str(o["kind"]), tuple(int(q) for q in o["qubits"]),
                   float(o["angle"]) if "angle" in o else None)
            for o in doc["ops"]
        )
        perm = tuple(int(w) for w in doc["final_permutation"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed circuit document: {exc}") from exc
    if perm == tuple(range(num_qubits)):
        return Circuit(num_qubits, ops)
    return Circuit(num_qubits, ops, final_permutation=perm)
