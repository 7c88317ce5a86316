"""Backend handles: anything with run(circuit, shots, seed) -> ShotCounts.

Backends return wire-level bitstrings (length = circuit.num_qubits); callers
decode routed circuits through final_permutation. All built-in backends are
picklable dataclasses so benchmark workers can carry them across processes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .circuit import Circuit
from .graphs import DEFAULT_ENUMERATION_LIMIT, Graph, maxcut_exact
from .seeding import derive_seed
from .sim import (
    DEFAULT_STATEVECTOR_LIMIT,
    NoiseModel,
    ShotCounts,
    _index_to_bits,
    run_noisy,
    run_perfect,
)


class Backend(Protocol):
    def run(self, circuit: Circuit, shots: int, seed: int) -> ShotCounts:
        ...


@dataclass(frozen=True)
class PerfectBackend:
    """The built-in noiseless statevector simulator."""

    max_qubits: int = DEFAULT_STATEVECTOR_LIMIT

    def run(self, circuit: Circuit, shots: int, seed: int) -> ShotCounts:
        return run_perfect(circuit, shots, seed, max_qubits=self.max_qubits)

    def label(self) -> str:
        return "perfect"


@dataclass(frozen=True)
class NoisyBackend:
    """Trajectory-sampled depolarizing noise on the statevector simulator."""

    noise: NoiseModel
    samples_per_trajectory: int = 1
    max_qubits: int = DEFAULT_STATEVECTOR_LIMIT

    def run(self, circuit: Circuit, shots: int, seed: int) -> ShotCounts:
        return run_noisy(
            circuit,
            self.noise,
            shots,
            seed,
            samples_per_trajectory=self.samples_per_trajectory,
            max_qubits=self.max_qubits,
        )

    def label(self) -> str:
        return f"noisy(eps1={self.noise.eps1:g},eps2={self.noise.eps2:g})"


@dataclass(frozen=True)
class RandomStubBackend:
    """Uniform random bitstrings; the random-sampling reference, no simulation."""

    def run(self, circuit: Circuit, shots: int, seed: int) -> ShotCounts:
        rng = np.random.default_rng(derive_seed(seed, "uniform-stub"))
        n = circuit.num_qubits
        indices = rng.integers(0, 1 << n, size=shots)
        values, freq = np.unique(indices, return_counts=True)
        counts = {_index_to_bits(int(v), n): int(f) for v, f in zip(values, freq)}
        return ShotCounts(counts, shots)

    def label(self) -> str:
        return "random-stub"


@dataclass(frozen=True)
class ExactStubBackend:
    """Every shot lands on one exact MaxCut assignment of the circuit's graph.

    The graph is reconstructed from the cost blocks (each edge appears as a
    cnot pair on the same qubit pair), so this stub only understands unrouted
    ansatz circuits. It models an oracle solver, the strongest sampler the
    benchmark can face: its score 2*maxcut - |E|/2 passes every size.
    """

    limit: int = DEFAULT_ENUMERATION_LIMIT

    def run(self, circuit: Circuit, shots: int, seed: int) -> ShotCounts:
        edges = sorted({tuple(sorted(op.qubits)) for op in circuit.ops if op.kind == "cnot"})
        g = Graph(circuit.num_qubits, tuple(edges))
        _, assignment = maxcut_exact(g, limit=self.limit)
        return ShotCounts({assignment: shots}, shots)

    def label(self) -> str:
        return "exact-stub"
