"""Statevector execution of circuits, perfect or under depolarizing noise.

Layout convention, pinned so fixtures are portable: qubit 0 is the
lowest-order bit of the statevector index, and rendered bitstrings put qubit
0 leftmost. Measured counts therefore read left to right as qubit 0, 1, ...

Noise semantics: eps1 (eps2) is the probability that a uniformly random
non-identity Pauli on the gate's operand(s) is inserted after each 1-qubit
(2-qubit) gate. Noisy execution samples one stochastic trajectory per shot;
averaging trajectories realizes the depolarizing channel exactly. Trajectory
randomness is a pure function of (seed, shot index): each trajectory
pre-draws its per-gate error coins, Pauli picks and measurement uniform from
a stream keyed by (seed, "shot", index), so results do not depend on how
trajectories are batched into memory chunks.

`density_oracle` evolves the full density matrix through the same channel
using independently constructed dense operators (kron products and explicit
permutation matrices); it shares no kernel code with the sampler and exists
to cross-check it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .circuit import Circuit
from .errors import CapabilityError
from .seeding import derive_seed

DEFAULT_STATEVECTOR_LIMIT = 26

_CHUNK_AMPLITUDES = 1 << 23  # max amplitudes held by one trajectory batch

_H_MATRIX = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)

_PAULI_1Q = "xyz"  # error index 0, 1, 2


@dataclass(frozen=True)
class NoiseModel:
    """Per-gate depolarizing rates; initialization and readout stay perfect."""

    eps1: float = 0.0
    eps2: float = 0.0

    def __post_init__(self) -> None:
        for name, rate in (("eps1", self.eps1), ("eps2", self.eps2)):
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {rate}")

    @property
    def is_trivial(self) -> bool:
        return self.eps1 == 0.0 and self.eps2 == 0.0


@dataclass(frozen=True)
class ShotCounts:
    """Measured bitstring -> occurrence count; counts sum to `shots`."""

    counts: Mapping[str, int]
    shots: int

    def __post_init__(self) -> None:
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        object.__setattr__(self, "counts", dict(self.counts))
        if not self.counts:
            raise ValueError("counts must not be empty")
        lengths = {len(k) for k in self.counts}
        if len(lengths) != 1:
            raise ValueError("bitstrings must have uniform length")
        if any(key.strip("01") for key in self.counts):
            raise ValueError("keys must be bitstrings")
        if any(c < 0 for c in self.counts.values()):
            raise ValueError("counts must be non-negative")
        if sum(self.counts.values()) != self.shots:
            raise ValueError(
                f"counts sum to {sum(self.counts.values())}, expected {self.shots}"
            )

    @property
    def num_bits(self) -> int:
        return len(next(iter(self.counts)))

    def decode(self, permutation: tuple[int, ...] | None) -> "ShotCounts":
        """Project wire-level counts down to logical bits via final_permutation."""
        if permutation is None or permutation == tuple(range(self.num_bits)):
            return self
        decoded: dict[str, int] = {}
        for key, c in self.counts.items():
            logical = "".join(key[w] for w in permutation)
            decoded[logical] = decoded.get(logical, 0) + c
        return ShotCounts(decoded, self.shots)

    def probabilities(self) -> dict[str, float]:
        return {k: c / self.shots for k, c in self.counts.items()}


# ---------------------------------------------------------------------------
# statevector kernels (batch-first: axis 0 indexes trajectories)
# ---------------------------------------------------------------------------

def _apply_1q(state: np.ndarray, m: np.ndarray, q: int) -> None:
    batch = state.shape[0]
    v = state.reshape(batch, -1, 2, 1 << q)
    s0 = v[:, :, 0, :].copy()
    s1 = v[:, :, 1, :]
    v[:, :, 0, :] = m[0, 0] * s0 + m[0, 1] * s1
    v[:, :, 1, :] = m[1, 0] * s0 + m[1, 1] * s1


def _apply_rz(state: np.ndarray, theta: float, q: int) -> None:
    batch = state.shape[0]
    v = state.reshape(batch, -1, 2, 1 << q)
    v[:, :, 0, :] *= complex(math.cos(theta / 2), -math.sin(theta / 2))
    v[:, :, 1, :] *= complex(math.cos(theta / 2), math.sin(theta / 2))


def _rx_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def _pair_view(state: np.ndarray, hi: int, lo: int) -> np.ndarray:
    batch = state.shape[0]
    mid = 1 << (hi - lo - 1)
    return state.reshape(batch, -1, 2, mid, 2, 1 << lo)


def _apply_cnot(state: np.ndarray, control: int, target: int) -> None:
    hi, lo = max(control, target), min(control, target)
    v = _pair_view(state, hi, lo)
    if control == hi:
        a = v[:, :, 1, :, 0, :].copy()
        v[:, :, 1, :, 0, :] = v[:, :, 1, :, 1, :]
        v[:, :, 1, :, 1, :] = a
    else:
        a = v[:, :, 0, :, 1, :].copy()
        v[:, :, 0, :, 1, :] = v[:, :, 1, :, 1, :]
        v[:, :, 1, :, 1, :] = a


def _apply_swap(state: np.ndarray, qa: int, qb: int) -> None:
    hi, lo = max(qa, qb), min(qa, qb)
    v = _pair_view(state, hi, lo)
    a = v[:, :, 0, :, 1, :].copy()
    v[:, :, 0, :, 1, :] = v[:, :, 1, :, 0, :]
    v[:, :, 1, :, 0, :] = a


def _apply_gate(state: np.ndarray, op) -> None:
    if op.kind == "h":
        _apply_1q(state, _H_MATRIX, op.qubits[0])
    elif op.kind == "rx":
        _apply_1q(state, _rx_matrix(op.angle), op.qubits[0])
    elif op.kind == "rz":
        _apply_rz(state, op.angle, op.qubits[0])
    elif op.kind == "cnot":
        _apply_cnot(state, op.qubits[0], op.qubits[1])
    else:
        _apply_swap(state, op.qubits[0], op.qubits[1])


def _apply_pauli_row(row: np.ndarray, pauli: str, q: int) -> None:
    # row: one trajectory's statevector, modified in place.
    v = row.reshape(-1, 2, 1 << q)
    if pauli == "x":
        a = v[:, 0, :].copy()
        v[:, 0, :] = v[:, 1, :]
        v[:, 1, :] = a
    elif pauli == "y":
        a = v[:, 0, :].copy()
        v[:, 0, :] = -1j * v[:, 1, :]
        v[:, 1, :] = 1j * a
    else:
        v[:, 1, :] *= -1.0


def _check_register(c: Circuit, max_qubits: int) -> None:
    if c.num_qubits > max_qubits:
        raise CapabilityError(
            f"register of {c.num_qubits} qubits exceeds the statevector limit {max_qubits}"
        )


def _index_to_bits(index: int, n: int) -> str:
    return "".join("1" if index >> q & 1 else "0" for q in range(n))


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------

def run_perfect(
    c: Circuit,
    shots: int,
    seed: int,
    max_qubits: int = DEFAULT_STATEVECTOR_LIMIT,
) -> ShotCounts:
    """Apply the circuit to |0…0⟩ and draw `shots` samples from |amplitude|²."""
    _check_register(c, max_qubits)
    if shots < 1:
        raise ValueError("shots must be >= 1")
    n = c.num_qubits
    state = np.zeros((1, 1 << n), dtype=complex)
    state[0, 0] = 1.0
    for op in c.ops:
        _apply_gate(state, op)
    probs = np.abs(state[0]) ** 2
    cdf = np.cumsum(probs)
    rng = np.random.default_rng(derive_seed(seed, "measure"))
    draws = rng.random(shots)
    indices = np.searchsorted(cdf, draws, side="right")
    np.clip(indices, 0, (1 << n) - 1, out=indices)
    values, freq = np.unique(indices, return_counts=True)
    counts = {_index_to_bits(int(v), n): int(f) for v, f in zip(values, freq)}
    return ShotCounts(counts, shots)


def run_noisy(
    c: Circuit,
    noise: NoiseModel,
    shots: int,
    seed: int,
    samples_per_trajectory: int = 1,
    max_qubits: int = DEFAULT_STATEVECTOR_LIMIT,
) -> ShotCounts:
    """Sample shot outcomes from stochastic Pauli trajectories.

    One trajectory per shot by default. `samples_per_trajectory` > 1 reuses
    each trajectory for several measurements, a documented speed/bias
    trade-off: fewer independent noise realizations under the same shot
    budget. Zero noise short-circuits to run_perfect, byte-identical counts.
    """
    _check_register(c, max_qubits)
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if samples_per_trajectory < 1:
        raise ValueError("samples_per_trajectory must be >= 1")
    if noise.is_trivial:
        return run_perfect(c, shots, seed, max_qubits=max_qubits)

    n = c.num_qubits
    per_traj = samples_per_trajectory
    num_traj = -(-shots // per_traj)
    num_gates = len(c.ops)
    arity = np.array([len(op.qubits) for op in c.ops], dtype=np.int8)
    gate_eps = np.where(arity == 1, noise.eps1, noise.eps2)

    counts: dict[str, int] = {}
    chunk = max(1, _CHUNK_AMPLITUDES >> n)
    drawn = 0
    for start in range(0, num_traj, chunk):
        rows = min(chunk, num_traj - start)
        coin = np.empty((rows, num_gates))
        pick = np.empty((rows, num_gates), dtype=np.int64)
        meas = np.empty((rows, per_traj))
        for r in range(rows):
            rng = np.random.default_rng(derive_seed(seed, "shot", start + r))
            coin[r] = rng.random(num_gates)
            pick[r] = rng.integers(0, 15, size=num_gates)
            meas[r] = rng.random(per_traj)

        state = np.zeros((rows, 1 << n), dtype=complex)
        state[:, 0] = 1.0
        for gi, op in enumerate(c.ops):
            _apply_gate(state, op)
            eps = gate_eps[gi]
            if eps == 0.0:
                continue
            hit = np.nonzero(coin[:, gi] < eps)[0]
            for r in hit:
                if arity[gi] == 1:
                    _apply_pauli_row(state[r], _PAULI_1Q[pick[r, gi] % 3], op.qubits[0])
                else:
                    code = int(pick[r, gi]) + 1  # 1..15, base-4 digits (pa, pb), never (0, 0)
                    pa, pb = code // 4, code % 4
                    if pa:
                        _apply_pauli_row(state[r], "xyz"[pa - 1], op.qubits[0])
                    if pb:
                        _apply_pauli_row(state[r], "xyz"[pb - 1], op.qubits[1])

        cdf = np.cumsum(np.abs(state) ** 2, axis=1)
        top = (1 << n) - 1
        for r in range(rows):
            take = min(per_traj, shots - drawn)
            for m in range(take):
                idx = min(int(np.searchsorted(cdf[r], meas[r, m], side="right")), top)
                key = _index_to_bits(idx, n)
                counts[key] = counts.get(key, 0) + 1
            drawn += take
    return ShotCounts(counts, shots)


# ---------------------------------------------------------------------------
# dense test oracles
# ---------------------------------------------------------------------------

_I2 = np.eye(2, dtype=complex)
_PAULI_MATS = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _embed(n: int, mats: dict[int, np.ndarray]) -> np.ndarray:
    out = np.array([[1.0]], dtype=complex)
    for q in reversed(range(n)):
        out = np.kron(out, mats.get(q, _I2))
    return out


def _permutation_op(n: int, mapping) -> np.ndarray:
    dim = 1 << n
    u = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        u[mapping(i), i] = 1.0
    return u


def _dense_gate(op, n: int) -> np.ndarray:
    if op.kind == "h":
        return _embed(n, {op.qubits[0]: _H_MATRIX})
    if op.kind == "rx":
        return _embed(n, {op.qubits[0]: _rx_matrix(op.angle)})
    if op.kind == "rz":
        half = op.angle / 2
        m = np.array([[complex(math.cos(half), -math.sin(half)), 0],
                      [0, complex(math.cos(half), math.sin(half))]])
        return _embed(n, {op.qubits[0]: m})
    if op.kind == "cnot":
        ctrl, tgt = op.qubits
        return _permutation_op(n, lambda i: i ^ ((i >> ctrl & 1) << tgt))
    qa, qb = op.qubits

    def swap_bits(i: int) -> int:
        if (i >> qa & 1) != (i >> qb & 1):
            return i ^ ((1 << qa) | (1 << qb))
        return i

    return _permutation_op(n, swap_bits)


def density_oracle(c: Circuit, noise: NoiseModel, max_qubits: int = 6) -> np.ndarray:
    """Exact outcome distribution under the depolarizing channel.

    Evolves the full density matrix with dense operators built from kron
    products; returns the diagonal (length 2^n, indexed by basis state).
    """
    _check_register(c, max_qubits)
    n = c.num_qubits
    dim = 1 << n
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    for op in c.ops:
        u = _dense_gate(op, n)
        rho = u @ rho @ u.conj().T
        eps = noise.eps1 if len(op.qubits) == 1 else noise.eps2
        if eps == 0.0:
            continue
        if len(op.qubits) == 1:
            q = op.qubits[0]
            paulis = [_embed(n, {q: m}) for m in _PAULI_MATS.values()]
        else:
            qa, qb = op.qubits
            paulis = []
            for code in range(1, 16):
                pa, pb = code // 4, code % 4
                mats = {}
                if pa:
                    mats[qa] = _PAULI_MATS["xyz"[pa - 1]]
                if pb:
                    mats[qb] = _PAULI_MATS["xyz"[pb - 1]]
                paulis.append(_embed(n, mats))
        mixed = sum(p @ rho @ p.conj().T for p in paulis)
        rho = (1.0 - eps) * rho + (eps / len(paulis)) * mixed
    return np.real(np.diag(rho)).clip(min=0.0)


def statevector(c: Circuit, max_qubits: int = DEFAULT_STATEVECTOR_LIMIT) -> np.ndarray:
    """Final pure state of the circuit (no noise, no sampling)."""
    _check_register(c, max_qubits)
    state = np.zeros((1, 1 << c.num_qubits), dtype=complex)
    state[0, 0] = 1.0
    for op in c.ops:
        _apply_gate(state, op)
    return state[0]


def circuit_unitary(c: Circuit, max_qubits: int = 12) -> np.ndarray:
    """Dense unitary of the circuit, built by pushing all basis states through."""
    _check_register(c, max_qubits)
    dim = 1 << c.num_qubits
    state = np.eye(dim, dtype=complex)
    for op in c.ops:
        _apply_gate(state, op)
    return state.T.copy()
