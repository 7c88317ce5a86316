"""Derivative-free optimization of the QAOA angles against sampled energy.

The objective is the shot-estimated energy <H_G> = |E|/2 - 2*mean_cut, so
minimizing energy and maximizing the mean cut pick the same parameters. Each
objective call builds the ansatz at the proposed angles, routes it if a
connectivity is given, executes it on the backend, and scores the decoded
counts. Every evaluation draws a fresh seed from (seed, restart, call index),
so repeated proposals see independent shot noise while the whole run stays
reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .circuit import Circuit, Connectivity, QaoaParams, build_qaoa_circuit, route
from .errors import BackendExecutionError
from .graphs import Graph
from .seeding import derive_rng, derive_seed
from .sim import ShotCounts

_METHODS = ("cobyla", "nelder-mead")


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "cobyla"
    max_evaluations: int = 300
    tolerance: float = 1e-4
    init_low: float = 0.0
    init_high: float = math.pi
    restarts: int = 1

    def __post_init__(self) -> None:
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}, got {self.method!r}")
        if self.max_evaluations < 1:
            raise ValueError("max_evaluations must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if not self.init_high > self.init_low:
            raise ValueError("init range must be non-degenerate")


@dataclass(frozen=True)
class Evaluation:
    params: QaoaParams
    energy: float
    mean_cut: float


@dataclass
class OptimizationTrace:
    evaluations: list[Evaluation]
    best_params: QaoaParams
    best_energy: float
    best_mean_cut: float
    termination_reason: str


def estimate_energy(g: Graph, counts: ShotCounts) -> tuple[float, float]:
    """Return (energy, mean cut) of measured counts against graph g.

    mean cut = sum_x freq(x) * cut(x); energy = |E|/2 - 2 * mean cut, the
    eigenvalue identity of the cost Hamiltonian.
    """
    if counts.num_bits != g.n:
        raise ValueError(
            f"counts carry {counts.num_bits}-bit strings for a graph on {g.n} vertices"
        )
    keys = list(counts.counts)
    weights = np.array([counts.counts[k] for k in keys], dtype=float)
    bits = np.frombuffer("".join(keys).encode("ascii"), dtype=np.uint8)
    bits = bits.reshape(len(keys), g.n) - ord("0")
    if g.edges:
        left = [i for i, _ in g.edges]
        right = [j for _, j in g.edges]
        cuts = (bits[:, left] != bits[:, right]).sum(axis=1)
    else:
        cuts = np.zeros(len(keys))
    mean_cut = float(weights @ cuts) / counts.shots
    energy = g.num_edges / 2.0 - 2.0 * mean_cut
    return energy, mean_cut


class _BudgetExhausted(Exception):
    pass


def optimize(
    g: Graph,
    depth: int,
    backend,
    shots: int,
    config: OptimizerConfig = OptimizerConfig(),
    seed: int = 0,
    connectivity: Connectivity | None = None,
) -> OptimizationTrace:
    """Minimize the sampled energy over 2*depth angles.

    Uses at most max_evaluations objective calls per restart (a guard wraps
    the objective, so the bound holds regardless of the scipy method's own
    bookkeeping). The trace records every evaluation across restarts in call
    order; best_* track the lowest-energy evaluation seen anywhere.
    termination_reason reflects the last restart.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    evaluations: list[Evaluation] = []
    best: Evaluation | None = None
    reason = ""

    for restart in range(config.restarts):
        calls = 0

        def objective(vec: np.ndarray) -> float:
            nonlocal calls, best
            if calls >= config.max_evaluations:
                raise _BudgetExhausted
            params = QaoaParams.from_vector([float(v) for v in vec])
            circuit = build_qaoa_circuit(g, params)
            if connectivity is not None:
                circuit = route(circuit, connectivity)
            eval_seed = derive_seed(seed, "eval", restart, calls)
            try:
                raw = backend.run(circuit, shots, eval_seed)
            except Exception as exc:
                raise BackendExecutionError(
                    f"objective evaluation {len(evaluations)} failed: {exc}"
                ) from exc
            counts = raw.decode(circuit.final_permutation)
            energy, mean_cut = estimate_energy(g, counts)
            record = Evaluation(params, energy, mean_cut)
            evaluations.append(record)
            calls += 1
            if best is None or energy < best.energy:
                best = record
            return energy

        x0 = derive_rng(seed, "init", restart).uniform(
            config.init_low, config.init_high, size=2 * depth
        )
        try:
            if config.method == "cobyla":
                result = scipy.optimize.minimize(
                    objective,
                    x0,
                    method="COBYLA",
                    tol=config.tolerance,
                    options={"maxiter": config.max_evaluations},
                )
            else:
                result = scipy.optimize.minimize(
                    objective,
                    x0,
                    method="Nelder-Mead",
                    options={
                        "maxfev": config.max_evaluations,
                        "xatol": config.tolerance,
                        "fatol": config.tolerance,
                    },
                )
            reason = "converged" if result.success else str(result.message)
        except _BudgetExhausted:
            reason = "budget"

    assert best is not None  # max_evaluations >= 1 guarantees one evaluation
    return OptimizationTrace(
        evaluations=evaluations,
        best_params=best.params,
        best_energy=best.energy,
        best_mean_cut=best.mean_cut,
        termination_reason=reason,
    )
