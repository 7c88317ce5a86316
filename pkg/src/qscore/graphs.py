"""Random graph instances, exact MaxCut, and the scaling constants.

The benchmark normalizes backend scores by how the typical maximum cut of a
graph family grows with size: for Erdős–Rényi G(n, q) the mean best cut is
q·n²/4 + λ_q·n^{3/2} with λ_q = √(2q)·λ_half, and for random k-regular graphs
it is n·k/4 + (P★√k/2)·n. This module generates the instances, solves MaxCut
exactly at desk scale, and fits those coefficients from data.

Conventions. An assignment is a bitstring of length n with vertex i at string
position i. The baseline subtracted from scores is the family formula
(n²/8 for G(n, ½)) even though the exact random-sampling mean is n(n−1)/8;
the fit uses the same baseline, so the fitted coefficient stays
self-consistent with the score that consumes it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import CapabilityError, FitError, GenerationError
from .seeding import derive_seed

LAMBDA_HALF = 0.178
"""Fitted subleading MaxCut coefficient for G(n, 1/2)."""

P_STAR = 0.76321
"""Universal constant governing the MaxCut scaling of sparse random graphs."""

DEFAULT_ENUMERATION_LIMIT = 28
"""Largest vertex count the exact solver accepts by default."""


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Family:
    """Graph family tag: erdos_renyi(q), k_regular(k), or explicit."""

    kind: str
    q: float | None = None
    k: int | None = None

    def __post_init__(self) -> None:
        if self.kind == "erdos_renyi":
            if self.q is None or not 0.0 <= self.q <= 1.0:
                raise ValueError(f"edge probability must lie in [0, 1], got {self.q}")
        elif self.kind == "k_regular":
            if self.k is None or self.k < 1:
                raise ValueError(f"degree must be a positive integer, got {self.k}")
        elif self.kind != "explicit":
            raise ValueError(f"unknown graph family kind {self.kind!r}")

    @property
    def exponent(self) -> float:
        """Growth exponent of the subtracted score: 3/2 for ER, 1 for k-regular."""
        if self.kind == "erdos_renyi":
            return 1.5
        if self.kind == "k_regular":
            return 1.0
        raise ValueError("explicit graphs have no scaling law")

    def baseline(self, n: int) -> float:
        """Expected random-sampling cut at size n, in the family's asymptotic form."""
        if self.kind == "erdos_renyi":
            return self.q * n * n / 4.0
        if self.kind == "k_regular":
            return n * self.k / 4.0
        raise ValueError("explicit graphs have no scaling law")

    def generate(self, n: int, seed: int) -> "Graph":
        if self.kind == "erdos_renyi":
            return generate_erdos_renyi(n, self.q, seed)
        if self.kind == "k_regular":
            return generate_k_regular(n, self.k, seed)
        raise ValueError("cannot generate explicit-family graphs")

    def label(self) -> str:
        if self.kind == "erdos_renyi":
            return f"er({self.q:g})"
        if self.kind == "k_regular":
            return f"kreg({self.k})"
        return "explicit"

    @staticmethod
    def parse(text: str) -> "Family":
        """Parse a family label: "er", "er(0.25)", "kreg(3)"."""
        text = text.strip().lower()
        name, _, arg = text.partition("(")
        arg = arg.rstrip(")")
        if name == "er":
            return erdos_renyi(float(arg) if arg else 0.5)
        if name == "kreg":
            if not arg:
                raise ValueError("kreg needs a degree, e.g. kreg(3)")
            return k_regular(int(arg))
        if name == "explicit" and not arg:
            return EXPLICIT
        raise ValueError(f"cannot parse graph family {text!r}")


def erdos_renyi(q: float) -> Family:
    return Family("erdos_renyi", q=q)


def k_regular(k: int) -> Family:
    return Family("k_regular", k=k)


EXPLICIT = Family("explicit")


# ---------------------------------------------------------------------------
# graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices 0..n-1; the MaxCut instance.

    Edges are stored canonically: each pair as (min, max), the list sorted
    lexicographically. Construction canonicalizes and validates.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    family: Family = EXPLICIT
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"vertex count must be >= 1, got {self.n}")
        canon = tuple(sorted((min(i, j), max(i, j)) for i, j in self.edges))
        object.__setattr__(self, "edges", canon)
        for i, j in canon:
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) outside vertex range [0, {self.n})")
        if len(set(canon)) != len(canon):
            raise ValueError("duplicate edges")
        if self.family.kind == "k_regular":
            if (self.n * self.family.k) % 2:
                raise ValueError("n*k must be even for a k-regular graph")
            deg = [0] * self.n
            for i, j in canon:
                deg[i] += 1
                deg[j] += 1
            if any(d != self.family.k for d in deg):
                raise ValueError(f"graph is not {self.family.k}-regular")

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> list[int]:
        deg = [0] * self.n
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg


def generate_erdos_renyi(n: int, q: float, seed: int) -> Graph:
    """Sample G(n, q): each of the n(n−1)/2 pairs kept with probability q.

    Deterministic in (n, q, seed): pairs are visited in lexicographic order
    against a single seeded uniform stream.
    """
    if n < 1:
        raise ValueError(f"vertex count must be >= 1, got {n}")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"edge probability must lie in [0, 1], got {q}")
    pairs = [(i, j) for i in range(n - 1) for j in range(i + 1, n)]
    draws = np.random.default_rng(seed).random(len(pairs))
    edges = tuple(p for p, u in zip(pairs, draws) if u < q)
    return Graph(n, edges, family=erdos_renyi(q), seed=seed)


def generate_k_regular(n: int, k: int, seed: int, max_restarts: int = 1000) -> Graph:
    """Sample a random k-regular simple graph via the pairing model.

    All n·k stubs are shuffled and paired; a draw containing a self-loop or a
    repeated edge is discarded entirely and the pairing restarts, which keeps
    the distribution near-uniform at these sizes. Raises GenerationError
    after `max_restarts` failed draws.
    """
    if not (n > k >= 1):
        raise ValueError(f"need n > k >= 1, got n={n}, k={k}")
    if (n * k) % 2:
        raise ValueError(f"n*k must be even, got n={n}, k={k}")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n), k)
    for _ in range(max_restarts):
        perm = rng.permutation(stubs)
        a = np.minimum(perm[0::2], perm[1::2])
        b = np.maximum(perm[0::2], perm[1::2])
        if np.any(a == b):
            continue
        edges = set(zip(a.tolist(), b.tolist()))
        if len(edges) < len(a):
            continue
        return Graph(n, tuple(sorted(edges)), family=k_regular(k), seed=seed)
    raise GenerationError(
        f"no simple {k}-regular pairing on {n} vertices after {max_restarts} restarts"
    )


# ---------------------------------------------------------------------------
# cuts
# ---------------------------------------------------------------------------

def cut_value(g: Graph, assignment: str) -> int:
    """Number of edges whose endpoints land on opposite sides of `assignment`."""
    if len(assignment) != g.n:
        raise ValueError(
            f"assignment length {len(assignment)} does not match n={g.n}"
        )
    if assignment.strip("01"):
        raise ValueError("assignment must be a bitstring of 0s and 1s")
    return sum(1 for i, j in g.edges if assignment[i] != assignment[j])


def maxcut_exact(g: Graph, limit: int = DEFAULT_ENUMERATION_LIMIT) -> tuple[int, str]:
    """Exact MaxCut by Gray-code enumeration of the 2^{n-1} bipartitions.

    Vertex 0 is fixed on side 0 (cuts are complement-symmetric). Successive
    bipartitions differ by one vertex flip, so the cut is updated
    incrementally from the flipped vertex's crossing degree.

    Returns
    -------
    (best, assignment)
        The maximum cut size and one attaining bitstring.
    """
    if g.n > limit:
        raise CapabilityError(
            f"n={g.n} exceeds the enumeration limit {limit}; "
            "use the family's analytic scaling estimate instead"
        )
    n = g.n
    adj = [0] * n
    deg = [0] * n
    for i, j in g.edges:
        adj[i] |= 1 << j
        adj[j] |= 1 << i
        deg[i] += 1
        deg[j] += 1
    side = 0
    cut = 0
    best = 0
    best_side = 0
    for k in range(1, 1 << (n - 1)):
        v = (k & -k).bit_length()  # flip vertex: trailing zeros of k, offset past vertex 0
        on_one = (adj[v] & side).bit_count()
        crossing = deg[v] - on_one if side & (1 << v) else on_one
        cut += deg[v] - 2 * crossing
        side ^= 1 << v
        if cut > best:
            best = cut
            best_side = side
    assignment = "".join("1" if best_side >> i & 1 else "0" for i in range(n))
    return best, assignment


def expected_max_cut(
    n: int,
    family: Family,
    instances: int,
    master_seed: int = 0,
    solver_limit: int = DEFAULT_ENUMERATION_LIMIT,
) -> tuple[float, float]:
    """Mean exact MaxCut over seeded instances, with standard error.

    Instance seeds derive from (master_seed, "graph", n, index), the same
    stream the benchmark uses, so fitted constants and benchmark runs see
    identical graph batches at equal master seeds.
    """
    if instances < 2:
        raise ValueError(f"need at least 2 instances, got {instances}")
    cuts = np.empty(instances)
    for i in range(instances):
        g = family.generate(n, derive_seed(master_seed, "graph", n, i))
        cuts[i], _ = maxcut_exact(g, limit=solver_limit)
    mean = float(cuts.mean())
    sem = float(cuts.std(ddof=1) / math.sqrt(instances))
    return mean, sem


# ---------------------------------------------------------------------------
# scaling fits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingFit:
    """One-coefficient power-law fit of subtracted mean scores."""

    family: Family
    exponent: float
    coefficient: float
    r_value: float
    fit_range: tuple[int, ...]
    instances_per_size: int = 0

    def __post_init__(self) -> None:
        if any(b <= a for a, b in zip(self.fit_range, self.fit_range[1:])):
            raise ValueError("fit_range must be strictly increasing")

    def csv_row(self) -> str:
        return (
            f"{self.family.label()},{self.exponent!r},{self.coefficient!r},"
            f"{self.r_value!r},{self.fit_range[0]},{self.fit_range[-1]},"
            f"{self.instances_per_size}"
        )


FIT_CSV_HEADER = "family,exponent,coefficient,r_value,n_min,n_max,instances"


def _power_law_fit(ns: np.ndarray, ys: np.ndarray, exponent: float) -> tuple[float, float]:
    # Affine least squares against x = n^exponent; the slope is the scaling
    # coefficient. The intercept soaks up the finite-size offset between the
    # asymptotic baseline and small-n reality, so the slope stays an unbiased
    # estimate of the leading coefficient on short size ranges.
    if len(ns) < 2 or len(set(ns.tolist())) < 2:
        raise FitError("fit needs at least two distinct sizes")
    x = ns.astype(float) ** exponent
    result = stats.linregress(x, np.asarray(ys, dtype=float))
    return float(result.slope), float(result.rvalue)


def fit_lambda(
    means: list[tuple[int, float]],
    family: Family,
    instances_per_size: int = 0,
) -> ScalingFit:
    """Fit mean MaxCut minus the family baseline to coefficient · n^exponent.

    Standard (affine) least squares with the exponent fixed by the family;
    the slope is the coefficient and r_value is the Pearson correlation
    between n^exponent and the subtracted means. The intercept is a nuisance
    term: it absorbs the gap between the asymptotic baseline and finite-n
    averages, which otherwise drags the coefficient down on short ranges.
    """
    if len(means) < 4:
        raise FitError(f"lambda fit needs at least 4 sizes, got {len(means)}")
    ordered = sorted(means)
    ns = np.array([n for n, _ in ordered])
    if len(set(ns.tolist())) != len(ns):
        raise FitError("duplicate sizes in fit input")
    ys = np.array([m - family.baseline(n) for n, m in ordered])
    coeff, r = _power_law_fit(ns, ys, family.exponent)
    return ScalingFit(
        family=family,
        exponent=family.exponent,
        coefficient=coeff,
        r_value=r,
        fit_range=tuple(int(n) for n in ns),
        instances_per_size=instances_per_size,
    )


def analytic_lambda(family: Family) -> float:
    """Published scaling coefficient: √(2q)·λ_half for ER(q), P★√k/2 for k-regular."""
    if family.kind == "erdos_renyi":
        return math.sqrt(2.0 * family.q) * LAMBDA_HALF
    if family.kind == "k_regular":
        return P_STAR * math.sqrt(family.k) / 2.0
    raise ValueError("explicit graphs have no analytic coefficient")


# ---------------------------------------------------------------------------
# graph files
# ---------------------------------------------------------------------------

def write_graph(g: Graph, path: str) -> None:
    """Write "n m" then one "i j" line per edge."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{g.n} {g.num_edges}\n")
        for i, j in g.edges:
            fh.write(f"{i} {j}\n")


def read_graph(path: str) -> Graph:
    with open(path, encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: first line must be 'n m'")
        n, m = int(header[0]), int(header[1])
        edges = []
        for line in fh:
            if line.strip():
                i, j = line.split()
                edges.append((int(i), int(j)))
    if len(edges) != m:
        raise ValueError(f"{path}: header promises {m} edges, found {len(edges)}")
    return Graph(n, tuple(edges))
