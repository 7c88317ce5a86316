"""The benchmark protocol: per-size batches, scores, search, and reports.

For each size n, graphs_per_size instances are generated from seeds derived
as (master_seed, "graph", n, index), so any two backends given the same
master seed face identical graph batches. Each instance is optimized, then
re-evaluated at best parameters with the full shot budget; the per-size
score is beta(n) = (C(n) - baseline(n)) / (lambda * n^exponent) where C(n)
averages the per-instance negated energies -<H> = 2*cut - |E|/2, with the
family's asymptotic baseline kept verbatim (n^2/8 for half-density random
graphs). Uniform sampling still concentrates C(n) at the baseline, since
E[2*cut - |E|/2] = E[|E|]/2, so beta measures genuine optimization gain in
energy units. The benchmark result n* is the largest size with
beta(n) > beta_star.
"""

from __future__ import annotations

import re
import time
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass, field, replace

import numpy as np

from .circuit import Connectivity, QaoaParams, build_qaoa_circuit, grid, grid_for, route
from .errors import BackendExecutionError, CapabilityError, FitError, ProtocolError
from .graphs import Family, ScalingFit, _power_law_fit, analytic_lambda, erdos_renyi
from .optim import OptimizerConfig, estimate_energy, optimize
from .seeding import derive_seed
from .sim import NoiseModel

_SEARCH_MODES = ("iterative", "dichotomic")


def resolve_connectivity(spec: str, n: int) -> Connectivity | None:
    """Map a connectivity spec string to a Connectivity for size n.

    "all_to_all" (or "all-to-all") -> None, meaning no routing;
    "grid" -> the squarest grid holding n qubits;
    "grid(RxC)" or "grid:RxC" -> a fixed grid.
    """
    text = spec.strip().lower().replace("-", "_")
    if text == "all_to_all":
        return None
    if text == "grid":
        return grid_for(n)
    match = re.fullmatch(r"grid\((\d+)x(\d+)\)", text) or re.fullmatch(r"grid:(\d+)x(\d+)", text)
    if match:
        return grid(int(match.group(1)), int(match.group(2)))
    raise ValueError(f"cannot parse connectivity {spec!r}")


@dataclass(frozen=True)
class BenchmarkConfig:
    family: Family = field(default_factory=lambda: erdos_renyi(0.5))
    depth: int = 1
    graphs_per_size: int = 100
    shots: int = 2048
    opt_shots: int | None = None
    beta_star: float = 0.2
    lambda_source: str | float = "analytic"
    size_min: int = 5
    size_limit: int = 20
    search: str = "iterative"
    connectivity: str = "all_to_all"
    noise: NoiseModel | None = None
    master_seed: int = 0
    workers: int = 1
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    time_budget_s: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.beta_star < 1.0:
            raise ValueError("beta_star must lie in (0, 1)")
        if self.graphs_per_size < 2:
            raise ValueError("graphs_per_size must be >= 2")
        if not 2 <= self.size_min <= self.size_limit:
            raise ValueError("need 2 <= size_min <= size_limit")
        if self.depth < 1 or self.shots < 1:
            raise ValueError("depth and shots must be >= 1")
        if self.opt_shots is not None and self.opt_shots < 1:
            raise ValueError("opt_shots must be >= 1")
        if self.search not in _SEARCH_MODES:
            raise ValueError(f"search must be one of {_SEARCH_MODES}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if isinstance(self.lambda_source, str):
            if self.lambda_source != "analytic":
                raise ValueError("lambda_source must be 'analytic' or a positive number")
        elif not self.lambda_source > 0:
            raise ValueError("lambda_source must be 'analytic' or a positive number")
        resolve_connectivity(self.connectivity, self.size_min)  # fail early

    def scaling_lambda(self) -> float:
        if self.lambda_source == "analytic":
            return analytic_lambda(self.family)
        return float(self.lambda_source)


@dataclass(frozen=True)
class InstanceRecord:
    index: int
    graph_seed: int
    num_edges: int
    params: QaoaParams | None
    energy: float
    mean_cut: float
    beta: float
    error: str | None = None

    @property
    def score(self) -> float:
        """Negated energy 2*mean_cut - |E|/2, the quantity beta is built from."""
        return -self.energy


@dataclass(frozen=True)
class SizeScore:
    n: int
    mean_cut: float
    score: float
    beta: float
    stderr_beta: float
    passed: bool
    wall_time_s: float
    scaling_lambda: float
    records: tuple[InstanceRecord, ...]
    aborted: bool = False

    @property
    def graphs_used(self) -> int:
        return sum(1 for r in self.records if r.error is None)


@dataclass
class BenchmarkReport:
    config: BenchmarkConfig
    backend_label: str
    scores: list[SizeScore]
    q_score: int | None
    nu_fit: ScalingFit | None
    monotone: bool


class ScoreError(RuntimeError):
    """Too many instance failures to score a size."""


def _instance_task(n: int, index: int, cfg: BenchmarkConfig, backend) -> InstanceRecord:
    graph_seed = derive_seed(cfg.master_seed, "graph", n, index)
    g = cfg.family.generate(n, graph_seed)
    lam = cfg.scaling_lambda()
    denom = lam * n ** cfg.family.exponent
    conn = resolve_connectivity(cfg.connectivity, n)
    try:
        trace = optimize(
            g,
            cfg.depth,
            backend,
            cfg.opt_shots or cfg.shots,
            cfg.optimizer,
            seed=derive_seed(cfg.master_seed, "opt", n, index),
            connectivity=conn,
        )
        final = build_qaoa_circuit(g, trace.best_params)
        if conn is not None:
            final = route(final, conn)
        raw = backend.run(final, cfg.shots, derive_seed(cfg.master_seed, "final", n, index))
        counts = raw.decode(final.final_permutation)
        energy, mean_cut = estimate_energy(g, counts)
    except (BackendExecutionError, CapabilityError, ProtocolError) as exc:
        return InstanceRecord(index, graph_seed, g.num_edges, None,
                              float("nan"), float("nan"), float("nan"), error=str(exc))
    beta = (-energy - cfg.family.baseline(n)) / denom
    return InstanceRecord(index, graph_seed, g.num_edges, trace.best_params,
                          energy, mean_cut, beta)


def score_size(n: int, cfg: BenchmarkConfig, backend) -> SizeScore:
    """Generate, optimize and score one batch of instances at size n."""
    if n < 2:
        raise ValueError("need n >= 2")
    started = time.perf_counter()
    deadline = None if cfg.time_budget_s is None else started + cfg.time_budget_s
    records: list[InstanceRecord] = []
    aborted = False

    if cfg.workers == 1:
        for index in range(cfg.graphs_per_size):
            if deadline is not None and time.perf_counter() > deadline:
                aborted = True
                break
            records.append(_instance_task(n, index, cfg, backend))
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = {
                pool.submit(_instance_task, n, index, cfg, backend): index
                for index in range(cfg.graphs_per_size)
            }
            pending = set(futures)
            while pending:
                remaining = None if deadline is None else max(0.0, deadline - time.perf_counter())
                done, pending = wait(pending, timeout=remaining, return_when=FIRST_COMPLETED)
                if not done:
                    aborted = True
                    for fut in pending:
                        fut.cancel()
                    break
                records.extend(fut.result() for fut in done)
        records.sort(key=lambda r: r.index)

    wall = time.perf_counter() - started
    good = [r for r in records if r.error is None]
    if not aborted and len(records) - len(good) > 0.2 * cfg.graphs_per_size:
        failures = "; ".join(r.error for r in records if r.error is not None)
        raise ScoreError(
            f"size {n}: {len(records) - len(good)}/{cfg.graphs_per_size} instances failed: {failures}"
        )
    lam = cfg.scaling_lambda()
    if len(good) >= 2:
        betas = np.array([r.beta for r in good])
        mean_cut = float(np.mean([r.mean_cut for r in good]))
        score = float(np.mean([r.score for r in good]))
        beta = float(betas.mean())
        stderr = float(betas.std(ddof=1) / np.sqrt(len(betas)))
    else:
        mean_cut = score = beta = stderr = float("nan")
    passed = bool(beta > cfg.beta_star) and not aborted and len(good) >= 2
    return SizeScore(
        n=n,
        mean_cut=mean_cut,
        score=score,
        beta=beta,
        stderr_beta=stderr,
        passed=passed,
        wall_time_s=wall,
        scaling_lambda=lam,
        records=tuple(records),
        aborted=aborted,
    )


def find_qscore(cfg: BenchmarkConfig, backend) -> BenchmarkReport:
    """Search for n*: the largest size whose score passes beta_star.

    Iterative mode walks size_min, size_min+1, ... until the first failure
    or size_limit. Dichotomic mode assumes beta(n) decreases with n and
    binary-searches the pass/fail boundary; observed non-monotonicity is
    flagged on the report, never silently resolved.
    """
    evaluated: dict[int, SizeScore] = {}

    def measure(n: int) -> SizeScore:
        evaluated[n] = score_size(n, cfg, backend)
        return evaluated[n]

    if cfg.search == "iterative":
        for n in range(cfg.size_min, cfg.size_limit + 1):
            if not measure(n).passed:
                break
    else:
        low = cfg.size_min
        high = cfg.size_limit
        if measure(low).passed and high > low:
            if not measure(high).passed:
                while high - low > 1:
                    mid = (low + high) // 2
                    if measure(mid).passed:
                        low = mid
                    else:
                        high = mid

    scores = [evaluated[n] for n in sorted(evaluated)]
    passing = [s.n for s in scores if s.passed]
    q_score = max(passing) if passing else None

    nu_fit = None
    if len(scores) >= 3:
        try:
            nu_fit = fit_nu(scores, cfg.family)
        except FitError:
            nu_fit = None

    label = backend.label() if hasattr(backend, "label") else type(backend).__name__
    return BenchmarkReport(
        config=cfg,
        backend_label=label,
        scores=scores,
        q_score=q_score,
        nu_fit=nu_fit,
        monotone=_monotone(scores),
    )


def _monotone(scores: list[SizeScore]) -> bool:
    """False when a passing size follows a failing one in ascending order."""
    seen_failure = False
    for s in scores:
        if not s.passed:
            seen_failure = True
        elif seen_failure:
            return False
    return True


def fit_nu(scores: list[SizeScore], family: Family) -> ScalingFit:
    """Fit the backend's own subtracted scores C(n) - baseline to nu * n^exponent.

    The continuous companion of the pass/fail test: beta_equivalent = nu / lambda.
    """
    usable = sorted((s for s in scores if not np.isnan(s.score)), key=lambda s: s.n)
    if len(usable) < 3:
        raise FitError(f"nu fit needs at least 3 sizes, got {len(usable)}")
    ns = np.array([s.n for s in usable])
    if len(set(ns.tolist())) != len(ns):
        raise FitError("duplicate sizes in nu fit")
    ys = np.array([s.score - family.baseline(s.n) for s in usable])
    coeff, r = _power_law_fit(ns, ys, family.exponent)
    return ScalingFit(
        family=family,
        exponent=family.exponent,
        coefficient=coeff,
        r_value=r,
        fit_range=tuple(int(n) for n in ns),
        instances_per_size=min(s.graphs_used for s in usable),
    )


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------

REPORT_CSV_HEADER = "n,mean_cut,beta,stderr,pass,wall_time_s,graphs,shots,depth,family,lambda"
RAWDATA_CSV_HEADER = "n,instance,graph_seed,gammas,betas,energy,mean_cut"


def write_report_csv(report: BenchmarkReport, path: str) -> None:
    cfg = report.config
    with open(path, "w", encoding="ascii") as fh:
        fh.write(REPORT_CSV_HEADER + "\n")
        for s in report.scores:
            fh.write(
                f"{s.n},{s.mean_cut!r},{s.beta!r},{s.stderr_beta!r},"
                f"{s.passed},{s.wall_time_s!r},{s.graphs_used},{cfg.shots},"
                f"{cfg.depth},{cfg.family.label()},{s.scaling_lambda!r}\n"
            )


def write_raw_data(report: BenchmarkReport, path: str) -> None:
    """One line per (graph, final evaluation); errored instances are skipped."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(RAWDATA_CSV_HEADER + "\n")
        for s in report.scores:
            for r in s.records:
                if r.error is not None:
                    continue
                gammas = ";".join(repr(v) for v in r.params.gammas)
                betas = ";".join(repr(v) for v in r.params.betas)
                fh.write(
                    f"{s.n},{r.index},{r.graph_seed},{gammas},{betas},"
                    f"{r.energy!r},{r.mean_cut!r}\n"
                )


def read_report_csv(path: str) -> list[dict[str, str]]:
    """Read a score table back as one dict per row, all values as written."""
    with open(path, encoding="ascii") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    if not lines or lines[0] != REPORT_CSV_HEADER:
        raise ValueError(f"{path} does not start with the score table header")
    names = REPORT_CSV_HEADER.split(",")
    rows = []
    for line in lines[1:]:
        values = line.split(",")
        if len(values) != len(names):
            raise ValueError(f"malformed score row: {line!r}")
        rows.append(dict(zip(names, values)))
    return rows


def summary_text(report: BenchmarkReport) -> str:
    cfg = report.config
    lines = [
        f"backend: {report.backend_label}   family: {cfg.family.label()}   "
        f"depth: {cfg.depth}   graphs/size: {cfg.graphs_per_size}   shots: {cfg.shots}",
        f"connectivity: {cfg.connectivity}   search: {cfg.search}   "
        f"beta_star: {cfg.beta_star:g}   lambda: {cfg.scaling_lambda():.6g} "
        f"({cfg.lambda_source})   seed: {cfg.master_seed}",
        "",
        "   n   mean_cut       C(n)    beta    stderr  pass      time",
    ]
    for s in report.scores:
        flag = "PASS" if s.passed else "fail"
        note = "  (aborted)" if s.aborted else ""
        lines.append(
            f"{s.n:4d} {s.mean_cut:10.4f} {s.score:10.4f} {s.beta:7.4f} "
            f"{s.stderr_beta:9.4f}  {flag}  {s.wall_time_s:8.2f}s{note}"
        )
    lines.append("")
    lines.append(f"Q-score: {report.q_score if report.q_score is not None else 'none'}")
    if report.nu_fit is not None:
        lam = report.scores[0].scaling_lambda if report.scores else cfg.scaling_lambda()
        lines.append(
            f"nu fit: {report.nu_fit.coefficient:.4f} (r={report.nu_fit.r_value:.4f}, "
            f"beta_equivalent={report.nu_fit.coefficient / lam:.4f})"
        )
    if not report.monotone:
        lines.append("warning: beta(n) is not monotone over the evaluated sizes")
    return "\n".join(lines)
