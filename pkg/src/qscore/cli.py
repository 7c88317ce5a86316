"""Command-line front end: run benchmarks, fit scaling constants, plot scores.

Settings resolve in three layers: built-in defaults, then an INI config
file (sections [bench], [optimizer], [backend], [output]; key = value),
then explicit flags. QSCORE_WORKERS overrides the worker count last, so a
batch scheduler can resize jobs without touching configs.

Exit codes: 0 on completion (even when no size passes), 1 when a backend
fails mid-benchmark, 2 for unusable configuration or inputs.
"""

from __future__ import annotations

import argparse
import configparser
import os
import shlex
import sys
from dataclasses import dataclass

from .backends import (
    Backend,
    ExactStubBackend,
    NoisyBackend,
    PerfectBackend,
    RandomStubBackend,
)
from .bench import (
    BenchmarkConfig,
    ScoreError,
    find_qscore,
    summary_text,
    write_raw_data,
    write_report_csv,
)
from .errors import BackendExecutionError, CapabilityError, FitError, ProtocolError
from .graphs import (
    FIT_CSV_HEADER,
    Family,
    expected_max_cut,
    fit_lambda,
)
from .optim import OptimizerConfig
from .plugin import ExternalBackend, serve_stdin
from .sim import DEFAULT_STATEVECTOR_LIMIT, NoiseModel, ShotCounts


def _parse_noise(text: str) -> NoiseModel:
    rates = {"eps1": 0.0, "eps2": 0.0}
    for part in text.split(","):
        key, _, value = part.partition("=")
        key = key.strip()
        if key not in rates or not value:
            raise ValueError(f"noise spec {text!r}: expected eps1=..,eps2=..")
        rates[key] = float(value)
    return NoiseModel(**rates)


@dataclass(frozen=True)
class BackendSpec:
    """Parsed --backend value; build() turns it into a runnable backend."""

    kind: str
    noise: NoiseModel | None = None
    command: tuple[str, ...] = ()
    statevector_limit: int = DEFAULT_STATEVECTOR_LIMIT
    samples_per_trajectory: int = 1
    timeout_s: float = 600.0

    def __post_init__(self) -> None:
        if self.kind not in ("perfect", "noisy", "random-stub", "exact-stub", "external"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == "noisy" and self.noise is None:
            raise ValueError("noisy backend needs eps1/eps2 rates")
        if self.kind == "external" and not self.command:
            raise ValueError("external backend needs a command line")

    @staticmethod
    def parse(text: str, *, statevector_limit: int = DEFAULT_STATEVECTOR_LIMIT,
              samples_per_trajectory: int = 1, timeout_s: float = 600.0) -> "BackendSpec":
        kind, _, detail = text.strip().partition(":")
        common = dict(statevector_limit=statevector_limit,
                      samples_per_trajectory=samples_per_trajectory,
                      timeout_s=timeout_s)
        if kind == "noisy":
            return BackendSpec("noisy", noise=_parse_noise(detail), **common)
        if kind == "external":
            return BackendSpec("external", command=tuple(shlex.split(detail)), **common)
        if detail:
            raise ValueError(f"backend {kind!r} takes no ':' detail")
        return BackendSpec(kind, **common)

    def build(self) -> Backend:
        if self.kind == "perfect":
            return PerfectBackend(max_qubits=self.statevector_limit)
        if self.kind == "noisy":
            return NoisyBackend(self.noise, self.samples_per_trajectory,
                                max_qubits=self.statevector_limit)
        if self.kind == "random-stub":
            return RandomStubBackend()
        if self.kind == "exact-stub":
            return ExactStubBackend()
        return ExternalBackend(list(self.command), timeout_s=self.timeout_s)


def external_backend_execute(spec: BackendSpec, circuit, shots: int, seed: int = 0) -> ShotCounts:
    """One-off protocol round trip against spec's external command."""
    if spec.kind != "external":
        raise ValueError("external_backend_execute requires an external backend spec")
    backend = ExternalBackend(list(spec.command), timeout_s=spec.timeout_s)
    try:
        return backend.run(circuit, shots, seed)
    finally:
        backend.close()


# ---------------------------------------------------------------------------
# configuration resolution
# ---------------------------------------------------------------------------

_BENCH_DEFAULTS = {
    "family": "er(0.5)",
    "depth": "1",
    "graphs_per_size": "100",
    "shots": "2048",
    "opt_shots": "",
    "beta_star": "0.2",
    "lambda": "analytic",
    "size_min": "5",
    "size_limit": "20",
    "search": "iterative",
    "connectivity": "all_to_all",
    "master_seed": "0",
    "workers": "1",
    "time_budget_s": "",
}

_OPTIMIZER_DEFAULTS = {
    "method": "cobyla",
    "max_evaluations": "300",
    "tolerance": "1e-4",
    "restarts": "1",
}

_BACKEND_DEFAULTS = {
    "kind": "perfect",
    "statevector_limit": str(DEFAULT_STATEVECTOR_LIMIT),
    "samples_per_trajectory": "1",
    "timeout_s": "600",
}

_OUTPUT_DEFAULTS = {
    "report": "qscore_report.csv",
    "raw_data": "qscore_raw.csv",
}


def _load_config(path: str | None) -> dict[str, dict[str, str]]:
    settings = {
        "bench": dict(_BENCH_DEFAULTS),
        "optimizer": dict(_OPTIMIZER_DEFAULTS),
        "backend": dict(_BACKEND_DEFAULTS),
        "output": dict(_OUTPUT_DEFAULTS),
    }
    if path is None:
        return settings
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ValueError(f"config file {path!r} is missing or unreadable")
    for section, table in settings.items():
        if not parser.has_section(section):
            continue
        for key, value in parser.items(section):
            if key not in table:
                raise ValueError(f"config file {path!r}: unknown key [{section}] {key}")
            table[key] = value
    return settings


_FLAG_TO_SETTING = {
    # argparse dest -> (section, key)
    "family": ("bench", "family"),
    "depth": ("bench", "depth"),
    "graphs": ("bench", "graphs_per_size"),
    "shots": ("bench", "shots"),
    "opt_shots": ("bench", "opt_shots"),
    "beta_star": ("bench", "beta_star"),
    "lambda_source": ("bench", "lambda"),
    "size_min": ("bench", "size_min"),
    "size_limit": ("bench", "size_limit"),
    "search": ("bench", "search"),
    "connectivity": ("bench", "connectivity"),
    "seed": ("bench", "master_seed"),
    "workers": ("bench", "workers"),
    "time_budget": ("bench", "time_budget_s"),
    "optimizer": ("optimizer", "method"),
    "max_evaluations": ("optimizer", "max_evaluations"),
    "tolerance": ("optimizer", "tolerance"),
    "restarts": ("optimizer", "restarts"),
    "backend": ("backend", "kind"),
    "statevector_limit": ("backend", "statevector_limit"),
    "samples_per_trajectory": ("backend", "samples_per_trajectory"),
    "backend_timeout": ("backend", "timeout_s"),
    "output": ("output", "report"),
    "raw_output": ("output", "raw_data"),
}


def _resolve_run_settings(args: argparse.Namespace):
    settings = _load_config(args.config)
    for dest, (section, key) in _FLAG_TO_SETTING.items():
        value = getattr(args, dest, None)
        if value is not None:
            settings[section][key] = str(value)
    if os.environ.get("QSCORE_WORKERS"):
        settings["bench"]["workers"] = os.environ["QSCORE_WORKERS"]

    b = settings["bench"]
    o = settings["optimizer"]
    k = settings["backend"]
    lam = b["lambda"]
    cfg = BenchmarkConfig(
        family=Family.parse(b["family"]),
        depth=int(b["depth"]),
        graphs_per_size=int(b["graphs_per_size"]),
        shots=int(b["shots"]),
        opt_shots=int(b["opt_shots"]) if b["opt_shots"] else None,
        beta_star=float(b["beta_star"]),
        lambda_source="analytic" if lam == "analytic" else float(lam),
        size_min=int(b["size_min"]),
        size_limit=int(b["size_limit"]),
        search=b["search"],
        connectivity=b["connectivity"],
        master_seed=int(b["master_seed"]),
        workers=int(b["workers"]),
        optimizer=OptimizerConfig(
            method=o["method"],
            max_evaluations=int(o["max_evaluations"]),
            tolerance=float(o["tolerance"]),
            restarts=int(o["restarts"]),
        ),
        time_budget_s=float(b["time_budget_s"]) if b["time_budget_s"] else None,
    )
    spec = BackendSpec.parse(
        k["kind"],
        statevector_limit=int(k["statevector_limit"]),
        samples_per_trajectory=int(k["samples_per_trajectory"]),
        timeout_s=float(k["timeout_s"]),
    )
    return cfg, spec, settings["output"]["report"], settings["output"]["raw_data"]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_run(args: argparse.Namespace) -> int:
    cfg, spec, report_path, raw_path = _resolve_run_settings(args)
    backend = spec.build()
    try:
        report = find_qscore(cfg, backend)
    finally:
        if isinstance(backend, ExternalBackend):
            backend.close()
    write_report_csv(report, report_path)
    write_raw_data(report, raw_path)
    print(summary_text(report))
    print(f"report: {report_path}")
    print(f"raw data: {raw_path}")
    return 0


def cmd_fit_lambda(args: argparse.Namespace) -> int:
    family = Family.parse(args.family)
    if args.n_min < 2 or args.n_max < args.n_min:
        raise ValueError("need 2 <= n-min <= n-max")
    sizes = [n for n in range(args.n_min, args.n_max + 1)
             if family.kind != "k_regular" or (n > family.k and n * family.k % 2 == 0)]
    if not sizes:
        raise ValueError(f"no feasible sizes for {family.label()} in [{args.n_min}, {args.n_max}]")
    means = []
    for n in sizes:
        mean, sem = expected_max_cut(n, family, args.instances,
                                     master_seed=args.seed, solver_limit=args.solver_limit)
        means.append((n, mean))
        print(f"n={n:3d}  mean max cut {mean:10.4f}  sem {sem:.4f}", flush=True)
    fit = fit_lambda(means, family, instances_per_size=args.instances)
    print(f"family: {family.label()}")
    print(f"coefficient: {fit.coefficient:.6f}  (n^{fit.exponent:g} above baseline)")
    print(f"r-value: {fit.r_value:.6f}")
    if args.output:
        with open(args.output, "w", encoding="ascii") as fh:
            fh.write(FIT_CSV_HEADER + "\n")
            fh.write(fit.csv_row() + "\n")
        print(f"fit: {args.output}")
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    from .bench import read_report_csv

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    plotted = 0
    for path in args.reports:
        rows = read_report_csv(path)
        rows = [r for r in rows if r["beta"] != "nan"]
        if not rows:
            continue
        ns = [int(r["n"]) for r in rows]
        betas = [float(r["beta"]) for r in rows]
        errs = [float(r["stderr"]) for r in rows]
        stem = os.path.splitext(os.path.basename(path))[0]
        ax.errorbar(ns, betas, yerr=errs, marker="o", capsize=3, label=stem)
        plotted += 1
    if not plotted:
        raise ValueError("no data rows in any input report")
    ax.axhline(args.beta_star, color="black", linestyle="--", linewidth=1,
               label=f"threshold {args.beta_star:g}")
    ax.set_xlabel("problem size n")
    ax.set_ylabel("approximation ratio beta(n)")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(args.output)
    plt.close(fig)
    print(f"plot: {args.output}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    noise = _parse_noise(args.noise) if args.noise else None
    serve_stdin(noise)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qscore",
        description="Q-score benchmark: largest n where QAOA beats beta_star "
                    "of the optimal-minus-random cut margin.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the benchmark and write report files")
    run.add_argument("--config", help="INI config file; flags override it")
    run.add_argument("--backend", help="perfect | noisy:eps1=..,eps2=.. | random-stub | "
                                       "exact-stub | external:COMMAND")
    run.add_argument("--family", help="er(Q) or kreg(K), default er(0.5)")
    run.add_argument("--depth", type=int, help="ansatz layers, default 1")
    run.add_argument("--graphs", type=int, help="instances per size, default 100")
    run.add_argument("--shots", type=int, help="final-evaluation shots, default 2048")
    run.add_argument("--opt-shots", type=int, help="shots per optimizer evaluation "
                                                   "(default: same as --shots)")
    run.add_argument("--beta-star", type=float, help="pass threshold, default 0.2")
    run.add_argument("--lambda", dest="lambda_source",
                     help="'analytic' or a numeric scaling coefficient")
    run.add_argument("--size-min", type=int, help="first size to score, default 5")
    run.add_argument("--size-limit", type=int, help="largest size to consider, default 20")
    run.add_argument("--search", choices=["iterative", "dichotomic"])
    run.add_argument("--connectivity", help="all-to-all | grid | grid:RxC")
    run.add_argument("--seed", type=int, help="master seed, default 0")
    run.add_argument("--workers", type=int, help="parallel instance workers, default 1")
    run.add_argument("--time-budget", type=float, help="per-size wall-clock budget in seconds")
    run.add_argument("--optimizer", choices=["cobyla", "nelder-mead"])
    run.add_argument("--max-evaluations", type=int, help="optimizer budget per instance")
    run.add_argument("--tolerance", type=float, help="optimizer tolerance")
    run.add_argument("--restarts", type=int, help="optimizer restarts per instance")
    run.add_argument("--statevector-limit", type=int,
                     help=f"built-in simulator qubit cap, default {DEFAULT_STATEVECTOR_LIMIT}")
    run.add_argument("--samples-per-trajectory", type=int,
                     help="shots drawn per noise trajectory, default 1")
    run.add_argument("--backend-timeout", type=float,
                     help="external backend per-request timeout in seconds")
    run.add_argument("--output", help="report CSV path")
    run.add_argument("--raw-output", help="raw per-instance CSV path")
    run.set_defaults(func=cmd_run)

    fit = sub.add_parser("fit-lambda", help="estimate the scaling coefficient by enumeration")
    fit.add_argument("--family", default="er(0.5)")
    fit.add_argument("--n-min", type=int, default=5)
    fit.add_argument("--n-max", type=int, default=20)
    fit.add_argument("--instances", type=int, default=200)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--solver-limit", type=int, default=28)
    fit.add_argument("--output", help="write the fit as CSV")
    fit.set_defaults(func=cmd_fit_lambda)

    plot = sub.add_parser("plot", help="plot beta(n) from one or more reports")
    plot.add_argument("reports", nargs="+", help="report CSV files")
    plot.add_argument("--output", default="qscore_beta.svg",
                      help="vector-graphic path (.svg or .pdf)")
    plot.add_argument("--beta-star", type=float, default=0.2)
    plot.set_defaults(func=cmd_plot)

    serve = sub.add_parser("serve", help="answer plugin requests on stdin with the "
                                         "built-in simulators")
    serve.add_argument("--noise", help="eps1=..,eps2=.. to serve the trajectory sampler")
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FitError, CapabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ProtocolError, BackendExecutionError, ScoreError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
