"""Command-line layer: parsing, config precedence, subcommands, exit codes."""

import sys

import pytest

from qscore.backends import ExactStubBackend, NoisyBackend, PerfectBackend, RandomStubBackend
from qscore.bench import REPORT_CSV_HEADER, RAWDATA_CSV_HEADER
from qscore.cli import (
    BackendSpec,
    _load_config,
    _parse_noise,
    _resolve_run_settings,
    build_parser,
    external_backend_execute,
    main,
)
from qscore.circuit import CNOT, Circuit, H
from qscore.graphs import FIT_CSV_HEADER
from qscore.plugin import ExternalBackend
from qscore.sim import NoiseModel, run_perfect

BELL = Circuit(2, (H(0), CNOT(0, 1)))
LOOPBACK = f"{sys.executable} -m qscore serve"


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------


def test_parse_noise():
    assert _parse_noise("eps1=0.004,eps2=0.02") == NoiseModel(0.004, 0.02)
    assert _parse_noise("eps2=0.1") == NoiseModel(0.0, 0.1)
    for bad in ("eps3=0.1", "eps1", "0.004,0.02", ""):
        with pytest.raises(ValueError, match="noise spec"):
            _parse_noise(bad)


def test_backend_spec_parse_and_build():
    assert BackendSpec.parse("perfect").build() == PerfectBackend()
    assert BackendSpec.parse("random-stub").build() == RandomStubBackend()
    assert BackendSpec.parse("exact-stub").build() == ExactStubBackend()
    noisy = BackendSpec.parse("noisy:eps1=0.004,eps2=0.02").build()
    assert noisy == NoisyBackend(NoiseModel(0.004, 0.02))
    ext = BackendSpec.parse('external:engine --fast "quoted arg"').build()
    assert isinstance(ext, ExternalBackend)
    assert ext.command == ["engine", "--fast", "quoted arg"]


def test_backend_spec_carries_limits():
    spec = BackendSpec.parse("perfect", statevector_limit=10)
    assert spec.build() == PerfectBackend(max_qubits=10)
    spec = BackendSpec.parse("noisy:eps1=0.1", samples_per_trajectory=4, statevector_limit=12)
    built = spec.build()
    assert built.samples_per_trajectory == 4
    assert built.max_qubits == 12


def test_backend_spec_rejects_bad_input():
    with pytest.raises(ValueError, match="unknown backend"):
        BackendSpec.parse("qpu")
    with pytest.raises(ValueError, match="takes no ':' detail"):
        BackendSpec.parse("perfect:fast")
    with pytest.raises(ValueError, match="noise spec"):
        BackendSpec.parse("noisy:")
    with pytest.raises(ValueError, match="needs a command"):
        BackendSpec.parse("external:")


def test_external_backend_execute_loopback():
    spec = BackendSpec.parse(f"external:{LOOPBACK}")
    assert external_backend_execute(spec, BELL, 64, seed=3) == run_perfect(BELL, 64, seed=3)
    with pytest.raises(ValueError, match="external"):
        external_backend_execute(BackendSpec.parse("perfect"), BELL, 64)


# ---------------------------------------------------------------------------
# config resolution
# ---------------------------------------------------------------------------


def test_load_config_defaults():
    settings = _load_config(None)
    assert settings["bench"]["shots"] == "2048"
    assert settings["optimizer"]["method"] == "cobyla"
    assert settings["backend"]["kind"] == "perfect"
    assert settings["output"]["report"] == "qscore_report.csv"


def test_load_config_overrides(tmp_path):
    path = tmp_path / "bench.ini"
    path.write_text(
        "[bench]\n"
        "shots = 128  # inline comment\n"
        "family = kreg(3)\n"
        "[optimizer]\n"
        "restarts = 4\n"
    )
    settings = _load_config(str(path))
    assert settings["bench"]["shots"] == "128"
    assert settings["bench"]["family"] == "kreg(3)"
    assert settings["optimizer"]["restarts"] == "4"
    assert settings["bench"]["depth"] == "1"  # untouched default


def test_load_config_rejects_unknown_key(tmp_path):
    path = tmp_path / "bench.ini"
    path.write_text("[bench]\nshotz = 128\n")
    with pytest.raises(ValueError, match=r"unknown key \[bench\] shotz"):
        _load_config(str(path))


def test_load_config_missing_file():
    with pytest.raises(ValueError, match="missing or unreadable"):
        _load_config("/nonexistent/qscore.ini")


def test_resolution_precedence(tmp_path, monkeypatch):
    path = tmp_path / "bench.ini"
    path.write_text("[bench]\nshots = 64\ndepth = 2\nworkers = 5\n")
    parser = build_parser()
    args = parser.parse_args(
        ["run", "--config", str(path), "--shots", "32", "--output", "r.csv"]
    )
    cfg, spec, report_path, raw_path = _resolve_run_settings(args)
    assert cfg.shots == 32          # flag beats config
    assert cfg.depth == 2           # config beats default
    assert cfg.workers == 5
    assert cfg.graphs_per_size == 100  # untouched default
    assert spec.kind == "perfect"
    assert report_path == "r.csv"
    assert raw_path == "qscore_raw.csv"

    monkeypatch.setenv("QSCORE_WORKERS", "3")
    cfg, _, _, _ = _resolve_run_settings(args)
    assert cfg.workers == 3         # env beats everything

    monkeypatch.setenv("QSCORE_WORKERS", "")
    cfg, _, _, _ = _resolve_run_settings(args)
    assert cfg.workers == 5         # empty env is ignored


def test_resolution_optimizer_and_backend_flags():
    args = build_parser().parse_args(
        [
            "run",
            "--backend", "noisy:eps1=0.004,eps2=0.02",
            "--optimizer", "nelder-mead",
            "--max-evaluations", "17",
            "--restarts", "2",
            "--opt-shots", "256",
            "--lambda", "0.2",
            "--time-budget", "30",
        ]
    )
    cfg, spec, _, _ = _resolve_run_settings(args)
    assert cfg.optimizer.method == "nelder-mead"
    assert cfg.optimizer.max_evaluations == 17
    assert cfg.optimizer.restarts == 2
    assert cfg.opt_shots == 256
    assert cfg.lambda_source == 0.2
    assert cfg.time_budget_s == 30.0
    assert spec.kind == "noisy"
    assert spec.noise == NoiseModel(0.004, 0.02)


# ---------------------------------------------------------------------------
# run subcommand
# ---------------------------------------------------------------------------


def _run_args(tmp_path, *extra: str) -> list[str]:
    return [
        "run",
        "--output", str(tmp_path / "report.csv"),
        "--raw-output", str(tmp_path / "raw.csv"),
        "--graphs", "20",
        "--shots", "32",
        "--max-evaluations", "1",
        "--size-min", "5",
        "--size-limit", "7",
        *extra,
    ]


def test_run_random_stub_reports_none(tmp_path, capsys):
    code = main(_run_args(tmp_path, "--backend", "random-stub"))
    assert code == 0
    out = capsys.readouterr().out
    assert "Q-score: none" in out
    assert "backend: random-stub" in out
    report = (tmp_path / "report.csv").read_text().splitlines()
    assert report[0] == REPORT_CSV_HEADER
    assert len(report) == 2  # size_min fails, search stops
    raw = (tmp_path / "raw.csv").read_text().splitlines()
    assert raw[0] == RAWDATA_CSV_HEADER
    assert len(raw) == 21


def test_run_exact_stub_walks_to_limit(tmp_path, capsys):
    code = main(_run_args(tmp_path, "--backend", "exact-stub"))
    assert code == 0
    out = capsys.readouterr().out
    assert "Q-score: 7" in out
    rows = (tmp_path / "report.csv").read_text().splitlines()
    assert len(rows) == 4  # header + sizes 5, 6, 7


def test_run_dichotomic_search(tmp_path, capsys):
    code = main(_run_args(tmp_path, "--backend", "exact-stub", "--search", "dichotomic"))
    assert code == 0
    assert "Q-score: 7" in capsys.readouterr().out


def test_run_rejects_bad_backend(tmp_path, capsys):
    code = main(_run_args(tmp_path, "--backend", "qpu9000"))
    assert code == 2
    assert "unknown backend" in capsys.readouterr().err


def test_run_dead_external_backend_exits_1(tmp_path, capsys):
    code = main(
        _run_args(tmp_path, "--backend", f"external:{sys.executable} -c pass")
    )
    assert code == 1
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# fit-lambda subcommand
# ---------------------------------------------------------------------------


def test_fit_lambda_small_run(tmp_path, capsys):
    out_csv = tmp_path / "fit.csv"
    code = main(
        [
            "fit-lambda",
            "--n-min", "5",
            "--n-max", "8",
            "--instances", "20",
            "--output", str(out_csv),
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "family: er(0.5)" in out
    assert "coefficient:" in out
    lines = out_csv.read_text().splitlines()
    assert lines[0] == FIT_CSV_HEADER
    assert lines[1].startswith("er(0.5),1.5,")


def test_fit_lambda_kreg_filters_parity(capsys):
    code = main(
        ["fit-lambda", "--family", "kreg(3)", "--n-min", "4", "--n-max", "10",
         "--instances", "10"]
    )
    assert code == 0
    out = capsys.readouterr().out
    for n in (4, 6, 8, 10):
        assert f"n={n:3d}" in out
    for n in (5, 7, 9):
        assert f"n={n:3d}" not in out


def test_fit_lambda_too_few_sizes(capsys):
    code = main(["fit-lambda", "--n-min", "5", "--n-max", "7", "--instances", "10"])
    assert code == 2
    assert "4 sizes" in capsys.readouterr().err


def test_fit_lambda_rejects_bad_range(capsys):
    code = main(["fit-lambda", "--n-min", "9", "--n-max", "5"])
    assert code == 2
    assert "n-min" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# plot subcommand
# ---------------------------------------------------------------------------


def test_plot_from_report(tmp_path, capsys):
    assert main(_run_args(tmp_path, "--backend", "exact-stub")) == 0
    svg = tmp_path / "beta.svg"
    code = main(["plot", str(tmp_path / "report.csv"), "--output", str(svg)])
    assert code == 0
    assert svg.exists()
    assert svg.stat().st_size > 0
    assert "plot:" in capsys.readouterr().out


def test_plot_rejects_empty_report(tmp_path, capsys):
    path = tmp_path / "empty.csv"
    path.write_text(REPORT_CSV_HEADER + "\n")
    code = main(["plot", str(path), "--output", str(tmp_path / "x.svg")])
    assert code == 2
    assert "no data rows" in capsys.readouterr().err


def test_plot_skips_nan_rows(tmp_path, capsys):
    path = tmp_path / "nans.csv"
    path.write_text(
        REPORT_CSV_HEADER + "\n"
        "5,nan,nan,nan,False,0.1,0,32,1,er(0.5),0.178\n"
        "6,3.0,0.5,0.01,True,0.1,20,32,1,er(0.5),0.178\n"
    )
    svg = tmp_path / "x.svg"
    assert main(["plot", str(path), "--output", str(svg)]) == 0
    assert svg.exists()


def test_plot_wrong_header_exits_2(tmp_path, capsys):
    path = tmp_path / "junk.csv"
    path.write_text("a,b,c\n1,2,3\n")
    assert main(["plot", str(path), "--output", str(tmp_path / "x.svg")]) == 2
    assert "header" in capsys.readouterr().err
