"""Q-score benchmark harness.

Scores a backend by the largest graph size n at which QAOA still captures
more than beta_star of the optimal-minus-random MaxCut margin. Ships its
own graph generators, exact solver, statevector and noise simulators,
optimizer loop, and an external-backend plugin protocol.
"""

from .backends import (
    Backend,
    ExactStubBackend,
    NoisyBackend,
    PerfectBackend,
    RandomStubBackend,
)
from .bench import (
    BenchmarkConfig,
    BenchmarkReport,
    InstanceRecord,
    ScoreError,
    SizeScore,
    find_qscore,
    fit_nu,
    read_report_csv,
    resolve_connectivity,
    score_size,
    summary_text,
    write_raw_data,
    write_report_csv,
)
from .circuit import (
    Circuit,
    Connectivity,
    GateOp,
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
from .errors import (
    BackendExecutionError,
    CapabilityError,
    FitError,
    GenerationError,
    ProtocolError,
    RoutingError,
)
from .graphs import (
    Family,
    Graph,
    ScalingFit,
    analytic_lambda,
    cut_value,
    erdos_renyi,
    expected_max_cut,
    fit_lambda,
    generate_erdos_renyi,
    generate_k_regular,
    k_regular,
    maxcut_exact,
    read_graph,
    write_graph,
)
from .optim import (
    Evaluation,
    OptimizationTrace,
    OptimizerConfig,
    estimate_energy,
    optimize,
)
from .plugin import PROTOCOL_VERSION, ExternalBackend, serve_stdin
from .seeding import derive_seed
from .sim import (
    NoiseModel,
    ShotCounts,
    circuit_unitary,
    density_oracle,
    run_noisy,
    run_perfect,
    statevector,
)

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "BackendExecutionError",
    "BenchmarkConfig",
    "BenchmarkReport",
    "CapabilityError",
    "Circuit",
    "Connectivity",
    "Evaluation",
    "ExactStubBackend",
    "ExternalBackend",
    "Family",
    "FitError",
    "GateOp",
    "GenerationError",
    "Graph",
    "InstanceRecord",
    "NoiseModel",
    "NoisyBackend",
    "OptimizationTrace",
    "OptimizerConfig",
    "PROTOCOL_VERSION",
    "PerfectBackend",
    "ProtocolError",
    "QaoaParams",
    "RandomStubBackend",
    "RoutingError",
    "ScalingFit",
    "ScoreError",
    "ShotCounts",
    "SizeScore",
    "all_to_all",
    "analytic_lambda",
    "build_qaoa_circuit",
    "circuit_from_dict",
    "circuit_to_dict",
    "circuit_unitary",
    "coupling_list",
    "cut_value",
    "density_oracle",
    "derive_seed",
    "erdos_renyi",
    "estimate_energy",
    "expected_max_cut",
    "find_qscore",
    "fit_lambda",
    "fit_nu",
    "generate_erdos_renyi",
    "generate_k_regular",
    "grid",
    "grid_for",
    "k_regular",
    "maxcut_exact",
    "optimize",
    "read_graph",
    "read_report_csv",
    "resolve_connectivity",
    "route",
    "run_noisy",
    "run_perfect",
    "score_size",
    "serve_stdin",
    "statevector",
    "summary_text",
    "write_graph",
    "write_raw_data",
    "write_report_csv",
]
