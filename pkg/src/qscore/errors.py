"""Exception types shared across the package.

Plain ValueError is used for ordinary parameter violations; the classes here
mark failure modes a caller may want to catch specifically.
"""


class CapabilityError(RuntimeError):
    """A request exceeds a configured resource limit (register size, solver size)."""


class GenerationError(RuntimeError):
    """Random-instance generation failed after exhausting its retry budget."""


class RoutingError(RuntimeError):
    """The coupling graph cannot host the circuit (e.g. disconnected)."""


class FitError(ValueError):
    """Scaling fit rejected its input (too few sizes, degenerate design)."""


class BackendExecutionError(RuntimeError):
    """A backend failed while evaluating the objective; message carries the evaluation index."""


class ProtocolError(RuntimeError):
    """External backend violated the plugin protocol; message names the violation."""
