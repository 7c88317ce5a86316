import sys
from pathlib import Path

from hypothesis import HealthCheck, settings

# Make `import oracles` work no matter where pytest is invoked from.
sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # Echo the per-criterion verdict lines after the summary so they are
    # visible even with output capture on.
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE_LINES", None) if mod else None
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
