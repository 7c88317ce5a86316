"""Line-oriented JSON protocol for external simulator processes.

Each request is a single line on the child's stdin:

    {"version": 1, "shots": 2048, "seed": 12345, "circuit": {...}}

where "circuit" is the serialized form produced by circuit_to_dict. The
child must answer with exactly one line on stdout, either

    {"version": 1, "counts": {"010": 1030, "101": 1018}, "total": 2048}

or {"version": 1, "error": "message"}. Counts must sum to both "total" and
the requested shot budget, and every key must be a bitstring of the
circuit's width (leftmost character = qubit 0). The child stays alive
between requests; it is started lazily on first use so a backend instance
can be pickled into worker processes before it ever runs.
"""

from __future__ import annotations

import json
import os
import selectors
import subprocess
import sys
import time
from dataclasses import dataclass, field

from .circuit import Circuit, circuit_from_dict, circuit_to_dict
from .errors import ProtocolError
from .sim import NoiseModel, ShotCounts, run_noisy, run_perfect

PROTOCOL_VERSION = 1


@dataclass
class ExternalBackend:
    """Backend that forwards circuits to a child process over pipes."""

    command: list[str]
    timeout_s: float = 600.0
    _child: subprocess.Popen | None = field(default=None, repr=False, compare=False)
    _pending: bytes = field(default=b"", repr=False, compare=False)

    def label(self) -> str:
        return f"external({' '.join(self.command)})"

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_child"] = None
        state["_pending"] = b""
        return state

    def _ensure_child(self) -> subprocess.Popen:
        if self._child is not None and self._child.poll() is None:
            return self._child
        self._child = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
        )
        self._pending = b""
        return self._child

    def close(self) -> None:
        if self._child is not None:
            if self._child.poll() is None:
                self._child.kill()
            self._child.wait()
            for pipe in (self._child.stdin, self._child.stdout, self._child.stderr):
                if pipe is not None:
                    pipe.close()
            self._child = None

    def _fail(self, child: subprocess.Popen, reason: str) -> ProtocolError:
        stderr_tail = b""
        if child.poll() is not None and child.stderr is not None:
            try:
                stderr_tail = child.stderr.read() or b""
            except (OSError, ValueError):
                stderr_tail = b""
        self.close()
        detail = f"external backend {self.command!r}: {reason}"
        if child.returncode is not None:
            detail += f" (exit code {child.returncode})"
        if stderr_tail.strip():
            detail += f"; stderr: {stderr_tail.decode(errors='replace').strip()[-500:]}"
        return ProtocolError(detail)

    def _read_line(self, child: subprocess.Popen, deadline: float) -> bytes:
        sel = selectors.DefaultSelector()
        sel.register(child.stdout, selectors.EVENT_READ)
        try:
            while b"\n" not in self._pending:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    child.kill()
                    raise self._fail(child, f"timed out after {self.timeout_s:g}s")
                if not sel.select(timeout=remaining):
                    continue
                chunk = os.read(child.stdout.fileno(), 65536)
                if not chunk:
                    child.wait(timeout=5)
                    raise self._fail(child, "exited before answering")
                self._pending += chunk
        finally:
            sel.close()
        line, self._pending = self._pending.split(b"\n", 1)
        return line

    def run(self, circuit: Circuit, shots: int, seed: int) -> ShotCounts:
        child = self._ensure_child()
        request = {
            "version": PROTOCOL_VERSION,
            "shots": int(shots),
            "seed": int(seed),
            "circuit": circuit_to_dict(circuit),
        }
        try:
            child.stdin.write(json.dumps(request).encode() + b"\n")
            child.stdin.flush()
        except (BrokenPipeError, OSError):
            child.wait(timeout=5)
            raise self._fail(child, "closed stdin before accepting the request") from None

        line = self._read_line(child, time.monotonic() + self.timeout_s)
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise self._fail(child, f"sent a non-JSON response: {line[:200]!r}") from exc
        if not isinstance(response, dict):
            raise self._fail(child, f"sent a non-object response: {line[:200]!r}")
        if response.get("version") != PROTOCOL_VERSION:
            raise self._fail(child, f"sent protocol version {response.get('version')!r}, "
                                    f"expected {PROTOCOL_VERSION}")
        if "error" in response:
            raise self._fail(child, f"reported an error: {response['error']}")
        counts = response.get("counts")
        total = response.get("total")
        if not isinstance(counts, dict) or not isinstance(total, int):
            raise self._fail(child, "response is missing 'counts' or 'total'")
        declared = sum(counts.values())
        if declared != total:
            raise self._fail(child, f"count sum {declared} does not match declared total {total}")
        if total != shots:
            raise self._fail(child, f"returned {total} shots, requested {shots}")
        try:
            result = ShotCounts(counts, shots)
        except (ValueError, TypeError) as exc:
            raise self._fail(child, f"returned invalid counts: {exc}") from exc
        if result.num_bits != circuit.num_qubits:
            raise self._fail(
                child,
                f"returned {result.num_bits}-bit keys for a {circuit.num_qubits}-qubit circuit",
            )
        return result


def serve_stdin(noise: NoiseModel | None = None,
                stdin=None, stdout=None) -> None:
    """Answer protocol requests on stdin with the built-in simulators.

    With a noise model, every request runs through the trajectory sampler;
    otherwise through the perfect statevector path. Used by `qscore serve`
    to exercise the external-backend plumbing against a known-good engine.
    """
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for raw in stdin:
        if not raw.strip():
            continue
        try:
            request = json.loads(raw)
            if request.get("version") != PROTOCOL_VERSION:
                raise ValueError(f"unsupported protocol version {request.get('version')!r}")
            circuit = circuit_from_dict(request["circuit"])
            shots = int(request["shots"])
            seed = int(request["seed"])
            if noise is None or noise.is_trivial:
                counts = run_perfect(circuit, shots, seed)
            else:
                counts = run_noisy(circuit, noise, shots, seed)
            reply = {"version": PROTOCOL_VERSION,
                     "counts": counts.counts,
                     "total": counts.shots}
        except Exception as exc:  # noqa: BLE001  (report, keep serving)
            reply = {"version": PROTOCOL_VERSION, "error": f"{type(exc).__name__}: {exc}"}
        stdout.write(json.dumps(reply) + "\n")
        stdout.flush()


__all__ = ["PROTOCOL_VERSION", "ExternalBackend", "serve_stdin"]
