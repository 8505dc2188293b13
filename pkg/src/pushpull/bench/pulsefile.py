"""Plain-text pulse files.

Layout::

    segments=N controls=M dt_s=TAU
    u_00 u_01 ... u_0(M-1)
    ...

Amplitudes are in rad/s and written with 17 significant digits, which
round-trips every double exactly.
"""
from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from ..errors import PulseFormatError

__all__ = ["export_pulse", "import_pulse", "format_header"]

_HEADER = re.compile(r"^segments=(\d+)\s+controls=(\d+)\s+dt_s=(\S+)\s*$")


def format_header(n: int, m: int, dt: float) -> str:
    return f"segments={n} controls={m} dt_s={dt:.17g}"


def export_pulse(pulse, problem_or_dt, path) -> Path:
    """Write ``pulse`` to ``path``. The second argument is a problem or ``dt`` in seconds."""
    u = np.asarray(pulse, dtype=float)
    dt = getattr(problem_or_dt, "dt", problem_or_dt)
    path = Path(path)
    lines = [format_header(u.shape[0], u.shape[1], float(dt))]
    lines += [" ".join(f"{x:.17g}" for x in row) for row in u]
    path.write_text("\n".join(lines) + "\n")
    return path


def import_pulse(path, expect=None):
    """Read a pulse file; returns ``(pulse, dt)``.

    ``expect`` may be a problem whose ``(N, M, dt)`` must match the header.
    """
    text = Path(path).read_text().splitlines()
    if not text:
        raise PulseFormatError("empty file", line=1)
    m = _HEADER.match(text[0])
    if not m:
        raise PulseFormatError(f"bad header {text[0]!r}", line=1)
    n, nc = int(m.group(1)), int(m.group(2))
    try:
        dt = float(m.group(3))
    except ValueError:
        raise PulseFormatError(f"bad dt_s value {m.group(3)!r}", line=1) from None
    if n < 1 or nc < 1 or not dt > 0:
        raise PulseFormatError("header values must be positive", line=1)
    rows = []
    for lineno, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != nc:
            raise PulseFormatError(f"expected {nc} amplitudes, found {len(parts)}", line=lineno)
        try:
            rows.append([float(x) for x in parts])
        except ValueError as exc:
            raise PulseFormatError(str(exc), line=lineno) from None
    if len(rows) != n:
        raise PulseFormatError(f"expected {n} rows, found {len(rows)}", line=len(text))
    u = np.array(rows, dtype=float)
    if not np.all(np.isfinite(u)):
        raise PulseFormatError("non-finite amplitude")
    if expect is not None:
        if (n, nc) != expect.shape:
            raise PulseFormatError(f"pulse shape {(n, nc)} does not match problem {expect.shape}", line=1)
        if dt != expect.dt:
            raise PulseFormatError(f"dt_s {dt} does not match problem dt {expect.dt}", line=1)
    return u, dt
