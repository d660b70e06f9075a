"""Fit-time audit trail.

Transform fitting and GP fitting report which dataset rows they saw.  Inside
a capture block the records accumulate; tests assert that no fit ever
touched held-out rows.  Outside a capture block recording is a no-op, so the
hook costs nothing in normal runs.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterator, Sequence

_LOG: list["FitRecord"] | None = None


@dataclass(frozen=True)
class FitRecord:
    kind: str  # "transform" | "gp"
    rows: tuple[int, ...]


@contextmanager
def capture_fits() -> Iterator[list[FitRecord]]:
    global _LOG
    prev = _LOG
    _LOG = []
    try:
        yield _LOG
    finally:
        _LOG = prev


def record_fit(kind: str, rows: Sequence[int] | None) -> None:
    if _LOG is not None and rows is not None:
        _LOG.append(FitRecord(kind, tuple(int(r) for r in rows)))
