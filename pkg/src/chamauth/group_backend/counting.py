"""Operation counters for group arithmetic.

Counts are attributed through explicitly opened measurement scopes.  Scopes
are thread-local and stack: every counter on the current thread's stack sees
every group operation executed while it is open, so an outer scope measuring
a whole protocol run and an inner scope measuring a single algorithm both
read correctly.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterator

_local = threading.local()


def _stack() -> list["OpCounter"]:
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = []
        _local.stack = stack
    return stack


@dataclass
class OpCounter:
    """Tally of group operations: exponentiations per group, G1
    multiplications, and pairing evaluations."""

    e1: int = 0
    e2: int = 0
    et: int = 0
    m1: int = 0
    p: int = 0

    def reset(self) -> None:
        self.e1 = self.e2 = self.et = self.m1 = self.p = 0

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (self.e1, self.e2, self.et, self.m1, self.p)

    def snapshot(self) -> "OpCounter":
        return OpCounter(self.e1, self.e2, self.et, self.m1, self.p)

    def __add__(self, other: "OpCounter") -> "OpCounter":
        return OpCounter(
            self.e1 + other.e1,
            self.e2 + other.e2,
            self.et + other.et,
            self.m1 + other.m1,
            self.p + other.p,
        )

    def __str__(self) -> str:
        parts = []
        for label, value in zip(("E1", "E2", "ET", "M1", "P"), self.as_tuple()):
            if value:
                parts.append(f"{value} {label}")
        return " + ".join(parts) if parts else "0"


@contextmanager
def measure(counter: OpCounter | None = None) -> Iterator[OpCounter]:
    """Open a measurement scope on the calling thread."""
    if counter is None:
        counter = OpCounter()
    stack = _stack()
    stack.append(counter)
    try:
        yield counter
    finally:
        stack.pop()


def record_e1(n: int = 1) -> None:
    for c in _stack():
        c.e1 += n


def record_e2(n: int = 1) -> None:
    for c in _stack():
        c.e2 += n


def record_et(n: int = 1) -> None:
    for c in _stack():
        c.et += n


def record_m1(n: int = 1) -> None:
    for c in _stack():
        c.m1 += n


def record_p(n: int = 1) -> None:
    for c in _stack():
        c.p += n
