"""Bounded exhaustive testing of program equivalence.

All invocation sequences up to a length bound are generated from per-type
seed constants, in increasing length and deterministic lexicographic order,
so the first failing sequence is a minimum failing input over the seeded
universe.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .core import FuncKind, Program, Schema, Value, ValueType
from .interpreter import InvocationSequence, run_sequence


@dataclass(frozen=True)
class TestConfig:
    seeds: dict[ValueType, tuple[Value, ...]] = field(
        default_factory=lambda: {
            ValueType.INT: (0, 1),
            ValueType.STR: ("A", "B"),
            ValueType.BIN: (b"\x00", b"\x01"),
        }
    )
    max_len: int = 3
    compare: str = "bag"  # "bag" or "list"

    def __post_init__(self) -> None:
        if self.max_len < 1:
            raise ValueError("bound must be >= 1")
        if self.compare not in ("bag", "list"):
            raise ValueError(f"unknown comparison mode {self.compare!r}")
        for ty, values in self.seeds.items():
            if not values:
                raise ValueError(f"empty seed set for {ty.value}")


def _calls_for(p: Program, kind: FuncKind, cfg: TestConfig):
    """Every (function, argument tuple) instantiation, in declaration order
    then seed order."""
    calls = []
    for f in p.functions:
        if f.kind is not kind:
            continue
        pools = [cfg.seeds[ty] for _, ty in f.params]
        for args in itertools.product(*pools):
            calls.append((f.name, args))
    return calls


def gen_sequences(p: Program, cfg: TestConfig) -> Iterator[InvocationSequence]:
    """All seeded sequences of at most cfg.max_len calls ending in a query."""
    updates = _calls_for(p, FuncKind.UPDATE, cfg)
    queries = _calls_for(p, FuncKind.QUERY, cfg)
    for length in range(1, cfg.max_len + 1):
        for prefix in itertools.product(updates, repeat=length - 1):
            for q in queries:
                yield InvocationSequence(prefix + (q,))


def _same_signatures(p: Program, p2: Program) -> bool:
    if len(p.functions) != len(p2.functions):
        return False
    for f, g in zip(p.functions, p2.functions):
        if (f.name, f.kind, f.params) != (g.name, g.kind, g.params):
            return False
    return True


def results_equal(rows: list, rows2: list, compare: str) -> bool:
    if compare == "list":
        return rows == rows2
    return Counter(rows) == Counter(rows2)


def find_mfi(
    p: Program,
    p2: Program,
    cfg: TestConfig,
    schema: Schema,
    schema2: Schema,
) -> Optional[InvocationSequence]:
    """First seeded sequence on which the two programs disagree, or None.

    Length-ascending enumeration makes the result minimal over the seeded
    universe.
    """
    if not _same_signatures(p, p2):
        raise ValueError("programs have different function signatures")
    for omega in gen_sequences(p, cfg):
        r1 = run_sequence(p, omega, schema)
        r2 = run_sequence(p2, omega, schema2)
        if not results_equal(r1, r2, cfg.compare):
            return omega
    return None


def bounded_verify(
    p: Program,
    p2: Program,
    cfg: TestConfig,
    schema: Schema,
    schema2: Schema,
) -> bool:
    """True iff no seeded sequence within the bound distinguishes p and p2."""
    return find_mfi(p, p2, cfg, schema, schema2) is None
