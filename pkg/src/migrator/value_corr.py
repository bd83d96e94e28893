"""Lazy enumeration of candidate value correspondences.

One boolean variable per (source attribute, target attribute) pair. Hard
clauses rule out type-incompatible pairs and force every queried source
attribute to map somewhere; soft clauses prefer similarly named attributes
and near one-to-one mappings. Rejected candidates are blocked by negating
their full assignment.

The encoding couples variables only within one source attribute's row (the
blocking clauses being the exception), so instead of re-running a generic
MaxSAT solver per candidate, enumeration walks assignments in descending
weight exactly: each row's feasible configurations are ranked once, and a
best-first merge yields whole assignments in weight order with ties broken
to the lexicographically least assignment, skipping blocked ones.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Optional

from .core import (
    And,
    Attribute,
    Cmp,
    FuncKind,
    InQuery,
    MigratorError,
    Not,
    Or,
    Program,
    Proj,
    QAttr,
    QueryStmt,
    Schema,
    Sel,
    ValueCorrespondence,
    flatten_seq,
)
from .solver import CnfFormula, add_hard

DEFAULT_ALPHA = 100

# feasible configurations per source attribute are materialized up front
_ROW_CONFIG_LIMIT = 2**20


def levenshtein(a: str, b: str) -> int:
    """Minimum number of single-character edits turning a into b."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(
                min(
                    prev[j] + 1,  # delete
                    cur[j - 1] + 1,  # insert
                    prev[j - 1] + (ca != cb),  # substitute
                )
            )
        prev = cur
    return prev[-1]


def queried_attrs(p: Program) -> set[QAttr]:
    """Attributes appearing in a projection list or predicate of any query
    function. Equivalence observes only query outputs, so only these must be
    preserved by a correspondence."""
    out: set[QAttr] = set()

    def walk_pred(pred) -> None:
        if isinstance(pred, Cmp):
            out.add(pred.lhs)
            if isinstance(pred.rhs, QAttr):
                out.add(pred.rhs)
        elif isinstance(pred, InQuery):
            out.add(pred.attr)
            walk_query(pred.query)
        elif isinstance(pred, (And, Or)):
            walk_pred(pred.left)
            walk_pred(pred.right)
        elif isinstance(pred, Not):
            walk_pred(pred.inner)

    def walk_query(q) -> None:
        if isinstance(q, Proj):
            out.update(q.attrs)
            walk_query(q.sub)
        elif isinstance(q, Sel):
            walk_pred(q.pred)
            walk_query(q.sub)

    for f in p.functions:
        if f.kind is not FuncKind.QUERY:
            continue
        for stmt in flatten_seq(f.body):
            if isinstance(stmt, QueryStmt):
                walk_query(stmt.query)
    return out


def sim(alpha: int, a: Attribute, b: Attribute) -> int:
    """Name-similarity weight; qualified names keep namesake attributes of
    the same table strictly ahead of same-named attributes elsewhere."""
    return max(0, alpha - levenshtein(str(a.qualified), str(b.qualified)))


@dataclass(frozen=True)
class _RowConfig:
    bits: tuple[bool, ...]  # over the row's variables, target order
    weight: int


@dataclass
class VcEncoding:
    """Pair variables, their formula, and the enumeration state."""

    source_attrs: tuple[Attribute, ...]
    target_attrs: tuple[Attribute, ...]
    formula: CnfFormula
    alpha: int
    blocked: int = 0
    # per-row feasible configurations, descending weight then lex bits
    _rows: list[list[_RowConfig]] = field(default_factory=list, repr=False)
    _heap: list = field(default_factory=list, repr=False)
    _seen: set = field(default_factory=set, repr=False)
    _emitted: set = field(default_factory=set, repr=False)

    def var(self, i: int, j: int) -> int:
        return i * len(self.target_attrs) + j + 1


def encode_vc(
    source: Schema, target: Schema, p: Program, alpha: int = DEFAULT_ALPHA
) -> VcEncoding:
    """Weighted encoding over all (source attribute, target attribute) pairs.

    Hard: no type-incompatible pair; every queried source attribute maps to
    at least one target. Soft: a unit clause per compatible pair weighted by
    name similarity, and a one-to-one prior clause per target pair.
    """
    src = source.all_attributes()
    tgt = target.all_attributes()
    longest = max((len(str(a.qualified)) for a in src + tgt), default=0)
    if alpha <= longest:
        raise ValueError(f"alpha must exceed the longest attribute name ({longest})")
    n, m = len(src), len(tgt)
    enc = VcEncoding(src, tgt, CnfFormula(num_vars=n * m), alpha)
    hard: list[tuple[int, ...]] = []
    soft: list[tuple[tuple[int, ...], int]] = []
    queried = queried_attrs(p)
    for i, a in enumerate(src):
        for j, b in enumerate(tgt):
            if a.ty != b.ty:
                hard.append((-enc.var(i, j),))
            else:
                soft.append(((enc.var(i, j),), sim(alpha, a, b)))
        if a.qualified in queried:
            hard.append(tuple(enc.var(i, j) for j in range(m)))
        # prefer one-to-one mappings: penalize each extra target
        for j in range(m):
            for k in range(j + 1, m):
                soft.append(((-enc.var(i, j), -enc.var(i, k)), alpha))
    enc.formula = CnfFormula(num_vars=n * m, hard=tuple(hard), soft=tuple(soft))
    _init_enumeration(enc, queried)
    return enc


def _init_enumeration(enc: VcEncoding, queried: set[QAttr]) -> None:
    m = len(enc.target_attrs)
    pair_weight = m * (m - 1) // 2 * enc.alpha
    for a in enc.source_attrs:
        compatible = [
            j for j, b in enumerate(enc.target_attrs) if b.ty == a.ty
        ]
        if 2 ** len(compatible) > _ROW_CONFIG_LIMIT:
            raise MigratorError(
                f"too many candidate targets for {a.qualified} to rank exactly"
            )
        must_map = a.qualified in queried
        configs = []
        for size in range(0, len(compatible) + 1):
            if size == 0 and must_map:
                continue
            for chosen in itertools.combinations(compatible, size):
                bits = [False] * m
                weight = pair_weight - enc.alpha * (size * (size - 1) // 2)
                for j in chosen:
                    bits[j] = True
                    weight += sim(enc.alpha, a, enc.target_attrs[j])
                configs.append(_RowConfig(tuple(bits), weight))
        if not configs:
            return  # a queried attribute with no compatible target: unsat
        configs.sort(key=lambda c: (-c.weight, c.bits))
        enc._rows.append(configs)
    first = tuple(0 for _ in enc._rows)
    heapq.heappush(enc._heap, (_heap_key(enc, first), first))
    enc._seen.add(first)


def _heap_key(enc: VcEncoding, state: tuple[int, ...]):
    weight = sum(enc._rows[i][k].weight for i, k in enumerate(state))
    bits = tuple(
        bit for i, k in enumerate(state) for bit in enc._rows[i][k].bits
    )
    return (-weight, bits)


def _next_assignment(enc: VcEncoding) -> Optional[tuple[bool, ...]]:
    """Next-best full assignment in (weight desc, lexicographic) order."""
    if len(enc._rows) != len(enc.source_attrs):
        return None  # some row was infeasible, hard part unsatisfiable
    while enc._heap:
        (neg_weight, bits), state = heapq.heappop(enc._heap)
        for i in range(len(state)):
            if state[i] + 1 < len(enc._rows[i]):
                succ = state[:i] + (state[i] + 1,) + state[i + 1 :]
                if succ not in enc._seen:
                    enc._seen.add(succ)
                    heapq.heappush(enc._heap, (_heap_key(enc, succ), succ))
        if bits not in enc._emitted:
            enc._emitted.add(bits)
            return bits
    return None


def correspondence_of(enc: VcEncoding, bits: tuple[bool, ...]) -> ValueCorrespondence:
    m = len(enc.target_attrs)
    phi: dict[QAttr, tuple[QAttr, ...]] = {}
    for i, a in enumerate(enc.source_attrs):
        images = tuple(
            b.qualified
            for j, b in enumerate(enc.target_attrs)
            if bits[i * m + j]
        )
        phi[a.qualified] = images
    return phi


def next_value_corr(enc: VcEncoding) -> Optional[ValueCorrespondence]:
    """Best unblocked correspondence, or None when exhausted.

    Each returned assignment is also blocked on the formula by adding the
    negation of the full assignment over all pair variables, keeping the
    formula in sync with the enumeration state.
    """
    bits = _next_assignment(enc)
    if bits is None:
        return None
    blocking = tuple(
        -(v + 1) if bits[v] else (v + 1) for v in range(enc.formula.num_vars)
    )
    enc.formula = add_hard(enc.formula, blocking)
    enc.blocked += 1
    return correspondence_of(enc, bits)


def assignment_weight(enc: VcEncoding, bits: tuple[bool, ...]) -> int:
    """Total satisfied soft weight of a full assignment (for tests)."""
    total = 0
    for clause, weight in enc.formula.soft:
        if any((lit > 0) == bits[abs(lit) - 1] for lit in clause):
            total += weight
    return total


def format_correspondence(phi: ValueCorrespondence) -> str:
    lines = []
    for src in sorted(phi, key=str):
        for tgt in phi[src]:
            lines.append(f"{src} -> {tgt}")
    return "\n".join(lines)
