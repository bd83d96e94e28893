"""Sketch completion: encode holes as exactly-one groups, enumerate models,
test candidates against the source program, and block failures using the
holes of the functions named in a minimum failing input.

Blocking a failing partial assignment (rather than the whole model) excludes
every completion that agrees with the candidate on the holes that provably
suffice to reproduce the failure.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Union

from .core import (
    ChoiceNode,
    Cmp,
    Del,
    HoleAttr,
    HoleBool,
    HoleJoin,
    HoleTables,
    Hole,
    IllFormedSketchError,
    InQuery,
    Ins,
    And,
    JoinChain,
    JoinQ,
    MigratorError,
    Not,
    Or,
    Program,
    Proj,
    QAttr,
    QueryStmt,
    Schema,
    Sel,
    Seq,
    SketchIns,
    SketchProgram,
    Upd,
    attrs_of,
    iter_statements,
    substitute,
    tables_of,
    validate_program,
)
from .equiv import TestConfig, find_mfi
from .interpreter import InvocationSequence
from .solver import (
    CnfFormula,
    Model,
    SolverLimitError,
    add_hard,
    count_models,
    sat_solve,
)


@dataclass(frozen=True)
class HoleVarMap:
    """Bidirectional map between (hole id, domain index) and solver variables."""

    holes: tuple[Hole, ...]
    var_of: dict[tuple[int, int], int]
    hole_of: dict[int, tuple[int, int]]
    owner_of: dict[int, str]
    num_vars: int

    def choices_from_model(self, m: Model) -> dict[int, int]:
        choices: dict[int, int] = {}
        for (hole_id, idx), var in self.var_of.items():
            if m[var]:
                choices[hole_id] = idx
        return choices

    def holes_of_functions(self, names: set[str]) -> list[int]:
        return sorted(h.id for h in self.holes if self.owner_of[h.id] in names)


def _domain_size(h: Hole) -> int:
    return 2 if isinstance(h, HoleBool) else len(h.domain)


def encode_sketch(
    sketch: SketchProgram, wf_constraints: bool = True
) -> tuple[CnfFormula, HoleVarMap]:
    """One exactly-one group per hole; optionally hard side constraints that
    exclude structurally ill-formed hole combinations (delete table lists not
    contained in the chosen join, attributes outside the chosen join)."""
    holes = tuple(sketch.holes())
    var_of: dict[tuple[int, int], int] = {}
    hole_of: dict[int, tuple[int, int]] = {}
    owner_of: dict[int, str] = {}
    var = 0
    groups = []
    for h in holes:
        owner_of[h.id] = h.owner
        group = []
        for idx in range(_domain_size(h)):
            var += 1
            var_of[(h.id, idx)] = var
            hole_of[var] = (h.id, idx)
            group.append(var)
        groups.append(tuple(group))
    hv = HoleVarMap(holes, var_of, hole_of, owner_of, var)
    hard: list[tuple[int, ...]] = []
    if wf_constraints:
        for f in sketch.functions:
            for stmt in iter_statements(f.body):
                hard.extend(_wf_clauses(stmt, hv))
    formula = CnfFormula(
        num_vars=var, hard=tuple(hard), xor_groups=tuple(groups)
    )
    return formula, hv


# ---- well-formedness side constraints ----


def _join_options(join) -> list[tuple[Optional[tuple[int, int]], JoinChain]]:
    """(selector, chain) pairs; selector None for a concrete join."""
    if isinstance(join, HoleJoin):
        return [((join.id, i), c) for i, c in enumerate(join.domain)]
    return [(None, join)]


def _attr_options(attr) -> list[tuple[Optional[tuple[int, int]], QAttr]]:
    if isinstance(attr, HoleAttr):
        return [((attr.id, i), a) for i, a in enumerate(attr.domain)]
    return [(None, attr)]


def _scope_clauses(
    join,
    attrs: list,
    hv: HoleVarMap,
) -> Iterator[tuple[int, ...]]:
    """Exclude (attr option, join option) pairs where the attribute's table is
    not part of the chain. Clauses degrade to units when one side is fixed."""
    joins = _join_options(join)
    for attr in attrs:
        for asel, a in _attr_options(attr):
            for jsel, chain in joins:
                if a.table in tables_of(chain):
                    continue
                lits = []
                if asel is not None:
                    lits.append(-hv.var_of[asel])
                if jsel is not None:
                    lits.append(-hv.var_of[jsel])
                if lits:
                    yield tuple(lits)
                # with both sides concrete the statement is unconditionally
                # ill-formed; instantiation reports it instead


def _pred_attrs(pred, out: list, subscopes: list) -> None:
    if isinstance(pred, Cmp):
        out.append(pred.lhs)
        if isinstance(pred.rhs, (QAttr, HoleAttr)):
            out.append(pred.rhs)
    elif isinstance(pred, InQuery):
        out.append(pred.attr)
        subscopes.append(pred.query)
    elif isinstance(pred, (And, Or)):
        _pred_attrs(pred.left, out, subscopes)
        _pred_attrs(pred.right, out, subscopes)
    elif isinstance(pred, Not):
        _pred_attrs(pred.inner, out, subscopes)


def _query_scopes(q) -> list[tuple[object, list]]:
    """(join, attrs) scopes of a query, innermost join governing outer preds."""
    attrs: list = []
    subqueries: list = []
    cur = q
    while True:
        if isinstance(cur, Proj):
            attrs.extend(cur.attrs)
            cur = cur.sub
        elif isinstance(cur, Sel):
            _pred_attrs(cur.pred, attrs, subqueries)
            cur = cur.sub
        elif isinstance(cur, JoinQ):
            break
        else:
            raise MigratorError(f"unknown query node {cur!r}")
    scopes = [(cur.join, attrs)]
    for sub in subqueries:
        scopes.extend(_query_scopes(sub))
    return scopes


def _wf_clauses(stmt, hv: HoleVarMap) -> Iterator[tuple[int, ...]]:
    if isinstance(stmt, SketchIns):
        yield from _scope_clauses(stmt.join, [a for a, _ in stmt.assigns], hv)
    elif isinstance(stmt, Ins):
        return
    elif isinstance(stmt, Del):
        attrs: list = []
        subqueries: list = []
        _pred_attrs(stmt.pred, attrs, subqueries)
        yield from _scope_clauses(stmt.join, attrs, hv)
        for sub in subqueries:
            for join, sattrs in _query_scopes(sub):
                yield from _scope_clauses(join, sattrs, hv)
        # delete targets must be a subset of the chosen chain's tables
        joins = _join_options(stmt.join)
        if isinstance(stmt.tables, HoleTables):
            for ti, subset in enumerate(stmt.tables.domain):
                tsel = hv.var_of[(stmt.tables.id, ti)]
                for jsel, chain in joins:
                    if set(subset) <= set(tables_of(chain)):
                        continue
                    lits = [-tsel]
                    if jsel is not None:
                        lits.append(-hv.var_of[jsel])
                    yield tuple(lits)
        else:
            for jsel, chain in joins:
                if jsel is not None and not set(stmt.tables) <= set(tables_of(chain)):
                    yield (-hv.var_of[jsel],)
    elif isinstance(stmt, Upd):
        attrs = [stmt.attr]
        subqueries = []
        _pred_attrs(stmt.pred, attrs, subqueries)
        yield from _scope_clauses(stmt.join, attrs, hv)
        for sub in subqueries:
            for join, sattrs in _query_scopes(sub):
                yield from _scope_clauses(join, sattrs, hv)
    elif isinstance(stmt, QueryStmt):
        for join, sattrs in _query_scopes(stmt.query):
            yield from _scope_clauses(join, sattrs, hv)


# ---- instantiation ----


def instantiate(
    sketch: SketchProgram,
    m: Model,
    hv: HoleVarMap,
    schema: Schema,
) -> Program:
    """Program obtained by filling every hole with its selected element.

    Raises IllFormedSketchError naming the offending hole assignments when
    the combination is structurally invalid (possible only with
    well-formedness constraints disabled, or for hand-built sketches).
    """
    choices = hv.choices_from_model(m)
    program = substitute(sketch, choices, schema)
    diagnostics = validate_program(program, schema)
    if diagnostics:
        # fall back to blaming every hole of the offending functions
        bad = {d.function for d in diagnostics}
        pairs = [
            (h.id, choices[h.id])
            for h in hv.holes
            if hv.owner_of[h.id] in bad and h.id in choices
        ]
        raise IllFormedSketchError(
            "; ".join(str(d) for d in diagnostics), pairs
        )
    return program


def block_from_mfi(
    m: Model, omega: InvocationSequence, hv: HoleVarMap
) -> tuple[int, ...]:
    """Clause negating the model's choices for the holes of the functions
    appearing in the failing input."""
    names = set(omega.function_names())
    choices = hv.choices_from_model(m)
    return tuple(
        -hv.var_of[(hole_id, choices[hole_id])]
        for hole_id in hv.holes_of_functions(names)
    )


def _block_model(m: Model, hv: HoleVarMap) -> tuple[int, ...]:
    choices = hv.choices_from_model(m)
    return tuple(
        -hv.var_of[(h.id, choices[h.id])] for h in hv.holes
    )


# ---- completion loop ----


@dataclass
class SolveConfig:
    source_schema: Schema
    target_schema: Schema
    test: TestConfig = field(default_factory=TestConfig)
    wf_constraints: bool = True
    block_mode: str = "mfi"  # "mfi" or "model" (single-model baseline)
    timeout: Optional[float] = None  # seconds for this completion run
    progress: Optional[Callable[[int, Optional[int], Optional[str]], None]] = None
    count_threshold: int = 200_000


@dataclass
class CompletionResult:
    program: Optional[Program]
    status: str  # "found", "exhausted", or "timeout"
    iterations: int  # models obtained from the solver
    ill_formed: int = 0
    last_mfi: Optional[InvocationSequence] = None


def completion_count(sketch: SketchProgram) -> int:
    """Size of the unconstrained completion space (product of hole domains)."""
    return math.prod(_domain_size(h) for h in sketch.holes())


def complete_sketch(
    sketch: SketchProgram, source: Program, cfg: SolveConfig
) -> CompletionResult:
    """Find a completion that bounded-verifies against the source program.

    Returns status "exhausted" when the constraint space empties without a
    verified candidate and "timeout" when the deadline passes first; a
    returned program always passes bounded verification.
    """
    formula, hv = encode_sketch(sketch, cfg.wf_constraints)
    deadline = None if cfg.timeout is None else time.monotonic() + cfg.timeout
    countable = completion_count(sketch) <= cfg.count_threshold
    iterations = 0
    ill_formed = 0
    last_mfi: Optional[InvocationSequence] = None
    while True:
        if deadline is not None and time.monotonic() > deadline:
            return CompletionResult(None, "timeout", iterations, ill_formed, last_mfi)
        m = sat_solve(formula)
        if m is None:
            return CompletionResult(None, "exhausted", iterations, ill_formed, last_mfi)
        iterations += 1
        try:
            candidate = instantiate(sketch, m, hv, cfg.target_schema)
        except IllFormedSketchError as e:
            ill_formed += 1
            clause = tuple(-hv.var_of[pair] for pair in e.pairs)
            formula = add_hard(formula, clause)
            continue
        omega = find_mfi(
            source, candidate, cfg.test, cfg.source_schema, cfg.target_schema
        )
        if omega is None:
            return CompletionResult(candidate, "found", iterations, ill_formed, last_mfi)
        last_mfi = omega
        if cfg.block_mode == "mfi":
            clause = block_from_mfi(m, omega, hv)
        else:
            clause = _block_model(m, hv)
        formula = add_hard(formula, clause)
        if cfg.progress is not None:
            remaining = None
            if countable:
                try:
                    remaining = count_models(formula)
                except SolverLimitError:
                    remaining = None
            cfg.progress(iterations, remaining, str(omega))


def enumerate_completions(
    sketch: SketchProgram, schema: Schema
) -> Iterator[Program]:
    """Brute-force walk of the completion space, skipping ill-formed
    combinations. Duplicates possible when choice branches overlap."""
    import itertools

    holes = sketch.holes()
    ranges = [range(_domain_size(h)) for h in holes]
    for combo in itertools.product(*ranges):
        choices = dict(zip((h.id for h in holes), combo))
        try:
            program = substitute(sketch, choices, schema)
        except IllFormedSketchError:
            continue
        if validate_program(program, schema):
            continue
        yield program
