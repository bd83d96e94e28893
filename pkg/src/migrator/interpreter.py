"""Executable semantics: query evaluation, updates, and invocation sequences.

Instances are insertion-ordered lists of tuples; joins are evaluated by
nested loops in left-to-right order. This module is the semantics oracle for
equivalence testing, not a DBMS.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .core import (
    And,
    BaseTable,
    Cmp,
    CmpOp,
    Del,
    EquiJoin,
    FreshUid,
    FuncKind,
    InQuery,
    Ins,
    JoinChain,
    JoinQ,
    MigratorError,
    Not,
    Or,
    Param,
    Predicate,
    Program,
    Proj,
    QAttr,
    Query,
    QueryStmt,
    Schema,
    Sel,
    Seq,
    Statement,
    Uid,
    Upd,
    Value,
    ValueType,
    attrs_of,
    tables_of,
    type_of_value,
)

Row = tuple[Value, ...]


class SemanticError(MigratorError):
    pass


@dataclass
class Instance:
    """Mutable runtime database state: table name -> list of rows."""

    schema: Schema
    tables: dict[str, list[Row]] = field(default_factory=dict)

    @classmethod
    def empty(cls, schema: Schema) -> "Instance":
        return cls(schema, {t.name: [] for t in schema.tables})

    def rows(self, table: str) -> list[Row]:
        return self.tables.setdefault(table, [])

    def copy(self) -> "Instance":
        return Instance(self.schema, {k: list(v) for k, v in self.tables.items()})


@dataclass(frozen=True)
class InvocationSequence:
    """Update calls followed by one query call, each with concrete arguments."""

    calls: tuple[tuple[str, tuple[Value, ...]], ...]

    def __str__(self) -> str:
        return "; ".join(
            f"{name}({', '.join(map(repr, args))})" for name, args in self.calls
        )

    def function_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.calls)


def check_sequence(p: Program, omega: InvocationSequence) -> None:
    """Raise unless omega is a valid invocation sequence for p."""
    if not omega.calls:
        raise SemanticError("empty invocation sequence")
    for i, (name, args) in enumerate(omega.calls):
        f = p.function(name)
        if f is None:
            raise SemanticError(f"unknown function {name}")
        expected_kind = FuncKind.QUERY if i == len(omega.calls) - 1 else FuncKind.UPDATE
        if f.kind is not expected_kind:
            raise SemanticError(f"{name} is not a {expected_kind.value} function")
        if len(args) != len(f.params):
            raise SemanticError(f"arity mismatch calling {name}")
        for v, (_, ty) in zip(args, f.params):
            if type_of_value(v) != ty:
                raise SemanticError(f"argument type mismatch calling {name}")


class UidGen:
    """Deterministic fresh-value source, reset per run_sequence."""

    def __init__(self) -> None:
        self.counter = 0

    def fresh(self) -> Uid:
        u = Uid(self.counter)
        self.counter += 1
        return u


@dataclass
class Env:
    """Per-invocation evaluation context."""

    params: dict[str, Value]
    uids: UidGen
    # fresh-uid slots are function-scoped: one resolution per invocation
    slots: dict[int, Uid] = field(default_factory=dict)

    def resolve(self, term) -> Value:
        if isinstance(term, Param):
            if term.name not in self.params:
                raise SemanticError(f"unbound parameter {term.name}")
            return self.params[term.name]
        if isinstance(term, FreshUid):
            if term.slot not in self.slots:
                self.slots[term.slot] = self.uids.fresh()
            return self.slots[term.slot]
        return term


# ============================================================
# Layouts: mapping qualified attributes to joined-row positions
# ============================================================


def chain_layout(j: JoinChain, schema: Schema) -> dict[QAttr, int]:
    return {a: i for i, a in enumerate(attrs_of(j, schema))}


def query_columns(q: Query, schema: Schema) -> tuple[QAttr, ...]:
    """Output columns of a query, in order (duplicates possible under Proj)."""
    if isinstance(q, JoinQ):
        return attrs_of(q.join, schema)
    if isinstance(q, Sel):
        return query_columns(q.sub, schema)
    if isinstance(q, Proj):
        return q.attrs
    raise SemanticError(f"unknown query node {q!r}")


# ============================================================
# Evaluation
# ============================================================


def eval_join(inst: Instance, j: JoinChain) -> list[Row]:
    """Nested-loop equi-join; rows concatenated in tables_of order."""
    if isinstance(j, BaseTable):
        return list(inst.rows(j.table))
    left_rows = eval_join(inst, j.left)
    right_rows = eval_join(inst, j.right)
    li = chain_layout(j.left, inst.schema)[j.left_attr]
    ri = chain_layout(j.right, inst.schema)[j.right_attr]
    return [
        lr + rr for lr in left_rows for rr in right_rows if lr[li] == rr[ri]
    ]


def _cmp_values(lhs: Value, op: CmpOp, rhs: Value) -> bool:
    if op is CmpOp.EQ:
        return lhs == rhs
    if op is CmpOp.NE:
        return lhs != rhs
    # ordering is defined on ints only; a fresh uid is never ordered
    if isinstance(lhs, Uid) or isinstance(rhs, Uid):
        return False
    if op is CmpOp.LT:
        return lhs < rhs
    if op is CmpOp.LE:
        return lhs <= rhs
    if op is CmpOp.GT:
        return lhs > rhs
    return lhs >= rhs


def eval_pred(
    inst: Instance,
    pred: Predicate,
    row: Row,
    layout: dict[QAttr, int],
    env: Env,
) -> bool:
    if isinstance(pred, Cmp):
        lhs = row[layout[pred.lhs]]
        if isinstance(pred.rhs, QAttr):
            rhs: Value = row[layout[pred.rhs]]
        else:
            rhs = env.resolve(pred.rhs)
        return _cmp_values(lhs, pred.op, rhs)
    if isinstance(pred, InQuery):
        sub = eval_query(inst, pred.query, env)
        if sub and len(sub[0]) != 1:
            raise SemanticError("in-predicate over multi-column sub-query")
        if len(query_columns(pred.query, inst.schema)) != 1:
            raise SemanticError("in-predicate over multi-column sub-query")
        val = row[layout[pred.attr]]
        return any(r[0] == val for r in sub)
    if isinstance(pred, And):
        return eval_pred(inst, pred.left, row, layout, env) and eval_pred(
            inst, pred.right, row, layout, env
        )
    if isinstance(pred, Or):
        return eval_pred(inst, pred.left, row, layout, env) or eval_pred(
            inst, pred.right, row, layout, env
        )
    if isinstance(pred, Not):
        return not eval_pred(inst, pred.inner, row, layout, env)
    raise SemanticError(f"unknown predicate {pred!r}")


def eval_query(inst: Instance, q: Query, env: Env) -> list[Row]:
    if isinstance(q, JoinQ):
        return eval_join(inst, q.join)
    if isinstance(q, Sel):
        rows = eval_query(inst, q.sub, env)
        cols = query_columns(q.sub, inst.schema)
        layout = {a: i for i, a in enumerate(cols)}
        return [r for r in rows if eval_pred(inst, q.pred, r, layout, env)]
    if isinstance(q, Proj):
        rows = eval_query(inst, q.sub, env)
        cols = query_columns(q.sub, inst.schema)
        layout = {a: i for i, a in enumerate(cols)}
        idx = [layout[a] for a in q.attrs]
        return [tuple(r[i] for i in idx) for r in rows]
    raise SemanticError(f"unknown query node {q!r}")


def _table_slices(j: JoinChain, schema: Schema) -> dict[str, tuple[int, int]]:
    """Column span of each base table inside a joined row."""
    spans = {}
    offset = 0
    for t in tables_of(j):
        width = len(schema.table(t).attributes)
        spans[t] = (offset, offset + width)
        offset += width
    return spans


def exec_update(inst: Instance, stmt: Statement, env: Env) -> None:
    """Execute an update statement, mutating the instance in place."""
    if isinstance(stmt, Seq):
        exec_update(inst, stmt.first, env)
        exec_update(inst, stmt.second, env)
        return
    if isinstance(stmt, Ins):
        # the n-table shorthand appends one row per table; fresh slots are
        # resolved through the env so linked keys share the same value
        terms = dict(stmt.row)
        for t in tables_of(stmt.join):
            table = inst.schema.table(t)
            row = tuple(env.resolve(terms[a.qualified]) for a in table.attributes)
            inst.rows(t).append(row)
        return
    if isinstance(stmt, Del):
        joined = eval_join(inst, stmt.join)
        layout = chain_layout(stmt.join, inst.schema)
        matched = [r for r in joined if eval_pred(inst, stmt.pred, r, layout, env)]
        spans = _table_slices(stmt.join, inst.schema)
        for t in stmt.tables:
            lo, hi = spans[t]
            victims = {r[lo:hi] for r in matched}
            inst.tables[t] = [r for r in inst.rows(t) if r not in victims]
        return
    if isinstance(stmt, Upd):
        joined = eval_join(inst, stmt.join)
        layout = chain_layout(stmt.join, inst.schema)
        matched = [r for r in joined if eval_pred(inst, stmt.pred, r, layout, env)]
        t = stmt.attr.table
        lo, hi = _table_slices(stmt.join, inst.schema)[t]
        victims = {r[lo:hi] for r in matched}
        table = inst.schema.table(t)
        col = next(i for i, a in enumerate(table.attributes) if a.name == stmt.attr.name)
        val = env.resolve(stmt.val)
        inst.tables[t] = [
            (r[:col] + (val,) + r[col + 1 :]) if r in victims else r
            for r in inst.rows(t)
        ]
        return
    if isinstance(stmt, QueryStmt):
        raise SemanticError("query statement inside an update body")
    raise SemanticError(f"unknown statement {stmt!r}")


def run_sequence(p: Program, omega: InvocationSequence, schema: Schema) -> list[Row]:
    """Execute the sequence from the empty instance; result of the final query.

    Deterministic: the fresh-uid counter restarts at 0 for every sequence.
    """
    check_sequence(p, omega)
    inst = Instance.empty(schema)
    uids = UidGen()
    result: list[Row] = []
    for i, (name, args) in enumerate(omega.calls):
        f = p.function(name)
        env = Env(params={n: v for (n, _), v in zip(f.params, args)}, uids=uids)
        if i == len(omega.calls) - 1:
            body = f.body
            assert isinstance(body, QueryStmt)
            result = eval_query(inst, body.query, env)
        else:
            exec_update(inst, f.body, env)
    return result
