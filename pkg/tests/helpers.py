"""Shared test utilities: oracles, canonical forms, and random generators."""

from __future__ import annotations

import itertools
import random

from migrator.core import (
    And,
    Attribute,
    BaseTable,
    Cmp,
    CmpOp,
    Del,
    EquiJoin,
    FuncKind,
    Function,
    Ins,
    JoinQ,
    Param,
    Program,
    Proj,
    QAttr,
    QueryStmt,
    Schema,
    Sel,
    Table,
    Upd,
    ValueType,
    join_conditions,
    seq_of,
    tables_of,
)
from migrator.sketch_solver import enumerate_completions


def canon_chain(chain):
    """Chain identity up to operand order and join-condition orientation."""
    conds = frozenset(frozenset((la, ra)) for la, ra in join_conditions(chain))
    return (frozenset(tables_of(chain)), conds)


def gamma(sketch, schema):
    """Completion set of a sketch: distinct well-formed instantiations."""
    return set(enumerate_completions(sketch, schema))


def gamma_bodies(sketch, schema, function_name):
    """Distinct completions of one function's body (other functions' holes
    are irrelevant, so enumerate the one function alone)."""
    from migrator.core import SketchProgram

    f = next(f for f in sketch.functions if f.name == function_name)
    sub = SketchProgram((f,))
    return {p.functions[0].body for p in enumerate_completions(sub, schema)}


def levenshtein_oracle(a: str, b: str) -> int:
    """Plain recursive definition with memoization; the independent check
    for the dynamic-programming implementation."""
    memo: dict[tuple[int, int], int] = {}

    def go(i: int, j: int) -> int:
        if i == len(a):
            return len(b) - j
        if j == len(b):
            return len(a) - i
        if (i, j) not in memo:
            if a[i] == b[j]:
                memo[(i, j)] = go(i + 1, j + 1)
            else:
                memo[(i, j)] = 1 + min(go(i + 1, j), go(i, j + 1), go(i + 1, j + 1))
        return memo[(i, j)]

    return go(0, 0)


def brute_force_maxsat(formula):
    """(best weight, lexicographically least optimal assignment) by full
    enumeration; None when the hard part is unsatisfiable."""
    best = None
    for values in itertools.product((False, True), repeat=formula.num_vars):

        def sat_lit(lit):
            v = values[abs(lit) - 1]
            return v if lit > 0 else not v

        if not all(any(sat_lit(l) for l in c) for c in formula.hard):
            continue
        if not all(sum(values[v - 1] for v in g) == 1 for g in formula.xor_groups):
            continue
        weight = sum(w for c, w in formula.soft if any(sat_lit(l) for l in c))
        if best is None or weight > best[0]:
            best = (weight, values)
    return best


def brute_force_count(formula) -> int:
    count = 0
    for values in itertools.product((False, True), repeat=formula.num_vars):

        def sat_lit(lit):
            v = values[abs(lit) - 1]
            return v if lit > 0 else not v

        if not all(any(sat_lit(l) for l in c) for c in formula.hard):
            continue
        if not all(sum(values[v - 1] for v in g) == 1 for g in formula.xor_groups):
            continue
        count += 1
    return count


# ============================================================
# Random schema / program generation
# ============================================================

_TYPES = (ValueType.INT, ValueType.STR, ValueType.BIN)


def gen_schema(rng: random.Random, max_tables: int = 3) -> Schema:
    tables = []
    n_tables = rng.randint(1, max_tables)
    for t in range(n_tables):
        name = f"T{t}"
        attrs = [Attribute(name, "id", ValueType.INT, primary_key=True)]
        for a in range(rng.randint(1, 3)):
            attrs.append(Attribute(name, f"c{a}", rng.choice(_TYPES)))
        if t > 0 and rng.random() < 0.6:
            ref = f"T{rng.randrange(t)}"
            attrs.append(Attribute(name, f"ref{t}", ValueType.INT, references=ref))
        tables.append(Table(name, tuple(attrs)))
    return Schema(tuple(tables))


def _literal(rng: random.Random, ty: ValueType):
    if ty is ValueType.INT:
        return rng.randint(0, 3)
    if ty is ValueType.STR:
        return rng.choice(("A", "B", "x"))
    return bytes([rng.randint(0, 3)])


def _gen_pred(rng: random.Random, join, schema: Schema, params):
    attrs = [
        schema.table(t).attributes[i]
        for t in tables_of(join)
        for i in range(len(schema.table(t).attributes))
    ]
    def one():
        a = rng.choice(attrs)
        ops = [CmpOp.EQ, CmpOp.NE]
        if a.ty is ValueType.INT:
            ops += [CmpOp.LT, CmpOp.LE, CmpOp.GT, CmpOp.GE]
        op = rng.choice(ops)
        typed_params = [n for n, ty in params if ty == a.ty]
        roll = rng.random()
        if roll < 0.4 and typed_params:
            rhs = Param(rng.choice(typed_params))
        elif roll < 0.7:
            rhs = _literal(rng, a.ty)
        else:
            peers = [x.qualified for x in attrs if x.ty == a.ty]
            rhs = rng.choice(peers)
        return Cmp(a.qualified, op, rhs)

    pred = one()
    if rng.random() < 0.3:
        pred = And(pred, one())
    return pred


def _gen_join(rng: random.Random, schema: Schema):
    t1 = rng.choice(schema.tables)
    if rng.random() < 0.7 or len(schema.tables) < 2:
        return BaseTable(t1.name)
    for t2 in schema.tables:
        if t2.name == t1.name:
            continue
        pairs = [
            (a.qualified, b.qualified)
            for a in t1.attributes
            for b in t2.attributes
            if a.ty == b.ty
        ]
        if pairs:
            la, ra = rng.choice(pairs)
            return EquiJoin(BaseTable(t1.name), la, BaseTable(t2.name), ra)
    return BaseTable(t1.name)


def gen_program(rng: random.Random, schema: Schema) -> Program:
    """Small valid program: a few updates and at least one query."""
    funcs = []
    n_updates = rng.randint(1, 3)
    for u in range(n_updates):
        table = rng.choice(schema.tables)
        params = tuple(
            (f"p{i}", a.ty) for i, a in enumerate(table.attributes)
        )
        kind = rng.random()
        if kind < 0.5:
            row = tuple(
                (a.qualified, Param(f"p{i}"))
                for i, a in enumerate(table.attributes)
            )
            body = Ins(BaseTable(table.name), row)
        elif kind < 0.8:
            join = _gen_join(rng, schema)
            target = rng.choice(tables_of(join))
            body = Del((target,), join, _gen_pred(rng, join, schema, params))
            params = tuple((n, ty) for n, ty in params)
        else:
            join = BaseTable(table.name)
            attr = rng.choice(table.attributes)
            typed = [n for n, ty in params if ty == attr.ty]
            val = Param(rng.choice(typed)) if typed else _literal(rng, attr.ty)
            body = Upd(join, _gen_pred(rng, join, schema, params), attr.qualified, val)
        funcs.append(Function(f"u{u}", FuncKind.UPDATE, params, body))
    for q in range(rng.randint(1, 2)):
        join = _gen_join(rng, schema)
        cols = [
            a.qualified for t in tables_of(join) for a in schema.table(t).attributes
        ]
        picked = tuple(rng.choice(cols) for _ in range(rng.randint(1, 2)))
        params = (("k", ValueType.INT),)
        body = QueryStmt(
            Proj(picked, Sel(_gen_pred(rng, join, schema, params), JoinQ(join)))
        )
        funcs.append(Function(f"q{q}", FuncKind.QUERY, params, body))
    return Program(tuple(funcs))
