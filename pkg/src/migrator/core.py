"""Core domain types: schemas, programs, sketches, and well-formedness checks.

Everything here is an immutable value (frozen dataclasses, tuples instead of
lists) so ASTs can be hashed, deduplicated, and compared structurally.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Union


class MigratorError(Exception):
    """Base class for all errors raised by this package."""


# ============================================================
# Values and types
# ============================================================


class ValueType(enum.Enum):
    INT = "int"
    STR = "str"
    BIN = "bin"


@dataclass(frozen=True)
class Uid:
    """Opaque unique value produced by the fresh-value generator.

    Two Uids are equal iff their tags are equal; a Uid never equals an
    int/str/bytes value (dataclass equality already guarantees both).
    """

    tag: int

    def __repr__(self) -> str:
        return f"Uid({self.tag})"


# Runtime values are plain Python scalars plus Uid.
Value = Union[int, str, bytes, Uid]


def type_of_value(v: Value) -> Optional[ValueType]:
    """ValueType of a literal; None for Uid (a Uid fits any column)."""
    if isinstance(v, Uid):
        return None
    if isinstance(v, bool):  # bool is an int subclass; reject explicitly
        raise TypeError("bool is not a database value")
    if isinstance(v, int):
        return ValueType.INT
    if isinstance(v, str):
        return ValueType.STR
    if isinstance(v, bytes):
        return ValueType.BIN
    raise TypeError(f"not a database value: {v!r}")


# ============================================================
# Schemas
# ============================================================


@dataclass(frozen=True)
class Attribute:
    table: str
    name: str
    ty: ValueType
    primary_key: bool = False
    references: Optional[str] = None  # foreign key target table

    @property
    def qualified(self) -> "QAttr":
        return QAttr(self.table, self.name)


@dataclass(frozen=True)
class Table:
    name: str
    attributes: tuple[Attribute, ...]

    def attribute(self, name: str) -> Optional[Attribute]:
        for a in self.attributes:
            if a.name == name:
                return a
        return None


@dataclass(frozen=True)
class Schema:
    tables: tuple[Table, ...]

    def table(self, name: str) -> Optional[Table]:
        for t in self.tables:
            if t.name == name:
                return t
        return None

    def attribute(self, qattr: "QAttr") -> Optional[Attribute]:
        t = self.table(qattr.table)
        return t.attribute(qattr.name) if t else None

    def all_attributes(self) -> tuple[Attribute, ...]:
        return tuple(a for t in self.tables for a in t.attributes)


def check_schema(s: Schema) -> list[str]:
    """Schema invariant violations, empty when the schema is valid."""
    problems = []
    seen_tables: set[str] = set()
    for t in s.tables:
        if t.name in seen_tables:
            problems.append(f"duplicate table {t.name}")
        seen_tables.add(t.name)
        seen_attrs: set[str] = set()
        pk_count = 0
        for a in t.attributes:
            if a.name in seen_attrs:
                problems.append(f"duplicate attribute {t.name}.{a.name}")
            seen_attrs.add(a.name)
            if a.table != t.name:
                problems.append(f"attribute {a.name} tagged with wrong table")
            if a.primary_key:
                pk_count += 1
            if a.primary_key and a.references is not None:
                problems.append(f"{t.name}.{a.name} is both pk and fk")
        if pk_count > 1:
            problems.append(f"table {t.name} has more than one primary key")
    for t in s.tables:
        for a in t.attributes:
            if a.references is None:
                continue
            target = s.table(a.references)
            if target is None:
                problems.append(
                    f"{t.name}.{a.name} references unknown table {a.references}"
                )
                continue
            pk = next((x for x in target.attributes if x.primary_key), None)
            if pk is None:
                problems.append(
                    f"{t.name}.{a.name} references {a.references} which has no primary key"
                )
            elif pk.ty != a.ty:
                problems.append(
                    f"{t.name}.{a.name} type differs from primary key of {a.references}"
                )
    return problems


# ============================================================
# Program AST
# ============================================================


@dataclass(frozen=True)
class QAttr:
    """Qualified attribute reference, Table.Attr."""

    table: str
    name: str

    def __str__(self) -> str:
        return f"{self.table}.{self.name}"


@dataclass(frozen=True)
class Param:
    """Reference to a declared function parameter."""

    name: str


@dataclass(frozen=True)
class FreshUid:
    """Syntactic fresh-value slot (uid0, uid1, ...).

    Slots are function-scoped: the same slot number within one function body
    denotes the same fresh value per invocation.
    """

    slot: int


# Terms that may appear on the right of an insert assignment etc.
Term = Union[Param, FreshUid, int, str, bytes]


@dataclass(frozen=True)
class BaseTable:
    table: str


@dataclass(frozen=True)
class EquiJoin:
    left: "JoinChain"
    left_attr: QAttr
    right: "JoinChain"
    right_attr: QAttr


JoinChain = Union[BaseTable, EquiJoin]


class CmpOp(enum.Enum):
    EQ = "="
    NE = "<>"
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="


ORDERED_OPS = (CmpOp.LT, CmpOp.LE, CmpOp.GT, CmpOp.GE)


@dataclass(frozen=True)
class Cmp:
    lhs: QAttr
    op: CmpOp
    rhs: Union[QAttr, Param, int, str, bytes]


@dataclass(frozen=True)
class InQuery:
    attr: QAttr
    query: "Query"


@dataclass(frozen=True)
class And:
    left: "Predicate"
    right: "Predicate"


@dataclass(frozen=True)
class Or:
    left: "Predicate"
    right: "Predicate"


@dataclass(frozen=True)
class Not:
    inner: "Predicate"


Predicate = Union[Cmp, InQuery, And, Or, Not]


@dataclass(frozen=True)
class Proj:
    attrs: tuple[QAttr, ...]
    sub: "Query"


@dataclass(frozen=True)
class Sel:
    pred: Predicate
    sub: "Query"


@dataclass(frozen=True)
class JoinQ:
    join: JoinChain


Query = Union[Proj, Sel, JoinQ]


@dataclass(frozen=True)
class Ins:
    """Insert into a join chain; row assigns a term to every chain attribute."""

    join: JoinChain
    row: tuple[tuple[QAttr, Term], ...]


@dataclass(frozen=True)
class Del:
    tables: tuple[str, ...]
    join: JoinChain
    pred: Predicate


@dataclass(frozen=True)
class Upd:
    join: JoinChain
    pred: Predicate
    attr: QAttr
    val: Union[Param, int, str, bytes]


@dataclass(frozen=True)
class Seq:
    first: "Statement"
    second: "Statement"


@dataclass(frozen=True)
class QueryStmt:
    query: Query


Statement = Union[Ins, Del, Upd, Seq, QueryStmt]


class FuncKind(enum.Enum):
    UPDATE = "update"
    QUERY = "query"


@dataclass(frozen=True)
class Function:
    name: str
    kind: FuncKind
    params: tuple[tuple[str, ValueType], ...]
    body: Statement


@dataclass(frozen=True)
class Program:
    functions: tuple[Function, ...]

    def function(self, name: str) -> Optional[Function]:
        for f in self.functions:
            if f.name == name:
                return f
        return None


# Value correspondence: source attribute -> target attributes holding the
# same data. Stored with deterministically ordered target tuples.
ValueCorrespondence = Mapping[QAttr, tuple[QAttr, ...]]


# ============================================================
# Join-chain helpers
# ============================================================


def tables_of(j: JoinChain) -> tuple[str, ...]:
    """Base tables of a chain, left-to-right, no duplicates by invariant."""
    if isinstance(j, BaseTable):
        return (j.table,)
    return tables_of(j.left) + tables_of(j.right)


def attrs_of(j: JoinChain, s: Schema) -> tuple[QAttr, ...]:
    """All attributes of all tables in the chain, in table/attribute order."""
    out = []
    for tname in tables_of(j):
        t = s.table(tname)
        if t is None:
            raise MigratorError(f"unknown table {tname} in join chain")
        out.extend(a.qualified for a in t.attributes)
    return tuple(out)


def join_conditions(j: JoinChain) -> tuple[tuple[QAttr, QAttr], ...]:
    """Equi-join attribute pairs of a chain, outermost last."""
    if isinstance(j, BaseTable):
        return ()
    return (
        join_conditions(j.left)
        + join_conditions(j.right)
        + ((j.left_attr, j.right_attr),)
    )


def flatten_seq(stmt: Statement) -> list[Statement]:
    """Sequence tree flattened into its leaf statements, in order."""
    if isinstance(stmt, Seq):
        return flatten_seq(stmt.first) + flatten_seq(stmt.second)
    return [stmt]


def seq_of(stmts: list[Statement]) -> Statement:
    """Right-nested Seq of one or more statements."""
    if not stmts:
        raise ValueError("empty statement list")
    out = stmts[-1]
    for s in reversed(stmts[:-1]):
        out = Seq(s, out)
    return out


# ============================================================
# Program validation
# ============================================================


@dataclass(frozen=True)
class Diagnostic:
    function: str
    construct: str
    message: str

    def __str__(self) -> str:
        return f"{self.function}: {self.construct}: {self.message}"


class ValidationError(MigratorError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


def validate_program(p: Program, s: Schema) -> list[Diagnostic]:
    """Well-formedness diagnostics for a program against a schema.

    Empty result means the program is valid: every table/attribute resolves,
    types check, and all statement invariants hold.
    """
    v = _Validator(s)
    v.check_program(p)
    return v.diagnostics


class _Validator:
    def __init__(self, schema: Schema):
        self.schema = schema
        self.diagnostics: list[Diagnostic] = []
        self.func = "<program>"
        self.params: dict[str, ValueType] = {}

    def report(self, construct: str, message: str) -> None:
        self.diagnostics.append(Diagnostic(self.func, construct, message))

    def check_program(self, p: Program) -> None:
        seen = set()
        for f in p.functions:
            if f.name in seen:
                self.func = f.name
                self.report("function", "duplicate function name")
            seen.add(f.name)
        for f in p.functions:
            self.func = f.name
            self.params = dict(f.params)
            if len(self.params) != len(f.params):
                self.report("function", "duplicate parameter name")
            leaves = flatten_seq(f.body)
            if f.kind is FuncKind.QUERY:
                if len(leaves) != 1 or not isinstance(leaves[0], QueryStmt):
                    self.report("function", "query body must be a single query")
            else:
                if any(isinstance(x, QueryStmt) for x in leaves):
                    self.report("function", "update body must not contain a query")
            self.check_stmt(f.body)

    # ---- join chains ----

    def check_join(self, j: JoinChain) -> bool:
        ok = True
        tables = tables_of(j)
        if len(set(tables)) != len(tables):
            self.report("join", f"table repeated in join chain {tables}")
            ok = False
        for t in tables:
            if self.schema.table(t) is None:
                self.report("join", f"unknown table {t}")
                ok = False
        if not ok:
            return False
        return self._check_join_conds(j)

    def _check_join_conds(self, j: JoinChain) -> bool:
        if isinstance(j, BaseTable):
            return True
        ok = self._check_join_conds(j.left) and self._check_join_conds(j.right)
        la, ra = j.left_attr, j.right_attr
        lt = self.schema.attribute(la)
        rt = self.schema.attribute(ra)
        if lt is None or la.table not in tables_of(j.left):
            self.report("join", f"left join attribute {la} not in left operand")
            ok = False
        if rt is None or ra.table not in tables_of(j.right):
            self.report("join", f"right join attribute {ra} not in right operand")
            ok = False
        if lt and rt and lt.ty != rt.ty:
            self.report("join", f"join attributes {la}, {ra} differ in type")
            ok = False
        return ok

    # ---- predicates and queries ----

    def resolve_attr(self, a: QAttr, join: JoinChain, construct: str) -> Optional[Attribute]:
        attr = self.schema.attribute(a)
        if attr is None or a.table not in tables_of(join):
            self.report(construct, f"attribute {a} not resolvable in join")
            return None
        return attr

    def check_pred(self, pred: Predicate, join: JoinChain) -> None:
        if isinstance(pred, Cmp):
            lhs = self.resolve_attr(pred.lhs, join, "predicate")
            rhs_ty: Optional[ValueType] = None
            if isinstance(pred.rhs, QAttr):
                rhs = self.resolve_attr(pred.rhs, join, "predicate")
                rhs_ty = rhs.ty if rhs else None
            elif isinstance(pred.rhs, Param):
                rhs_ty = self.params.get(pred.rhs.name)
                if rhs_ty is None:
                    self.report("predicate", f"unknown parameter {pred.rhs.name}")
            elif isinstance(pred.rhs, FreshUid):
                self.report("predicate", "uid slot not allowed in predicates")
            else:
                rhs_ty = type_of_value(pred.rhs)
            if lhs and rhs_ty and lhs.ty != rhs_ty:
                self.report("predicate", f"type mismatch comparing {pred.lhs}")
            if lhs and pred.op in ORDERED_OPS and lhs.ty is not ValueType.INT:
                self.report("predicate", "ordering comparison on non-int attribute")
        elif isinstance(pred, InQuery):
            attr = self.resolve_attr(pred.attr, join, "in-predicate")
            cols = self.check_query(pred.query)
            if cols is not None:
                if len(cols) != 1:
                    self.report("in-predicate", "sub-query must have a single column")
                elif attr and cols[0] is not None and attr.ty != cols[0]:
                    self.report("in-predicate", "attribute/sub-query type mismatch")
        elif isinstance(pred, (And, Or)):
            self.check_pred(pred.left, join)
            self.check_pred(pred.right, join)
        elif isinstance(pred, Not):
            self.check_pred(pred.inner, join)
        else:
            self.report("predicate", f"unknown predicate node {pred!r}")

    def check_query(self, q: Query) -> Optional[list[Optional[ValueType]]]:
        """Column types of the query, or None when too broken to tell."""
        if isinstance(q, JoinQ):
            if not self.check_join(q.join):
                return None
            return [
                self.schema.attribute(a).ty for a in attrs_of(q.join, self.schema)
            ]
        if isinstance(q, Sel):
            cols = self.check_query(q.sub)
            join = _innermost_join(q.sub)
            if join is not None:
                self.check_pred(q.pred, join)
            return cols
        if isinstance(q, Proj):
            self.check_query(q.sub)
            join = _innermost_join(q.sub)
            out: list[Optional[ValueType]] = []
            for a in q.attrs:
                attr = (
                    self.resolve_attr(a, join, "projection") if join is not None else None
                )
                out.append(attr.ty if attr else None)
            return out
        self.report("query", f"unknown query node {q!r}")
        return None

    # ---- statements ----

    def check_stmt(self, stmt: Statement) -> None:
        if isinstance(stmt, Seq):
            self.check_stmt(stmt.first)
            self.check_stmt(stmt.second)
        elif isinstance(stmt, QueryStmt):
            self.check_query(stmt.query)
        elif isinstance(stmt, Ins):
            self.check_ins(stmt)
        elif isinstance(stmt, Del):
            if not self.check_join(stmt.join):
                return
            if not stmt.tables:
                self.report("delete", "table list must be non-empty")
            extra = set(stmt.tables) - set(tables_of(stmt.join))
            if extra:
                self.report("delete", f"delete target not in join: {sorted(extra)}")
            self.check_pred(stmt.pred, stmt.join)
        elif isinstance(stmt, Upd):
            if not self.check_join(stmt.join):
                return
            self.check_pred(stmt.pred, stmt.join)
            attr = self.resolve_attr(stmt.attr, stmt.join, "update")
            val_ty: Optional[ValueType] = None
            if isinstance(stmt.val, Param):
                val_ty = self.params.get(stmt.val.name)
                if val_ty is None:
                    self.report("update", f"unknown parameter {stmt.val.name}")
            elif isinstance(stmt.val, FreshUid):
                self.report("update", "uid slot not allowed in update value")
            else:
                val_ty = type_of_value(stmt.val)
            if attr and val_ty and attr.ty != val_ty:
                self.report("update", f"type mismatch assigning {stmt.attr}")
        else:
            self.report("statement", f"unknown statement node {stmt!r}")

    def check_ins(self, stmt: Ins) -> None:
        if not self.check_join(stmt.join):
            return
        expected = attrs_of(stmt.join, self.schema)
        given = [a for a, _ in stmt.row]
        if len(set(given)) != len(given):
            self.report("insert", "attribute assigned more than once")
        missing = set(expected) - set(given)
        extra = set(given) - set(expected)
        if missing:
            self.report(
                "insert", f"missing assignments: {sorted(str(a) for a in missing)}"
            )
        if extra:
            self.report(
                "insert", f"assignments outside join: {sorted(str(a) for a in extra)}"
            )
        terms = dict(stmt.row)
        for a, term in stmt.row:
            attr = self.schema.attribute(a)
            if attr is None:
                continue
            if isinstance(term, Param):
                ty = self.params.get(term.name)
                if ty is None:
                    self.report("insert", f"unknown parameter {term.name}")
                elif ty != attr.ty:
                    self.report("insert", f"type mismatch assigning {a}")
            elif isinstance(term, FreshUid):
                pass  # a fresh value fits any column
            elif type_of_value(term) != attr.ty:
                self.report("insert", f"type mismatch assigning {a}")
        # linking key pairs must receive the same term so the inserted rows
        # actually join with each other
        for la, ra in join_conditions(stmt.join):
            if la in terms and ra in terms and terms[la] != terms[ra]:
                self.report(
                    "insert", f"linked attributes {la} and {ra} assigned different terms"
                )


def _innermost_join(q: Query) -> Optional[JoinChain]:
    while isinstance(q, (Proj, Sel)):
        q = q.sub
    return q.join if isinstance(q, JoinQ) else None


def enclosing_join(q: Query) -> Optional[JoinChain]:
    """Join chain whose attributes are visible to predicates over `q`."""
    return _innermost_join(q)


# ============================================================
# Sketches: programs with finite-domain holes
# ============================================================


@dataclass(frozen=True)
class HoleJoin:
    id: int
    domain: tuple[JoinChain, ...]
    owner: str


@dataclass(frozen=True)
class HoleAttr:
    id: int
    domain: tuple[QAttr, ...]
    owner: str


@dataclass(frozen=True)
class HoleTables:
    id: int
    domain: tuple[tuple[str, ...], ...]
    owner: str


@dataclass(frozen=True)
class HoleBool:
    id: int
    owner: str

    # fixed two-element domain: index 0 picks the then-branch
    domain = (True, False)


Hole = Union[HoleJoin, HoleAttr, HoleTables, HoleBool]


@dataclass(frozen=True)
class ChoiceNode:
    """Desugared form of the binary choice construct over statements."""

    hole: HoleBool
    then: "SketchStmt"
    els: "SketchStmt"


@dataclass(frozen=True)
class SketchIns:
    """Insert sketch carrying source terms keyed by their target images.

    The full per-table row (shared fresh-uid slots for linked keys, fresh
    slots for unmapped attributes) is derived only when the join is known,
    i.e. at instantiation time.
    """

    join: Union[JoinChain, HoleJoin]
    assigns: tuple[tuple[Union[QAttr, HoleAttr], Term], ...]


# Sketch statements reuse the concrete node classes; attribute, join and
# table positions may hold hole objects instead of concrete values.
SketchStmt = Union[SketchIns, Del, Upd, Seq, QueryStmt, ChoiceNode, Ins]


@dataclass(frozen=True)
class SketchFunction:
    name: str
    kind: FuncKind
    params: tuple[tuple[str, ValueType], ...]
    body: SketchStmt


@dataclass(frozen=True)
class SketchProgram:
    functions: tuple[SketchFunction, ...]

    def holes(self) -> list[Hole]:
        """All holes of the sketch in allocation (id) order."""
        found: dict[int, Hole] = {}
        for f in self.functions:
            _collect_holes(f.body, found)
        return [found[i] for i in sorted(found)]


def _collect_holes(node: object, out: dict[int, Hole]) -> None:
    if isinstance(node, (HoleJoin, HoleAttr, HoleTables, HoleBool)):
        out[node.id] = node
    elif isinstance(node, ChoiceNode):
        out[node.hole.id] = node.hole
        _collect_holes(node.then, out)
        _collect_holes(node.els, out)
    elif isinstance(node, SketchIns):
        _collect_holes(node.join, out)
        for img, _ in node.assigns:
            _collect_holes(img, out)
    elif isinstance(node, Seq):
        _collect_holes(node.first, out)
        _collect_holes(node.second, out)
    elif isinstance(node, Del):
        _collect_holes(node.tables, out)
        _collect_holes(node.join, out)
        _collect_holes(node.pred, out)
    elif isinstance(node, Upd):
        _collect_holes(node.join, out)
        _collect_holes(node.pred, out)
        _collect_holes(node.attr, out)
    elif isinstance(node, Ins):
        _collect_holes(node.join, out)
    elif isinstance(node, QueryStmt):
        _collect_holes(node.query, out)
    elif isinstance(node, Proj):
        for a in node.attrs:
            _collect_holes(a, out)
        _collect_holes(node.sub, out)
    elif isinstance(node, Sel):
        _collect_holes(node.pred, out)
        _collect_holes(node.sub, out)
    elif isinstance(node, JoinQ):
        _collect_holes(node.join, out)
    elif isinstance(node, Cmp):
        _collect_holes(node.lhs, out)
        _collect_holes(node.rhs, out)
    elif isinstance(node, InQuery):
        _collect_holes(node.attr, out)
        _collect_holes(node.query, out)
    elif isinstance(node, (And, Or)):
        _collect_holes(node.left, out)
        _collect_holes(node.right, out)
    elif isinstance(node, Not):
        _collect_holes(node.inner, out)


class IllFormedSketchError(MigratorError):
    """A hole assignment produced an ill-formed program.

    `pairs` names the (hole id, chosen index) assignments that jointly caused
    the violation so the caller can block exactly that partial assignment.
    """

    def __init__(self, reason: str, pairs: list[tuple[int, int]]):
        self.reason = reason
        self.pairs = pairs
        super().__init__(reason)


# ============================================================
# Sketch substitution (hole instantiation)
# ============================================================


def substitute(
    sketch: SketchProgram, choices: Mapping[int, int], schema: Schema
) -> Program:
    """Replace every hole by its chosen domain element, yielding a Program.

    `choices` maps hole id to an index into the hole's domain. Insert
    sketches are expanded into full per-table rows here, with fresh-uid
    slots allocated per function body. Raises IllFormedSketchError when the
    chosen combination violates structural well-formedness.
    """
    funcs = []
    for f in sketch.functions:
        slots = _SlotAllocator()
        body = _subst_stmt(f.body, choices, schema, slots)
        funcs.append(Function(f.name, f.kind, f.params, body))
    return Program(tuple(funcs))


class _SlotAllocator:
    def __init__(self) -> None:
        self.next = 0

    def fresh(self) -> FreshUid:
        slot = FreshUid(self.next)
        self.next += 1
        return slot


def _pick(hole: Hole, choices: Mapping[int, int]):
    if hole.id not in choices:
        raise MigratorError(f"no choice recorded for hole {hole.id}")
    idx = choices[hole.id]
    return hole.domain[idx], idx


def _resolve_join(
    join: Union[JoinChain, HoleJoin], choices: Mapping[int, int]
) -> tuple[JoinChain, list[tuple[int, int]]]:
    if isinstance(join, HoleJoin):
        chain, idx = _pick(join, choices)
        return chain, [(join.id, idx)]
    return join, []


def _resolve_attr(
    attr: Union[QAttr, HoleAttr], choices: Mapping[int, int]
) -> tuple[QAttr, list[tuple[int, int]]]:
    if isinstance(attr, HoleAttr):
        a, idx = _pick(attr, choices)
        return a, [(attr.id, idx)]
    return attr, []


def _require_in_join(
    a: QAttr,
    join: JoinChain,
    schema: Schema,
    blame: list[tuple[int, int]],
) -> None:
    if a not in attrs_of(join, schema):
        raise IllFormedSketchError(f"attribute {a} not in chosen join", blame)


def _subst_pred(
    pred, choices: Mapping[int, int], schema: Schema,
    join: JoinChain, join_blame: list[tuple[int, int]],
) -> Predicate:
    if isinstance(pred, Cmp):
        lhs, b1 = _resolve_attr(pred.lhs, choices)
        _require_in_join(lhs, join, schema, join_blame + b1)
        rhs = pred.rhs
        if isinstance(rhs, (HoleAttr, QAttr)):
            rhs, b2 = _resolve_attr(rhs, choices)
            _require_in_join(rhs, join, schema, join_blame + b2)
        return Cmp(lhs, pred.op, rhs)
    if isinstance(pred, InQuery):
        attr, b1 = _resolve_attr(pred.attr, choices)
        _require_in_join(attr, join, schema, join_blame + b1)
        return InQuery(attr, _subst_query(pred.query, choices, schema))
    if isinstance(pred, And):
        return And(
            _subst_pred(pred.left, choices, schema, join, join_blame),
            _subst_pred(pred.right, choices, schema, join, join_blame),
        )
    if isinstance(pred, Or):
        return Or(
            _subst_pred(pred.left, choices, schema, join, join_blame),
            _subst_pred(pred.right, choices, schema, join, join_blame),
        )
    if isinstance(pred, Not):
        return Not(_subst_pred(pred.inner, choices, schema, join, join_blame))
    raise MigratorError(f"unknown predicate node {pred!r}")


def _subst_query(q, choices: Mapping[int, int], schema: Schema) -> Query:
    if isinstance(q, JoinQ):
        chain, _ = _resolve_join(q.join, choices)
        return JoinQ(chain)
    if isinstance(q, Sel):
        sub = _subst_query(q.sub, choices, schema)
        join = enclosing_join(sub)
        blame = _join_blame(q.sub, choices)
        return Sel(_subst_pred(q.pred, choices, schema, join, blame), sub)
    if isinstance(q, Proj):
        sub = _subst_query(q.sub, choices, schema)
        join = enclosing_join(sub)
        blame = _join_blame(q.sub, choices)
        attrs = []
        for a in q.attrs:
            ra, b = _resolve_attr(a, choices)
            _require_in_join(ra, join, schema, blame + b)
            attrs.append(ra)
        return Proj(tuple(attrs), sub)
    raise MigratorError(f"unknown query node {q!r}")


def _join_blame(q, choices: Mapping[int, int]) -> list[tuple[int, int]]:
    while isinstance(q, (Proj, Sel)):
        q = q.sub
    if isinstance(q, JoinQ) and isinstance(q.join, HoleJoin):
        _, idx = _pick(q.join, choices)
        return [(q.join.id, idx)]
    return []


def expand_insert(
    join: JoinChain,
    assigns: list[tuple[QAttr, Term]],
    schema: Schema,
    slots: _SlotAllocator,
    blame: list[tuple[int, int]],
) -> Ins:
    """Build the full per-table row for an insert over a join chain.

    Attributes linked by a join condition share one term: the mapped term if
    any member of the linked group carries one, otherwise a shared fresh-uid
    slot. All remaining unassigned attributes get distinct fresh slots.
    """
    all_attrs = attrs_of(join, schema)
    term_for: dict[QAttr, Term] = {}
    for a, term in assigns:
        if a in term_for and term_for[a] != term:
            raise IllFormedSketchError(
                f"conflicting terms assigned to {a}", blame
            )
        term_for[a] = term
    # union-find over the chain's join conditions
    parent: dict[QAttr, QAttr] = {a: a for a in all_attrs}

    def find(x: QAttr) -> QAttr:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for la, ra in join_conditions(join):
        parent[find(la)] = find(ra)
    groups: dict[QAttr, list[QAttr]] = {}
    for a in all_attrs:
        groups.setdefault(find(a), []).append(a)
    group_term: dict[QAttr, Term] = {}
    for root, members in groups.items():
        mapped = [term_for[m] for m in members if m in term_for]
        if mapped:
            group_term[root] = mapped[0]
    row = []
    for a in all_attrs:
        if a in term_for:
            row.append((a, term_for[a]))
            continue
        root = find(a)
        if len(groups[root]) > 1:
            if root not in group_term:
                group_term[root] = slots.fresh()
            row.append((a, group_term[root]))
        else:
            row.append((a, slots.fresh()))
    return Ins(join, tuple(row))


def _subst_stmt(
    stmt, choices: Mapping[int, int], schema: Schema, slots: _SlotAllocator
) -> Statement:
    if isinstance(stmt, Seq):
        return Seq(
            _subst_stmt(stmt.first, choices, schema, slots),
            _subst_stmt(stmt.second, choices, schema, slots),
        )
    if isinstance(stmt, ChoiceNode):
        picked, idx = _pick(stmt.hole, choices)
        branch = stmt.then if picked else stmt.els
        return _subst_stmt(branch, choices, schema, slots)
    if isinstance(stmt, SketchIns):
        join, jblame = _resolve_join(stmt.join, choices)
        chain_attrs = set(attrs_of(join, schema))
        assigns = []
        for img, term in stmt.assigns:
            a, b = _resolve_attr(img, choices)
            if a not in chain_attrs:
                raise IllFormedSketchError(
                    f"insert image {a} not in chosen join", jblame + b
                )
            assigns.append((a, term))
        return expand_insert(join, assigns, schema, slots, jblame)
    if isinstance(stmt, Ins):
        join, jblame = _resolve_join(stmt.join, choices)
        return Ins(join, stmt.row)
    if isinstance(stmt, Del):
        join, jblame = _resolve_join(stmt.join, choices)
        tables = stmt.tables
        tblame: list[tuple[int, int]] = []
        if isinstance(tables, HoleTables):
            tables, idx = _pick(tables, choices)
            tblame = [(stmt.tables.id, idx)]
        if not set(tables) <= set(tables_of(join)):
            raise IllFormedSketchError(
                f"delete targets {tables} not in chosen join", tblame + jblame
            )
        pred = _subst_pred(stmt.pred, choices, schema, join, jblame)
        return Del(tuple(tables), join, pred)
    if isinstance(stmt, Upd):
        join, jblame = _resolve_join(stmt.join, choices)
        pred = _subst_pred(stmt.pred, choices, schema, join, jblame)
        attr, ablame = _resolve_attr(stmt.attr, choices)
        _require_in_join(attr, join, schema, jblame + ablame)
        return Upd(join, pred, attr, stmt.val)
    if isinstance(stmt, QueryStmt):
        return QueryStmt(_subst_query(stmt.query, choices, schema))
    raise MigratorError(f"unknown sketch statement {stmt!r}")


def iter_statements(body: SketchStmt) -> Iterator[SketchStmt]:
    """Leaf statements of a sketch body (descending through Seq and choices)."""
    if isinstance(body, Seq):
        yield from iter_statements(body.first)
        yield from iter_statements(body.second)
    elif isinstance(body, ChoiceNode):
        yield from iter_statements(body.then)
        yield from iter_statements(body.els)
    else:
        yield body
