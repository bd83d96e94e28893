"""Concrete text syntax for schemas (.schema) and programs (.dbp).

Grammar sketch (// starts a line comment, input is UTF-8):

    schema  := { "table" IDENT "{" attr ("," attr)* "}" }
    attr    := IDENT ":" ("int"|"str"|"bin") [ "[" ("pk" | "fk" IDENT) "]" ]
    program := { func }
    func    := ("update"|"query") IDENT "(" [param ("," param)*] ")" "{" stmt* "}"
    param   := IDENT ":" ("int"|"str"|"bin")
    stmt    := "ins" "(" join "," "{" key ":" term ("," key ":" term)* "}" ")" ";"
             | "del" "(" "[" IDENT ("," IDENT)* "]" "," join "," pred ")" ";"
             | "upd" "(" join "," pred "," attrref "," term ")" ";"
             | query ";"
    query   := "proj" "(" "[" attrref ("," attrref)* "]" "," query ")"
             | "sel" "(" pred "," query ")" | join
    join    := IDENT { "join" IDENT [ "on" attrref "=" attrref ] }
    pred    := disjunction of && / || / ! / comparisons / attrref "in" "(" query ")"
    term    := IDENT | INT | STRING | 0xHEX | uidN

A `join` without `on` is a natural join on the identically named column pair;
it is an error when no such pair or more than one exists. Attribute references
are written Table.Attr, or bare when unambiguous in the enclosing join. Bare
names in term position denote parameters.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Union

from .core import (
    And,
    Attribute,
    BaseTable,
    Cmp,
    CmpOp,
    Del,
    EquiJoin,
    FreshUid,
    FuncKind,
    Function,
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
    Table,
    Term,
    Upd,
    ValidationError,
    ValueType,
    attrs_of,
    check_schema,
    seq_of,
    tables_of,
    validate_program,
)


class ParseError(MigratorError):
    def __init__(self, message: str, line: int, col: int):
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}")


class SchemaError(MigratorError):
    pass


# ============================================================
# Lexer
# ============================================================


class Tok(enum.Enum):
    IDENT = "ident"
    INT = "int"
    STRING = "string"
    BYTES = "bytes"
    PUNCT = "punct"
    EOF = "eof"


@dataclass(frozen=True)
class Token:
    kind: Tok
    text: str
    value: object
    line: int
    col: int


_PUNCT2 = ("<=", ">=", "<>", "&&", "||")
_PUNCT1 = "{}()[],:;.=<>!"


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def err(msg: str):
        raise ParseError(msg, line, col)

    while i < n:
        c = text[i]
        if c == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            toks.append(Token(Tok.IDENT, word, word, start_line, start_col))
            col += j - i
            i = j
            continue
        if c.isdigit():
            if text.startswith("0x", i) or text.startswith("0X", i):
                j = i + 2
                while j < n and text[j] in "0123456789abcdefABCDEF":
                    j += 1
                digits = text[i + 2 : j]
                if not digits or len(digits) % 2:
                    err("hex literal needs an even number of digits")
                toks.append(
                    Token(Tok.BYTES, text[i:j], bytes.fromhex(digits), start_line, start_col)
                )
                col += j - i
                i = j
                continue
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token(Tok.INT, text[i:j], int(text[i:j]), start_line, start_col))
            col += j - i
            i = j
            continue
        if c == '"':
            j = i + 1
            out = []
            while j < n and text[j] != '"':
                if text[j] == "\\":
                    j += 1
                    if j >= n:
                        err("unterminated string")
                    esc = text[j]
                    out.append({"n": "\n", "t": "\t"}.get(esc, esc))
                elif text[j] == "\n":
                    err("unterminated string")
                else:
                    out.append(text[j])
                j += 1
            if j >= n:
                err("unterminated string")
            toks.append(Token(Tok.STRING, text[i : j + 1], "".join(out), start_line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        two = text[i : i + 2]
        if two in _PUNCT2:
            toks.append(Token(Tok.PUNCT, two, two, start_line, start_col))
            i += 2
            col += 2
            continue
        if c in _PUNCT1:
            toks.append(Token(Tok.PUNCT, c, c, start_line, start_col))
            i += 1
            col += 1
            continue
        err(f"unexpected character {c!r}")
    toks.append(Token(Tok.EOF, "", None, line, col))
    return toks


# ============================================================
# Parser
# ============================================================

_TYPES = {"int": ValueType.INT, "str": ValueType.STR, "bin": ValueType.BIN}
_CMP_OPS = {
    "=": CmpOp.EQ,
    "<>": CmpOp.NE,
    "<": CmpOp.LT,
    "<=": CmpOp.LE,
    ">": CmpOp.GT,
    ">=": CmpOp.GE,
}


class _Cursor:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.kind is not Tok.EOF:
            self.pos += 1
        return t

    def error(self, msg: str) -> ParseError:
        t = self.peek()
        return ParseError(msg, t.line, t.col)

    def expect_punct(self, text: str) -> Token:
        t = self.peek()
        if t.kind is Tok.PUNCT and t.text == text:
            return self.next()
        raise self.error(f"expected {text!r}, found {t.text!r}")

    def expect_ident(self, what: str = "identifier") -> Token:
        t = self.peek()
        if t.kind is Tok.IDENT:
            return self.next()
        raise self.error(f"expected {what}, found {t.text!r}")

    def at_punct(self, text: str) -> bool:
        t = self.peek()
        return t.kind is Tok.PUNCT and t.text == text

    def at_ident(self, text: str) -> bool:
        t = self.peek()
        return t.kind is Tok.IDENT and t.text == text

    def eat_punct(self, text: str) -> bool:
        if self.at_punct(text):
            self.next()
            return True
        return False

    def eat_ident(self, text: str) -> bool:
        if self.at_ident(text):
            self.next()
            return True
        return False


def parse_schema(text: str) -> Schema:
    """Parse schema text; raises ParseError / SchemaError."""
    cur = _Cursor(tokenize(text))
    tables = []
    while not cur.peek().kind is Tok.EOF:
        if not cur.eat_ident("table"):
            raise cur.error("expected 'table'")
        name = cur.expect_ident("table name").text
        cur.expect_punct("{")
        attrs = []
        while True:
            aname = cur.expect_ident("attribute name").text
            cur.expect_punct(":")
            tytok = cur.expect_ident("type")
            if tytok.text not in _TYPES:
                raise ParseError(f"unknown type {tytok.text!r}", tytok.line, tytok.col)
            pk, ref = False, None
            if cur.eat_punct("["):
                if cur.eat_ident("pk"):
                    pk = True
                elif cur.eat_ident("fk"):
                    ref = cur.expect_ident("referenced table").text
                else:
                    raise cur.error("expected 'pk' or 'fk'")
                cur.expect_punct("]")
            attrs.append(Attribute(name, aname, _TYPES[tytok.text], pk, ref))
            if not cur.eat_punct(","):
                break
        cur.expect_punct("}")
        tables.append(Table(name, tuple(attrs)))
    schema = Schema(tuple(tables))
    problems = check_schema(schema)
    if problems:
        raise SchemaError("; ".join(problems))
    return schema


class _ProgramParser:
    def __init__(self, cur: _Cursor, schema: Schema):
        self.cur = cur
        self.schema = schema
        self.params: dict[str, ValueType] = {}

    # ---- joins ----

    def parse_join(self) -> JoinChain:
        tok = self.cur.expect_ident("table name")
        chain: JoinChain = BaseTable(tok.text)
        while self.cur.eat_ident("join"):
            rtok = self.cur.expect_ident("table name")
            right = BaseTable(rtok.text)
            if self.cur.eat_ident("on"):
                la = self.parse_attr_ref(chain, allow_bare=True)
                self.cur.expect_punct("=")
                ra = self.parse_attr_ref(right, allow_bare=True)
                chain = EquiJoin(chain, la, right, ra)
            else:
                la, ra = self._natural_pair(chain, right, rtok)
                chain = EquiJoin(chain, la, right, ra)
        return chain

    def _natural_pair(self, left: JoinChain, right: BaseTable, tok: Token):
        lt = [self.schema.table(t) for t in tables_of(left)]
        rt = self.schema.table(right.table)
        if any(t is None for t in lt) or rt is None:
            raise ParseError("unknown table in join", tok.line, tok.col)
        pairs = []
        for t in lt:
            for a in t.attributes:
                b = rt.attribute(a.name)
                if b is not None and b.ty == a.ty:
                    pairs.append((a.qualified, b.qualified))
        if not pairs:
            raise ParseError(
                f"no common column to join {right.table} on; use 'on'",
                tok.line,
                tok.col,
            )
        if len(pairs) > 1:
            names = ", ".join(str(a) for a, _ in pairs)
            raise ParseError(
                f"ambiguous natural join ({names}); use 'on'", tok.line, tok.col
            )
        return pairs[0]

    def parse_attr_ref(self, join: Optional[JoinChain], allow_bare: bool = True) -> QAttr:
        tok = self.cur.expect_ident("attribute")
        if self.cur.eat_punct("."):
            name = self.cur.expect_ident("attribute name").text
            return QAttr(tok.text, name)
        if not allow_bare or join is None:
            raise ParseError("qualified attribute required", tok.line, tok.col)
        owners = [
            t
            for t in tables_of(join)
            if self.schema.table(t) and self.schema.table(t).attribute(tok.text)
        ]
        if not owners:
            raise ParseError(f"attribute {tok.text!r} not found in join", tok.line, tok.col)
        if len(owners) > 1:
            raise ParseError(
                f"attribute {tok.text!r} is ambiguous in join; qualify it",
                tok.line,
                tok.col,
            )
        return QAttr(owners[0], tok.text)

    # ---- terms and predicates ----

    def parse_term(self) -> Term:
        tok = self.cur.peek()
        if tok.kind is Tok.INT:
            self.cur.next()
            return tok.value
        if tok.kind is Tok.STRING or tok.kind is Tok.BYTES:
            self.cur.next()
            return tok.value
        if tok.kind is Tok.IDENT:
            self.cur.next()
            if tok.text.startswith("uid") and tok.text[3:].isdigit():
                return FreshUid(int(tok.text[3:]))
            return Param(tok.text)
        raise self.cur.error("expected a term")

    def parse_pred(self, join: JoinChain) -> Predicate:
        left = self.parse_pred_and(join)
        while self.cur.eat_punct("||"):
            left = Or(left, self.parse_pred_and(join))
        return left

    def parse_pred_and(self, join: JoinChain) -> Predicate:
        left = self.parse_pred_not(join)
        while self.cur.eat_punct("&&"):
            left = And(left, self.parse_pred_not(join))
        return left

    def parse_pred_not(self, join: JoinChain) -> Predicate:
        if self.cur.eat_punct("!"):
            return Not(self.parse_pred_not(join))
        if self.cur.at_punct("("):
            self.cur.next()
            inner = self.parse_pred(join)
            self.cur.expect_punct(")")
            return inner
        return self.parse_comparison(join)

    def parse_comparison(self, join: JoinChain) -> Predicate:
        lhs = self.parse_attr_ref(join)
        if self.cur.eat_ident("in"):
            self.cur.expect_punct("(")
            sub = self.parse_query()
            self.cur.expect_punct(")")
            return InQuery(lhs, sub)
        tok = self.cur.peek()
        if tok.kind is Tok.PUNCT and tok.text in _CMP_OPS:
            self.cur.next()
            op = _CMP_OPS[tok.text]
        else:
            raise self.cur.error("expected comparison operator")
        rhs = self.parse_operand(join)
        return Cmp(lhs, op, rhs)

    def parse_operand(self, join: JoinChain) -> Union[QAttr, Param, int, str, bytes]:
        tok = self.cur.peek()
        if tok.kind is Tok.IDENT:
            # parameters shadow attributes; dotted names are attributes
            if self.cur.peek(1).kind is Tok.PUNCT and self.cur.peek(1).text == ".":
                return self.parse_attr_ref(join)
            if tok.text in self.params:
                self.cur.next()
                return Param(tok.text)
            return self.parse_attr_ref(join)
        term = self.parse_term()
        if isinstance(term, FreshUid):
            raise ParseError("uid slot not allowed here", tok.line, tok.col)
        return term

    # ---- queries ----

    def parse_query(self) -> Query:
        if self.cur.eat_ident("proj"):
            self.cur.expect_punct("(")
            self.cur.expect_punct("[")
            raw: list[tuple[Token, Optional[str]]] = []
            while True:
                tok = self.cur.expect_ident("attribute")
                name = None
                if self.cur.eat_punct("."):
                    name = self.cur.expect_ident("attribute name").text
                raw.append((tok, name))
                if not self.cur.eat_punct(","):
                    break
            self.cur.expect_punct("]")
            self.cur.expect_punct(",")
            sub = self.parse_query()
            self.cur.expect_punct(")")
            join = _innermost(sub)
            attrs = tuple(self._finish_attr(tok, name, join) for tok, name in raw)
            return Proj(attrs, sub)
        if self.cur.eat_ident("sel"):
            self.cur.expect_punct("(")
            mark = self.cur.pos
            # the predicate needs the join for bare-name resolution: scan past
            # it once to parse the sub-query, then re-parse the predicate
            depth = 0
            while True:
                t = self.cur.peek()
                if t.kind is Tok.EOF:
                    raise self.cur.error("unterminated sel(...)")
                if t.kind is Tok.PUNCT and t.text in "([":
                    depth += 1
                elif t.kind is Tok.PUNCT and t.text in ")]":
                    depth -= 1
                elif t.kind is Tok.PUNCT and t.text == "," and depth == 0:
                    break
                self.cur.next()
            comma = self.cur.pos
            self.cur.next()  # the separating comma
            sub = self.parse_query()
            self.cur.expect_punct(")")
            end = self.cur.pos
            self.cur.pos = mark
            pred = self.parse_pred(_innermost(sub))
            if self.cur.pos != comma:
                raise self.cur.error("trailing tokens after predicate")
            self.cur.pos = end
            return Sel(pred, sub)
        return JoinQ(self.parse_join())

    def _finish_attr(self, tok: Token, name: Optional[str], join: Optional[JoinChain]) -> QAttr:
        if name is not None:
            return QAttr(tok.text, name)
        if join is None:
            raise ParseError("qualified attribute required", tok.line, tok.col)
        owners = [
            t
            for t in tables_of(join)
            if self.schema.table(t) and self.schema.table(t).attribute(tok.text)
        ]
        if not owners:
            raise ParseError(f"attribute {tok.text!r} not found in join", tok.line, tok.col)
        if len(owners) > 1:
            raise ParseError(
                f"attribute {tok.text!r} is ambiguous in join; qualify it",
                tok.line,
                tok.col,
            )
        return QAttr(owners[0], tok.text)

    # ---- statements ----

    def parse_stmt(self) -> Statement:
        if self.cur.eat_ident("ins"):
            self.cur.expect_punct("(")
            join = self.parse_join()
            self.cur.expect_punct(",")
            self.cur.expect_punct("{")
            row = []
            while True:
                attr = self.parse_attr_ref(join)
                self.cur.expect_punct(":")
                row.append((attr, self.parse_term()))
                if not self.cur.eat_punct(","):
                    break
            self.cur.expect_punct("}")
            self.cur.expect_punct(")")
            self.cur.expect_punct(";")
            return Ins(join, _normalize_row(join, row, self.schema))
        if self.cur.eat_ident("del"):
            self.cur.expect_punct("(")
            self.cur.expect_punct("[")
            if self.cur.at_punct("]"):
                raise self.cur.error("delete table list: non-empty subset required")
            tables = [self.cur.expect_ident("table name").text]
            while self.cur.eat_punct(","):
                tables.append(self.cur.expect_ident("table name").text)
            self.cur.expect_punct("]")
            self.cur.expect_punct(",")
            join = self.parse_join()
            self.cur.expect_punct(",")
            pred = self.parse_pred(join)
            self.cur.expect_punct(")")
            self.cur.expect_punct(";")
            return Del(tuple(tables), join, pred)
        if self.cur.eat_ident("upd"):
            self.cur.expect_punct("(")
            join = self.parse_join()
            self.cur.expect_punct(",")
            pred = self.parse_pred(join)
            self.cur.expect_punct(",")
            attr = self.parse_attr_ref(join)
            self.cur.expect_punct(",")
            val = self.parse_term()
            if isinstance(val, FreshUid):
                raise self.cur.error("uid slot not allowed in update value")
            self.cur.expect_punct(")")
            self.cur.expect_punct(";")
            return Upd(join, pred, attr, val)
        q = self.parse_query()
        self.cur.expect_punct(";")
        return QueryStmt(q)

    def parse_function(self) -> Function:
        if self.cur.eat_ident("update"):
            kind = FuncKind.UPDATE
        elif self.cur.eat_ident("query"):
            kind = FuncKind.QUERY
        else:
            raise self.cur.error("expected 'update' or 'query'")
        name = self.cur.expect_ident("function name").text
        self.cur.expect_punct("(")
        params = []
        if not self.cur.at_punct(")"):
            while True:
                pname = self.cur.expect_ident("parameter name").text
                self.cur.expect_punct(":")
                tytok = self.cur.expect_ident("type")
                if tytok.text not in _TYPES:
                    raise ParseError(f"unknown type {tytok.text!r}", tytok.line, tytok.col)
                params.append((pname, _TYPES[tytok.text]))
                if not self.cur.eat_punct(","):
                    break
        self.cur.expect_punct(")")
        self.params = dict(params)
        self.cur.expect_punct("{")
        stmts = []
        while not self.cur.at_punct("}"):
            stmts.append(self.parse_stmt())
        self.cur.expect_punct("}")
        if not stmts:
            raise self.cur.error(f"function {name} has an empty body")
        return Function(name, kind, tuple(params), seq_of(stmts))


def _innermost(q: Query) -> Optional[JoinChain]:
    while isinstance(q, (Proj, Sel)):
        q = q.sub
    return q.join if isinstance(q, JoinQ) else None


def _normalize_row(join: JoinChain, row, schema: Schema):
    """Order insert assignments canonically (chain table order, schema order)."""
    index = {a: i for i, a in enumerate(attrs_of(join, schema))}
    known = [entry for entry in row if entry[0] in index]
    unknown = [entry for entry in row if entry[0] not in index]
    return tuple(sorted(known, key=lambda e: index[e[0]]) + unknown)


def parse_program(text: str, schema: Schema) -> Program:
    """Parse program text and validate it against the schema."""
    cur = _Cursor(tokenize(text))
    pp = _ProgramParser(cur, schema)
    funcs = []
    while cur.peek().kind is not Tok.EOF:
        funcs.append(pp.parse_function())
    program = Program(tuple(funcs))
    diagnostics = validate_program(program, schema)
    if diagnostics:
        raise ValidationError(diagnostics)
    return program


# ============================================================
# Pretty printer
# ============================================================


def format_value(v: Union[int, str, bytes]) -> str:
    if isinstance(v, bool):
        raise TypeError("bool is not a database value")
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        escaped = v.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
        return f'"{escaped}"'
    if isinstance(v, bytes):
        return "0x" + v.hex()
    raise TypeError(f"not a literal value: {v!r}")


def format_term(t: Term) -> str:
    if isinstance(t, Param):
        return t.name
    if isinstance(t, FreshUid):
        return f"uid{t.slot}"
    return format_value(t)


def format_join(j: JoinChain) -> str:
    if isinstance(j, BaseTable):
        return j.table
    # right operand is a base table for parser-shaped chains; otherwise
    # parenthesize (cannot be re-parsed, but keeps the dump readable)
    left = format_join(j.left)
    if isinstance(j.right, BaseTable):
        right = j.right.table
    else:
        right = f"({format_join(j.right)})"
    return f"{left} join {right} on {j.left_attr} = {j.right_attr}"


def format_pred(p: Predicate) -> str:
    return _fmt_pred(p, 0)


def _fmt_pred(p: Predicate, prec: int) -> str:
    if isinstance(p, Or):
        s = f"{_fmt_pred(p.left, 1)} || {_fmt_pred(p.right, 1)}"
        return f"({s})" if prec > 1 else s
    if isinstance(p, And):
        s = f"{_fmt_pred(p.left, 2)} && {_fmt_pred(p.right, 2)}"
        return f"({s})" if prec > 2 else s
    if isinstance(p, Not):
        return f"!({_fmt_pred(p.inner, 0)})"
    if isinstance(p, Cmp):
        if isinstance(p.rhs, QAttr):
            rhs = str(p.rhs)
        elif isinstance(p.rhs, Param):
            rhs = p.rhs.name
        else:
            rhs = format_value(p.rhs)
        return f"{p.lhs} {p.op.value} {rhs}"
    if isinstance(p, InQuery):
        return f"{p.attr} in ({format_query(p.query)})"
    raise TypeError(f"unknown predicate {p!r}")


def format_query(q: Query) -> str:
    if isinstance(q, Proj):
        attrs = ", ".join(str(a) for a in q.attrs)
        return f"proj([{attrs}], {format_query(q.sub)})"
    if isinstance(q, Sel):
        return f"sel({format_pred(q.pred)}, {format_query(q.sub)})"
    if isinstance(q, JoinQ):
        return format_join(q.join)
    raise TypeError(f"unknown query {q!r}")


def format_stmt(s: Statement, indent: str = "  ") -> list[str]:
    if isinstance(s, Seq):
        return format_stmt(s.first, indent) + format_stmt(s.second, indent)
    if isinstance(s, Ins):
        row = ", ".join(f"{a}: {format_term(t)}" for a, t in s.row)
        return [f"{indent}ins({format_join(s.join)}, {{{row}}});"]
    if isinstance(s, Del):
        tables = ", ".join(s.tables)
        return [f"{indent}del([{tables}], {format_join(s.join)}, {format_pred(s.pred)});"]
    if isinstance(s, Upd):
        return [
            f"{indent}upd({format_join(s.join)}, {format_pred(s.pred)}, "
            f"{s.attr}, {format_term(s.val)});"
        ]
    if isinstance(s, QueryStmt):
        return [f"{indent}{format_query(s.query)};"]
    raise TypeError(f"unknown statement {s!r}")


def pretty_print(p: Program) -> str:
    """Program text that parses back to a structurally equal program."""
    lines: list[str] = []
    for f in p.functions:
        params = ", ".join(f"{n}: {ty.value}" for n, ty in f.params)
        lines.append(f"{f.kind.value} {f.name}({params}) {{")
        lines.extend(format_stmt(f.body))
        lines.append("}")
        lines.append("")
    return "\n".join(lines[:-1]) if lines else ""


def pretty_print_schema(s: Schema) -> str:
    lines = []
    for t in s.tables:
        attrs = []
        for a in t.attributes:
            suffix = ""
            if a.primary_key:
                suffix = " [pk]"
            elif a.references:
                suffix = f" [fk {a.references}]"
            attrs.append(f"{a.name}: {a.ty.value}{suffix}")
        lines.append(f"table {t.name} {{ " + ", ".join(attrs) + " }")
    return "\n".join(lines)
