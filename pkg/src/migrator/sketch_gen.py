"""Sketch generation: from a program and a value correspondence to the most
general sketch over the target schema.

Candidate join chains come from enumerating Steiner trees of the target
join graph (connected acyclic subgraphs spanning the terminal tables whose
leaves are all terminals), linearized by a deterministic depth-first
traversal. Per-statement sketches are then composed: in `choice` mode the
alternatives of a statement collapse into one statement whose join is a hole
over all candidate chains; in `subset` mode update alternatives compose into
a choice among all sequential compositions of non-empty ordered
subsequences.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .core import (
    And,
    BaseTable,
    ChoiceNode,
    Cmp,
    Del,
    EquiJoin,
    FreshUid,
    FuncKind,
    HoleAttr,
    HoleBool,
    HoleJoin,
    HoleTables,
    InQuery,
    Ins,
    JoinChain,
    JoinQ,
    MigratorError,
    Not,
    Or,
    Param,
    Program,
    Proj,
    QAttr,
    QueryStmt,
    Schema,
    Sel,
    Seq,
    SketchFunction,
    SketchIns,
    SketchProgram,
    Statement,
    Upd,
    ValueCorrespondence,
    attrs_of,
    flatten_seq,
    seq_of,
    tables_of,
)
from . import parser as _fmt


class SketchGenError(MigratorError):
    """The statement cannot be rewritten under the given correspondence."""


# ============================================================
# Join graph and Steiner-tree enumeration
# ============================================================


@dataclass(frozen=True)
class JoinEdge:
    left: str
    right: str
    pairs: tuple[tuple[QAttr, QAttr], ...]  # join-able pairs, left table first


@dataclass(frozen=True)
class JoinGraph:
    vertices: tuple[str, ...]
    edges: tuple[JoinEdge, ...]

    def edge(self, a: str, b: str) -> Optional[JoinEdge]:
        for e in self.edges:
            if {e.left, e.right} == {a, b}:
                return e
        return None

    def neighbors(self, t: str) -> list[str]:
        out = []
        for e in self.edges:
            if e.left == t:
                out.append(e.right)
            elif e.right == t:
                out.append(e.left)
        return sorted(out)


def build_join_graph(schema: Schema) -> JoinGraph:
    """Tables joined by shared attribute names of equal type or by a foreign
    key into the other table's primary key."""
    edges = []
    for t1, t2 in itertools.combinations(schema.tables, 2):
        pairs = set()
        for a in t1.attributes:
            b = t2.attribute(a.name)
            if b is not None and b.ty == a.ty:
                pairs.add((a.qualified, b.qualified))
            if a.references == t2.name:
                pk = next((x for x in t2.attributes if x.primary_key), None)
                if pk is not None:
                    pairs.add((a.qualified, pk.qualified))
        for b in t2.attributes:
            if b.references == t1.name:
                pk = next((x for x in t1.attributes if x.primary_key), None)
                if pk is not None:
                    pairs.add((pk.qualified, b.qualified))
        if pairs:
            edges.append(
                JoinEdge(t1.name, t2.name, tuple(sorted(pairs, key=lambda p: (str(p[0]), str(p[1])))))
            )
    return JoinGraph(tuple(t.name for t in schema.tables), tuple(edges))


def steiner_trees(g: JoinGraph, terminals: Iterable[str]) -> tuple[JoinChain, ...]:
    """All join chains arising from Steiner trees spanning the terminals.

    A Steiner tree here is a connected acyclic subgraph containing every
    terminal whose leaves are all terminals (not only minimal trees: larger
    detours through non-terminal tables are distinct candidates). Results are
    ordered by table count, then lexicographically by table sequence.
    """
    terms = sorted(set(terminals))
    if not terms:
        raise MigratorError("steiner_trees needs at least one terminal")
    for t in terms:
        if t not in g.vertices:
            raise MigratorError(f"terminal {t} not in join graph")
    root = terms[0]
    # breadth-first enumeration of all subtrees containing the root
    seen: set[frozenset[tuple[str, str]]] = {frozenset()}
    frontier: list[tuple[frozenset[tuple[str, str]], frozenset[str]]] = [
        (frozenset(), frozenset([root]))
    ]
    trees = []
    while frontier:
        edges, verts = frontier.pop()
        if set(terms) <= verts and _leaves(edges, verts) <= set(terms):
            trees.append((edges, verts))
        for e in g.edges:
            a_in, b_in = e.left in verts, e.right in verts
            if a_in == b_in:
                continue  # either a cycle or detached
            key = (e.left, e.right)
            new_edges = edges | {key}
            if new_edges in seen:
                continue
            seen.add(new_edges)
            new_vert = e.right if a_in else e.left
            frontier.append((new_edges, verts | {new_vert}))
    chains = {(_linearize(g, edges, verts, root)) for edges, verts in trees}
    return tuple(sorted(chains, key=lambda c: (len(tables_of(c)), tables_of(c))))


def _leaves(edges: frozenset[tuple[str, str]], verts: frozenset[str]) -> set[str]:
    if not edges:
        return set(verts)  # single vertex is its own leaf
    degree: dict[str, int] = {}
    for a, b in edges:
        degree[a] = degree.get(a, 0) + 1
        degree[b] = degree.get(b, 0) + 1
    return {v for v in verts if degree.get(v, 0) <= 1}


def _linearize(
    g: JoinGraph,
    edges: frozenset[tuple[str, str]],
    verts: frozenset[str],
    root: str,
) -> JoinChain:
    """Depth-first chain construction rooted at the least terminal."""
    adjacency: dict[str, list[str]] = {v: [] for v in verts}
    for a, b in edges:
        adjacency[a].append(b)
        adjacency[b].append(a)
    chain: JoinChain = BaseTable(root)
    covered = {root}
    stack = [root]
    while stack:
        cur = stack.pop()
        for nxt in sorted(adjacency[cur]):
            if nxt in covered:
                continue
            edge = g.edge(cur, nxt)
            la, ra = edge.pairs[0]
            if la.table != cur:  # orient the pair: covered side on the left
                la, ra = ra, la
            chain = EquiJoin(chain, la, BaseTable(nxt), ra)
            covered.add(nxt)
            stack.append(cur)
            stack.append(nxt)
            break
    return chain


# ============================================================
# Join correspondence
# ============================================================


def mapped_attrs(j: JoinChain, phi: ValueCorrespondence, s: Schema) -> list[QAttr]:
    return [a for a in attrs_of(j, s) if phi.get(a)]


def join_corr_valid(
    j: JoinChain,
    j2: JoinChain,
    phi: ValueCorrespondence,
    s: Schema,
    s2: Schema,
) -> bool:
    """Every mapped attribute of j has some image among the attributes of j2."""
    covered = set(attrs_of(j2, s2))
    return all(
        any(img in covered for img in phi[a]) for a in mapped_attrs(j, phi, s)
    )


def candidate_joins(
    j: JoinChain,
    phi: ValueCorrespondence,
    s: Schema,
    s2: Schema,
    graph: Optional[JoinGraph] = None,
) -> tuple[JoinChain, ...]:
    """Target join chains that can stand in for j under phi."""
    if graph is None:
        graph = build_join_graph(s2)
    attrs = mapped_attrs(j, phi, s)
    if not attrs:
        return ()
    terminal_sets = set()
    for images in itertools.product(*(phi[a] for a in attrs)):
        terminal_sets.add(frozenset(img.table for img in images))
    chains: dict[JoinChain, None] = {}
    for terms in sorted(terminal_sets, key=sorted):
        for chain in steiner_trees(graph, terms):
            if join_corr_valid(j, chain, phi, s, s2):
                chains.setdefault(chain)
    return tuple(
        sorted(chains, key=lambda c: (len(tables_of(c)), tables_of(c)))
    )


# ============================================================
# Sketch construction context
# ============================================================


class _HoleAllocator:
    def __init__(self) -> None:
        self.counter = 0

    def next_id(self) -> int:
        self.counter += 1
        return self.counter


@dataclass
class _GenContext:
    phi: ValueCorrespondence
    source: Schema
    target: Schema
    graph: JoinGraph
    holes: _HoleAllocator
    owner: str = ""
    chain_cache: dict[JoinChain, tuple[JoinChain, ...]] = field(default_factory=dict)

    def candidates(self, j: JoinChain) -> tuple[JoinChain, ...]:
        if j not in self.chain_cache:
            self.chain_cache[j] = candidate_joins(
                j, self.phi, self.source, self.target, self.graph
            )
        return self.chain_cache[j]

    def images(self, a: QAttr, construct: str) -> tuple[QAttr, ...]:
        images = self.phi.get(a, ())
        if not images:
            raise SketchGenError(
                f"{self.owner}: unmappable attribute {a} in {construct}"
            )
        return tuple(images)

    def attr_hole(self, domain: tuple[QAttr, ...]) -> Union[QAttr, HoleAttr]:
        if len(domain) == 1:
            return domain[0]
        return HoleAttr(self.holes.next_id(), domain, self.owner)

    def join_hole(self, domain: tuple[JoinChain, ...]) -> Union[JoinChain, HoleJoin]:
        if len(domain) == 1:
            return domain[0]
        return HoleJoin(self.holes.next_id(), domain, self.owner)

    def tables_hole(
        self, domain: tuple[tuple[str, ...], ...]
    ) -> Union[tuple[str, ...], HoleTables]:
        if len(domain) == 1:
            return domain[0]
        return HoleTables(self.holes.next_id(), domain, self.owner)

    def bool_hole(self) -> HoleBool:
        return HoleBool(self.holes.next_id(), self.owner)


def _subset_domain(chains: Iterable[JoinChain]) -> tuple[tuple[str, ...], ...]:
    """Union of the non-empty power sets of the chains' table lists.

    Ordered by subset size, then positionally over the union table order
    (first occurrence across chains), so singletons come first.
    """
    order: list[str] = []
    table_sets = []
    for c in chains:
        ts = tables_of(c)
        table_sets.append(set(ts))
        for t in ts:
            if t not in order:
                order.append(t)
    out = []
    for size in range(1, len(order) + 1):
        for combo in itertools.combinations(range(len(order)), size):
            subset = tuple(order[i] for i in combo)
            if any(set(subset) <= ts for ts in table_sets):
                out.append(subset)
    return tuple(out)


# ============================================================
# Statement rewriting
# ============================================================


def _unrestricted(source_chain: JoinChain):
    return lambda images: images


def _images(ctx: _GenContext, a: QAttr, construct: str, filt) -> tuple[QAttr, ...]:
    images = filt(ctx.images(a, construct))
    if not images:
        raise SketchGenError(
            f"{ctx.owner}: no usable image of {a} inside the assigned chain"
        )
    return images


def _rewrite_pred(pred, ctx: _GenContext, join_for, filt_for, filt):
    """Predicate with every attribute replaced by a hole over its images.

    `join_for` supplies the target join for nested sub-queries; `filt`
    restricts image domains for the enclosing chain (`filt_for` derives the
    restriction for a sub-query's own chain).
    """
    if isinstance(pred, Cmp):
        lhs = ctx.attr_hole(_images(ctx, pred.lhs, "predicate", filt))
        rhs = pred.rhs
        if isinstance(rhs, QAttr):
            rhs = ctx.attr_hole(_images(ctx, rhs, "predicate", filt))
        return Cmp(lhs, pred.op, rhs)
    if isinstance(pred, InQuery):
        attr = ctx.attr_hole(_images(ctx, pred.attr, "in-predicate", filt))
        return InQuery(attr, _rewrite_query(pred.query, ctx, join_for, filt_for))
    if isinstance(pred, And):
        return And(
            _rewrite_pred(pred.left, ctx, join_for, filt_for, filt),
            _rewrite_pred(pred.right, ctx, join_for, filt_for, filt),
        )
    if isinstance(pred, Or):
        return Or(
            _rewrite_pred(pred.left, ctx, join_for, filt_for, filt),
            _rewrite_pred(pred.right, ctx, join_for, filt_for, filt),
        )
    if isinstance(pred, Not):
        return Not(_rewrite_pred(pred.inner, ctx, join_for, filt_for, filt))
    raise MigratorError(f"unknown predicate {pred!r}")


def _rewrite_query(q, ctx: _GenContext, join_for, filt_for):
    filt = filt_for(_query_chain(q))
    if isinstance(q, JoinQ):
        return JoinQ(join_for(q.join))
    if isinstance(q, Sel):
        return Sel(
            _rewrite_pred(q.pred, ctx, join_for, filt_for, filt),
            _rewrite_query(q.sub, ctx, join_for, filt_for),
        )
    if isinstance(q, Proj):
        attrs = tuple(
            ctx.attr_hole(_images(ctx, a, "projection", filt)) for a in q.attrs
        )
        return Proj(attrs, _rewrite_query(q.sub, ctx, join_for, filt_for))
    raise MigratorError(f"unknown query {q!r}")


def _query_chain(q) -> JoinChain:
    while isinstance(q, (Proj, Sel)):
        q = q.sub
    return q.join


def _ins_assigns(stmt: Ins, ctx: _GenContext, filt):
    """Insert images: mapped attributes carry their source term; entries for
    deleted attributes (empty image set) are dropped. Forced term conflicts
    (two singleton images colliding with different terms) fail generation."""
    assigns = []
    forced: dict[QAttr, object] = {}
    for a, term in stmt.row:
        images = filt(tuple(ctx.phi.get(a, ())))
        if not images:
            if ctx.phi.get(a):
                raise SketchGenError(
                    f"{ctx.owner}: no usable image of {a} inside the assigned chain"
                )
            continue
        img = ctx.attr_hole(images)
        if isinstance(img, QAttr):
            if img in forced and forced[img] != term:
                raise SketchGenError(
                    f"{ctx.owner}: attributes with conflicting terms both map to {img}"
                )
            forced[img] = term
        assigns.append((img, term))
    if not assigns:
        raise SketchGenError(f"{ctx.owner}: insert has no mappable attributes")
    return tuple(assigns)


def _rewrite_stmt_choice(stmt: Statement, ctx: _GenContext):
    """Choice-mode rewrite: one statement, joins become holes over all
    candidate chains; attribute domains stay unrestricted since the chain
    varies."""
    if isinstance(stmt, Seq):
        return Seq(
            _rewrite_stmt_choice(stmt.first, ctx),
            _rewrite_stmt_choice(stmt.second, ctx),
        )

    def join_for(j: JoinChain):
        cands = ctx.candidates(j)
        if not cands:
            raise SketchGenError(
                f"{ctx.owner}: no candidate join chains for {_fmt.format_join(j)}"
            )
        return ctx.join_hole(cands)

    no_filter = _unrestricted(None)
    if isinstance(stmt, Ins):
        return SketchIns(join_for(stmt.join), _ins_assigns(stmt, ctx, no_filter))
    if isinstance(stmt, Del):
        cands = ctx.candidates(stmt.join)
        if not cands:
            raise SketchGenError(
                f"{ctx.owner}: no candidate join chains for {_fmt.format_join(stmt.join)}"
            )
        tables = ctx.tables_hole(_subset_domain(cands))
        join = ctx.join_hole(cands)
        pred = _rewrite_pred(stmt.pred, ctx, join_for, _unrestricted, no_filter)
        return Del(tables, join, pred)
    if isinstance(stmt, Upd):
        join = join_for(stmt.join)
        pred = _rewrite_pred(stmt.pred, ctx, join_for, _unrestricted, no_filter)
        attr = ctx.attr_hole(ctx.images(stmt.attr, "update"))
        return Upd(join, pred, attr, stmt.val)
    if isinstance(stmt, QueryStmt):
        return QueryStmt(_rewrite_query(stmt.query, ctx, join_for, _unrestricted))
    raise MigratorError(f"unknown statement {stmt!r}")


def _source_chains(stmt: Statement) -> list[JoinChain]:
    """Join-chain occurrences of a single (non-Seq) statement, in walk order."""
    chains: list[JoinChain] = []

    def walk_pred(pred) -> None:
        if isinstance(pred, InQuery):
            walk_query(pred.query)
        elif isinstance(pred, (And, Or)):
            walk_pred(pred.left)
            walk_pred(pred.right)
        elif isinstance(pred, Not):
            walk_pred(pred.inner)

    def walk_query(q) -> None:
        if isinstance(q, JoinQ):
            chains.append(q.join)
        elif isinstance(q, Sel):
            walk_pred(q.pred)
            walk_query(q.sub)
        elif isinstance(q, Proj):
            walk_query(q.sub)

    if isinstance(stmt, Ins):
        chains.append(stmt.join)
    elif isinstance(stmt, Del):
        chains.append(stmt.join)
        walk_pred(stmt.pred)
    elif isinstance(stmt, Upd):
        chains.append(stmt.join)
        walk_pred(stmt.pred)
    elif isinstance(stmt, QueryStmt):
        walk_query(stmt.query)
    return chains


def sketch_stmt_phase1(
    stmt: Statement,
    assignment: dict[JoinChain, JoinChain],
    ctx: _GenContext,
):
    """Phase-1 rewrite: every source chain is fixed to one target chain.

    With the chain fixed, attribute-hole domains are restricted to the
    chain's attributes (images outside it could never instantiate to a
    well-formed statement, so the completion set is unchanged).
    """

    def join_for(j: JoinChain) -> JoinChain:
        if j not in assignment:
            raise SketchGenError(f"{ctx.owner}: no chain assigned for {_fmt.format_join(j)}")
        return assignment[j]

    def filt_for(source_chain: JoinChain):
        target_chain = assignment.get(source_chain)
        if target_chain is None:
            return _unrestricted(source_chain)
        covered = set(attrs_of(target_chain, ctx.target))
        return lambda images: tuple(a for a in images if a in covered)

    if isinstance(stmt, Ins):
        return SketchIns(
            join_for(stmt.join), _ins_assigns(stmt, ctx, filt_for(stmt.join))
        )
    if isinstance(stmt, Del):
        chain = join_for(stmt.join)
        tables = ctx.tables_hole(_subset_domain([chain]))
        pred = _rewrite_pred(stmt.pred, ctx, join_for, filt_for, filt_for(stmt.join))
        return Del(tables, chain, pred)
    if isinstance(stmt, Upd):
        chain = join_for(stmt.join)
        filt = filt_for(stmt.join)
        pred = _rewrite_pred(stmt.pred, ctx, join_for, filt_for, filt)
        attr = ctx.attr_hole(_images(ctx, stmt.attr, "update", filt))
        return Upd(chain, pred, attr, stmt.val)
    if isinstance(stmt, QueryStmt):
        return QueryStmt(_rewrite_query(stmt.query, ctx, join_for, filt_for))
    raise MigratorError(f"phase-1 rewrite of unexpected statement {stmt!r}")


def _rewrite_stmt_subset(stmt: Statement, ctx: _GenContext, is_update: bool):
    """Subset-mode rewrite: enumerate chain assignments, compose alternatives.

    Queries compose as a plain choice; updates as a choice among the
    sequential compositions of every non-empty ordered subsequence of the
    alternatives, so either one or several of the candidate updates may run.
    """
    if isinstance(stmt, Seq):
        return Seq(
            _rewrite_stmt_subset(stmt.first, ctx, is_update),
            _rewrite_stmt_subset(stmt.second, ctx, is_update),
        )
    chains = list(dict.fromkeys(_source_chains(stmt)))
    domains = []
    for j in chains:
        cands = ctx.candidates(j)
        if not cands:
            raise SketchGenError(
                f"{ctx.owner}: no candidate join chains for {_fmt.format_join(j)}"
            )
        domains.append(cands)
    alternatives = []
    for picks in itertools.product(*domains):
        assignment = dict(zip(chains, picks))
        alternatives.append(sketch_stmt_phase1(stmt, assignment, ctx))
    if len(alternatives) == 1:
        return alternatives[0]
    if not is_update:
        return _choice_of(alternatives, ctx)
    variants = []
    indices = range(len(alternatives))
    for size in range(1, len(alternatives) + 1):
        for combo in itertools.combinations(indices, size):
            subseq = [alternatives[i] for i in combo]
            variants.append(subseq[0] if len(subseq) == 1 else seq_of(subseq))
    return _choice_of(variants, ctx)


def _choice_of(variants: list, ctx: _GenContext):
    holes = [ctx.bool_hole() for _ in variants[:-1]]
    out = variants[-1]
    for hole, v in zip(reversed(holes), reversed(variants[:-1])):
        out = ChoiceNode(hole, v, out)
    return out


def gen_sketch(
    p: Program,
    phi: ValueCorrespondence,
    source: Schema,
    target: Schema,
    mode: str = "choice",
) -> SketchProgram:
    """Most general sketch of p over the target schema under phi.

    Raises SketchGenError when some statement cannot be rewritten, which
    signals the caller to move on to the next value correspondence.
    """
    if mode not in ("choice", "subset"):
        raise ValueError(f"unknown compose mode {mode!r}")
    ctx = _GenContext(
        phi=phi,
        source=source,
        target=target,
        graph=build_join_graph(target),
        holes=_HoleAllocator(),
    )
    funcs = []
    for f in p.functions:
        ctx.owner = f.name
        if mode == "choice":
            body = _rewrite_stmt_choice(f.body, ctx)
        else:
            body = _rewrite_stmt_subset(f.body, ctx, f.kind is FuncKind.UPDATE)
        funcs.append(SketchFunction(f.name, f.kind, f.params, body))
    return SketchProgram(tuple(funcs))


# ============================================================
# Sketch rendering (debug dump)
# ============================================================


def _fmt_domain(elems: Iterable[str]) -> str:
    return "{" + ", ".join(elems) + "}"


def _render_attr(a) -> str:
    if isinstance(a, HoleAttr):
        return f"??{a.id}" + _fmt_domain(str(x) for x in a.domain)
    return str(a)


def _render_join(j) -> str:
    if isinstance(j, HoleJoin):
        return f"??{j.id}" + _fmt_domain(_fmt.format_join(c) for c in j.domain)
    return _fmt.format_join(j)


def _render_term(t) -> str:
    return _fmt.format_term(t)


def _render_pred(p) -> str:
    if isinstance(p, Cmp):
        rhs = p.rhs
        if isinstance(rhs, (HoleAttr, QAttr)):
            rhs_s = _render_attr(rhs)
        elif isinstance(rhs, Param):
            rhs_s = rhs.name
        else:
            rhs_s = _fmt.format_value(rhs)
        return f"{_render_attr(p.lhs)} {p.op.value} {rhs_s}"
    if isinstance(p, InQuery):
        return f"{_render_attr(p.attr)} in ({_render_query(p.query)})"
    if isinstance(p, And):
        return f"{_render_pred(p.left)} && {_render_pred(p.right)}"
    if isinstance(p, Or):
        return f"({_render_pred(p.left)} || {_render_pred(p.right)})"
    if isinstance(p, Not):
        return f"!({_render_pred(p.inner)})"
    raise MigratorError(f"unknown predicate {p!r}")


def _render_query(q) -> str:
    if isinstance(q, Proj):
        attrs = ", ".join(_render_attr(a) for a in q.attrs)
        return f"proj([{attrs}], {_render_query(q.sub)})"
    if isinstance(q, Sel):
        return f"sel({_render_pred(q.pred)}, {_render_query(q.sub)})"
    if isinstance(q, JoinQ):
        return _render_join(q.join)
    raise MigratorError(f"unknown query {q!r}")


def _render_stmt(s, indent: str) -> list[str]:
    if isinstance(s, Seq):
        return _render_stmt(s.first, indent) + _render_stmt(s.second, indent)
    if isinstance(s, ChoiceNode):
        lines = [f"{indent}choice ??{s.hole.id} {{"]
        lines += _render_stmt(s.then, indent + "  ")
        lines.append(f"{indent}}} or {{")
        lines += _render_stmt(s.els, indent + "  ")
        lines.append(f"{indent}}}")
        return lines
    if isinstance(s, SketchIns):
        row = ", ".join(f"{_render_attr(a)}: {_render_term(t)}" for a, t in s.assigns)
        return [f"{indent}ins({_render_join(s.join)}, {{{row}}});"]
    if isinstance(s, Ins):
        row = ", ".join(f"{a}: {_render_term(t)}" for a, t in s.row)
        return [f"{indent}ins({_fmt.format_join(s.join)}, {{{row}}});"]
    if isinstance(s, Del):
        if isinstance(s.tables, HoleTables):
            tables = f"??{s.tables.id}" + _fmt_domain(
                "[" + ", ".join(sub) + "]" for sub in s.tables.domain
            )
        else:
            tables = "[" + ", ".join(s.tables) + "]"
        return [f"{indent}del({tables}, {_render_join(s.join)}, {_render_pred(s.pred)});"]
    if isinstance(s, Upd):
        return [
            f"{indent}upd({_render_join(s.join)}, {_render_pred(s.pred)}, "
            f"{_render_attr(s.attr)}, {_render_term(s.val)});"
        ]
    if isinstance(s, QueryStmt):
        return [f"{indent}{_render_query(s.query)};"]
    raise MigratorError(f"unknown sketch statement {s!r}")


def render_sketch(sketch: SketchProgram) -> str:
    """Readable dump with numbered holes and their domains."""
    lines: list[str] = []
    for f in sketch.functions:
        params = ", ".join(f"{n}: {ty.value}" for n, ty in f.params)
        lines.append(f"{f.kind.value} {f.name}({params}) {{")
        lines.extend(_render_stmt(f.body, "  "))
        lines.append("}")
        lines.append("")
    return "\n".join(lines[:-1]) if lines else ""
