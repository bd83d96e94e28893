"""Propositional engine: DPLL satisfiability with native exactly-one groups,
weighted partial MaxSAT by branch and bound, and exact model counting.

Instances in this package are small (hundreds of variables), so completeness
and determinism beat sophistication. Literals are signed 1-based ints as in
DIMACS; an xor group is a list of variables of which exactly one must be true.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .core import MigratorError

Clause = tuple[int, ...]


class SolverLimitError(MigratorError):
    pass


@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    hard: tuple[Clause, ...] = ()
    xor_groups: tuple[tuple[int, ...], ...] = ()
    soft: tuple[tuple[Clause, int], ...] = ()

    def check(self) -> None:
        for clause in self.hard:
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise MigratorError(f"literal {lit} out of range")
        for group in self.xor_groups:
            if not group:
                raise MigratorError("empty xor group")
            for v in group:
                if v <= 0 or v > self.num_vars:
                    raise MigratorError(f"xor variable {v} out of range")
        for clause, weight in self.soft:
            if weight < 0:
                raise MigratorError("negative soft weight")
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise MigratorError(f"literal {lit} out of range")


@dataclass(frozen=True)
class Model:
    """Total assignment; values[v] is the value of variable v (1-based)."""

    values: tuple[bool, ...]

    def __getitem__(self, var: int) -> bool:
        return self.values[var - 1]

    def literal(self, var: int) -> int:
        return var if self[var] else -var


def add_hard(f: CnfFormula, clause: Clause) -> CnfFormula:
    """Formula with the clause appended; models violating it are excluded."""
    return replace(f, hard=f.hard + (tuple(clause),))


# ============================================================
# Assignment trail with unit propagation
# ============================================================


class _Search:
    def __init__(self, f: CnfFormula):
        self.f = f
        self.assign: list[Optional[bool]] = [None] * (f.num_vars + 1)
        self.trail: list[int] = []
        # watch lists: variable -> clauses / groups containing it
        self.clauses_of: list[list[int]] = [[] for _ in range(f.num_vars + 1)]
        for ci, clause in enumerate(f.hard):
            for lit in clause:
                self.clauses_of[abs(lit)].append(ci)
        self.groups_of: list[list[int]] = [[] for _ in range(f.num_vars + 1)]
        for gi, group in enumerate(f.xor_groups):
            for v in group:
                self.groups_of[v].append(gi)

    def value(self, lit: int) -> Optional[bool]:
        v = self.assign[abs(lit)]
        if v is None:
            return None
        return v if lit > 0 else not v

    def set(self, var: int, value: bool) -> bool:
        """Assign and propagate; False on conflict."""
        if self.assign[var] is not None:
            return self.assign[var] == value
        self.assign[var] = value
        self.trail.append(var)
        queue = [var]
        while queue:
            v = queue.pop()
            for ci in self.clauses_of[v]:
                if not self._check_clause(ci, queue):
                    return False
            for gi in self.groups_of[v]:
                if not self._check_group(gi, queue):
                    return False
        return True

    def _assign_propagated(self, var: int, value: bool, queue: list[int]) -> bool:
        if self.assign[var] is not None:
            return self.assign[var] == value
        self.assign[var] = value
        self.trail.append(var)
        queue.append(var)
        return True

    def _check_clause(self, ci: int, queue: list[int]) -> bool:
        unassigned = None
        count = 0
        for lit in self.f.hard[ci]:
            val = self.value(lit)
            if val is True:
                return True
            if val is None:
                unassigned = lit
                count += 1
                if count > 1:
                    return True
        if count == 0:
            return False  # all literals false
        return self._assign_propagated(abs(unassigned), unassigned > 0, queue)

    def _check_group(self, gi: int, queue: list[int]) -> bool:
        group = self.f.xor_groups[gi]
        true_var = None
        unassigned = []
        for v in group:
            val = self.assign[v]
            if val is True:
                if true_var is not None:
                    return False  # two true in an exactly-one group
                true_var = v
            elif val is None:
                unassigned.append(v)
        if true_var is not None:
            for v in unassigned:
                if not self._assign_propagated(v, False, queue):
                    return False
            return True
        if not unassigned:
            return False  # all false
        if len(unassigned) == 1:
            return self._assign_propagated(unassigned[0], True, queue)
        return True

    def mark(self) -> int:
        return len(self.trail)

    def undo_to(self, mark: int) -> None:
        while len(self.trail) > mark:
            self.assign[self.trail.pop()] = None

    def model(self) -> Model:
        return Model(tuple(bool(self.assign[v]) for v in range(1, self.f.num_vars + 1)))


def sat_solve(f: CnfFormula) -> Optional[Model]:
    """A model satisfying all hard clauses and xor groups, or None.

    Deterministic: branches on variables in index order, trying True first,
    so for pure hole encodings the first model picks every first option.
    """
    f.check()
    s = _Search(f)
    for clause in f.hard:
        if not clause:
            return None
    if not _propagate_initial(s):
        return None
    if _dpll(s, 1):
        return s.model()
    return None


def _propagate_initial(s: _Search) -> bool:
    queue: list[int] = []
    for ci in range(len(s.f.hard)):
        if not s._check_clause(ci, queue):
            return False
    for gi in range(len(s.f.xor_groups)):
        if not s._check_group(gi, queue):
            return False
    while queue:
        v = queue.pop()
        for ci in s.clauses_of[v]:
            if not s._check_clause(ci, queue):
                return False
        for gi in s.groups_of[v]:
            if not s._check_group(gi, queue):
                return False
    return True


def _dpll(s: _Search, start: int) -> bool:
    var = start
    while var <= s.f.num_vars and s.assign[var] is not None:
        var += 1
    if var > s.f.num_vars:
        return True
    for value in (True, False):
        mark = s.mark()
        if s.set(var, value) and _dpll(s, var + 1):
            return True
        s.undo_to(mark)
    return False


# ============================================================
# Weighted partial MaxSAT
# ============================================================


def maxsat_solve(f: CnfFormula) -> Optional[Model]:
    """Model maximizing total satisfied soft weight, or None if the hard part
    is unsatisfiable. Ties break to the lexicographically least assignment
    over variable index order (False < True)."""
    f.check()
    if sat_solve(f) is None:
        return None
    best = _maxsat_bound(f)
    # second pass: walk assignments in lexicographic order (False first) and
    # return the first one achieving the optimum
    s = _Search(f)
    if not _propagate_initial(s):
        return None
    model = _lex_extract(s, f, best)
    assert model is not None
    return model


def _soft_status(f: CnfFormula, s: _Search) -> tuple[int, int]:
    """(weight already satisfied, weight still possible) under s."""
    sat = 0
    possible = 0
    for clause, weight in f.soft:
        state = _clause_state(clause, s)
        if state is True:
            sat += weight
        elif state is None:
            possible += weight
    return sat, possible


def _clause_state(clause: Clause, s: _Search) -> Optional[bool]:
    undecided = False
    for lit in clause:
        val = s.value(lit)
        if val is True:
            return True
        if val is None:
            undecided = True
    return None if undecided else False


def _maxsat_bound(f: CnfFormula) -> int:
    """Optimum soft weight via branch and bound."""
    s = _Search(f)
    if not _propagate_initial(s):
        raise MigratorError("hard part unsatisfiable")
    best = -1

    def recurse(start: int) -> None:
        nonlocal best
        sat, possible = _soft_status(f, s)
        if sat + possible <= best:
            return
        var = start
        while var <= f.num_vars and s.assign[var] is not None:
            var += 1
        if var > f.num_vars:
            best = max(best, sat)
            return
        # try the value that keeps more soft weight reachable first; this
        # finds strong incumbents early and tightens pruning
        for value in _value_order(f, s, var):
            mark = s.mark()
            if s.set(var, value):
                recurse(var + 1)
            s.undo_to(mark)

    recurse(1)
    return best


def _value_order(f: CnfFormula, s: _Search, var: int) -> tuple[bool, bool]:
    gain_true = 0
    gain_false = 0
    for clause, weight in f.soft:
        if _clause_state(clause, s) is not None:
            continue
        if var in clause:
            gain_true += weight
        if -var in clause:
            gain_false += weight
    return (True, False) if gain_true >= gain_false else (False, True)


def _lex_extract(s: _Search, f: CnfFormula, target: int) -> Optional[Model]:
    sat, possible = _soft_status(f, s)
    if sat + possible < target:
        return None
    var = 1
    while var <= f.num_vars and s.assign[var] is not None:
        var += 1
    if var > f.num_vars:
        return s.model() if sat >= target else None
    for value in (False, True):
        mark = s.mark()
        if s.set(var, value):
            model = _lex_extract(s, f, target)
            if model is not None:
                return model
        s.undo_to(mark)
    return None


def satisfied_soft_weight(f: CnfFormula, m: Model) -> int:
    total = 0
    for clause, weight in f.soft:
        if any((lit > 0) == m[abs(lit)] for lit in clause):
            total += weight
    return total


# ============================================================
# Exact model counting
# ============================================================

_COUNT_WORK_LIMIT = 10**9


def count_models(f: CnfFormula, work_limit: int = _COUNT_WORK_LIMIT) -> int:
    """Exact number of assignments satisfying hard clauses and xor groups.

    Factorizes into independent components (variables coupled by shared
    clauses or groups) and enumerates each; raises SolverLimitError when the
    estimated enumeration work exceeds the guard.
    """
    f.check()
    for clause in f.hard:
        if not clause:
            return 0
    # union-find over variables to split independent components
    parent = list(range(f.num_vars + 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int) -> None:
        parent[find(a)] = find(b)

    for clause in f.hard:
        for lit in clause[1:]:
            union(abs(clause[0]), abs(lit))
    for group in f.xor_groups:
        for v in group[1:]:
            union(group[0], v)

    comp_vars: dict[int, list[int]] = {}
    for v in range(1, f.num_vars + 1):
        comp_vars.setdefault(find(v), []).append(v)
    comp_clauses: dict[int, list[Clause]] = {}
    for clause in f.hard:
        comp_clauses.setdefault(find(abs(clause[0])), []).append(clause)
    comp_groups: dict[int, list[tuple[int, ...]]] = {}
    for group in f.xor_groups:
        comp_groups.setdefault(find(group[0]), []).append(group)

    total = 1
    for root, variables in comp_vars.items():
        groups = comp_groups.get(root, [])
        clauses = comp_clauses.get(root, [])
        grouped = {v for g in groups for v in g}
        free = [v for v in variables if v not in grouped]
        work = 2 ** len(free)
        for g in groups:
            work *= len(g)
        if work > work_limit:
            raise SolverLimitError(
                f"component enumeration size {work} exceeds guard {work_limit}"
            )
        total *= _count_component(f, variables, groups, clauses, free)
    return total


def _count_component(
    f: CnfFormula,
    variables: list[int],
    groups: list[tuple[int, ...]],
    clauses: list[Clause],
    free: list[int],
) -> int:
    assign: dict[int, bool] = {}
    # check a clause as soon as its last variable gets a value
    clause_vars = [frozenset(abs(lit) for lit in c) for c in clauses]

    def clauses_ok() -> bool:
        for c, cvars in zip(clauses, clause_vars):
            if all(v in assign for v in cvars):
                if not any((lit > 0) == assign[abs(lit)] for lit in c):
                    return False
        return True

    choices: list[list[dict[int, bool]]] = []
    for g in groups:
        opts = []
        for chosen in g:
            opts.append({v: (v == chosen) for v in g})
        choices.append(opts)
    for v in free:
        choices.append([{v: False}, {v: True}])

    def recurse(level: int) -> int:
        if level == len(choices):
            return 1
        count = 0
        for opt in choices[level]:
            assign.update(opt)
            if clauses_ok():
                count += recurse(level + 1)
            for v in opt:
                del assign[v]
        return count

    return recurse(0)


# ============================================================
# Debug dump
# ============================================================


def dump_dimacs(f: CnfFormula) -> str:
    """DIMACS-like text of the hard part; xor groups as `c xor ...` comments."""
    lines = [f"p cnf {f.num_vars} {len(f.hard)}"]
    for group in f.xor_groups:
        lines.append("c xor " + " ".join(str(v) for v in group))
    for clause in f.hard:
        lines.append(" ".join(str(lit) for lit in clause) + " 0")
    return "\n".join(lines)
