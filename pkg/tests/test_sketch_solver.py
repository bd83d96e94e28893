import itertools

import pytest

from migrator.core import (
    BaseTable,
    Cmp,
    CmpOp,
    FuncKind,
    HoleAttr,
    IllFormedSketchError,
    JoinQ,
    Param,
    Proj,
    QAttr,
    QueryStmt,
    Sel,
    SketchFunction,
    SketchIns,
    SketchProgram,
    ValueType,
    tables_of,
)
from migrator.equiv import TestConfig, bounded_verify
from migrator.parser import parse_program, parse_schema
from migrator.sketch_gen import gen_sketch
from migrator.sketch_solver import (
    CompletionResult,
    SolveConfig,
    block_from_mfi,
    complete_sketch,
    completion_count,
    encode_sketch,
    enumerate_completions,
    instantiate,
)
from migrator.solver import Model, add_hard, count_models, sat_solve
from migrator.value_corr import encode_vc, next_value_corr

import helpers


@pytest.fixture
def course_sketch(course_source_schema, course_target_schema, course_program):
    enc = encode_vc(course_source_schema, course_target_schema, course_program)
    phi = next_value_corr(enc)
    return gen_sketch(
        course_program, phi, course_source_schema, course_target_schema, "choice"
    )


def model_for(sketch, hv, choice: dict[int, int]) -> Model:
    values = [False] * hv.num_vars
    for hole_id, idx in choice.items():
        values[hv.var_of[(hole_id, idx)] - 1] = True
    return Model(tuple(values))


def course_first_candidate_choice(sketch):
    """The running example's illustrative first candidate, by meaning:
    instructor functions use the 4-table chain, addTA the 2-table chain,
    TA-side delete/query the 4-table chain; deletes target [Instructor] and
    [TA]."""
    holes = {h.id: h for h in sketch.holes()}

    def join_option(h, n):
        for i, c in enumerate(h.domain):
            if len(tables_of(c)) == n:
                return i
        raise AssertionError

    def tables_option(h, subset):
        for i, s in enumerate(h.domain):
            if set(s) == set(subset):
                return i
        raise AssertionError

    return {
        1: join_option(holes[1], 4),
        2: tables_option(holes[2], ["Instructor"]),
        3: join_option(holes[3], 4),
        4: join_option(holes[4], 4),
        5: join_option(holes[5], 2),
        6: tables_option(holes[6], ["TA"]),
        7: join_option(holes[7], 4),
        8: join_option(holes[8], 4),
    }


class TestEncodeSketch:
    def test_course_count_without_wf(self, course_sketch):
        formula, _ = encode_sketch(course_sketch, wf_constraints=False)
        assert count_models(formula) == 164025

    def test_course_count_with_wf_matches_product_oracle(self, course_sketch):
        # oracle: enumerate hole-domain products, keeping delete targets
        # contained in the chosen chain's tables
        holes = course_sketch.holes()
        by_fn = {}
        for h in holes:
            by_fn.setdefault(h.owner, []).append(h)
        valid = 1
        for fn, hs in by_fn.items():
            count = 0
            for combo in itertools.product(*[h.domain for h in hs]):
                if len(hs) == 2:  # delete: (tables, join)
                    subset, chain = combo
                    if not set(subset) <= set(tables_of(chain)):
                        continue
                count += 1
            valid *= count
        formula, _ = encode_sketch(course_sketch, wf_constraints=True)
        got = count_models(formula)
        assert got == valid == 50625
        assert got < 164025

    def test_single_hole_sketch(self, course_sketch):
        single = SketchProgram((course_sketch.functions[0],))
        formula, hv = encode_sketch(single)
        assert len(formula.xor_groups) == 1
        assert formula.num_vars == 3
        assert count_models(formula) == 3

    def test_model_satisfies_exactly_one_per_hole(self, course_sketch):
        formula, hv = encode_sketch(course_sketch)
        m = sat_solve(formula)
        for group in formula.xor_groups:
            assert sum(m[v] for v in group) == 1


class TestInstantiate:
    def test_semantic_model_matches_target_program(
        self,
        course_sketch,
        course_program,
        course_source_schema,
        course_target_schema,
        course_target_program,
    ):
        # the model that picks the 2-table chains everywhere and deletes
        # from [Instructor] / [TA] is the published solution
        holes = {h.id: h for h in course_sketch.holes()}
        formula, hv = encode_sketch(course_sketch)

        def join_option(h, n):
            return next(i for i, c in enumerate(h.domain) if len(tables_of(c)) == n)

        def tables_option(h, subset):
            return next(i for i, s in enumerate(h.domain) if set(s) == set(subset))

        choice = {
            1: join_option(holes[1], 2),
            2: tables_option(holes[2], ["Instructor"]),
            3: join_option(holes[3], 2),
            4: join_option(holes[4], 2),
            5: join_option(holes[5], 2),
            6: tables_option(holes[6], ["TA"]),
            7: join_option(holes[7], 2),
            8: join_option(holes[8], 2),
        }
        program = instantiate(course_sketch, model_for(course_sketch, hv, choice), hv, course_target_schema)
        for f in program.functions:
            if f.name.startswith("delete"):
                assert f.body.tables in ((("Instructor",)), (("TA",)))
        assert bounded_verify(
            program, course_target_program, TestConfig(), course_target_schema, course_target_schema
        )

    def test_singleton_sketch_unique_completion(
        self, course_source_schema, course_program
    ):
        phi = {
            a.qualified: (a.qualified,) for a in course_source_schema.all_attributes()
        }
        sketch = gen_sketch(
            course_program, phi, course_source_schema, course_source_schema, "choice"
        )
        formula, hv = encode_sketch(sketch)
        m = sat_solve(formula)
        assert instantiate(sketch, m, hv, course_source_schema) == course_program

    def test_every_model_instantiates_into_gamma(
        self, course_sketch, course_target_schema
    ):
        formula, hv = encode_sketch(course_sketch)
        single = SketchProgram((course_sketch.functions[1],))  # deleteInstructor
        formula, hv = encode_sketch(single)
        gamma = helpers.gamma(single, course_target_schema)
        f = formula
        seen = 0
        while True:
            m = sat_solve(f)
            if m is None:
                break
            seen += 1
            program = instantiate(single, m, hv, course_target_schema)
            assert program in gamma
            f = add_hard(
                f, tuple(-v if m[v] else v for v in range(1, f.num_vars + 1))
            )
        assert seen == len(gamma) == 25


class TestBlockFromMfi:
    def test_course_blocking_clause(
        self, course_sketch, course_program, course_source_schema, course_target_schema
    ):
        from migrator.equiv import find_mfi

        formula, hv = encode_sketch(course_sketch, wf_constraints=False)
        choice = course_first_candidate_choice(course_sketch)
        m = model_for(course_sketch, hv, choice)
        candidate = instantiate(course_sketch, m, hv, course_target_schema)
        omega = find_mfi(
            course_program, candidate, TestConfig(), course_source_schema, course_target_schema
        )
        assert omega is not None
        assert len(omega.calls) == 2
        assert omega.function_names() == ("addTA", "getTAInfo")
        clause = block_from_mfi(m, omega, hv)
        assert len(clause) == 2  # one hole in addTA, one in getTAInfo
        before = count_models(formula)
        after = count_models(add_hard(formula, clause))
        assert before == 164025
        assert before - after == 18225

    def test_blocked_models_agree_on_mfi_holes(
        self, course_sketch, course_program, course_source_schema, course_target_schema
    ):
        from migrator.equiv import find_mfi

        formula, hv = encode_sketch(course_sketch, wf_constraints=False)
        choice = course_first_candidate_choice(course_sketch)
        m = model_for(course_sketch, hv, choice)
        candidate = instantiate(course_sketch, m, hv, course_target_schema)
        omega = find_mfi(
            course_program, candidate, TestConfig(), course_source_schema, course_target_schema
        )
        clause = block_from_mfi(m, omega, hv)
        # the clause excludes exactly the models sharing m's assignment on
        # the holes of addTA and getTAInfo, m itself included
        assert all(not ((lit > 0) == m[abs(lit)]) for lit in clause)
        blocked_vars = {abs(lit) for lit in clause}
        assert blocked_vars == {
            hv.var_of[(5, choice[5])],
            hv.var_of[(8, choice[8])],
        }

    def test_omega_naming_every_function_blocks_full_model(
        self, course_sketch, course_target_schema
    ):
        from migrator.interpreter import InvocationSequence

        formula, hv = encode_sketch(course_sketch, wf_constraints=False)
        m = sat_solve(formula)
        omega = InvocationSequence(
            (
                ("addInstructor", (0, "A", b"\x00")),
                ("deleteInstructor", (0,)),
                ("addTA", (0, "A", b"\x00")),
                ("deleteTA", (0,)),
                ("getInstructorInfo", (0,)),
                ("getTAInfo", (0,)),
            )
        )
        clause = block_from_mfi(m, omega, hv)
        assert len(clause) == 8
        before = count_models(formula)
        after = count_models(add_hard(formula, clause))
        assert before - after == 1


def _no_solution_setup():
    """Three-function program whose sketch has no correct completion; the
    failing pair involves only two of the functions."""
    schema = parse_schema("table T { k: int [pk], v: str, w: str }")
    source = parse_program(
        """
        update add(x: int) { ins(T, {k: x, v: "B", w: "B"}); }
        query get(x: int) { proj([v], sel(k = x, T)); }
        query aux(x: int) { proj([w], sel(k = x, T)); }
        """,
        schema,
    )
    ha = HoleAttr(1, (QAttr("T", "v"), QAttr("T", "w")), "add")
    hg = HoleAttr(2, (QAttr("T", "v"), QAttr("T", "w")), "get")
    hx = HoleAttr(3, (QAttr("T", "v"), QAttr("T", "w"), QAttr("T", "k")), "aux")
    sketch = SketchProgram(
        (
            SketchFunction(
                "add",
                FuncKind.UPDATE,
                (("x", ValueType.INT),),
                SketchIns(BaseTable("T"), ((QAttr("T", "k"), Param("x")), (ha, "A"))),
            ),
            SketchFunction(
                "get",
                FuncKind.QUERY,
                (("x", ValueType.INT),),
                QueryStmt(
                    Proj(
                        (hg,),
                        Sel(Cmp(QAttr("T", "k"), CmpOp.EQ, Param("x")), JoinQ(BaseTable("T"))),
                    )
                ),
            ),
            SketchFunction(
                "aux",
                FuncKind.QUERY,
                (("x", ValueType.INT),),
                QueryStmt(
                    Proj(
                        (hx,),
                        Sel(Cmp(QAttr("T", "k"), CmpOp.EQ, Param("x")), JoinQ(BaseTable("T"))),
                    )
                ),
            ),
        )
    )
    return schema, source, sketch


class TestCompleteSketch:
    def test_course_example_finds_equivalent_program(
        self,
        course_sketch,
        course_program,
        course_source_schema,
        course_target_schema,
        course_target_program,
    ):
        result = complete_sketch(
            course_sketch,
            course_program,
            SolveConfig(source_schema=course_source_schema, target_schema=course_target_schema),
        )
        assert result.status == "found"
        assert bounded_verify(
            result.program,
            course_target_program,
            TestConfig(),
            course_target_schema,
            course_target_schema,
        )

    def test_no_solution_prunes_by_failing_pair(self):
        schema, source, sketch = _no_solution_setup()
        assert completion_count(sketch) == 12
        # brute-force confirmation that no completion works
        assert not any(
            bounded_verify(p, source, TestConfig(), schema, schema)
            for p in enumerate_completions(sketch, schema)
        )
        result = complete_sketch(
            sketch,
            source,
            SolveConfig(source_schema=schema, target_schema=schema),
        )
        assert result.status == "exhausted"
        assert result.program is None
        # assignments over the failing pair's holes: 2 (add) x 2 (get)
        assert result.iterations <= 4 < 12

    def test_singleton_correct_sketch_one_iteration(
        self, course_source_schema, course_program
    ):
        phi = {
            a.qualified: (a.qualified,) for a in course_source_schema.all_attributes()
        }
        sketch = gen_sketch(
            course_program, phi, course_source_schema, course_source_schema, "choice"
        )
        result = complete_sketch(
            sketch,
            course_program,
            SolveConfig(source_schema=course_source_schema, target_schema=course_source_schema),
        )
        assert result.status == "found"
        assert result.iterations == 1
        assert result.program == course_program

    def test_timeout_status(self, course_sketch, course_program, course_source_schema, course_target_schema):
        result = complete_sketch(
            course_sketch,
            course_program,
            SolveConfig(
                source_schema=course_source_schema,
                target_schema=course_target_schema,
                timeout=-1.0,
            ),
        )
        assert result.status == "timeout"
        assert result.program is None

    def test_progress_remaining_strictly_decreases(self):
        schema, source, sketch = _no_solution_setup()
        remaining = []
        result = complete_sketch(
            sketch,
            source,
            SolveConfig(
                source_schema=schema,
                target_schema=schema,
                progress=lambda it, rem, mfi: remaining.append(rem),
            ),
        )
        assert result.status == "exhausted"
        counts = [r for r in remaining if r is not None]
        assert counts == sorted(counts, reverse=True)
        assert len(set(counts)) == len(counts)

    def test_model_blocking_baseline_needs_more_iterations(self):
        schema, source, sketch = _no_solution_setup()
        mfi_result = complete_sketch(
            sketch, source, SolveConfig(source_schema=schema, target_schema=schema)
        )
        model_result = complete_sketch(
            sketch,
            source,
            SolveConfig(source_schema=schema, target_schema=schema, block_mode="model"),
        )
        assert model_result.status == "exhausted"
        assert model_result.iterations == 12
        assert mfi_result.iterations < model_result.iterations

    def test_returned_programs_always_pass_bounded_verify(
        self, course_source_schema, course_target_schema, course_program
    ):
        # soundness across several correspondences
        enc = encode_vc(course_source_schema, course_target_schema, course_program)
        found = 0
        for _ in range(3):
            phi = next_value_corr(enc)
            try:
                sketch = gen_sketch(
                    course_program, phi, course_source_schema, course_target_schema, "choice"
                )
            except Exception:
                continue
            result = complete_sketch(
                sketch,
                course_program,
                SolveConfig(
                    source_schema=course_source_schema, target_schema=course_target_schema
                ),
            )
            if result.program is not None:
                found += 1
                assert bounded_verify(
                    course_program,
                    result.program,
                    TestConfig(),
                    course_source_schema,
                    course_target_schema,
                )
        assert found >= 1
