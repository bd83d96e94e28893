import random

import pytest

from migrator.core import QAttr
from migrator.parser import parse_program, parse_schema
from migrator.solver import maxsat_solve
from migrator.value_corr import (
    VcEncoding,
    assignment_weight,
    encode_vc,
    format_correspondence,
    levenshtein,
    next_value_corr,
    queried_attrs,
)

import helpers


class TestLevenshtein:
    def test_identity(self):
        assert levenshtein("Pic", "Pic") == 0

    def test_single_deletion(self):
        assert levenshtein("IPic", "Pic") == 1

    def test_empty_against_word(self):
        assert levenshtein("", "abc") == 3
        assert levenshtein("abc", "") == 3

    def test_matches_recursive_oracle(self):
        rng = random.Random(11)
        alphabet = "abcAB"
        for _ in range(200):
            a = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 7)))
            b = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 7)))
            assert levenshtein(a, b) == helpers.levenshtein_oracle(a, b)


class TestQueriedAttrs:
    def test_course_program(self, course_program):
        got = {str(a) for a in queried_attrs(course_program)}
        assert got == {
            "Instructor.InstId",
            "Instructor.IName",
            "Instructor.IPic",
            "TA.TaId",
            "TA.TName",
            "TA.TPic",
        }


class TestEncodeVc:
    def test_binary_source_forced_to_unique_binary_target(
        self, course_source_schema, course_target_schema, course_program
    ):
        enc = encode_vc(course_source_schema, course_target_schema, course_program)
        i = [a.qualified for a in enc.source_attrs].index(QAttr("Instructor", "IPic"))
        # every non-bin target is hard-blocked for IPic...
        blocked = {
            (-enc.var(i, j),) in enc.formula.hard for j, b in enumerate(enc.target_attrs)
        }
        pic = [b.qualified for b in enc.target_attrs].index(QAttr("Picture", "Pic"))
        assert (-enc.var(i, pic),) not in enc.formula.hard
        # ...and IPic is queried, so its row carries a coverage clause
        row_clause = tuple(enc.var(i, j) for j in range(len(enc.target_attrs)))
        assert row_clause in enc.formula.hard

    def test_queried_attr_with_no_typed_target_is_unsat(self):
        source = parse_schema("table S { a: int [pk], b: bin }")
        target = parse_schema("table T { a: int [pk] }")
        program = parse_program(
            "query q(x: int) { proj([S.b], sel(S.a = x, S)); }", source
        )
        enc = encode_vc(source, target, program)
        assert next_value_corr(enc) is None

    def test_identity_schemas_map_namesakes(self, course_source_schema, course_program):
        enc = encode_vc(course_source_schema, course_source_schema, course_program)
        phi = next_value_corr(enc)
        for a in course_source_schema.all_attributes():
            assert phi[a.qualified] == (a.qualified,)

    def test_alpha_must_exceed_name_lengths(
        self, course_source_schema, course_target_schema, course_program
    ):
        with pytest.raises(ValueError):
            encode_vc(course_source_schema, course_target_schema, course_program, alpha=5)


class TestNextValueCorr:
    def test_course_first_correspondence(
        self, course_source_schema, course_target_schema, course_program
    ):
        enc = encode_vc(course_source_schema, course_target_schema, course_program)
        phi = next_value_corr(enc)
        assert phi[QAttr("Instructor", "IPic")] == (QAttr("Picture", "Pic"),)
        assert phi[QAttr("TA", "TPic")] == (QAttr("Picture", "Pic"),)
        for a in course_source_schema.all_attributes():
            if a.name in ("IPic", "TPic"):
                continue
            assert phi[a.qualified] == (a.qualified,)

    def test_successive_candidates_are_distinct(
        self, course_source_schema, course_target_schema, course_program
    ):
        enc = encode_vc(course_source_schema, course_target_schema, course_program)
        seen = []
        for _ in range(8):
            phi = next_value_corr(enc)
            assert phi is not None
            frozen = tuple(sorted((str(k), tuple(map(str, v))) for k, v in phi.items()))
            assert frozen not in seen
            seen.append(frozen)
        assert enc.blocked == 8

    def test_type_soundness_and_query_coverage(
        self, course_source_schema, course_target_schema, course_program
    ):
        enc = encode_vc(course_source_schema, course_target_schema, course_program)
        queried = queried_attrs(course_program)
        for _ in range(10):
            phi = next_value_corr(enc)
            for src, images in phi.items():
                src_ty = course_source_schema.attribute(src).ty
                for img in images:
                    assert course_target_schema.attribute(img).ty == src_ty
            for a in queried:
                assert len(phi[a]) >= 1

    def test_enumeration_is_weight_ordered(
        self, course_source_schema, course_target_schema, course_program
    ):
        from migrator.value_corr import _next_assignment

        enc = encode_vc(course_source_schema, course_target_schema, course_program)
        weights = [
            assignment_weight(enc, _next_assignment(enc)) for _ in range(12)
        ]
        assert weights == sorted(weights, reverse=True)

    def test_agrees_with_generic_maxsat_on_small_schemas(self):
        # the specialized enumerator and the generic solver must produce the
        # same best assignment, including the lexicographic tie-break
        source = parse_schema("table S { a: int [pk], b: str }")
        target = parse_schema("table T { a: int [pk], c: str, d: str }")
        program = parse_program(
            "query q(x: int) { proj([S.b], sel(S.a = x, S)); }", source
        )
        enc = encode_vc(source, target, program)
        for _ in range(5):
            model = maxsat_solve(enc.formula)
            phi = next_value_corr(enc)
            if phi is None:
                assert model is None
                break
            assert model is not None
            bits = tuple(model[v] for v in range(1, enc.formula.num_vars + 1))
            got = {
                str(k): tuple(map(str, v)) for k, v in phi.items()
            }
            from migrator.value_corr import correspondence_of

            expected = {
                str(k): tuple(map(str, v))
                for k, v in correspondence_of(enc, bits).items()
            }
            assert got == expected


class TestFormatting:
    def test_one_line_per_pair(self, course_source_schema, course_target_schema, course_program):
        enc = encode_vc(course_source_schema, course_target_schema, course_program)
        phi = next_value_corr(enc)
        text = format_correspondence(phi)
        assert "Instructor.IPic -> Picture.Pic" in text
        assert "TA.TPic -> Picture.Pic" in text
