import random

import pytest

from migrator.core import (
    Attribute,
    BaseTable,
    Cmp,
    CmpOp,
    Del,
    EquiJoin,
    FreshUid,
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
    ValueType,
    attrs_of,
    check_schema,
    tables_of,
    validate_program,
)
from migrator.parser import parse_schema

import helpers


def chain(*tables_and_conds):
    """Left-assoc chain from (table, (la, ra), table, (la, ra), table...)."""
    out = BaseTable(tables_and_conds[0])
    rest = tables_and_conds[1:]
    for i in range(0, len(rest), 2):
        (la, ra), t = rest[i], rest[i + 1]
        out = EquiJoin(out, QAttr(*la), BaseTable(t), QAttr(*ra))
    return out


CARPART = Schema(
    (
        Table(
            "Car",
            (
                Attribute("Car", "cid", ValueType.INT, primary_key=True),
                Attribute("Car", "model", ValueType.STR),
                Attribute("Car", "year", ValueType.INT),
            ),
        ),
        Table(
            "Part",
            (
                Attribute("Part", "name", ValueType.STR),
                Attribute("Part", "amount", ValueType.INT),
                Attribute("Part", "cid", ValueType.INT, references="Car"),
            ),
        ),
    )
)

CAR_JOIN_PART = chain("Car", (("Car", "cid"), ("Part", "cid")), "Part")


class TestTablesOf:
    def test_single_table(self):
        assert tables_of(BaseTable("Car")) == ("Car",)

    def test_two_table_chain(self):
        assert tables_of(CAR_JOIN_PART) == ("Car", "Part")

    def test_four_table_chain(self):
        j = chain(
            "Picture",
            (("Picture", "PicId"), ("TA", "PicId")),
            "TA",
            (("TA", "TaId"), ("Class", "TaId")),
            "Class",
            (("Class", "InstId"), ("Instructor", "InstId")),
            "Instructor",
        )
        assert tables_of(j) == ("Picture", "TA", "Class", "Instructor")


class TestAttrsOf:
    def test_single_table(self, course_source_schema):
        got = attrs_of(BaseTable("Instructor"), course_source_schema)
        assert set(map(str, got)) == {
            "Instructor.InstId",
            "Instructor.IName",
            "Instructor.IPic",
        }

    def test_join_chain(self):
        assert len(attrs_of(CAR_JOIN_PART, CARPART)) == 6

    def test_unknown_table(self):
        with pytest.raises(Exception):
            attrs_of(BaseTable("Missing"), CARPART)


class TestValidateProgram:
    def test_course_program_is_valid(self, course_program, course_source_schema):
        assert validate_program(course_program, course_source_schema) == []

    def test_unknown_table(self, course_source_schema):
        p = Program(
            (
                Function(
                    "q",
                    FuncKind.QUERY,
                    (),
                    QueryStmt(Proj((QAttr("Picture", "Pic"),), JoinQ(BaseTable("Picture")))),
                ),
            )
        )
        diags = validate_program(p, course_source_schema)
        assert any("unknown table" in d.message for d in diags)

    def test_delete_target_not_in_join(self, course_target_schema):
        # Del.tables must be a subset of the join's tables, by direct check
        j = chain(
            "Picture", (("Picture", "PicId"), ("Instructor", "PicId")), "Instructor"
        )
        assert "TA" not in tables_of(j)
        p = Program(
            (
                Function(
                    "f",
                    FuncKind.UPDATE,
                    (("id", ValueType.INT),),
                    Del(
                        ("TA",),
                        j,
                        Cmp(QAttr("Instructor", "InstId"), CmpOp.EQ, Param("id")),
                    ),
                ),
            )
        )
        diags = validate_program(p, course_target_schema)
        assert any("delete target not in join" in d.message for d in diags)

    def test_empty_delete_targets(self, course_source_schema):
        p = Program(
            (
                Function(
                    "f",
                    FuncKind.UPDATE,
                    (("id", ValueType.INT),),
                    Del(
                        (),
                        BaseTable("TA"),
                        Cmp(QAttr("TA", "TaId"), CmpOp.EQ, Param("id")),
                    ),
                ),
            )
        )
        diags = validate_program(p, course_source_schema)
        assert any("non-empty" in d.message for d in diags)

    def test_query_body_must_be_single_query(self, course_source_schema):
        p = Program(
            (
                Function(
                    "q",
                    FuncKind.QUERY,
                    (("id", ValueType.INT),),
                    Del(
                        ("TA",),
                        BaseTable("TA"),
                        Cmp(QAttr("TA", "TaId"), CmpOp.EQ, Param("id")),
                    ),
                ),
            )
        )
        diags = validate_program(p, course_source_schema)
        assert any("single query" in d.message for d in diags)

    def test_insert_linking_terms_must_agree(self, course_target_schema):
        j = chain(
            "Picture", (("Picture", "PicId"), ("Instructor", "PicId")), "Instructor"
        )
        row = (
            (QAttr("Picture", "PicId"), FreshUid(0)),
            (QAttr("Picture", "Pic"), Param("pic")),
            (QAttr("Instructor", "InstId"), Param("id")),
            (QAttr("Instructor", "IName"), Param("name")),
            (QAttr("Instructor", "PicId"), FreshUid(1)),  # should be slot 0
        )
        p = Program(
            (
                Function(
                    "f",
                    FuncKind.UPDATE,
                    (
                        ("id", ValueType.INT),
                        ("name", ValueType.STR),
                        ("pic", ValueType.BIN),
                    ),
                    Ins(j, row),
                ),
            )
        )
        diags = validate_program(p, course_target_schema)
        assert any("linked attributes" in d.message for d in diags)

    def test_ordering_comparison_needs_int(self):
        p = Program(
            (
                Function(
                    "q",
                    FuncKind.QUERY,
                    (),
                    QueryStmt(
                        Sel(
                            Cmp(QAttr("Car", "model"), CmpOp.LT, "M1"),
                            JoinQ(BaseTable("Car")),
                        )
                    ),
                ),
            )
        )
        diags = validate_program(p, CARPART)
        assert any("ordering" in d.message for d in diags)

    def test_generated_programs_validate(self):
        rng = random.Random(7)
        for _ in range(60):
            schema = helpers.gen_schema(rng)
            program = helpers.gen_program(rng, schema)
            assert validate_program(program, schema) == []


class TestCheckSchema:
    def test_duplicate_attribute(self):
        s = Schema(
            (
                Table(
                    "T",
                    (
                        Attribute("T", "a", ValueType.INT),
                        Attribute("T", "a", ValueType.STR),
                    ),
                ),
            )
        )
        assert any("duplicate attribute" in p for p in check_schema(s))

    def test_dangling_foreign_key(self):
        s = Schema(
            (
                Table(
                    "T",
                    (Attribute("T", "a", ValueType.INT, references="Nope"),),
                ),
            )
        )
        assert any("unknown table" in p for p in check_schema(s))

    def test_fk_type_must_match_pk(self):
        text = """
        table A { id: str [pk] }
        table B { a: int [fk A] }
        """
        with pytest.raises(Exception):
            parse_schema(text)
