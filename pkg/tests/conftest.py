import pathlib

import pytest

from migrator.parser import parse_program, parse_schema

DATA = pathlib.Path(__file__).parent / "data"


def read_data(name: str) -> str:
    return (DATA / name).read_text()


@pytest.fixture(scope="session")
def course_source_schema():
    return parse_schema(read_data("course_source.schema"))


@pytest.fixture(scope="session")
def course_target_schema():
    return parse_schema(read_data("course_target.schema"))


@pytest.fixture(scope="session")
def course_program(course_source_schema):
    return parse_program(read_data("course_source.dbp"), course_source_schema)


@pytest.fixture(scope="session")
def course_target_program(course_target_schema):
    return parse_program(read_data("course_target.dbp"), course_target_schema)
