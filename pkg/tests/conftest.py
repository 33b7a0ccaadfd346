import pytest

from dsaudit.ingest import parse_rules
from helpers import FIXTURES


@pytest.fixture
def loan():
    return parse_rules(FIXTURES / "loan.rules")


@pytest.fixture
def boolean():
    return parse_rules(FIXTURES / "boolean.rules")
