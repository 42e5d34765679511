import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hivqe.integrals import read_fcidump  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = json.loads((FIXTURES / "golden.json").read_text())


def load(name: str):
    return read_fcidump(FIXTURES / f"{name}.fcidump")


def fci_energy(name: str) -> float:
    return GOLDEN[f"{name}.fcidump"]["fci_energy_ha"]


@pytest.fixture
def toy2():
    """Hand-built 2-orbital set: h11=-1.25, (11|11)=0.65, core 0.5."""
    from hivqe.integrals import parse_fcidump

    return parse_fcidump(
        "&FCI NORB=2,NELEC=2,MS2=0 &END\n"
        "0.65 1 1 1 1\n-1.25 1 1 0 0\n0.5 0 0 0 0\n"
    )


def check_csv(path, schema_name: str) -> list[dict]:
    """Assert the CSV header and cell types follow the shipped column schema."""
    import csv
    from decimal import Decimal

    from hivqe.reporting import load_schema

    cols = load_schema(schema_name)["columns"]
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == [c["name"] for c in cols]
    parse = {"integer": int, "number": float, "decimal": Decimal, "string": str}
    out = []
    for row in rows[1:]:
        assert len(row) == len(cols)
        for cell, col in zip(row, cols):
            if cell == "":
                assert col.get("nullable"), f"{col['name']} may not be empty"
            else:
                parse[col["type"]](cell)
        out.append(dict(zip(rows[0], row)))
    return out


def check_json(path, schema_name: str) -> dict:
    import jsonschema

    from hivqe.reporting import load_schema

    data = json.loads(Path(path).read_text())
    jsonschema.validate(data, load_schema(schema_name))
    return data


# one line per acceptance criterion, echoed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
