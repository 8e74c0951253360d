from pathlib import Path

import numpy as np
import pytest

from genesift import ExpressionMatrix

FIXTURES = Path(__file__).parent / "fixtures"

# acceptance criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def make_matrix(rows, ids=None, missing=None):
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows[None, :]
    ids = ids or [f"g{i}" for i in range(rows.shape[0])]
    labels = [f"t{j}" for j in range(rows.shape[1])]
    return ExpressionMatrix(ids, labels, rows, missing)


@pytest.fixture
def marker_table():
    lines = (FIXTURES / "marker_cv.tsv").read_text().splitlines()[1:]
    return [(g, float(c)) for g, c in (ln.split("\t") for ln in lines)]


@pytest.fixture
def marker_table_text():
    return (FIXTURES / "marker_cv.tsv").read_text()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}")
