import os

import pytest

os.environ.setdefault("PYTHONHASHSEED", "0")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def fields():
    from localavoid.field import make_field_spec

    return {
        "Z3": make_field_spec("zero", 3, N=8),
        "Z5": make_field_spec("zero", 5, N=8),
        "F2": make_field_spec("finite", 2, N=8),
        "F9": make_field_spec("finite", 3, f=2, residue_poly=(1, 0, 1), N=6),
        "Q2R": make_field_spec("zero", 2, e=2, eisenstein_coeffs=((-2,), (0,)), N=8),
        "Q9": make_field_spec("zero", 3, f=2, residue_poly=(1, 0, 1), N=6),
    }
