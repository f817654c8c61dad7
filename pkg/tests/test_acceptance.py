"""The eight acceptance criteria at their stated tolerances.

Each test prints one PASS/FAIL line; the lines are also collected and shown
in a summary section at the end of the pytest run.
"""
import pytest

from ccscatter import acceptance

from conftest import ACCEPTANCE_LINES


@pytest.fixture(scope="module")
def crossover():
    return acceptance.crossover_setup()


def check(res):
    print(res.line())
    ACCEPTANCE_LINES.append(res.line())
    assert res.passed, res.detail


def test_criterion_1_indicial_degeneracy():
    check(acceptance.criterion_1())


def test_criterion_2_exact_symbol():
    check(acceptance.criterion_2())


def test_criterion_3_residual_order():
    check(acceptance.criterion_3())


def test_criterion_4_crossover(crossover):
    check(acceptance.criterion_4(crossover))


def test_criterion_5_limiting_absorption(crossover):
    check(acceptance.criterion_5(crossover))


def test_criterion_6_index_tables():
    check(acceptance.criterion_6())


def test_criterion_7_resonance_guard():
    check(acceptance.criterion_7())


def test_criterion_8_convergence_order():
    check(acceptance.criterion_8())
