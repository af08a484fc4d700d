"""Acceptance gate: each verification criterion runs at its pinned seed and
tolerance and prints one pass/fail line. The Monte Carlo experiments behind
criteria 3..7 and 10 are shared across this module via a session fixture.
"""

import pytest

from skwiretap import acceptance


@pytest.fixture(scope="session")
def results():
    out = {}

    def record(line: str) -> None:
        print(line)

    for result in acceptance.run_all(progress=record):
        out[result.index] = result
    return out


def _check(results, index):
    result = results[index]
    print(f"{'PASS' if result.passed else 'FAIL'}  criterion {index}: {result.name} -- {result.details}")
    assert result.passed, f"criterion {index} ({result.name}): {result.details}"


def test_criterion_01_conditional_variance_identity(results):
    _check(results, 1)


def test_criterion_02_recursion_vs_oracle(results):
    _check(results, 2)


def test_criterion_03_decoder_statistic_variance(results):
    _check(results, 3)


def test_criterion_04_error_probability_bound(results):
    _check(results, 4)


def test_criterion_05_power_constraint(results):
    _check(results, 5)


def test_criterion_06_non_gaussian_affine(results):
    _check(results, 6)


def test_criterion_07_independence_and_gaussianity(results):
    _check(results, 7)


def test_criterion_08_leakage_budget(results):
    _check(results, 8)


def test_criterion_09_tetration_machinery(results):
    _check(results, 9)


def test_criterion_10_determinism(results):
    _check(results, 10)
