import math

import mpmath
import pytest
from hypothesis import assume, given, strategies as st

from driftpac.pac import (PRINTED_TABLE, PlanningQuery, achievable_delta,
                          achievable_epsilon, bound_table, min_sample_size)
from driftpac.errors import ParameterDomainError, UnboundedRequirementError

mpmath.mp.dps = 50


def smallest_n(log_card, eps, delta):
    """Independent oracle: linear scan in 50-digit arithmetic."""
    bound = (mpmath.mpf(log_card) + mpmath.log(2 / mpmath.mpf(delta))) / (
        2 * mpmath.mpf(eps) ** 2)
    n = 1
    while n < bound:
        n += 1
    return n


def q(l, e, d):
    return PlanningQuery(l, e, d)


@pytest.mark.parametrize("l, e, d, expected", [
    (5, 0.1, 0.1, 400),
    (5, 0.3, 0.3, 39),
    (5, 0.1, 0.2, 366),
])
def test_min_sample_size_examples(l, e, d, expected):
    assert smallest_n(l, e, d) == expected
    assert min_sample_size(q(l, e, d)) == expected
    assert min_sample_size(log_cardinality=l, epsilon=e, delta=d) == expected


@given(st.floats(0, 20), st.floats(0.02, 0.95), st.floats(0.001, 1.99))
def test_min_sample_size_matches_oracle(l, e, d):
    assert min_sample_size(q(l, e, d)) == smallest_n(l, e, d)


def test_epsilon_zero_is_unbounded():
    with pytest.raises(UnboundedRequirementError):
        q(5, 0.0, 0.1)


@pytest.mark.parametrize("e", [-0.1, 1.0, 1.5])
def test_epsilon_domain(e):
    with pytest.raises(ParameterDomainError):
        q(5, e, 0.1)


def test_large_delta_accepted_while_numerator_nonnegative():
    # ln(2/3) ~ -0.405; numerator stays positive with ln|V| = 1
    assert min_sample_size(q(1.0, 0.5, 3.0)) == smallest_n(1.0, 0.5, 3.0)
    with pytest.raises(ParameterDomainError):
        min_sample_size(q(0.0, 0.5, 3.0))


@given(st.floats(0, 10), st.floats(0.05, 0.9), st.floats(0.05, 0.9),
       st.floats(0.01, 1.9), st.floats(0.01, 1.9))
def test_monotonicity(l, e1, e2, d1, d2):
    e1, e2 = sorted((e1, e2))
    d1, d2 = sorted((d1, d2))
    assert min_sample_size(q(l, e1, d1)) >= min_sample_size(q(l, e2, d1))
    assert min_sample_size(q(l, e1, d1)) >= min_sample_size(q(l, e1, d2))
    assert min_sample_size(q(l, e1, d1)) <= min_sample_size(q(l + 1.0, e1, d1))


@pytest.mark.parametrize("n, l, d, expected, tol", [
    (100, 5, 0.1, 0.19995, 1e-5),
    (400, 5, 0.1, 0.09997, 1e-5),
])
def test_achievable_epsilon(n, l, d, expected, tol):
    oracle = float(mpmath.sqrt((l + mpmath.log(2 / mpmath.mpf(d))) / (2 * n)))
    assert oracle == pytest.approx(expected, abs=tol)
    assert achievable_epsilon(n, l, d) == pytest.approx(oracle, rel=1e-12)


def test_achievable_epsilon_near_domain_boundary():
    assert 0 < achievable_epsilon(1, 0.0, 2 - 1e-9) < 1e-4
    with pytest.raises(ParameterDomainError):
        achievable_epsilon(1, 0.0, 2.0)
    with pytest.raises(ParameterDomainError):
        achievable_epsilon(0, 5.0, 0.1)


@given(st.integers(1, 100_000), st.floats(0, 15), st.floats(0.001, 1.9))
def test_epsilon_round_trip(n, l, d):
    assume(l + math.log(2 / d) > 1e-6)
    eps = achievable_epsilon(n, l, d)
    assume(eps < 1)
    back = min_sample_size(q(l, eps, d))
    assert abs(back - n) <= 1
    assert back == n


def test_achievable_delta():
    est = achievable_delta(400, 5, 0.1)
    assert est.delta == pytest.approx(2 * math.exp(-3), rel=1e-12)
    assert est.delta == pytest.approx(0.0996, abs=1e-4)
    assert not est.vacuous and not est.underflow


def test_achievable_delta_limits():
    with pytest.raises(ParameterDomainError):
        achievable_delta(0, 5, 0.1)
    est = achievable_delta(10 ** 6, 5, 0.1)
    assert est.delta == 0.0 and est.underflow
    est = achievable_delta(1, 5, 0.1)
    assert est.delta == 2.0 and est.vacuous


def test_bound_table_grid():
    g = [0.1, 0.2, 0.3]
    t = bound_table(g, g, 5)
    flat = sorted(v for row in t.entries for v in row)
    assert flat == sorted([400, 366, 345, 100, 92, 87, 45, 41, 39])
    for i, d in enumerate(g):
        for j, e in enumerate(g):
            assert t.entries[i][j] == smallest_n(5, e, d) == t.cell(e, d)
    # rows are delta, so entries decrease along both axes
    for row in t.entries:
        assert list(row) == sorted(row, reverse=True)
    for col in zip(*t.entries):
        assert list(col) == sorted(col, reverse=True)


def test_bound_table_small_cases():
    assert bound_table([0.1], [0.1], 5).entries == ((400,),)
    assert bound_table([0.5], [1.0], 0).entries == ((2,),)


def test_printed_table_axes_are_transposed():
    g = (0.1, 0.2, 0.3)
    t = bound_table(g, g, 5)
    as_printed = {(d, e): t.cell(e, d) for e in g for d in g}
    transposed = {(e, d): t.cell(e, d) for e in g for d in g}
    assert max(abs(transposed[k] - PRINTED_TABLE[k]) for k in PRINTED_TABLE) == 1
    assert max(abs(as_printed[k] - PRINTED_TABLE[k]) for k in PRINTED_TABLE) > 200


def test_table_text_labels_axes():
    text = bound_table([0.1, 0.2], [0.1], 5).to_text()
    assert "rows: delta" in text and "columns: epsilon" in text
    assert bound_table([0.1], [0.1], 5).to_csv().splitlines()[1] == "0.1,0.1,5,400"


def test_schema_convenience(schema3):
    query = PlanningQuery.for_schema(schema3, 0.2, 0.2)
    assert query.log_cardinality == pytest.approx(math.log(150))
    assert min_sample_size(query) == smallest_n(math.log(150), 0.2, 0.2)
