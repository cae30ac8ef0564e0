import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from driftpac.domain import (Observation, Oracle, SignDef, SignSchema,
                             dumps_oracle, loads_oracle, log_valued_space_cardinality,
                             parse_schema_header, read_oracle, validate_oracle,
                             valued_space_cardinality, write_oracle)
from driftpac.errors import (AdmissibilityError, DimensionError, FormatError,
                             SchemaError)


def schema_of(*sizes, sigma=0.0):
    return SignSchema(tuple(SignDef(f"s{i}", range(n), sigma)
                            for i, n in enumerate(sizes)))


@pytest.mark.parametrize("sizes, expected", [
    ((5, 5, 6), 150),
    ((1,), 1),
    ((2, 3, 4, 5), 120),
])
def test_valued_space_cardinality(sizes, expected):
    schema = schema_of(*sizes)
    assert valued_space_cardinality(schema) == expected
    # brute force: count the tuples
    assert sum(1 for _ in itertools.product(*(s.values for s in schema.signs))) == expected
    assert len(schema.all_tuples()) == expected


def test_cardinality_is_exact_for_huge_spaces():
    schema = schema_of(*([1000] * 10))
    assert valued_space_cardinality(schema) == 10 ** 30
    assert log_valued_space_cardinality(schema) == pytest.approx(30 * math.log(10))


@given(st.lists(st.integers(1, 9), min_size=1, max_size=6), st.integers(1, 9))
def test_cardinality_multiplicative(sizes, k):
    assert (valued_space_cardinality(schema_of(*sizes, k))
            == k * valued_space_cardinality(schema_of(*sizes)))


def test_empty_schema_rejected():
    with pytest.raises(SchemaError):
        SignSchema(())


@pytest.mark.parametrize("kwargs", [
    dict(name="a", values=()),
    dict(name="a", values=(1, 1)),
    dict(name="a", values=(2, 1)),
    dict(name="a", values=(1, 2), sigma=-1),
    dict(name="not valid", values=(1, 2)),
])
def test_signdef_invariants(kwargs):
    with pytest.raises(SchemaError):
        SignDef(**kwargs)


def test_duplicate_sign_names():
    with pytest.raises(SchemaError):
        SignSchema((SignDef("a", (1,)), SignDef("a", (2,))))


def test_normalize_maps_range_to_unit_interval(schema3):
    x = schema3.normalize([[1, 1, 1], [5, 5, 6], [3, 3, 3.5]])
    np.testing.assert_allclose(x, [[0, 0, 0], [1, 1, 1], [0.5, 0.5, 0.5]])


def test_validate_clean_oracle(schema3):
    o = Oracle.from_arrays(schema3, [[1, 2, 3], [2, 3, 4]], [True, False])
    rep = validate_oracle(o)
    assert rep.violations == ()
    assert rep.inconsistency_rate == 0.0


def test_validate_conflicting_duplicates(schema3):
    o = Oracle.from_arrays(schema3, [[1, 2, 3], [1, 2, 3]], [True, False])
    assert validate_oracle(o).inconsistency_rate == 1.0


def test_validate_partial_inconsistency(schema3):
    o = Oracle.from_arrays(schema3, [[1, 2, 3], [1, 2, 3], [1, 2, 3], [4, 4, 4]],
                           [True, True, False, True])
    rep = validate_oracle(o)
    assert rep.inconsistent_records == 3
    assert rep.inconsistency_rate == 0.75


def test_validate_inadmissible_value():
    schema = SignSchema((SignDef("a", range(1, 6)),))
    o = Oracle.from_arrays(schema, [[7], [3]], [True, False])
    rep = validate_oracle(o)
    assert len(rep.violations) == 1
    assert rep.violations[0].value == 7 and rep.violation_indices == (0,)
    with pytest.raises(AdmissibilityError):
        o.require_valid()


@settings(max_examples=50)
@given(st.data())
def test_validate_order_insensitive_and_idempotent(data):
    schema = SignSchema((SignDef("a", range(1, 4)), SignDef("b", range(1, 4))))
    rows = data.draw(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4),
                                        st.booleans()), min_size=1, max_size=12))
    o = Oracle(schema, tuple(Observation((a, b), l) for a, b, l in rows))
    perm = data.draw(st.permutations(range(len(rows))))
    p = Oracle(schema, tuple(o.records[k] for k in perm))
    r1, r2 = validate_oracle(o), validate_oracle(p)
    assert r1 == r2 == validate_oracle(o)
    assert 0.0 <= r1.inconsistency_rate <= 1.0


def test_oracle_requires_records_and_dimension(schema3):
    with pytest.raises(SchemaError):
        Oracle(schema3, ())
    with pytest.raises(DimensionError):
        Oracle(schema3, (Observation((1, 2), True),))


def test_oracle_file_roundtrip(tmp_path, schema3):
    o = Oracle.from_arrays(schema3, [[1, 2, 3], [5, 5, 6]], [True, False],
                           provenance="ward 3", collected_at=17)
    path = tmp_path / "o.txt"
    write_oracle(o, path)
    text = path.read_text()
    assert text.splitlines()[0] == "a:1 2 3 4 5:0.5; b:1 2 3 4 5:0.5; c:1 2 3 4 5 6:0.5"
    assert text.splitlines()[-1] == "5,5,6,-"
    back = read_oracle(path)
    assert back == o
    assert dumps_oracle(back) == text


def test_schema_header_decimal_values():
    s = parse_schema_header("psa:0.5 1.25 4:0.25")
    assert s.signs[0].values == (0.5, 1.25, 4.0) and s.signs[0].sigma == 0.25


@pytest.mark.parametrize("text, err", [
    ("", FormatError),
    ("a:1 2:0\n1,*\n", FormatError),
    ("a:1 2:0\n1,2,+\n", DimensionError),
    ("a:1 2:0\n3,+\n", AdmissibilityError),
    ("a 1 2 0\n1,+\n", FormatError),
])
def test_oracle_file_errors(text, err):
    with pytest.raises(err):
        loads_oracle(text)


def test_non_strict_load_keeps_inadmissible():
    o = loads_oracle("a:1 2:0\n3,+\n1,-\n", strict=False)
    assert len(validate_oracle(o).violations) == 1
