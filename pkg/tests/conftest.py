import pytest

from driftpac.domain import Oracle, SignDef, SignSchema


@pytest.fixture
def schema3():
    """Three signs with 5, 5 and 6 values: 150 tuples, ln|V| ~ 5."""
    return SignSchema((
        SignDef("a", range(1, 6), 0.5),
        SignDef("b", range(1, 6), 0.5),
        SignDef("c", range(1, 7), 0.5),
    ))


@pytest.fixture
def xor_oracle():
    schema = SignSchema((SignDef("x", (0, 1)), SignDef("y", (0, 1))))
    return Oracle.from_arrays(schema, [[0, 1], [1, 0], [0, 0], [1, 1]],
                              [True, True, False, False])


def random_oracle(rng, n_records, n_signs, sigma=1.0, n_values=5):
    schema = SignSchema(tuple(
        SignDef(f"s{j}", tuple(range(1, n_values + 1)), sigma)
        for j in range(n_signs)))
    X = rng.integers(1, n_values + 1, size=(n_records, n_signs))
    y = rng.random(n_records) < 0.5
    return Oracle.from_arrays(schema, X, y)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
