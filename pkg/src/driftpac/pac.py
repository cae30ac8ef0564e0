"""Sample-complexity planning for a finite space of sign tuples.

The bound used throughout is the agnostic finite-hypothesis bound

    N >= (ln|V| + ln(2/delta)) / (2 epsilon^2)

with ``ln|V|`` passed in directly (``log_cardinality``) so that large sign
spaces never have to be materialised as integers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .domain import SignSchema, log_valued_space_cardinality
from .errors import ParameterDomainError, UnboundedRequirementError

# Values as printed in the reference table, keyed by the printed
# (row label, column label). The printed rows are labelled delta and the
# columns epsilon, but the numbers only agree with the bound when the row
# label is read as epsilon and the column label as delta.
PRINTED_TABLE = {
    (0.1, 0.1): 400, (0.1, 0.2): 366, (0.1, 0.3): 346,
    (0.2, 0.1): 100, (0.2, 0.2): 92, (0.2, 0.3): 87,
    (0.3, 0.1): 45, (0.3, 0.2): 41, (0.3, 0.3): 39,
}
PRINTED_LOG_CARDINALITY = 5.0

# Ceiling snap: pre-ceiling values this close to an integer are treated as
# that integer, so float noise in epsilon round trips cannot add one.
_SNAP = 1e-9


@dataclass(frozen=True)
class PlanningQuery:
    log_cardinality: float
    epsilon: float
    delta: float

    def __post_init__(self):
        _check_epsilon(self.epsilon)
        if not self.delta > 0 or not math.isfinite(self.delta):
            raise ParameterDomainError(f"delta must be > 0, got {self.delta}")
        if not self.log_cardinality >= 0 or not math.isfinite(self.log_cardinality):
            raise ParameterDomainError(
                f"log_cardinality must be >= 0, got {self.log_cardinality}")

    @classmethod
    def for_schema(cls, schema: SignSchema, epsilon, delta) -> "PlanningQuery":
        return cls(log_valued_space_cardinality(schema), epsilon, delta)

    @property
    def numerator(self) -> float:
        return self.log_cardinality + math.log(2.0 / self.delta)


def _check_epsilon(epsilon):
    if epsilon == 0:
        raise UnboundedRequirementError(
            "epsilon = 0 demands an unbounded sample")
    if not 0 < epsilon < 1:
        raise ParameterDomainError(f"epsilon must lie in (0, 1), got {epsilon}")


def _ceil(x: float) -> int:
    r = round(x)
    if abs(x - r) <= _SNAP * max(1.0, abs(x)):
        return int(r)
    return math.ceil(x)


def min_sample_size(query: PlanningQuery | None = None, *,
                    log_cardinality: float | None = None,
                    epsilon: float | None = None,
                    delta: float | None = None) -> int:
    """Smallest oracle cardinality meeting precision ``epsilon`` with
    reliability ``delta``.

    Accepts either a :class:`PlanningQuery` or the three keyword values.
    A ``delta`` of 2 or more is allowed as long as the numerator stays
    nonnegative.
    """
    if query is None:
        query = PlanningQuery(log_cardinality, epsilon, delta)
    num = query.numerator
    if num < 0:
        raise ParameterDomainError(
            f"ln|V| + ln(2/delta) = {num:.6g} < 0; bound undefined")
    return max(1, _ceil(num / (2.0 * query.epsilon ** 2)))


def achievable_epsilon(n: int, log_cardinality: float, delta: float) -> float:
    """Precision guaranteed by ``n`` samples at reliability ``delta``."""
    if n < 1:
        raise ParameterDomainError(f"n must be >= 1, got {n}")
    if not delta > 0:
        raise ParameterDomainError(f"delta must be > 0, got {delta}")
    num = log_cardinality + math.log(2.0 / delta)
    if not num > 0:
        raise ParameterDomainError(
            f"ln|V| + ln(2/delta) = {num:.6g} must be > 0")
    return math.sqrt(num / (2.0 * n))


class DeltaEstimate(NamedTuple):
    delta: float
    vacuous: bool    # raw value >= 2, clamped to 2
    underflow: bool  # raw value below float range, reported as 0


def achievable_delta(n: int, log_cardinality: float,
                     epsilon: float) -> DeltaEstimate:
    """Reliability guaranteed by ``n`` samples at precision ``epsilon``."""
    if n < 1:
        raise ParameterDomainError(f"n must be >= 1, got {n}")
    _check_epsilon(epsilon)
    log_half = log_cardinality - 2.0 * n * epsilon ** 2
    if log_half >= math.log(1.0):
        return DeltaEstimate(2.0, True, False)
    value = 2.0 * math.exp(log_half)
    if value == 0.0:
        return DeltaEstimate(0.0, False, True)
    return DeltaEstimate(value, False, False)


@dataclass(frozen=True)
class BoundTable:
    """Minimum cardinalities; ``entries[i][j]`` is for ``deltas[i]``
    (row) and ``epsilons[j]`` (column)."""

    epsilons: tuple[float, ...]
    deltas: tuple[float, ...]
    entries: tuple[tuple[int, ...], ...]
    log_cardinality: float

    def cell(self, epsilon: float, delta: float) -> int:
        return self.entries[self.deltas.index(delta)][self.epsilons.index(epsilon)]

    def to_text(self) -> str:
        head = [f"ln|V| = {self.log_cardinality:g}",
                "rows: delta (reliability), columns: epsilon (precision)"]
        cols = [f"eps={e:g}" for e in self.epsilons]
        width = max(8, *(len(c) for c in cols),
                    *(len(str(v)) for row in self.entries for v in row))
        lines = [" " * 11 + " ".join(c.rjust(width) for c in cols)]
        for d, row in zip(self.deltas, self.entries):
            lines.append(f"delta={d:<5g}" + " ".join(str(v).rjust(width)
                                                   for v in row))
        return "\n".join(head + lines)

    def to_csv(self) -> str:
        rows = ["epsilon,delta,log_cardinality,min_sample_size"]
        for d, row in zip(self.deltas, self.entries):
            for e, v in zip(self.epsilons, row):
                rows.append(f"{e:g},{d:g},{self.log_cardinality:g},{v}")
        return "\n".join(rows) + "\n"


def bound_table(epsilons: Sequence[float], deltas: Sequence[float],
                log_cardinality: float) -> BoundTable:
    if not epsilons or not deltas:
        raise ParameterDomainError("epsilon and delta grids must be nonempty")
    entries = tuple(
        tuple(min_sample_size(PlanningQuery(log_cardinality, e, d))
              for e in epsilons)
        for d in deltas)
    return BoundTable(tuple(epsilons), tuple(deltas), entries,
                      float(log_cardinality))
