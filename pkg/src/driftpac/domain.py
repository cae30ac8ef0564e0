"""Signs, observations, oracles and the valued-signs space.

Sign values are numeric codes on an ordered line, even for categorical
signs, so that drift intervals have a meaning. Each sign documents its
coding in ``SignDef.unit``.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import AdmissibilityError, DimensionError, FormatError, SchemaError

POSITIVE = True   # confirmed disease
NEGATIVE = False  # refuted

_LABEL_TOKENS = {"+": POSITIVE, "-": NEGATIVE}


@dataclass(frozen=True)
class SignDef:
    name: str
    values: tuple[float, ...]
    sigma: float = 0.0
    unit: str = ""

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.name or not self.name.replace("_", "").isalnum():
            raise SchemaError(f"sign name {self.name!r} is not an identifier")
        if not self.values:
            raise SchemaError(f"sign {self.name!r} has no admissible values")
        if not all(math.isfinite(v) for v in self.values):
            raise SchemaError(f"sign {self.name!r} has non-finite values")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise SchemaError(
                f"values of sign {self.name!r} must be distinct and ascending")
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise SchemaError(f"sigma of sign {self.name!r} must be >= 0")

    @property
    def n_values(self) -> int:
        return len(self.values)

    @property
    def low(self) -> float:
        return self.values[0]

    @property
    def high(self) -> float:
        return self.values[-1]


@dataclass(frozen=True)
class SignSchema:
    signs: tuple[SignDef, ...]

    def __post_init__(self):
        object.__setattr__(self, "signs", tuple(self.signs))
        if not self.signs:
            raise SchemaError("schema has no signs")
        names = [s.name for s in self.signs]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate sign names in {names}")

    def __len__(self) -> int:
        return len(self.signs)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.signs)

    @cached_property
    def sigmas(self) -> np.ndarray:
        return np.array([s.sigma for s in self.signs])

    @cached_property
    def lows(self) -> np.ndarray:
        return np.array([s.low for s in self.signs])

    @cached_property
    def spans(self) -> np.ndarray:
        """Per-sign value range; single-valued signs get span 1 to avoid 0/0."""
        span = np.array([s.high - s.low for s in self.signs])
        span[span == 0] = 1.0
        return span

    def normalize(self, values) -> np.ndarray:
        """Map raw sign values affinely onto [0, 1] per sign."""
        x = np.asarray(values, dtype=float)
        if x.shape[-1] != len(self):
            raise DimensionError(
                f"expected {len(self)} sign values, got {x.shape[-1]}")
        return (x - self.lows) / self.spans

    def is_admissible(self, values: Sequence[float]) -> bool:
        return len(values) == len(self) and all(
            float(v) in s.values for s, v in zip(self.signs, values))

    def check(self, values: Sequence[float]) -> tuple[float, ...]:
        """Return ``values`` as a float tuple or raise if not admissible."""
        if len(values) != len(self):
            raise DimensionError(
                f"expected {len(self)} sign values, got {len(values)}")
        for s, v in zip(self.signs, values):
            if float(v) not in s.values:
                raise AdmissibilityError(
                    f"value {v!r} is not admissible for sign {s.name!r}")
        return tuple(float(v) for v in values)

    def indices_of(self, values) -> np.ndarray:
        """Positions of (admissible) values within each sign's ordered set."""
        x = np.atleast_2d(np.asarray(values, dtype=float))
        return np.column_stack([
            np.searchsorted(np.asarray(s.values), x[:, j])
            for j, s in enumerate(self.signs)])

    def values_at(self, indices) -> np.ndarray:
        idx = np.atleast_2d(np.asarray(indices, dtype=int))
        return np.column_stack([
            np.asarray(s.values)[idx[:, j]] for j, s in enumerate(self.signs)])

    def all_tuples(self) -> np.ndarray:
        """Every point of the valued-signs space, one row each."""
        grids = np.meshgrid(*[np.asarray(s.values) for s in self.signs],
                            indexing="ij")
        return np.column_stack([g.ravel() for g in grids])


@dataclass(frozen=True)
class Observation:
    values: tuple[float, ...]
    label: bool

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "label", bool(self.label))


@dataclass(frozen=True)
class Oracle:
    """A labelled sample drawn from a reference population.

    Duplicate sign tuples with conflicting labels are allowed. Tuple length
    is checked on construction; value admissibility is reported by
    :func:`validate_oracle` and enforced by :meth:`require_valid`.
    """

    schema: SignSchema
    records: tuple[Observation, ...]
    provenance: str = ""
    collected_at: int = 0

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        if not self.records:
            raise SchemaError("an oracle needs at least one record")
        for i, r in enumerate(self.records):
            if len(r.values) != len(self.schema):
                raise DimensionError(
                    f"record {i} has {len(r.values)} values, schema has "
                    f"{len(self.schema)} signs")

    def __len__(self) -> int:
        return len(self.records)

    @cached_property
    def values(self) -> np.ndarray:
        return np.array([r.values for r in self.records], dtype=float)

    @cached_property
    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.records], dtype=bool)

    def require_valid(self) -> "Oracle":
        report = validate_oracle(self)
        if report.violations:
            v = report.violations[0]
            raise AdmissibilityError(
                f"{len(report.violations)} inadmissible value(s); first: "
                f"{v.value!r} for sign {v.sign!r}")
        return self

    def replace_record(self, index: int, values: Sequence[float]) -> "Oracle":
        records = list(self.records)
        records[index] = Observation(tuple(values), records[index].label)
        return Oracle(self.schema, tuple(records), self.provenance,
                      self.collected_at)

    @classmethod
    def from_arrays(cls, schema, values, labels, provenance="",
                    collected_at=0) -> "Oracle":
        recs = tuple(Observation(tuple(v), bool(l))
                     for v, l in zip(np.asarray(values, dtype=float), labels))
        return cls(schema, recs, provenance, int(collected_at))


def valued_space_cardinality(schema: SignSchema) -> int:
    """Number of distinct sign-value tuples, the product of the n_s.

    Exact integer arithmetic, so large spaces never wrap around.
    """
    if not isinstance(schema, SignSchema) or len(schema) == 0:
        raise SchemaError("valued space of an empty schema is undefined")
    return math.prod(s.n_values for s in schema.signs)


def log_valued_space_cardinality(schema: SignSchema) -> float:
    if len(schema) == 0:
        raise SchemaError("valued space of an empty schema is undefined")
    return math.fsum(math.log(s.n_values) for s in schema.signs)


@dataclass(frozen=True, order=True)
class Violation:
    values: tuple[float, ...]
    label: bool
    sign: str
    value: float


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]
    inconsistency_rate: float
    inconsistent_records: int
    n_records: int
    # Positions depend on record order; excluded from report equality.
    violation_indices: tuple[int, ...] = field(default=(), compare=False)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_oracle(oracle: Oracle) -> ValidationReport:
    found = []
    for i, rec in enumerate(oracle.records):
        for s, v in zip(oracle.schema.signs, rec.values):
            if v not in s.values:
                found.append((Violation(rec.values, rec.label, s.name, v), i))
    found.sort()

    by_tuple = defaultdict(set)
    for rec in oracle.records:
        by_tuple[rec.values].add(rec.label)
    n_bad = sum(1 for rec in oracle.records if len(by_tuple[rec.values]) == 2)

    return ValidationReport(
        violations=tuple(v for v, _ in found),
        inconsistency_rate=n_bad / len(oracle),
        inconsistent_records=n_bad,
        n_records=len(oracle),
        violation_indices=tuple(i for _, i in found),
    )


# ---------------------------------------------------------------------------
# Text formats
#
# Schema header, one line:   name:v1 v2 v3:sigma; name2:...:sigma
# Oracle body, one per line: v1,v2,v3,+      (label token + or -)
# Lines starting with '#' carry metadata ("# provenance: ...",
# "# collected_at: 3") or comments; blank lines are ignored.
# ---------------------------------------------------------------------------

def format_number(v: float) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() and abs(v) < 2**53 else repr(v)


def format_schema_header(schema: SignSchema) -> str:
    return "; ".join(
        f"{s.name}:{' '.join(format_number(v) for v in s.values)}:"
        f"{format_number(s.sigma)}" for s in schema.signs)


def parse_schema_header(line: str) -> SignSchema:
    signs = []
    for chunk in line.strip().split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) != 3:
            raise FormatError(f"schema field {chunk!r} is not name:values:sigma")
        name, values, sigma = (p.strip() for p in parts)
        try:
            signs.append(SignDef(name, tuple(float(v) for v in values.split()),
                                 float(sigma)))
        except ValueError as exc:
            if isinstance(exc, SchemaError):
                raise
            raise FormatError(f"bad number in schema field {chunk!r}") from exc
    return SignSchema(tuple(signs))


def _content_lines(text: str) -> Iterable[tuple[int, str]]:
    for lineno, line in enumerate(text.splitlines(), 1):
        if line.strip():
            yield lineno, line.strip()


def parse_tuple(text: str, n: int | None = None) -> tuple[float, ...]:
    try:
        vals = tuple(float(t) for t in text.replace(" ", "").split(",") if t)
    except ValueError as exc:
        raise FormatError(f"cannot parse sign tuple {text!r}") from exc
    if n is not None and len(vals) != n:
        raise DimensionError(f"expected {n} sign values in {text!r}")
    return vals


def loads_oracle(text: str, strict: bool = True) -> Oracle:
    lines = list(_content_lines(text))
    if not lines:
        raise FormatError("empty oracle file")
    schema = parse_schema_header(lines[0][1])
    meta = {}
    records = []
    for lineno, line in lines[1:]:
        if line.startswith("#"):
            key, sep, val = line[1:].partition(":")
            if sep:
                meta[key.strip()] = val.strip()
            continue
        *vals, token = [t.strip() for t in line.split(",")]
        if token not in _LABEL_TOKENS:
            raise FormatError(f"line {lineno}: label token must be + or -")
        try:
            values = tuple(float(v) for v in vals)
        except ValueError as exc:
            raise FormatError(f"line {lineno}: bad number") from exc
        if len(values) != len(schema):
            raise DimensionError(
                f"line {lineno}: {len(values)} values for {len(schema)} signs")
        records.append(Observation(values, _LABEL_TOKENS[token]))
    try:
        collected_at = int(meta.get("collected_at", 0))
    except ValueError as exc:
        raise FormatError("collected_at must be an integer tick") from exc
    oracle = Oracle(schema, tuple(records), meta.get("provenance", ""),
                    collected_at)
    return oracle.require_valid() if strict else oracle


def dumps_oracle(oracle: Oracle) -> str:
    out = [format_schema_header(oracle.schema)]
    if oracle.provenance:
        out.append(f"# provenance: {oracle.provenance}")
    out.append(f"# collected_at: {oracle.collected_at}")
    for r in oracle.records:
        out.append(",".join([*(format_number(v) for v in r.values),
                             "+" if r.label else "-"]))
    return "\n".join(out) + "\n"


def read_oracle(path, strict: bool = True) -> Oracle:
    return loads_oracle(Path(path).read_text(encoding="ascii"), strict)


def write_oracle(oracle: Oracle, path) -> None:
    Path(path).write_text(dumps_oracle(oracle), encoding="ascii")


def read_schema(path) -> SignSchema:
    """Read the schema header from any file whose first line carries one."""
    for _, line in _content_lines(Path(path).read_text(encoding="ascii")):
        return parse_schema_header(line)
    raise FormatError(f"{path}: no schema header")
