"""Possible worlds for drifting domains, and decision fusion across them.

Each observed sign value v is widened to the interval [v - 2 sigma,
v + 2 sigma], clamped to the sign's admissible range and snapped to
admissible values. A *world* (i, b) is the oracle with record i replaced
by the corner b of its interval box; every other record is untouched, so
an oracle of n records over |S| signs has n * 2**|S| worlds.
"""
from __future__ import annotations

import bisect
import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .domain import Oracle, SignSchema
from .errors import BudgetExceededError, ConfigError, SchemaError
from .kernels import (DEFAULT_EPOCHS, DEFAULT_REG, KernelSpec,
                      TrainedClassifier, gram, train_from_gram)
from .seeding import derive_seed

DEFAULT_BUDGET = 65_536
STRATEGIES = ("cautious", "asymmetric", "voting")
ABSTAIN = None

ABSTAIN_ADVICE = ("conflicting possible worlds: data inconsistent or "
                  "insufficient; collect a second cycle of observations")


@dataclass(frozen=True)
class DriftInterval:
    low: float
    high: float
    center: float


def _snap(x: float, values: Sequence[float], center: float) -> float:
    """Nearest admissible value to ``x``; exact ties go toward ``center``."""
    k = bisect.bisect_left(values, x)
    if k == 0:
        return values[0]
    if k == len(values):
        return values[-1]
    below, above = values[k - 1], values[k]
    db, da = x - below, above - x
    if db < da:
        return below
    if da < db:
        return above
    return above if center >= above else below


def sign_interval(value: float, sigma: float,
                  admissible: Sequence[float]) -> DriftInterval:
    values = sorted(float(v) for v in admissible)
    if not values:
        raise SchemaError("empty admissible value set")
    if sigma < 0:
        raise SchemaError("sigma must be >= 0")
    value = float(value)
    lo = min(max(value - 2.0 * sigma, values[0]), values[-1])
    hi = min(max(value + 2.0 * sigma, values[0]), values[-1])
    return DriftInterval(_snap(lo, values, value), _snap(hi, values, value),
                         value)


@dataclass(frozen=True, order=True)
class WorldIndex:
    record_index: int
    corner: tuple[int, ...]   # corner[s] = 0 picks the low end of sign s

    @property
    def flat(self) -> int:
        return self.record_index * 2 ** len(self.corner) + int(
            "".join(map(str, self.corner)) or "0", 2)

    @classmethod
    def from_flat(cls, flat: int, n_signs: int) -> "WorldIndex":
        i, c = divmod(int(flat), 2 ** n_signs)
        return cls(i, tuple(int(b) for b in format(c, f"0{n_signs}b")) if n_signs else ())

    def __str__(self):
        return f"{self.record_index}:{''.join('+' if b else '-' for b in self.corner)}"


def interval_bounds(schema: SignSchema, values) -> tuple[np.ndarray, np.ndarray]:
    """Low and high interval ends for every row of ``values``."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    lo = np.empty_like(values)
    hi = np.empty_like(values)
    for j, s in enumerate(schema.signs):
        for r in range(len(values)):
            iv = sign_interval(values[r, j], s.sigma, s.values)
            lo[r, j], hi[r, j] = iv.low, iv.high
    return lo, hi


def corner_values(lo: np.ndarray, hi: np.ndarray, corner) -> np.ndarray:
    return np.where(np.asarray(corner, dtype=bool), hi, lo)


def world_count(oracle: Oracle) -> int:
    return len(oracle) * 2 ** len(oracle.schema)


def _corners(n_signs: int):
    return itertools.product((0, 1), repeat=n_signs)


def enumerate_worlds(oracle: Oracle, budget: int = DEFAULT_BUDGET
                     ) -> Iterator[tuple[WorldIndex, Oracle]]:
    """All worlds in lexicographic (record, corner) order.

    Raises :class:`BudgetExceededError` immediately (not on first
    iteration) when there are more than ``budget`` worlds; use
    :func:`sample_worlds` then.
    """
    total = world_count(oracle)
    if total > budget:
        raise BudgetExceededError(
            f"{total} possible worlds exceed the budget of {budget}; "
            "use sample_worlds")
    lo, hi = interval_bounds(oracle.schema, oracle.values)

    def gen():
        for i in range(len(oracle)):
            for corner in _corners(len(oracle.schema)):
                yield (WorldIndex(i, corner),
                       oracle.replace_record(i, corner_values(lo[i], hi[i], corner)))
    return gen()


def sample_worlds(oracle: Oracle, k: int, seed: int
                  ) -> list[tuple[WorldIndex, Oracle]]:
    """``k`` distinct worlds drawn uniformly without replacement.

    Returned in enumeration order, so ``k == world_count`` reproduces
    :func:`enumerate_worlds`.
    """
    total = world_count(oracle)
    if not 1 <= k <= total:
        raise ConfigError(f"cannot sample {k} of {total} worlds")
    lo, hi = interval_bounds(oracle.schema, oracle.values)
    rng = np.random.default_rng(derive_seed(seed, "sample_worlds"))
    flats = np.sort(rng.choice(total, size=k, replace=False))
    out = []
    for f in flats.tolist():
        w = WorldIndex.from_flat(f, len(oracle.schema))
        out.append((w, oracle.replace_record(
            w.record_index, corner_values(lo[w.record_index], hi[w.record_index], w.corner))))
    return out


def world_indices(oracle: Oracle, budget: int = DEFAULT_BUDGET,
                  sample: bool = False, seed: int = 0) -> list[WorldIndex]:
    total = world_count(oracle)
    if total <= budget:
        return [WorldIndex(i, c) for i in range(len(oracle))
                for c in _corners(len(oracle.schema))]
    if not sample:
        raise BudgetExceededError(
            f"{total} possible worlds exceed the budget of {budget}; "
            "enable sampling")
    rng = np.random.default_rng(derive_seed(seed, "sample_worlds"))
    flats = np.sort(rng.choice(total, size=budget, replace=False))
    return [WorldIndex.from_flat(f, len(oracle.schema)) for f in flats.tolist()]


def world_seed(seed: int, record_index: int, original, perturbed) -> int:
    """Training seed of one world.

    A world whose perturbed record equals the original has exactly the
    source training set and gets the master seed itself; otherwise the seed
    is derived from the master seed, the record index and the new values.
    """
    original = np.asarray(original, dtype=float)
    perturbed = np.asarray(perturbed, dtype=float)
    if np.array_equal(original, perturbed):
        return int(seed)
    return derive_seed(seed, "world", int(record_index), perturbed)


@dataclass(frozen=True, eq=False)
class WorldEnsemble:
    """One classifier per world, in world order."""

    worlds: tuple[WorldIndex, ...]
    classifiers: tuple[TrainedClassifier, ...]
    total_worlds: int
    sampled: bool = False

    def __len__(self):
        return len(self.classifiers)

    def __iter__(self):
        return iter(self.classifiers)

    def __getitem__(self, k):
        return self.classifiers[k]

    def decisions(self, X) -> np.ndarray:
        """Decision values, shape (worlds, queries)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.vstack([c.decision_function(X) for c in self.classifiers])

    def predictions(self, X) -> np.ndarray:
        return self.decisions(X) > 0


def train_ensemble(oracle: Oracle, spec: KernelSpec | None = None,
                   reg: float = DEFAULT_REG, epochs: int = DEFAULT_EPOCHS,
                   seed: int = 0, budget: int = DEFAULT_BUDGET,
                   sample: bool = False) -> WorldEnsemble:
    """Train one classifier per possible world.

    With more worlds than ``budget``, ``sample=True`` trains on ``budget``
    uniformly sampled worlds; otherwise :class:`BudgetExceededError`.
    Each world reuses the source Gram matrix with one row and column
    replaced.
    """
    spec = spec or KernelSpec.gaussian()
    schema = oracle.schema
    worlds = world_indices(oracle, budget, sample, seed)
    lo, hi = interval_bounds(schema, oracle.values)
    Xn = schema.normalize(oracle.values)
    K = gram(spec, Xn)
    y = oracle.labels
    cache: dict = {}
    classifiers = []
    for w in worlds:
        i = w.record_index
        new = corner_values(lo[i], hi[i], w.corner)
        s = world_seed(seed, i, oracle.values[i], new)
        key = (i, new.tobytes()) if s != seed else None
        if key in cache:
            classifiers.append(cache[key])
            continue
        if s == seed:
            Xw, Kw = Xn, K
        else:
            Xw = Xn.copy()
            Xw[i] = schema.normalize(new)
            col = gram(spec, Xw, Xw[i:i + 1])[:, 0]
            Kw = K.copy()
            Kw[i, :] = col
            Kw[:, i] = col
        clf = train_from_gram(Xw, y, Kw, spec, schema, reg, epochs, s)
        cache[key] = clf
        classifiers.append(clf)
    return WorldEnsemble(tuple(worlds), tuple(classifiers), world_count(oracle),
                         len(worlds) < world_count(oracle))


@dataclass(frozen=True)
class EnsembleDecision:
    label: bool | None          # None means abstain
    confidence: float
    tally: tuple[int, int]      # (positive, negative)
    strategy: str
    worlds_evaluated: int

    @property
    def abstained(self) -> bool:
        return self.label is None

    def label_token(self) -> str:
        return {True: "positive", False: "negative", None: "ABSTAIN"}[self.label]


def fuse(predictions: Sequence[bool], strategy: str = "voting",
         alarm_label: bool = True) -> EnsembleDecision:
    """Combine per-world labels.

    cautious:   the common label if unanimous, else abstain (confidence is
                the majority share).
    asymmetric: ``alarm_label`` if any world predicts it, else the other
                label; confidence is the share backing the issued label.
    voting:     the majority label with confidence = majority share; an
                exact tie abstains with confidence 0.5.
    """
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown fusion strategy {strategy!r}")
    counts = Counter(bool(p) for p in predictions)
    total = counts[True] + counts[False]
    if total == 0:
        raise ConfigError("cannot fuse an empty prediction list")
    pos, neg = counts[True], counts[False]
    major = max(pos, neg) / total
    tally = (pos, neg)
    if strategy == "cautious":
        if pos and neg:
            return EnsembleDecision(ABSTAIN, major, tally, strategy, total)
        return EnsembleDecision(pos > 0, 1.0, tally, strategy, total)
    if strategy == "asymmetric":
        alarm = bool(alarm_label)
        n_alarm = counts[alarm]
        if n_alarm:
            return EnsembleDecision(alarm, n_alarm / total, tally, strategy, total)
        return EnsembleDecision(not alarm, 1.0, tally, strategy, total)
    if pos == neg:
        return EnsembleDecision(ABSTAIN, 0.5, tally, strategy, total)
    return EnsembleDecision(pos > neg, major, tally, strategy, total)


def fuse_counts(pos, total, strategy: str, alarm_label: bool = True):
    """Vectorised :func:`fuse` over arrays of per-query positive counts.

    Returns ``(labels, abstained, confidence)`` where ``labels`` is only
    meaningful where ``abstained`` is False.
    """
    pos = np.asarray(pos)
    total = np.broadcast_to(np.asarray(total), pos.shape)
    neg = total - pos
    major = np.maximum(pos, neg) / total
    if strategy == "cautious":
        abst = (pos > 0) & (neg > 0)
        return pos > 0, abst, np.where(abst, major, 1.0)
    if strategy == "asymmetric":
        n_alarm = pos if alarm_label else neg
        hit = n_alarm > 0
        labels = hit if alarm_label else ~hit
        return labels, np.zeros(pos.shape, bool), np.where(hit, n_alarm / total, 1.0)
    if strategy == "voting":
        abst = pos == neg
        return pos > neg, abst, np.where(abst, 0.5, major)
    raise ConfigError(f"unknown fusion strategy {strategy!r}")


@dataclass(frozen=True)
class Diagnosis:
    decision: EnsembleDecision
    votes: tuple[tuple[WorldIndex, bool, float], ...] = field(repr=False)


def diagnose(oracle: Oracle, patient: Sequence[float],
             spec: KernelSpec | None = None, strategy: str = "voting",
             reg: float = DEFAULT_REG, epochs: int = DEFAULT_EPOCHS,
             seed: int = 0, budget: int = DEFAULT_BUDGET, sample: bool = False,
             alarm_label: bool = True, expand_patient: bool = False,
             ensemble: WorldEnsemble | None = None) -> Diagnosis:
    """Classify one patient against every possible world and fuse.

    With ``expand_patient`` the patient's own tuple is also widened to its
    2**|S| interval corners and every corner is voted on by every world.
    """
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown fusion strategy {strategy!r}")
    patient = oracle.schema.check(patient)
    if ensemble is None:
        ensemble = train_ensemble(oracle, spec, reg, epochs, seed, budget, sample)
    queries = np.array([patient])
    if expand_patient:
        lo, hi = interval_bounds(oracle.schema, queries)
        queries = np.array([corner_values(lo[0], hi[0], c)
                            for c in _corners(len(oracle.schema))])
    margins = ensemble.decisions(queries)
    votes = tuple((w, bool(m > 0), float(m))
                  for w, row in zip(ensemble.worlds, margins) for m in row)
    decision = fuse([v[1] for v in votes], strategy, alarm_label)
    return Diagnosis(decision, votes)
