"""Therapy plan ranking by kernel regression on past outcomes.

Only the cautious rule is meaningful here: a wrong plan is harmful in
either direction, so the advisor commits to a plan only when every
possible world ranks the same plan first.
"""
from __future__ import annotations

import itertools
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .domain import SignSchema, format_schema_header, format_number, parse_schema_header
from .drift import DEFAULT_BUDGET, corner_values, interval_bounds
from .errors import BudgetExceededError, ConfigError, FormatError
from .kernels import DEFAULT_REG, KernelSpec, train_regressor
from .seeding import derive_seed

TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class TherapyPlan:
    id: str
    description: str = ""
    outcomes: tuple[tuple[tuple[float, ...], float], ...] = ()

    def __post_init__(self):
        outs = tuple((tuple(float(v) for v in x), float(e)) for x, e in self.outcomes)
        for _, e in outs:
            if not 0.0 <= e <= 1.0:
                raise ConfigError(
                    f"plan {self.id!r}: effectiveness {e} outside [0, 1]")
        object.__setattr__(self, "outcomes", outs)

    @property
    def rankable(self) -> bool:
        return len(self.outcomes) > 0


@dataclass(frozen=True)
class Ranking:
    entries: tuple[tuple[str, float], ...]          # best first
    ties: tuple[tuple[str, ...], ...] = ()          # groups broken by id
    excluded: tuple[str, ...] = ()

    @property
    def top(self) -> str:
        return self.entries[0][0]

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(pid for pid, _ in self.entries)


def _order(scores: dict[str, float]) -> tuple[list[str], list[tuple[str, ...]]]:
    ids = sorted(scores, key=lambda p: (-scores[p], p))
    ties = []
    group = [ids[0]] if ids else []
    for a, b in zip(ids, ids[1:]):
        if abs(scores[a] - scores[b]) <= TIE_TOLERANCE:
            group.append(b)
        else:
            if len(group) > 1:
                ties.append(tuple(group))
            group = [b]
    if len(group) > 1:
        ties.append(tuple(group))
    return ids, ties


def _rankable(plans: Sequence[TherapyPlan]):
    ok, excluded = [], []
    for p in plans:
        (ok if p.rankable else excluded).append(p)
    if excluded:
        warnings.warn(f"plans without outcomes excluded: "
                      f"{[p.id for p in excluded]}", RuntimeWarning, stacklevel=3)
    if not ok:
        raise ConfigError("no rankable therapy plans")
    if len({p.id for p in ok}) != len(ok):
        raise ConfigError("duplicate therapy plan ids")
    return ok, tuple(p.id for p in excluded)


def _score(outcomes, patient, spec, reg, schema) -> float:
    return train_regressor(list(outcomes), spec, reg, schema).predict(patient)


def rank_plans(plans: Sequence[TherapyPlan], patient: Sequence[float],
               spec: KernelSpec | None = None, reg: float = DEFAULT_REG,
               schema: SignSchema | None = None) -> Ranking:
    """Predict each plan's effectiveness at ``patient`` and sort, best
    first. Equal predictions are ordered by plan id and reported in
    ``Ranking.ties``."""
    if schema is not None:
        patient = schema.check(patient)
    ok, excluded = _rankable(plans)
    scores = {p.id: _score(p.outcomes, patient, spec, reg, schema) for p in ok}
    ids, ties = _order(scores)
    return Ranking(tuple((i, scores[i]) for i in ids), tuple(ties), excluded)


@dataclass(frozen=True)
class TherapyAdvice:
    ranking: Ranking              # ranking on the unperturbed outcomes
    status: str                   # "UNANIMOUS" or "ABSTAIN"
    worlds_evaluated: int
    top_plan: str | None          # the plan every world ranks first, if any
    histogram: tuple[tuple[str, int], ...] = field(default=())


def advise(plans: Sequence[TherapyPlan], patient: Sequence[float],
           schema: SignSchema, spec: KernelSpec | None = None,
           reg: float = DEFAULT_REG, seed: int = 0,
           budget: int = DEFAULT_BUDGET, sample: bool = False,
           strategy: str = "cautious") -> TherapyAdvice:
    """Cautious therapy advice over possible worlds.

    A world perturbs one historical outcome record of one plan to a corner
    of its drift box; all other records of all plans are untouched. The
    top plan is computed per world. ``seed`` only matters when worlds are
    sampled because they exceed ``budget``.
    """
    if strategy != "cautious":
        raise ConfigError(
            f"therapy advice supports only the cautious strategy, not {strategy!r}")
    patient = schema.check(patient)
    ok, excluded = _rankable(plans)
    base = {p.id: _score(p.outcomes, patient, spec, reg, schema) for p in ok}
    ids, ties = _order(base)
    ranking = Ranking(tuple((i, base[i]) for i in ids), tuple(ties), excluded)

    n_corners = 2 ** len(schema)
    sizes = [len(p.outcomes) for p in ok]
    total = sum(sizes) * n_corners
    if total > budget:
        if not sample:
            raise BudgetExceededError(
                f"{total} possible worlds exceed the budget of {budget}")
        rng = np.random.default_rng(derive_seed(seed, "advise_worlds"))
        flats = np.sort(rng.choice(total, size=budget, replace=False)).tolist()
    else:
        flats = range(total)

    offsets = np.cumsum([0] + [s * n_corners for s in sizes])
    corners = list(itertools.product((0, 1), repeat=len(schema)))
    bounds = {p.id: interval_bounds(schema, [x for x, _ in p.outcomes]) for p in ok}
    tops = Counter()
    cache: dict = {}
    for f in flats:
        k = int(np.searchsorted(offsets, f, side="right")) - 1
        plan = ok[k]
        rec, c = divmod(f - int(offsets[k]), n_corners)
        lo, hi = bounds[plan.id]
        new = tuple(corner_values(lo[rec], hi[rec], corners[c]).tolist())
        key = (plan.id, rec, new)
        if key not in cache:
            outs = list(plan.outcomes)
            if new == outs[rec][0]:
                cache[key] = base[plan.id]
            else:
                outs[rec] = (new, outs[rec][1])
                cache[key] = _score(outs, patient, spec, reg, schema)
        scores = dict(base)
        scores[plan.id] = cache[key]
        tops[_order(scores)[0][0]] += 1

    evaluated = sum(tops.values())
    if len(tops) == 1:
        (top,) = tops
        return TherapyAdvice(ranking, "UNANIMOUS", evaluated, top,
                             ((top, evaluated),))
    hist = tuple(sorted(tops.items(), key=lambda kv: (-kv[1], kv[0])))
    return TherapyAdvice(ranking, "ABSTAIN", evaluated, None, hist)


# ---------------------------------------------------------------------------
# Plan file: schema header line, then per plan
#   plan: <id>
#   description: <free text, IF-THEN steps kept verbatim>
#   v1,v2,...,effectiveness     (one line per historical outcome)
# ---------------------------------------------------------------------------

def loads_plans(text: str) -> tuple[SignSchema, list[TherapyPlan]]:
    lines = [(n, l.strip()) for n, l in enumerate(text.splitlines(), 1)
             if l.strip() and not l.strip().startswith("#")]
    if not lines:
        raise FormatError("empty plan file")
    schema = parse_schema_header(lines[0][1])
    plans: list[dict] = []
    for lineno, line in lines[1:]:
        key, sep, rest = line.partition(":")
        if sep and key.strip() in ("plan", "description"):
            if key.strip() == "plan":
                plans.append({"id": rest.strip(), "description": "", "outcomes": []})
            elif not plans:
                raise FormatError(f"line {lineno}: description before any plan")
            else:
                plans[-1]["description"] = rest.strip()
            continue
        if not plans:
            raise FormatError(f"line {lineno}: outcome before any plan")
        try:
            nums = [float(t) for t in line.split(",")]
        except ValueError as exc:
            raise FormatError(f"line {lineno}: bad outcome line") from exc
        if len(nums) != len(schema) + 1:
            raise FormatError(
                f"line {lineno}: expected {len(schema)} values and an effectiveness")
        schema.check(nums[:-1])
        plans[-1]["outcomes"].append((tuple(nums[:-1]), nums[-1]))
    return schema, [TherapyPlan(p["id"], p["description"], tuple(p["outcomes"]))
                    for p in plans]


def dumps_plans(schema: SignSchema, plans: Sequence[TherapyPlan]) -> str:
    out = [format_schema_header(schema)]
    for p in plans:
        out.append(f"plan: {p.id}")
        if p.description:
            out.append(f"description: {p.description}")
        for x, e in p.outcomes:
            out.append(",".join([*(format_number(v) for v in x), format_number(e)]))
    return "\n".join(out) + "\n"


def read_plans(path) -> tuple[SignSchema, list[TherapyPlan]]:
    return loads_plans(Path(path).read_text(encoding="ascii"))
