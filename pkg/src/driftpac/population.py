"""Synthetic drifting populations with a known latent concept.

Members carry sign values as positions in each sign's ordered admissible
set. Every tick each position moves by at most ``max_step``, a few members
die and a few are born. Labels are the latent concept's verdict flipped
with probability ``noise_rate``; flips are redrawn only when a member's
tuple changes.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .domain import Oracle, SignSchema
from .errors import ConfigError
from .kernels import KernelSpec, TrainedClassifier
from .seeding import rng_for

_MAX_CONCEPT_TRIES = 1000
_BALANCE_SAMPLE = 200_000


@dataclass(frozen=True)
class ConceptSpec:
    """Latent ground truth: a random gaussian-kernel rule or a threshold.

    kind="kernel": ``centers`` random admissible tuples with N(0, 1)
    weights and width ``scale`` (normalised units), redrawn until the
    positive share over the valued space lies in ``balance``.
    kind="threshold": positive iff ``weights . normalised(x) > threshold``.
    """

    kind: str = "kernel"
    scale: float = 0.5
    centers: int = 4
    balance: tuple[float, float] = (0.3, 0.7)
    weights: tuple[float, ...] = ()
    threshold: float = 0.0

    def __post_init__(self):
        if self.kind not in ("kernel", "threshold"):
            raise ConfigError(f"unknown concept kind {self.kind!r}")
        if self.kind == "kernel" and (self.scale <= 0 or self.centers < 1):
            raise ConfigError("kernel concept needs scale > 0 and centers >= 1")


@dataclass(frozen=True)
class PopulationConfig:
    schema: SignSchema
    size0: int = 1000
    birth_death_scale: int = 0
    max_step: int = 1
    noise_rate: float = 0.05
    concept: ConceptSpec = field(default_factory=ConceptSpec)
    seed: int = 0

    def __post_init__(self):
        if self.size0 < 0 or self.birth_death_scale < 0 or self.max_step < 0:
            raise ConfigError("size0, birth_death_scale and max_step must be >= 0")
        if not 0.0 <= self.noise_rate < 0.5:
            raise ConfigError("noise_rate must lie in [0, 0.5)")
        if self.concept.kind == "threshold" and len(self.concept.weights) != len(self.schema):
            raise ConfigError("threshold concept needs one weight per sign")

    @cached_property
    def concept_classifier(self) -> TrainedClassifier:
        return make_concept(self.schema, self.concept, self.seed)


def _space_sample(schema: SignSchema, rng) -> np.ndarray:
    if np.prod([s.n_values for s in schema.signs], dtype=float) <= _BALANCE_SAMPLE:
        return schema.all_tuples()
    idx = np.column_stack([rng.integers(0, s.n_values, _BALANCE_SAMPLE)
                           for s in schema.signs])
    return schema.values_at(idx)


def make_concept(schema: SignSchema, spec: ConceptSpec, seed: int) -> TrainedClassifier:
    """Build the latent concept as an ordinary classifier object."""
    lows, spans = schema.lows, schema.spans
    if spec.kind == "threshold":
        return TrainedClassifier(KernelSpec("linear"),
                                 np.array([spec.weights], dtype=float),
                                 np.array([1.0]), -float(spec.threshold),
                                 lows, spans, int(seed), 0.0, ("concept",))
    rng = rng_for(seed, "concept")
    space = _space_sample(schema, rng)
    kernel = KernelSpec.gaussian(spec.scale)
    for _ in range(_MAX_CONCEPT_TRIES):
        idx = np.column_stack([rng.integers(0, s.n_values, spec.centers)
                               for s in schema.signs])
        centers = schema.normalize(schema.values_at(idx))
        coef = rng.standard_normal(spec.centers)
        clf = TrainedClassifier(kernel, centers, coef, 0.0, lows, spans,
                                int(seed), 0.0, ("concept",))
        share = clf.predict_many(space).mean()
        if spec.balance[0] <= share <= spec.balance[1]:
            return clf
    raise ConfigError("could not draw a balanced concept; widen balance")


@dataclass(frozen=True, eq=False)
class PopulationState:
    schema: SignSchema
    tick: int
    ids: np.ndarray          # member ids, unique
    indices: np.ndarray      # (members, signs) positions in admissible sets
    noisy: np.ndarray        # observed labels
    truth: np.ndarray        # latent concept labels
    next_id: int

    def __len__(self):
        return len(self.ids)

    @cached_property
    def values(self) -> np.ndarray:
        if len(self.ids) == 0:
            return np.empty((0, len(self.schema)))
        return self.schema.values_at(self.indices)

    @property
    def members(self) -> list[tuple[int, tuple[float, ...], bool, bool]]:
        return [(int(i), tuple(v), bool(n), bool(t)) for i, v, n, t in
                zip(self.ids, self.values, self.noisy, self.truth)]


def _label(config, values, rng):
    if len(values) == 0:
        return np.empty(0, bool), np.empty(0, bool)
    truth = config.concept_classifier.predict_many(values)
    flips = rng.random(len(values)) < config.noise_rate
    return truth ^ flips, truth


def _random_indices(schema, n, rng):
    return np.column_stack([rng.integers(0, s.n_values, n) for s in schema.signs]
                           ).reshape(n, len(schema)).astype(np.int64)


def init_population(config: PopulationConfig) -> PopulationState:
    rng = rng_for(config.seed, "init")
    idx = _random_indices(config.schema, config.size0, rng)
    values = config.schema.values_at(idx) if config.size0 else np.empty((0, len(config.schema)))
    noisy, truth = _label(config, values, rng)
    return PopulationState(config.schema, 0, np.arange(config.size0), idx,
                           noisy, truth, config.size0)


def step_population(state: PopulationState, config: PopulationConfig) -> PopulationState:
    """Advance one tick: bounded moves, then deaths, then births."""
    rng = rng_for(config.seed, "step", state.tick)
    schema = config.schema
    top = np.array([s.n_values - 1 for s in schema.signs])
    n = len(state)
    m = config.max_step
    moves = rng.integers(-m, m + 1, size=(n, len(schema)))
    idx = np.clip(state.indices + moves, 0, top)
    noisy, truth = state.noisy.copy(), state.truth.copy()
    changed = np.any(idx != state.indices, axis=1)
    if changed.any():
        noisy[changed], truth[changed] = _label(
            config, schema.values_at(idx[changed]), rng)
    ids = state.ids

    bd = config.birth_death_scale
    n_die = min(int(rng.integers(0, bd + 1)), n)
    if n_die:
        keep = np.ones(n, bool)
        keep[rng.choice(n, n_die, replace=False)] = False
        ids, idx, noisy, truth = ids[keep], idx[keep], noisy[keep], truth[keep]
    n_born = int(rng.integers(0, bd + 1))
    next_id = state.next_id
    if n_born:
        new_idx = _random_indices(schema, n_born, rng)
        new_noisy, new_truth = _label(config, schema.values_at(new_idx), rng)
        ids = np.concatenate([ids, np.arange(next_id, next_id + n_born)])
        idx = np.vstack([idx, new_idx])
        noisy = np.concatenate([noisy, new_noisy])
        truth = np.concatenate([truth, new_truth])
        next_id += n_born
    return PopulationState(schema, state.tick + 1, ids, idx, noisy, truth, next_id)


def run_population(config: PopulationConfig, ticks: int,
                   state: PopulationState | None = None) -> PopulationState:
    state = init_population(config) if state is None else state
    for _ in range(ticks):
        state = step_population(state, config)
    return state


def sample_oracle(state: PopulationState, n: int, seed: int,
                  provenance: str = "simulated") -> Oracle:
    """Uniform sample without replacement of ``n`` members' noisy records."""
    if not 1 <= n <= len(state):
        raise ConfigError(
            f"cannot sample {n} records from a population of {len(state)}")
    pick = np.sort(rng_for(seed, "sample_oracle", state.tick).choice(
        len(state), n, replace=False))
    return Oracle.from_arrays(state.schema, state.values[pick], state.noisy[pick],
                              provenance, state.tick)


def disagreement(clf: TrainedClassifier, state: PopulationState) -> float:
    """Fraction of members where ``clf`` differs from the latent concept."""
    if len(state) == 0:
        raise ConfigError("disagreement on an empty population")
    return float(np.mean(clf.predict_many(state.values) != state.truth))


def observed_error(clf: TrainedClassifier, state: PopulationState) -> float:
    """Fraction of members where ``clf`` differs from the noisy label."""
    if len(state) == 0:
        raise ConfigError("error on an empty population")
    return float(np.mean(clf.predict_many(state.values) != state.noisy))


def with_noise(config: PopulationConfig, noise_rate: float) -> PopulationConfig:
    return replace(config, noise_rate=noise_rate)
