"""Experiment configuration files (INI style, ``key = value`` sections).

Recognised sections::

    [sign.<name>]      values = 1 2 3 4 5     sigma = 0.5     unit = free text
    [population]       size0, birth_death_scale, max_step, noise_rate, seed
    [concept]          kind = kernel|threshold, scale, centers,
                       balance = 0.3 0.7, weights = 1 0 1, threshold
    [training]         kernel = gaussian:scale=0.25, reg, epochs, budget,
                       sample = yes|no
    [pac-validate]     epsilons = 0.2, deltas = 0.2, repetitions = 50
    [drift-compare]    oracle_size, gaps = 0 5 10 20, burn_in
    [error-claim]      runs = 20, oracle_size = 90

Sign sections keep file order. Every key has a default, so an empty file
describes the built-in three-sign example space (5 x 5 x 6 = 150 tuples).
"""
from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .domain import SignDef, SignSchema
from .errors import ConfigError
from .kernels import DEFAULT_EPOCHS, DEFAULT_REG, KernelSpec
from .drift import DEFAULT_BUDGET
from .population import ConceptSpec, PopulationConfig


def default_schema(sigma: float = 0.5) -> SignSchema:
    return SignSchema((
        SignDef("sign_a", tuple(range(1, 6)), sigma, "ordinal grade 1-5"),
        SignDef("sign_b", tuple(range(1, 6)), sigma, "ordinal grade 1-5"),
        SignDef("sign_c", tuple(range(1, 7)), sigma, "ordinal grade 1-6"),
    ))


@dataclass(frozen=True)
class TrainingConfig:
    kernel: KernelSpec = field(default_factory=KernelSpec.gaussian)
    reg: float = DEFAULT_REG
    epochs: int = DEFAULT_EPOCHS
    budget: int = DEFAULT_BUDGET
    sample: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    population: PopulationConfig
    training: TrainingConfig
    sections: dict            # raw experiment sections, str -> dict
    digest: str               # sha256 of the canonical config text

    def section(self, name: str) -> dict:
        return self.sections.get(name, {})


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(",", " ").split())


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from exc
    try:
        signs = [SignDef(sec.split(".", 1)[1], _floats(cp[sec]["values"]),
                         cp[sec].getfloat("sigma", 0.0), cp[sec].get("unit", ""))
                 for sec in cp.sections() if sec.startswith("sign.")]
        schema = SignSchema(tuple(signs)) if signs else default_schema()

        c = cp["concept"] if cp.has_section("concept") else {}
        concept = ConceptSpec(
            kind=c.get("kind", "kernel"),
            scale=float(c.get("scale", 0.5)),
            centers=int(c.get("centers", 4)),
            balance=tuple(_floats(c.get("balance", "0.3 0.7"))),
            weights=_floats(c.get("weights", "")),
            threshold=float(c.get("threshold", 0.0)),
        )
        p = cp["population"] if cp.has_section("population") else {}
        population = PopulationConfig(
            schema=schema,
            size0=int(p.get("size0", 2000)),
            birth_death_scale=int(p.get("birth_death_scale", 5)),
            max_step=int(p.get("max_step", 1)),
            noise_rate=float(p.get("noise_rate", 0.05)),
            concept=concept,
            seed=int(p.get("seed", 0)),
        )
        t = cp["training"] if cp.has_section("training") else {}
        training = TrainingConfig(
            kernel=KernelSpec.parse(t.get("kernel", "gaussian")),
            reg=float(t.get("reg", DEFAULT_REG)),
            epochs=int(t.get("epochs", DEFAULT_EPOCHS)),
            budget=int(t.get("budget", DEFAULT_BUDGET)),
            sample=str(t.get("sample", "yes")).lower() in ("1", "yes", "true", "on"),
        )
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad config value: {exc}") from exc
    sections = {s: dict(cp[s]) for s in cp.sections()}
    return ExperimentConfig(population, training, sections,
                            hashlib.sha256(text.encode()).hexdigest())


def load_config(path=None) -> ExperimentConfig:
    if path is None:
        return parse_config("")
    try:
        return parse_config(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
