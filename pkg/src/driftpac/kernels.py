"""Kernel functions, a kernel hinge-loss classifier and kernel ridge regression.

All kernels act on sign tuples normalised to [0, 1] per sign (see
:meth:`SignSchema.normalize`); trained models carry the normalisation so
they accept raw sign values.

The classifier is trained by stochastic subgradient descent on the
regularised hinge loss, expressed in dual coefficients (kernel Pegasos).
A constant 1 is added to the kernel during training, which provides a
(regularised) bias term equal to the sum of the coefficients.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .domain import Oracle, SignSchema
from .errors import ConfigError, DimensionError, FormatError, NumericError

FAMILIES = ("linear", "polynomial", "gaussian", "sigmoid")

DEFAULT_SCALE = 0.25
DEFAULT_REG = 0.01
DEFAULT_EPOCHS = 50


@dataclass(frozen=True)
class KernelSpec:
    family: str = "gaussian"
    degree: int | None = None
    offset: float | None = None
    scale: float | None = None

    def __post_init__(self):
        fam = self.family
        if fam not in FAMILIES:
            raise ConfigError(f"unknown kernel family {fam!r}")
        need = {"linear": (), "polynomial": ("degree", "offset"),
                "gaussian": ("scale",), "sigmoid": ("scale", "offset")}[fam]
        for name in ("degree", "offset", "scale"):
            present = getattr(self, name) is not None
            if present and name not in need:
                raise ConfigError(f"{fam} kernel takes no {name}")
            if not present and name in need:
                raise ConfigError(f"{fam} kernel requires {name}")
        if self.degree is not None and (int(self.degree) != self.degree
                                        or self.degree < 1):
            raise ConfigError("polynomial degree must be a positive integer")
        if fam == "gaussian" and not self.scale > 0:
            raise ConfigError("gaussian scale must be > 0")
        if fam == "sigmoid" and not self.scale > 0:
            raise ConfigError("sigmoid slope must be > 0")

    @classmethod
    def gaussian(cls, scale: float = DEFAULT_SCALE) -> "KernelSpec":
        return cls("gaussian", scale=scale)

    @classmethod
    def parse(cls, text: str) -> "KernelSpec":
        """Parse ``family[:key=value,...]``, e.g. ``polynomial:degree=2,offset=1``.

        A bare ``gaussian`` gets the default scale.
        """
        fam, _, rest = text.strip().partition(":")
        kw = {}
        for item in filter(None, (p.strip() for p in rest.split(","))):
            key, sep, val = item.partition("=")
            if not sep or key not in ("degree", "offset", "scale"):
                raise ConfigError(f"bad kernel parameter {item!r}")
            try:
                kw[key] = int(val) if key == "degree" else float(val)
            except ValueError as exc:
                raise ConfigError(f"bad kernel parameter {item!r}") from exc
        if fam == "gaussian":
            kw.setdefault("scale", DEFAULT_SCALE)
        return cls(fam, **kw)

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


def gram(spec: KernelSpec, X, Y=None) -> np.ndarray:
    """Kernel matrix between the rows of ``X`` and ``Y`` (default ``X``)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != Y.shape[1]:
        raise DimensionError(
            f"tuple lengths differ: {X.shape[1]} vs {Y.shape[1]}")
    if spec.family == "gaussian":
        sq = (np.sum(X * X, axis=1)[:, None] + np.sum(Y * Y, axis=1)[None, :]
              - 2.0 * X @ Y.T)
        np.maximum(sq, 0.0, out=sq)
        if Y is X:
            np.fill_diagonal(sq, 0.0)
        K = np.exp(-sq / (2.0 * spec.scale ** 2))
    else:
        dot = X @ Y.T
        with np.errstate(over="ignore", invalid="ignore"):
            if spec.family == "linear":
                K = dot
            elif spec.family == "polynomial":
                K = (dot + spec.offset) ** spec.degree
            else:
                K = np.tanh(spec.scale * dot + spec.offset)
    if not np.all(np.isfinite(K)):
        raise NumericError("kernel produced non-finite values")
    return K


def kernel_eval(spec: KernelSpec, x: Sequence[float],
                y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionError(f"tuple shapes differ: {x.shape} vs {y.shape}")
    if spec.family == "gaussian":
        d = x - y
        return math.exp(-float(d @ d) / (2.0 * spec.scale ** 2))
    dot = float(x @ y)
    if spec.family == "linear":
        return dot
    if spec.family == "polynomial":
        return (dot + spec.offset) ** spec.degree
    return math.tanh(spec.scale * dot + spec.offset)


@dataclass(frozen=True, eq=False)
class _KernelModel:
    kernel: KernelSpec
    support_points: np.ndarray   # normalised tuples, one row each
    coefficients: np.ndarray
    bias: float
    lows: np.ndarray             # raw -> normalised: (x - lows) / spans
    spans: np.ndarray

    @property
    def dimension(self) -> int:
        return len(self.lows)

    def _normalize(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.dimension:
            raise DimensionError(
                f"expected {self.dimension} sign values, got {X.shape[-1]}")
        return (np.atleast_2d(X) - self.lows) / self.spans

    def decision_function(self, X) -> np.ndarray:
        """Raw decision values for rows of raw sign tuples."""
        Xn = self._normalize(X)
        if len(self.coefficients) == 0:
            return np.full(len(Xn), float(self.bias))
        return gram(self.kernel, Xn, self.support_points) @ self.coefficients + self.bias


@dataclass(frozen=True, eq=False)
class TrainedClassifier(_KernelModel):
    training_seed: int = 0
    training_error: float = 0.0
    flags: tuple[str, ...] = field(default=())

    def predict_many(self, X) -> np.ndarray:
        """Boolean labels for rows of raw sign tuples; ties go to negative."""
        return self.decision_function(X) > 0

    def complement(self) -> "TrainedClassifier":
        return TrainedClassifier(self.kernel, self.support_points,
                                 -self.coefficients, -self.bias, self.lows,
                                 self.spans, self.training_seed,
                                 1.0 - self.training_error, self.flags)


@dataclass(frozen=True, eq=False)
class TrainedRegressor(_KernelModel):
    def predict(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise DimensionError("predict takes a single sign tuple")
        return float(self.decision_function(x)[0])


def predict(clf: TrainedClassifier, x: Sequence[float]) -> tuple[bool, float]:
    """Label and margin for one raw sign tuple."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionError("predict takes a single sign tuple")
    margin = float(clf.decision_function(x)[0])
    return margin > 0, margin


def _pegasos(K: np.ndarray, y: np.ndarray, reg: float, epochs: int,
             seed: int, shuffle: bool) -> np.ndarray:
    """Dual coefficients of the kernel Pegasos iterate after ``epochs`` passes.

    ``K`` must already include the constant bias column. The running vector
    ``f = sum_j alpha_j y_j K[j]`` makes each step O(1) unless the margin is
    violated.
    """
    n = len(y)
    ys = np.where(y, 1.0, -1.0)
    ys_list = ys.tolist()
    counts = np.zeros(n)
    f = np.zeros(n)
    rng = np.random.default_rng(seed)
    t = 0
    for _ in range(epochs):
        order = rng.permutation(n).tolist() if shuffle else range(n)
        for i in order:
            t += 1
            yi = ys_list[i]
            if yi * f[i] < reg * t:
                counts[i] += 1.0
                if yi > 0:
                    f += K[i]
                else:
                    f -= K[i]
    return counts * ys / (reg * t)


def train_from_gram(Xn: np.ndarray, y: np.ndarray, K: np.ndarray,
                    spec: KernelSpec, schema: SignSchema, reg: float,
                    epochs: int, seed: int,
                    shuffle: bool = True) -> TrainedClassifier:
    """Train on normalised tuples ``Xn`` whose kernel matrix is ``K``.

    Used directly when many related training sets share most of a Gram
    matrix; :func:`train_classifier` is the usual entry point.
    """
    if not reg > 0:
        raise ConfigError(f"regularisation must be > 0, got {reg}")
    if epochs < 1:
        raise ConfigError(f"epochs must be >= 1, got {epochs}")
    y = np.asarray(y, dtype=bool)
    lows, spans = schema.lows, schema.spans
    if y.all() or not y.any():
        label = bool(y[0])
        warnings.warn("single-class oracle: returning a constant classifier",
                      RuntimeWarning, stacklevel=3)
        return TrainedClassifier(spec, np.empty((0, Xn.shape[1])), np.empty(0),
                                 1.0 if label else -1.0, lows, spans,
                                 int(seed), 0.0, ("single-class",))
    if not np.all(np.isfinite(K)):
        raise NumericError("kernel produced non-finite values")
    coef = _pegasos(K + 1.0, y, reg, epochs, seed, shuffle)
    keep = coef != 0
    bias = float(coef.sum())
    pred = (K[:, keep] @ coef[keep] + bias) > 0
    return TrainedClassifier(spec, Xn[keep].copy(), coef[keep], bias, lows,
                             spans, int(seed), float(np.mean(pred != y)))


def train_classifier(oracle: Oracle, spec: KernelSpec | None = None,
                     reg: float = DEFAULT_REG, epochs: int = DEFAULT_EPOCHS,
                     seed: int = 0, shuffle: bool = True) -> TrainedClassifier:
    """Fit a kernel classifier to an oracle.

    Parameters
    ----------
    oracle : labelled sample; may be partially inconsistent.
    spec : kernel; defaults to gaussian with scale 0.25 (normalised units).
    reg : regularisation strength of the hinge-loss objective.
    epochs : passes over the oracle, so ``epochs * len(oracle)`` steps.
    seed : drives the per-epoch shuffle; identical inputs and seed give
        bit-identical coefficients.
    shuffle : with ``False`` records are visited in oracle order and the
        result depends on that order.

    A single-class oracle yields a constant classifier flagged
    ``"single-class"`` and a ``RuntimeWarning``.
    """
    spec = spec or KernelSpec.gaussian()
    Xn = oracle.schema.normalize(oracle.values)
    K = gram(spec, Xn)
    return train_from_gram(Xn, oracle.labels, K, spec, oracle.schema, reg,
                           epochs, seed, shuffle)


def train_regressor(samples: Sequence[tuple[Sequence[float], float]],
                    spec: KernelSpec | None = None, reg: float = DEFAULT_REG,
                    schema: SignSchema | None = None) -> TrainedRegressor:
    """Kernel ridge regression: solve ``(K + reg I) alpha = targets``.

    Inputs are normalised with ``schema`` when given, else used as is.
    """
    spec = spec or KernelSpec.gaussian()
    if len(samples) < 1:
        raise ConfigError("kernel regression needs at least one sample")
    X = np.array([s[0] for s in samples], dtype=float)
    t = np.array([s[1] for s in samples], dtype=float)
    if not np.all(np.isfinite(t)):
        raise NumericError("non-finite regression targets")
    if reg < 0:
        raise ConfigError("regularisation must be >= 0")
    if schema is not None:
        lows, spans = schema.lows, schema.spans
    else:
        lows, spans = np.zeros(X.shape[1]), np.ones(X.shape[1])
    Xn = (X - lows) / spans
    A = gram(spec, Xn) + reg * np.eye(len(X))
    if np.linalg.cond(A) > 1.0 / np.finfo(float).eps:
        raise NumericError("kernel ridge system is singular; increase reg")
    alpha = np.linalg.solve(A, t)
    return TrainedRegressor(spec, Xn, alpha, 0.0, lows, spans)


# ---------------------------------------------------------------------------
# Serialization: a JSON document. Floats are written with repr, which
# round-trips every double exactly.
# ---------------------------------------------------------------------------

def model_to_dict(model: _KernelModel) -> dict:
    doc = {
        "type": "classifier" if isinstance(model, TrainedClassifier) else "regressor",
        "kernel": model.kernel.to_dict(),
        "lows": model.lows.tolist(),
        "spans": model.spans.tolist(),
        "support_points": model.support_points.tolist(),
        "coefficients": model.coefficients.tolist(),
        "bias": float(model.bias),
    }
    if isinstance(model, TrainedClassifier):
        doc.update(training_seed=model.training_seed,
                   training_error=model.training_error,
                   flags=list(model.flags))
    return doc


def dumps_model(model: _KernelModel) -> str:
    return json.dumps(model_to_dict(model), indent=1)


def loads_model(text: str) -> _KernelModel:
    try:
        doc = json.loads(text)
        dim = len(doc["lows"])
        common = dict(
            kernel=KernelSpec(**doc["kernel"]),
            support_points=np.array(doc["support_points"], dtype=float).reshape(-1, dim),
            coefficients=np.array(doc["coefficients"], dtype=float),
            bias=float(doc["bias"]),
            lows=np.array(doc["lows"], dtype=float),
            spans=np.array(doc["spans"], dtype=float),
        )
        if doc["type"] == "classifier":
            return TrainedClassifier(**common,
                                     training_seed=int(doc["training_seed"]),
                                     training_error=float(doc["training_error"]),
                                     flags=tuple(doc.get("flags", ())))
        if doc["type"] == "regressor":
            return TrainedRegressor(**common)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed model document: {exc}") from exc
    raise FormatError(f"unknown model type {doc.get('type')!r}")
