"""Polynomial one-step forecaster over lag windows.

The model expands each window of d lagged values into every monomial of
total degree at most K, then fits the expansion weights by least squares
on the normal equations.  Fitting is closed form; there is no iterative
training loop.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from itertools import combinations_with_replacement
from pathlib import Path

import numpy as np

from .data import WindowedDataset
from .errors import ConfigError, DataError, FitError, SingularSystemError
from .numerics import gram, solve_spd

MODEL_SCHEMA_VERSION = 1
DEFAULT_BASIS_CAP = 100_000


@dataclass(frozen=True)
class MonomialBasis:
    """All exponent tuples over d variables with total degree <= K.

    Ordered by ascending total degree; within a degree, earlier lags get
    higher exponents first.  The constant term is always first, so the
    basis of (d=2, K=2) reads 1, y1, y2, y1^2, y1*y2, y2^2.
    """

    window_d: int
    degree_k: int
    exponents: tuple[tuple[int, ...], ...]

    @property
    def count(self) -> int:
        return len(self.exponents)


def basis_size(d: int, k: int) -> int:
    """Number of monomials over d variables with total degree <= k."""
    return math.comb(d + k, k)


def enumerate_monomials(d: int, k: int, cap: int = DEFAULT_BASIS_CAP) -> MonomialBasis:
    """Build the canonical monomial basis for window size d and max degree k."""
    if d < 1:
        raise ConfigError(f"window size d must be >= 1, got {d}")
    if k < 1:
        raise ConfigError(f"degree k must be >= 1, got {k}")
    total = basis_size(d, k)
    if total > cap:
        raise ConfigError(
            f"basis for d={d}, K={k} has {total} terms, over the cap of {cap}"
        )
    exps: list[tuple[int, ...]] = [(0,) * d]
    for degree in range(1, k + 1):
        for combo in combinations_with_replacement(range(d), degree):
            e = [0] * d
            for var in combo:
                e[var] += 1
            exps.append(tuple(e))
    assert len(exps) == total
    return MonomialBasis(window_d=d, degree_k=k, exponents=tuple(exps))


def _design_matrix(basis: MonomialBasis, inputs: np.ndarray) -> np.ndarray:
    """Evaluate every basis monomial on every input row."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if inputs.shape[1] != basis.window_d:
        raise DataError(
            f"inputs have {inputs.shape[1]} lags, basis expects {basis.window_d}"
        )
    n = inputs.shape[0]
    # Overflow surfaces as a FitError from the finiteness check in fit();
    # numpy's own warning would just duplicate it.
    with np.errstate(over="ignore", invalid="ignore"):
        # power tables: powers[j][p] = inputs[:, j] ** p
        powers = [
            [np.ones(n)] + [inputs[:, j] ** p for p in range(1, basis.degree_k + 1)]
            for j in range(basis.window_d)
        ]
        m = np.empty((n, basis.count))
        for col, exp in enumerate(basis.exponents):
            acc = np.ones(n)
            for j, p in enumerate(exp):
                if p:
                    acc = acc * powers[j][p]
            m[:, col] = acc
    return m


def expand(basis: MonomialBasis, x: np.ndarray) -> np.ndarray:
    """Monomial feature vector of a single window, in canonical basis order."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DataError("expand takes a single 1-D window")
    return _design_matrix(basis, x[None, :])[0]


@dataclass(frozen=True)
class PolynomialModel:
    basis: MonomialBasis
    weights: np.ndarray
    ridge_lambda: float = 0.0


def fit(data: WindowedDataset, degree_k: int, ridge_lambda: float = 0.0,
        cap: int = DEFAULT_BASIS_CAP) -> PolynomialModel:
    """Closed-form least-squares fit of the monomial expansion.

    Solves (M^T M + lambda I) w = M^T t by Cholesky.  When the design is
    rank deficient at lambda = 0 (constant or exactly collinear windows)
    the normal equations have no unique solution; we then fall back to
    the minimum-norm least-squares solution and warn, since every
    least-squares solution predicts identically on the training span.
    """
    basis = enumerate_monomials(data.window_d, degree_k, cap=cap)
    if len(data) < basis.count:
        warnings.warn(
            f"{len(data)} training rows for {basis.count} basis terms; "
            "fit is rank deficient, consider a lower degree or more data",
            stacklevel=2,
        )
    m = _design_matrix(basis, data.inputs)
    if not np.all(np.isfinite(m)):
        raise FitError(
            f"design matrix for degree {degree_k} overflowed; "
            "rescale the series or lower the degree"
        )
    try:
        w = solve_spd(gram(m), m.T @ data.targets, ridge_lambda)
    except SingularSystemError:
        if ridge_lambda > 0:
            raise FitError(
                f"normal equations singular for degree {degree_k} even with "
                f"ridge_lambda={ridge_lambda}; lower the degree"
            ) from None
        warnings.warn(
            f"normal equations singular for degree {degree_k}; "
            "using the minimum-norm least-squares solution (raise ridge_lambda to silence)",
            stacklevel=2,
        )
        w, *_ = np.linalg.lstsq(m, data.targets, rcond=None)
    if not np.all(np.isfinite(w)):
        raise FitError(f"fit for degree {degree_k} produced non-finite weights")
    return PolynomialModel(basis=basis, weights=w, ridge_lambda=float(ridge_lambda))


def predict(model: PolynomialModel, x: np.ndarray) -> float:
    """Forecast the value following one window of true lags."""
    return float(expand(model.basis, x) @ model.weights)


def rolling_forecast(model: PolynomialModel, test: WindowedDataset) -> np.ndarray:
    """One-step-ahead forecasts for every test row.

    Each row of true lagged values yields one prediction; forecasts are
    never fed back in, so errors cannot compound.
    """
    if test.window_d != model.basis.window_d:
        raise DataError(
            f"model expects windows of {model.basis.window_d}, got {test.window_d}"
        )
    return _design_matrix(model.basis, test.inputs) @ model.weights


def to_json(model: PolynomialModel) -> str:
    """Serialize with full float precision; round-trips bit exact."""
    doc = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "d": model.basis.window_d,
        "K": model.basis.degree_k,
        "lambda": model.ridge_lambda,
        "exponents": [list(e) for e in model.basis.exponents],
        "weights": [float(w) for w in model.weights],
    }
    return json.dumps(doc, indent=2)


def from_json(text: str) -> PolynomialModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"model document is not valid JSON: {exc}") from exc
    if doc.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise DataError(f"unsupported model schema_version {doc.get('schema_version')!r}")
    for key in ("d", "K", "lambda", "exponents", "weights"):
        if key not in doc:
            raise DataError(f"model document missing field {key!r}")
    basis = enumerate_monomials(int(doc["d"]), int(doc["K"]))
    stored = tuple(tuple(int(p) for p in e) for e in doc["exponents"])
    if stored != basis.exponents:
        raise DataError("model exponents do not match the canonical basis for (d, K)")
    weights = np.array([float(w) for w in doc["weights"]])
    if weights.size != basis.count:
        raise DataError(
            f"model has {weights.size} weights for a basis of {basis.count} terms"
        )
    return PolynomialModel(basis=basis, weights=weights, ridge_lambda=float(doc["lambda"]))


def save(model: PolynomialModel, path: str | Path):
    Path(path).write_text(to_json(model))


def load(path: str | Path) -> PolynomialModel:
    return from_json(Path(path).read_text())
