"""Gaussian radial basis function network for one-step forecasting.

The hidden layer is fixed after construction: centers come from k-means
over the training windows, widths from nearest-neighbor distances among
the centers.  Only the linear output layer (weights and bias) is
trained, by mini-batch RMSprop on mean squared error.  That keeps the
training problem convex, so the learned layer can be audited against
the closed-form least-squares optimum.

An optional growth mode starts small and inserts hidden units at the
worst-predicted training window until a target MSE or a unit budget is
reached.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, FitError
from .numerics import RmspropState, rmsprop_step

MODEL_SCHEMA_VERSION = 1

_KMEANS_MAX_ITER = 100
_KMEANS_REL_TOL = 1e-6
_MIN_WIDTH = 1e-6
_GROW_START_UNITS = 4


@dataclass(frozen=True)
class RbfNetwork:
    centers: np.ndarray      # (M, d)
    widths: np.ndarray       # (M,)
    out_weights: np.ndarray  # (M,)
    bias: float

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=np.float64)
        widths = np.asarray(self.widths, dtype=np.float64)
        weights = np.asarray(self.out_weights, dtype=np.float64)
        if centers.ndim != 2 or centers.shape[0] < 1:
            raise DataError("centers must be a non-empty (M, d) array")
        m = centers.shape[0]
        if widths.shape != (m,) or weights.shape != (m,):
            raise DataError("widths and out_weights must have one entry per center")
        if not np.all(np.isfinite(centers)):
            raise DataError("centers must be finite")
        if not (np.all(np.isfinite(widths)) and np.all(widths > 0)):
            raise DataError("widths must be finite and strictly positive")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "widths", widths)
        object.__setattr__(self, "out_weights", weights)

    @property
    def n_units(self) -> int:
        return int(self.centers.shape[0])

    @property
    def window_d(self) -> int:
        return int(self.centers.shape[1])


@dataclass(frozen=True)
class RbfTrainConfig:
    """Knobs for output-layer training and (optionally) growth.

    target_mse and max_units only matter to grow_until_target.  use_bias
    exists because the bias is redundant in principle (a wide unit can
    absorb it) but cheap and stabilizing in practice, so it defaults on.
    """

    units: int = 24
    batch_size: int = 32
    epochs: int = 100
    learning_rate: float = 0.01
    seed: int = 0
    target_mse: float | None = None
    max_units: int | None = None
    decay_rho: float = 0.9
    epsilon: float = 1e-8
    use_bias: bool = True

    def __post_init__(self):
        if self.units < 1:
            raise ConfigError(f"units must be >= 1, got {self.units}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.target_mse is not None and self.target_mse <= 0:
            raise ConfigError(f"target_mse must be positive, got {self.target_mse}")
        if self.max_units is not None and self.max_units < 1:
            raise ConfigError(f"max_units must be >= 1, got {self.max_units}")


@dataclass(frozen=True)
class TrainTrace:
    """Full-dataset MSE after each epoch, plus how training ended."""

    epoch_mse: np.ndarray
    epochs_run: int
    final_units: int
    stop_reason: str  # "epochs", "target_mse" or "max_units"

    @property
    def best_mse(self) -> float:
        return float(np.min(self.epoch_mse))


def _check_training_data(inputs: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    inputs = np.asarray(inputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[0] < 1:
        raise DataError("inputs must be a non-empty (N, d) array")
    if targets.shape != (inputs.shape[0],):
        raise DataError("targets must be 1-D with one entry per input row")
    if not (np.all(np.isfinite(inputs)) and np.all(np.isfinite(targets))):
        raise DataError("training data must be finite")
    return inputs, targets


def init_centers(inputs: np.ndarray, m: int, seed: int = 0) -> np.ndarray:
    """k-means centers over the input rows, k-means++ seeded, Lloyd refined.

    Deterministic per seed.  Runs at most 100 Lloyd iterations, stopping
    early once the relative center movement drops below 1e-6.
    """
    inputs, _ = _check_training_data(inputs, np.zeros(np.asarray(inputs).shape[0]))
    n = inputs.shape[0]
    if not (1 <= m <= n):
        raise ConfigError(f"need 1 <= m <= {n} centers, got {m}")
    rng = np.random.default_rng([seed, 0xC3])

    centers = np.empty((m, inputs.shape[1]))
    centers[0] = inputs[rng.integers(n)]
    sq = np.sum((inputs - centers[0]) ** 2, axis=1)
    for j in range(1, m):
        total = float(sq.sum())
        if total <= 0.0:
            # all remaining mass sits on already-chosen points
            centers[j] = inputs[rng.integers(n)]
        else:
            centers[j] = inputs[np.searchsorted(np.cumsum(sq / total), rng.random())]
        sq = np.minimum(sq, np.sum((inputs - centers[j]) ** 2, axis=1))

    for _ in range(_KMEANS_MAX_ITER):
        d2 = np.sum((inputs[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        assign = np.argmin(d2, axis=1)
        new_centers = centers.copy()
        taken: set[int] = set()
        for j in range(m):
            members = inputs[assign == j]
            if members.shape[0] > 0:
                new_centers[j] = members.mean(axis=0)
            else:
                # revive an empty cluster at the currently worst-fit point
                worst = np.argsort(d2[np.arange(n), assign])[::-1]
                pick = next(int(i) for i in worst if int(i) not in taken)
                taken.add(pick)
                new_centers[j] = inputs[pick]
        shift = float(np.linalg.norm(new_centers - centers))
        scale = float(np.linalg.norm(centers)) + 1e-12
        centers = new_centers
        if shift / scale < _KMEANS_REL_TOL:
            break
    return centers


def set_widths(centers: np.ndarray, neighbor_p: int = 2,
               scale_hint: float | None = None) -> np.ndarray:
    """Width per center: mean distance to its neighbor_p nearest peers.

    With a single center, or where duplicate centers make the mean
    distance zero, the width falls back to a positive stand-in: the
    scale_hint if the caller supplied one (train pipelines pass the
    spread of the inputs), else the median of the well-defined widths,
    floored at 1e-6.  Widths are never zero or NaN.
    """
    centers = np.asarray(centers, dtype=np.float64)
    if centers.ndim != 2 or centers.shape[0] < 1:
        raise DataError("centers must be a non-empty (M, d) array")
    if neighbor_p < 1:
        raise ConfigError(f"neighbor_p must be >= 1, got {neighbor_p}")
    m = centers.shape[0]
    if m == 1:
        widths = np.zeros(1)
    else:
        dist = np.sqrt(np.maximum(np.sum(
            (centers[:, None, :] - centers[None, :, :]) ** 2, axis=2), 0.0))
        np.fill_diagonal(dist, np.inf)
        p = min(neighbor_p, m - 1)
        nearest = np.sort(dist, axis=1)[:, :p]
        widths = nearest.mean(axis=1)
    positive = widths[widths > 0]
    if scale_hint is not None and scale_hint > 0:
        fallback = max(_MIN_WIDTH, float(scale_hint))
    elif positive.size:
        fallback = max(_MIN_WIDTH, float(np.median(positive)))
    else:
        fallback = _MIN_WIDTH
    widths = np.where(widths > 0, widths, fallback)
    return widths


def _activation_matrix(centers: np.ndarray, widths: np.ndarray,
                       inputs: np.ndarray) -> np.ndarray:
    sq = np.sum((inputs[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    return np.exp(-sq / (2.0 * widths[None, :] ** 2))


def hidden_activations(net: RbfNetwork, x: np.ndarray) -> np.ndarray:
    """Gaussian response of every hidden unit to one window; values in (0, 1]."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.window_d,):
        raise DataError(f"expected a window of {net.window_d} values, got shape {x.shape}")
    return _activation_matrix(net.centers, net.widths, x[None, :])[0]


def forward(net: RbfNetwork, x: np.ndarray) -> float:
    """Network output for one window: weighted hidden activations plus bias."""
    return float(hidden_activations(net, x) @ net.out_weights + net.bias)


def batch_forward(net: RbfNetwork, inputs: np.ndarray) -> np.ndarray:
    """forward() over the rows of an (N, d) array."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if inputs.shape[1] != net.window_d:
        raise DataError(f"expected windows of {net.window_d} values, got {inputs.shape[1]}")
    return _activation_matrix(net.centers, net.widths, inputs) @ net.out_weights + net.bias


def loss_gradient(net: RbfNetwork, inputs: np.ndarray,
                  targets: np.ndarray) -> tuple[float, np.ndarray]:
    """MSE and its gradient w.r.t. (out_weights, bias), analytically.

    The gradient layout matches the parameter vector used in training:
    M weight entries followed by the bias entry.
    """
    inputs, targets = _check_training_data(inputs, targets)
    phi = _activation_matrix(net.centers, net.widths, inputs)
    err = phi @ net.out_weights + net.bias - targets
    n = targets.size
    grad = np.concatenate([2.0 * phi.T @ err / n, [2.0 * float(err.mean())]])
    return float(np.mean(err**2)), grad


def train(inputs: np.ndarray, targets: np.ndarray, centers: np.ndarray,
          widths: np.ndarray, config: RbfTrainConfig) -> tuple[RbfNetwork, TrainTrace]:
    """Fit the output layer by mini-batch RMSprop, centers and widths frozen.

    Batches are drawn by reshuffling the rows each epoch with the
    config seed, so a (data, config) pair always trains the same way.
    After each epoch the MSE over the whole dataset is recorded; the
    returned network carries the parameters of the best epoch seen
    (earliest on ties), not necessarily the last.
    """
    inputs, targets = _check_training_data(inputs, targets)
    centers = np.asarray(centers, dtype=np.float64)
    widths = np.asarray(widths, dtype=np.float64)
    if centers.ndim != 2 or centers.shape[1] != inputs.shape[1]:
        raise DataError("centers must be (M, d) with d matching the inputs")
    m = centers.shape[0]
    n = inputs.shape[0]

    phi = _activation_matrix(centers, widths, inputs)
    n_params = m + 1 if config.use_bias else m
    params = np.zeros(n_params)
    state = RmspropState.zeros(n_params, config.decay_rho, config.epsilon)
    rng = np.random.default_rng([config.seed, 0xB7])

    best_params = params.copy()
    best_mse = np.inf
    history = np.empty(config.epochs)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            rows = order[start:start + config.batch_size]
            phi_b = phi[rows]
            w = params[:m]
            b = params[m] if config.use_bias else 0.0
            err = phi_b @ w + b - targets[rows]
            grad_w = 2.0 * phi_b.T @ err / rows.size
            if config.use_bias:
                grad = np.concatenate([grad_w, [2.0 * float(err.mean())]])
            else:
                grad = grad_w
            state, params = rmsprop_step(state, params, grad, config.learning_rate)
        w = params[:m]
        b = params[m] if config.use_bias else 0.0
        mse = float(np.mean((phi @ w + b - targets) ** 2))
        if not np.isfinite(mse):
            raise FitError(
                f"training loss became non-finite at epoch {epoch + 1}; "
                "lower the learning rate"
            )
        history[epoch] = mse
        if mse < best_mse:
            best_mse = mse
            best_params = params.copy()

    net = RbfNetwork(
        centers=centers, widths=widths,
        out_weights=best_params[:m],
        bias=float(best_params[m]) if config.use_bias else 0.0,
    )
    trace = TrainTrace(epoch_mse=history, epochs_run=config.epochs,
                       final_units=m, stop_reason="epochs")
    return net, trace


def _input_scale(inputs: np.ndarray) -> float:
    spread = float(inputs.max() - inputs.min())
    return spread if spread > 0 else 1.0


def fit_fixed(inputs: np.ndarray, targets: np.ndarray,
              config: RbfTrainConfig) -> tuple[RbfNetwork, TrainTrace]:
    """The standard pipeline: k-means centers, neighbor widths, train."""
    inputs, targets = _check_training_data(inputs, targets)
    m = min(config.units, inputs.shape[0])
    centers = init_centers(inputs, m, seed=config.seed)
    widths = set_widths(centers, scale_hint=_input_scale(inputs))
    return train(inputs, targets, centers, widths, config)


def grow_until_target(inputs: np.ndarray, targets: np.ndarray,
                      config: RbfTrainConfig) -> tuple[RbfNetwork, TrainTrace]:
    """Insert hidden units at the worst training window until good enough.

    Starts from min(4, N, max_units) k-means centers.  Each round
    recomputes widths, retrains the output layer from scratch, and
    checks the best epoch MSE against target_mse.  While above target
    and under max_units, a new center is placed on the training window
    with the largest absolute residual (lowest row index on ties).
    The trace concatenates every round's epoch history and names the
    stop condition that fired.
    """
    if config.target_mse is None:
        raise ConfigError("grow_until_target requires config.target_mse")
    if config.max_units is None:
        raise ConfigError("grow_until_target requires config.max_units")
    inputs, targets = _check_training_data(inputs, targets)
    n = inputs.shape[0]
    m = min(_GROW_START_UNITS, n, config.max_units)
    centers = init_centers(inputs, m, seed=config.seed)
    scale = _input_scale(inputs)

    history: list[np.ndarray] = []
    while True:
        widths = set_widths(centers, scale_hint=scale)
        net, trace = train(inputs, targets, centers, widths, config)
        history.append(trace.epoch_mse)
        if trace.best_mse <= config.target_mse:
            reason = "target_mse"
            break
        if centers.shape[0] >= min(config.max_units, n):
            reason = "max_units"
            break
        residuals = np.abs(batch_forward(net, inputs) - targets)
        centers = np.vstack([centers, inputs[int(np.argmax(residuals))]])

    epoch_mse = np.concatenate(history)
    return net, TrainTrace(epoch_mse=epoch_mse, epochs_run=int(epoch_mse.size),
                           final_units=net.n_units, stop_reason=reason)


def to_json(net: RbfNetwork) -> str:
    doc = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "d": net.window_d,
        "centers": [[float(v) for v in row] for row in net.centers],
        "widths": [float(v) for v in net.widths],
        "out_weights": [float(v) for v in net.out_weights],
        "bias": float(net.bias),
    }
    return json.dumps(doc, indent=2)


def from_json(text: str) -> RbfNetwork:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"model document is not valid JSON: {exc}") from exc
    if doc.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise DataError(f"unsupported model schema_version {doc.get('schema_version')!r}")
    for key in ("d", "centers", "widths", "out_weights", "bias"):
        if key not in doc:
            raise DataError(f"model document missing field {key!r}")
    centers = np.array(doc["centers"], dtype=np.float64)
    if centers.ndim != 2 or centers.shape[1] != int(doc["d"]):
        raise DataError("centers shape does not match the declared window size")
    return RbfNetwork(
        centers=centers,
        widths=np.array(doc["widths"], dtype=np.float64),
        out_weights=np.array(doc["out_weights"], dtype=np.float64),
        bias=float(doc["bias"]),
    )


def save(net: RbfNetwork, path: str | Path):
    Path(path).write_text(to_json(net))


def load(path: str | Path) -> RbfNetwork:
    return from_json(Path(path).read_text())
