"""Short-term memory capacity benchmark.

An i.i.d. uniform signal drives the network; for every delay k a linear
readout is trained to reconstruct u(t-k) from the state of one layer, and the
quality of the reconstruction on held-out steps is the squared correlation

    MC_k = Cov^2(u(t-k), y_k(t)) / (Var(u(t-k)) Var(y_k(t)))

with both moments taken over the same test window (population convention,
divide by n; the n-vs-n-1 choice cancels in the ratio). The layer's memory
capacity is the ascending sum of MC_k for k = 1..k_max. Delay 0 is excluded
from the capacity and available only as a diagnostic through
:func:`delayed_target`.

The run is split into washout / training / test contiguous ranges. Targets
are never zero-padded: a delay that would reach before the start of the
sequence is a protocol error, which a washout of at least k_max steps rules
out by construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .errors import ConfigurationError, DataError, McBoundWarning, ProtocolError, ProtocolWarning
from .numerics import LeastSquaresSolver
from .reservoir import LayerTrajectory
from .rng import derive_stream
from .validation import as_matrix, as_vector, finite_float, positive_int

INPUT_SIGNAL_LABEL = "input-signal"

# Below this variance a series is treated as constant and recalls nothing.
VARIANCE_FLOOR = 1e-24

# Finite-sample slack over the theoretical capacity bound MC <= units.
MC_BOUND_SLACK = 2.0


@dataclass(frozen=True)
class McProtocol:
    """Split arithmetic and signal parameters of one memory-capacity run."""

    total_steps: int = 6000
    washout: int = 1000
    train_len: int = 4000
    test_len: int = 1000
    k_max: int = 200
    input_low: float = -0.8
    input_high: float = 0.8
    ridge: float = 0.0
    intercept: bool = False

    def validate(self) -> "McProtocol":
        positive_int(self.total_steps, "total_steps")
        positive_int(self.train_len, "train_len")
        positive_int(self.test_len, "test_len")
        positive_int(self.k_max, "k_max")
        if not isinstance(self.washout, (int, np.integer)) or isinstance(self.washout, bool) or self.washout < 0:
            raise ConfigurationError(f"washout must be a non-negative integer, got {self.washout!r}")
        if self.washout + self.train_len + self.test_len != self.total_steps:
            raise ConfigurationError(
                f"washout + train_len + test_len must equal total_steps: "
                f"{self.washout} + {self.train_len} + {self.test_len} != {self.total_steps}")
        if self.test_len < 2:
            raise ConfigurationError(f"test_len must be at least 2, got {self.test_len}")
        low = finite_float(self.input_low, "input_low")
        high = finite_float(self.input_high, "input_high")
        if not low < high:
            raise ConfigurationError(f"input_low must be below input_high, got [{low}, {high})")
        ridge = finite_float(self.ridge, "ridge")
        if ridge < 0.0:
            raise ConfigurationError(f"ridge must be >= 0, got {ridge}")
        if self.washout < self.k_max:
            warnings.warn(
                f"washout ({self.washout}) is shorter than k_max ({self.k_max}); "
                f"delays beyond the washout cannot be evaluated",
                ProtocolWarning, stacklevel=2)
        return self

    @property
    def train_range(self) -> tuple[int, int]:
        return self.washout, self.washout + self.train_len

    @property
    def test_range(self) -> tuple[int, int]:
        return self.washout + self.train_len, self.total_steps


@dataclass(frozen=True)
class McResult:
    """Forgetting curve of one layer: MC_k for k = 1..k_max plus their sum."""

    layer: int
    forgetting_curve: np.ndarray
    mc_total: float


def ascending_sum(values) -> float:
    """Left-to-right float accumulation; the fixed reduction order for curves."""
    total = 0.0
    for v in values:
        total += float(v)
    return total


def generate_input(protocol: McProtocol, seed: int, label: str = INPUT_SIGNAL_LABEL) -> np.ndarray:
    """The driving signal: total_steps i.i.d. draws from the input stream."""
    protocol.validate()
    stream = derive_stream(seed, label)
    return stream.uniform_array(protocol.total_steps, protocol.input_low, protocol.input_high)


def delayed_target(u: np.ndarray, k: int, time_range: tuple[int, int]) -> np.ndarray:
    """u(t - k) for t in [t0, t1); every needed past value must exist."""
    u = as_vector(u, "input signal")
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool) or k < 0:
        raise ConfigurationError(f"delay k must be a non-negative integer, got {k!r}")
    t0, t1 = int(time_range[0]), int(time_range[1])
    if not (0 <= t0 <= t1 <= u.shape[0]):
        raise DataError(f"time range [{t0}, {t1}) outside sequence of length {u.shape[0]}")
    if t0 < k:
        raise ProtocolError(
            f"delay k={k} reaches before the sequence start (range begins at t={t0}); "
            f"increase the washout to at least k_max")
    return u[t0 - k:t1 - k].copy()


def train_readout(states_train: np.ndarray, target_train: np.ndarray, ridge: float = 0.0) -> np.ndarray:
    """Weights of one linear readout unit fit by (regularized) pseudo-inversion."""
    states_train = as_matrix(states_train, "training states")
    target_train = as_vector(target_train, "training target")
    return LeastSquaresSolver(states_train, ridge).solve(target_train)


class LinearReadout(RegressorMixin, BaseEstimator):
    """Linear output module trained by a direct least-squares solve.

    With ridge = 0 this is the minimum-norm pseudo-inverse fit; larger ridge
    values trade training error for smaller weights. The optional intercept
    augments the design matrix with a constant column.
    """

    def __init__(self, ridge: float = 0.0, intercept: bool = False):
        self.ridge = ridge
        self.intercept = intercept

    def fit(self, X, y) -> "LinearReadout":
        X = as_matrix(X, "X")
        y = as_vector(y, "y")
        if y.shape[0] != X.shape[0]:
            raise DataError(f"X has {X.shape[0]} rows but y has length {y.shape[0]}")
        design = _design_matrix(X, self.intercept)
        coefs = LeastSquaresSolver(design, self.ridge).solve(y)
        if self.intercept:
            self.coef_, self.intercept_ = coefs[:-1], float(coefs[-1])
        else:
            self.coef_, self.intercept_ = coefs, 0.0
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X) -> np.ndarray:
        if not hasattr(self, "coef_"):
            raise NotFittedError("this LinearReadout instance is not fitted yet; call fit() first")
        X = as_matrix(X, "X")
        return X @ self.coef_ + self.intercept_


def _design_matrix(states: np.ndarray, intercept: bool) -> np.ndarray:
    if not intercept:
        return states
    return np.hstack([states, np.ones((states.shape[0], 1))])


def mc_k(y_pred: np.ndarray, target: np.ndarray) -> float:
    """Squared Pearson correlation over the evaluation window.

    Population moments throughout. A (near-)constant prediction or target
    recalls nothing and scores exactly 0; rounding can push the ratio a few
    ulps above 1, so the result is capped at 1.
    """
    y = as_vector(y_pred, "y_pred")
    t = as_vector(target, "target")
    if y.shape[0] != t.shape[0]:
        raise DataError(f"y_pred has length {y.shape[0]} but target has length {t.shape[0]}")
    n = y.shape[0]
    if n < 2:
        raise DataError(f"mc_k needs at least 2 samples, got {n}")
    yc = y - np.mean(y)
    tc = t - np.mean(t)
    var_y = float(yc @ yc) / n
    var_t = float(tc @ tc) / n
    if var_y < VARIANCE_FLOOR or var_t < VARIANCE_FLOOR:
        return 0.0
    cov = float(yc @ tc) / n
    return min((cov * cov) / (var_y * var_t), 1.0)


def check_mc_bound(mc_total: float, n_units: int) -> None:
    """Sanity check against the theoretical capacity bound for i.i.d. input."""
    if mc_total > n_units + MC_BOUND_SLACK:
        warnings.warn(
            f"measured memory capacity {mc_total:.3f} exceeds the state-size bound "
            f"{n_units} + {MC_BOUND_SLACK} slack; results are suspect",
            McBoundWarning, stacklevel=2)


def measure_layer(trajectory: LayerTrajectory, u: np.ndarray, protocol: McProtocol) -> McResult:
    """Forgetting curve and total memory capacity of one layer.

    For each delay k a readout is trained on the training rows and evaluated
    on the test rows; the per-delay solves share one factorization of the
    training-state matrix and are bit-identical to independent
    :func:`train_readout` calls.
    """
    protocol.validate()
    states = as_matrix(trajectory.states, "layer states")
    u = as_vector(u, "input signal")
    if states.shape[0] != protocol.total_steps:
        raise ConfigurationError(
            f"trajectory has {states.shape[0]} steps, protocol expects {protocol.total_steps}")
    if u.shape[0] != protocol.total_steps:
        raise ConfigurationError(
            f"input signal has {u.shape[0]} steps, protocol expects {protocol.total_steps}")

    train_range = protocol.train_range
    test_range = protocol.test_range
    design_train = _design_matrix(states[train_range[0]:train_range[1]], protocol.intercept)
    design_test = _design_matrix(states[test_range[0]:test_range[1]], protocol.intercept)
    solver = LeastSquaresSolver(design_train, protocol.ridge)

    curve = np.empty(protocol.k_max, dtype=np.float64)
    for k in range(1, protocol.k_max + 1):
        weights = solver.solve(delayed_target(u, k, train_range))
        y_pred = design_test @ weights
        curve[k - 1] = mc_k(y_pred, delayed_target(u, k, test_range))

    mc_total = ascending_sum(curve)
    check_mc_bound(mc_total, states.shape[1])
    return McResult(layer=trajectory.layer, forgetting_curve=curve, mc_total=mc_total)
