"""Deep stacked echo state network: initialization, rescaling, state updates.

The recurrent part is never trained. Each layer i holds a coupling matrix
W(i) (from the external input for layer 1, from the layer below otherwise)
and a recurrent matrix What(i). After drawing all entries uniformly from
[-1, 1), W(i) is rescaled to a target operator 2-norm and What(i) to a target
spectral radius. A time step updates the stack bottom-up: layer 1 sees the
current input, every higher layer sees the already-updated state of the layer
below it, and every layer sees its own previous state:

    x1(t) = tanh(W1 u(t)    + What1 x1(t-1))
    xi(t) = tanh(Wi xi-1(t) + Whati xi(t-1))     for i > 1

There are no bias terms and the nonlinearity is always tanh.

Weight draws come from per-matrix random streams labelled "layer{i}/input"
and "layer{i}/recurrent" (1-based, filled row-major, layers in ascending
order), so a (seed, label) pair pins every matrix irrespective of how many
layers the network has. These labels are part of the reproducibility
contract: an independent port that honours them reproduces the same network
bit for bit.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .errors import ConfigurationError, DataError, InitializationError
from .numerics import matvec, operator_norm_2, spectral_radius
from .rng import derive_stream
from .validation import as_matrix, finite_float, positive_int

# A raw draw whose norm or radius falls below this cannot be rescaled reliably.
DEGENERATE_SCALE = 1e-12


@dataclass(frozen=True)
class DeepEsnConfig:
    """Architecture and scaling hyper-parameters of a deep ESN."""

    n_layers: int = 10
    units_per_layer: int = 100
    input_dim: int = 1
    spectral_radius: float = 0.9
    coupling_norm: float = 1.0

    def validate(self) -> "DeepEsnConfig":
        positive_int(self.n_layers, "n_layers")
        positive_int(self.units_per_layer, "units_per_layer")
        positive_int(self.input_dim, "input_dim")
        if finite_float(self.spectral_radius, "spectral_radius") <= 0.0:
            raise ConfigurationError(f"spectral_radius must be > 0, got {self.spectral_radius!r}")
        if finite_float(self.coupling_norm, "coupling_norm") <= 0.0:
            raise ConfigurationError(f"coupling_norm must be > 0, got {self.coupling_norm!r}")
        return self


class NetworkState:
    """Per-layer state vectors at one time index."""

    __slots__ = ("layer_states", "t")

    def __init__(self, layer_states: tuple[np.ndarray, ...], t: int = 0):
        self.layer_states = tuple(layer_states)
        self.t = t

    def __repr__(self) -> str:  # pragma: no cover
        return f"NetworkState(n_layers={len(self.layer_states)}, t={self.t})"


@dataclass(frozen=True)
class LayerTrajectory:
    """States of one layer over a full run, one row per time step."""

    layer: int
    states: np.ndarray


def _rescale_layer(raw_w: np.ndarray, raw_what: np.ndarray, layer: int,
                   coupling_norm: float, rho: float) -> tuple[np.ndarray, np.ndarray]:
    """Rescale a layer's raw draws to the target 2-norm and spectral radius."""
    norm = operator_norm_2(raw_w)
    if norm < DEGENERATE_SCALE:
        raise InitializationError(
            f"layer {layer}: raw coupling matrix is degenerate (2-norm {norm:.3e} < {DEGENERATE_SCALE})")
    radius = spectral_radius(raw_what)
    if radius < DEGENERATE_SCALE:
        raise InitializationError(
            f"layer {layer}: raw recurrent matrix is degenerate (spectral radius {radius:.3e} < {DEGENERATE_SCALE})")
    return raw_w * (coupling_norm / norm), raw_what * (rho / radius)


class DeepEsn(TransformerMixin, BaseEstimator):
    """Stack of untrained recurrent tanh layers with fixed rescaled weights.

    Follows the scikit-learn estimator protocol: constructor arguments are
    stored verbatim, ``fit`` draws and rescales the weights (consuming no
    global RNG state, only the ``seed`` parameter), and ``transform`` maps an
    input sequence to the horizontal concatenation of all layer states.
    Finer-grained access for experiments goes through :meth:`run_sequence`,
    which returns one trajectory per layer, and :meth:`step`.

    Parameters
    ----------
    n_layers : int
        Number of stacked recurrent layers.
    units_per_layer : int
        Recurrent units in every layer.
    input_dim : int
        Dimensionality of the external input.
    spectral_radius : float
        Target spectral radius of every recurrent matrix.
    coupling_norm : float
        Target operator 2-norm of every input/inter-layer matrix.
    seed : int
        Origin seed for the weight streams.
    """

    def __init__(self, n_layers: int = 10, units_per_layer: int = 100, input_dim: int = 1,
                 spectral_radius: float = 0.9, coupling_norm: float = 1.0, seed: int = 0):
        self.n_layers = n_layers
        self.units_per_layer = units_per_layer
        self.input_dim = input_dim
        self.spectral_radius = spectral_radius
        self.coupling_norm = coupling_norm
        self.seed = seed

    @property
    def config(self) -> DeepEsnConfig:
        return DeepEsnConfig(
            n_layers=self.n_layers,
            units_per_layer=self.units_per_layer,
            input_dim=self.input_dim,
            spectral_radius=self.spectral_radius,
            coupling_norm=self.coupling_norm,
        )

    @classmethod
    def from_config(cls, config: DeepEsnConfig, seed: int) -> "DeepEsn":
        return cls(
            n_layers=config.n_layers,
            units_per_layer=config.units_per_layer,
            input_dim=config.input_dim,
            spectral_radius=config.spectral_radius,
            coupling_norm=config.coupling_norm,
            seed=seed,
        )

    @classmethod
    def from_weights(cls, layer_weights, input_dim: int | None = None) -> "DeepEsn":
        """Build a network from explicit (W, What) pairs, taken as-is.

        Injected weights are not rescaled; the scale parameters of the
        returned estimator are the measured norm/radius of the first layer.
        Intended for oracles and tests with prescribed weights.
        """
        if not layer_weights:
            raise ConfigurationError("from_weights requires at least one layer")
        pairs = []
        for i, (w, what) in enumerate(layer_weights, start=1):
            w = as_matrix(np.atleast_2d(np.asarray(w, dtype=np.float64)), f"layer {i} coupling matrix")
            what = as_matrix(np.atleast_2d(np.asarray(what, dtype=np.float64)), f"layer {i} recurrent matrix")
            if what.shape[0] != what.shape[1]:
                raise ConfigurationError(f"layer {i}: recurrent matrix must be square, got {what.shape}")
            if w.shape[0] != what.shape[0]:
                raise ConfigurationError(
                    f"layer {i}: coupling matrix has {w.shape[0]} rows, recurrent matrix {what.shape[0]}")
            pairs.append((w, what))
        units = pairs[0][1].shape[0]
        in_dim = pairs[0][0].shape[1] if input_dim is None else input_dim
        if pairs[0][0].shape[1] != in_dim:
            raise ConfigurationError(
                f"layer 1 coupling matrix has {pairs[0][0].shape[1]} columns, input_dim is {in_dim}")
        for i, (w, what) in enumerate(pairs[1:], start=2):
            if what.shape[0] != units or w.shape[1] != units:
                raise ConfigurationError(f"layer {i}: expected {units}x{units} matrices, got {w.shape}/{what.shape}")
        esn = cls(
            n_layers=len(pairs),
            units_per_layer=units,
            input_dim=in_dim,
            spectral_radius=spectral_radius(pairs[0][1]),
            coupling_norm=operator_norm_2(pairs[0][0]),
            seed=0,
        )
        esn.layers_ = pairs
        esn.n_features_in_ = in_dim
        return esn

    def fit(self, X=None, y=None) -> "DeepEsn":
        """Draw and rescale all weights; returns self.

        ``X`` is only consulted for its feature count, which must agree with
        ``input_dim`` when given.
        """
        cfg = self.config.validate()
        if X is not None:
            arr = np.asarray(X, dtype=np.float64)
            width = 1 if arr.ndim == 1 else arr.shape[1]
            if width != cfg.input_dim:
                raise ConfigurationError(f"X has {width} feature(s), input_dim is {cfg.input_dim}")
        seed = int(self.seed)
        layers = []
        for i in range(1, cfg.n_layers + 1):
            in_dim = cfg.input_dim if i == 1 else cfg.units_per_layer
            raw_w = (derive_stream(seed, f"layer{i}/input")
                     .uniform_array(cfg.units_per_layer * in_dim, -1.0, 1.0)
                     .reshape(cfg.units_per_layer, in_dim))
            raw_what = (derive_stream(seed, f"layer{i}/recurrent")
                        .uniform_array(cfg.units_per_layer * cfg.units_per_layer, -1.0, 1.0)
                        .reshape(cfg.units_per_layer, cfg.units_per_layer))
            layers.append(_rescale_layer(raw_w, raw_what, i, cfg.coupling_norm, cfg.spectral_radius))
        self.layers_ = layers
        self.n_features_in_ = cfg.input_dim
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "layers_"):
            raise NotFittedError("this DeepEsn instance is not fitted yet; call fit() first")

    def initial_state(self) -> NetworkState:
        """The all-zero state at t = 0, the fixed starting point of every run."""
        self._check_fitted()
        units = self.layers_[0][1].shape[0]
        return NetworkState(tuple(np.zeros(units) for _ in self.layers_), t=0)

    def step(self, state: NetworkState, u: np.ndarray) -> NetworkState:
        """Advance the whole stack by one time step."""
        self._check_fitted()
        u = np.ascontiguousarray(u, dtype=np.float64)
        if u.ndim != 1 or u.shape[0] != self.layers_[0][0].shape[1]:
            raise ConfigurationError(
                f"input must be a vector of length {self.layers_[0][0].shape[1]}, got shape {u.shape}")
        if len(state.layer_states) != len(self.layers_):
            raise ConfigurationError(
                f"state has {len(state.layer_states)} layers, network has {len(self.layers_)}")
        drive = u
        new_states = []
        for (w, what), x_prev in zip(self.layers_, state.layer_states):
            if x_prev.shape[0] != what.shape[0]:
                raise ConfigurationError(
                    f"state vector has length {x_prev.shape[0]}, layer expects {what.shape[0]}")
            x_new = np.tanh(matvec(w, drive) + matvec(what, x_prev))
            new_states.append(x_new)
            drive = x_new
        return NetworkState(tuple(new_states), t=state.t + 1)

    def run_sequence(self, inputs: np.ndarray) -> list[LayerTrajectory]:
        """Drive the network from the zero state; one trajectory per layer.

        Identical to folding :meth:`step` over the input rows.
        """
        self._check_fitted()
        arr = np.ascontiguousarray(inputs, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise DataError(f"inputs must be (T,) or (T, input_dim), got ndim={arr.ndim}")
        if arr.shape[0] < 1:
            raise DataError("inputs must contain at least one time step")
        if arr.shape[1] != self.layers_[0][0].shape[1]:
            raise ConfigurationError(
                f"inputs have {arr.shape[1]} feature(s), network expects {self.layers_[0][0].shape[1]}")
        if not np.isfinite(arr).all():
            raise DataError("inputs contain NaN or Inf entries")
        t_total = arr.shape[0]
        units = self.layers_[0][1].shape[0]
        trajectories = [np.empty((t_total, units)) for _ in self.layers_]
        state = self.initial_state()
        for t in range(t_total):
            state = self.step(state, arr[t])
            for i, x in enumerate(state.layer_states):
                trajectories[i][t] = x
        return [LayerTrajectory(layer=i + 1, states=traj) for i, traj in enumerate(trajectories)]

    def transform(self, X) -> np.ndarray:
        """All layer states over the sequence, concatenated to (T, n_layers*units)."""
        return np.hstack([traj.states for traj in self.run_sequence(X)])

    def network_dump(self) -> dict:
        """Provenance record: config, seed, and per-layer weight checksums."""
        self._check_fitted()
        layers = []
        for i, (w, what) in enumerate(self.layers_, start=1):
            layers.append({
                "layer": i,
                "coupling_shape": list(w.shape),
                "coupling_sha256": hashlib.sha256(np.ascontiguousarray(w).tobytes()).hexdigest(),
                "recurrent_shape": list(what.shape),
                "recurrent_sha256": hashlib.sha256(np.ascontiguousarray(what).tobytes()).hexdigest(),
            })
        return {
            "format": "esnlab-network-dump",
            "schema_version": 1,
            "config": asdict(self.config),
            "seed": None if self.seed is None else int(self.seed),
            "layers": layers,
        }

    def dump_network(self, path) -> None:
        """Write :meth:`network_dump` as JSON (provenance only, not reloadable)."""
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.network_dump(), fh, indent=2)
            fh.write("\n")


def init_deep_esn(config: DeepEsnConfig, seed: int) -> DeepEsn:
    """Initialize a deep ESN from a config and a seed; returns a fitted estimator."""
    return DeepEsn.from_config(config, seed).fit()
