"""Deterministic random streams: xoshiro256++ seeded through splitmix64.

The generator is specified algorithmically so that a port in any language
reproduces the exact bit stream. Streams are addressed by a 64-bit seed plus
a text label; the label is hashed with FNV-1a and XORed into the seed before
the splitmix64 warm-up, so differently labelled streams derived from one seed
are independent. Draw one stream per purpose ("layer3/recurrent",
"input-signal", ...) instead of sharing a stream across consumers.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError

_MASK64 = 0xFFFFFFFFFFFFFFFF
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_INV_2_53 = 2.0 ** -53


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state by one step; returns (new_state, output)."""
    state = (state + _SPLITMIX_GAMMA) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def fnv1a64(text: str) -> int:
    """64-bit FNV-1a hash of the UTF-8 encoding of ``text``."""
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


class RngStream:
    """A single xoshiro256++ stream tied to an (origin_seed, label) pair.

    A stream is single-owner: callers that need independent randomness derive
    separate streams via :func:`derive_stream` rather than sharing one.
    """

    __slots__ = ("_s", "origin_seed", "label")

    def __init__(self, state: tuple[int, int, int, int], origin_seed: int, label: str):
        if not any(state):
            raise ConfigurationError("xoshiro256++ state must not be all zero")
        self._s = list(state)
        self.origin_seed = origin_seed
        self.label = label

    @property
    def state(self) -> tuple[int, int, int, int]:
        return tuple(self._s)

    def next_u64(self) -> int:
        """One xoshiro256++ step; returns the 64-bit output."""
        s0, s1, s2, s3 = self._s
        x = (s0 + s3) & _MASK64
        result = (((x << 23) | (x >> 41)) + s0) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & _MASK64
        self._s = [s0, s1, s2, s3]
        return result

    def uniform(self, low: float, high: float) -> float:
        """One draw from [low, high), advancing the state by exactly one step.

        The 64-bit output is mapped to [0, 1) as (x >> 11) * 2**-53, then
        affinely onto the requested interval.
        """
        if not (low < high) or not (np.isfinite(low) and np.isfinite(high)):
            raise ConfigurationError(f"uniform bounds must satisfy low < high, got [{low}, {high})")
        u = (self.next_u64() >> 11) * _INV_2_53
        return low + u * (high - low)

    def uniform_array(self, n: int, low: float, high: float) -> np.ndarray:
        """``n`` consecutive uniform draws as a float64 array."""
        if not (low < high) or not (np.isfinite(low) and np.isfinite(high)):
            raise ConfigurationError(f"uniform bounds must satisfy low < high, got [{low}, {high})")
        # Hot path for weight/input generation: inline the generator step.
        s0, s1, s2, s3 = self._s
        width = high - low
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            x = (s0 + s3) & _MASK64
            r = (((x << 23) | (x >> 41)) + s0) & _MASK64
            t = (s1 << 17) & _MASK64
            s2 ^= s0
            s3 ^= s1
            s1 ^= s2
            s0 ^= s3
            s2 ^= t
            s3 = ((s3 << 45) | (s3 >> 19)) & _MASK64
            out[i] = low + ((r >> 11) * _INV_2_53) * width
        self._s = [s0, s1, s2, s3]
        return out


def derive_stream(seed: int, label: str) -> RngStream:
    """Derive the stream identified by (seed, label).

    Seeds a splitmix64 chain with ``seed XOR fnv1a64(label)``; four successive
    outputs become the xoshiro256++ state. The astronomically unlikely all-zero
    state is repaired by sliding the window one extra splitmix64 step.
    """
    sm = (int(seed) ^ fnv1a64(label)) & _MASK64
    state = []
    for _ in range(4):
        sm, out = splitmix64(sm)
        state.append(out)
    while not any(state):
        sm, out = splitmix64(sm)
        state = state[1:] + [out]
    return RngStream(tuple(state), origin_seed=int(seed) & _MASK64, label=label)
