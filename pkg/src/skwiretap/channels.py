"""Stochastic models of the forward channel and the eavesdropper's feedback tap.

The quantum channel is represented only through its induced classical
statistics: coherent input x, homodyne x-quadrature measurement, rescaled by
1/sqrt(eta) so the legitimate receiver sees Y = X + N with N ~ Normal(0,
sigma2). General affine channels Y = a (X + N) with declared non-Gaussian
noise are supported on the same interface.

Randomness is counter-based and splittable: every sample is addressed by
(root_seed, trial, round, role) and is a pure function of that tuple, so
trials can run on any thread in any order and still reproduce bit-identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

from .infotheory import induced_sigma2

__all__ = [
    "NOISE_FAMILIES",
    "NoiseModel",
    "AffineChannel",
    "ThermalWiretapParams",
    "EveTap",
    "ROLE_FORWARD",
    "ROLE_TAP",
    "ROLE_MESSAGE",
    "RngLane",
    "TrialLanes",
    "as_affine",
    "sample_noise",
    "noise_from_uniforms",
    "forward_transmit",
    "eve_tap_transmit",
    "noise_model_from_config",
    "noise_model_to_config",
]

NOISE_FAMILIES = ("gaussian", "uniform", "two-point", "shifted-exponential")


@dataclass(frozen=True)
class NoiseModel:
    """Additive i.i.d. noise with declared family, variance, and mean.

    The mean is known to all parties and subtracted by the protocol; the
    variance is what every second-moment formula consumes.
    """

    family: str
    variance: float
    mean: float = 0.0

    def __post_init__(self) -> None:
        if self.family not in NOISE_FAMILIES:
            raise ValueError(f"family={self.family!r} must be one of {NOISE_FAMILIES}")
        if not (math.isfinite(self.variance) and self.variance > 0):
            raise ValueError(f"variance={self.variance!r} must be finite and > 0")
        if not math.isfinite(self.mean):
            raise ValueError(f"mean={self.mean!r} must be finite")


@dataclass(frozen=True)
class AffineChannel:
    """Y = gain * (X + N). The degenerate gain = 0 channel is rejected."""

    gain: float
    noise: NoiseModel

    def __post_init__(self) -> None:
        if self.gain == 0 or not math.isfinite(self.gain):
            raise ValueError(f"gain={self.gain!r} must be finite and nonzero")


@dataclass(frozen=True)
class ThermalWiretapParams:
    """Thermal lossy beamsplitter channel: transmissivity, thermal number, input photons."""

    eta: float
    n_th: float
    n_s: float

    def __post_init__(self) -> None:
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta={self.eta!r} must be in (0, 1]")
        if self.n_th < 0:
            raise ValueError(f"n_th={self.n_th!r} must be >= 0")
        if self.n_s <= 0:
            raise ValueError(f"n_s={self.n_s!r} must be > 0")

    @property
    def sigma2(self) -> float:
        return induced_sigma2(self.eta, self.n_th)


@dataclass(frozen=True)
class EveTap:
    """AWGN tap on the round-0 feedback: W = Y + S, S ~ Normal(0, variance)."""

    variance: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.variance) and self.variance > 0):
            raise ValueError(
                f"tap variance={self.variance!r} must be finite and > 0 "
                "(a noiseless tap has infinite capacity)"
            )


def as_affine(params: ThermalWiretapParams) -> AffineChannel:
    """Induced classical channel: unit gain, zero-mean Gaussian noise of variance sigma2.

    This is the receiver's homodyne outcome after dividing by sqrt(eta), the
    units in which all protocol formulas are stated.
    """
    return AffineChannel(gain=1.0, noise=NoiseModel("gaussian", params.sigma2, 0.0))


# ---------------------------------------------------------------------------
# Counter-based randomness
# ---------------------------------------------------------------------------

ROLE_FORWARD = 0
ROLE_TAP = 1
ROLE_MESSAGE = 2

_ROLE_SHIFT = 56  # trial indices occupy the low 56 bits of the second key word
_TRIAL_LIMIT = 1 << _ROLE_SHIFT
_U53_SCALE = 2.0 ** -53


def _lane_key(root_seed: int, trial: int, role: int) -> list:
    if not 0 <= root_seed < 1 << 64:
        raise ValueError(f"root_seed={root_seed!r} must be a 64-bit unsigned integer")
    if not 0 <= trial < _TRIAL_LIMIT:
        raise ValueError(f"trial={trial!r} must be in [0, 2^56)")
    if not 0 <= role < 256:
        raise ValueError(f"role={role!r} must be in [0, 256)")
    return [root_seed, (role << _ROLE_SHIFT) | trial]


def _raw_to_uniform(raw: np.ndarray) -> np.ndarray:
    # Centered 53-bit mapping: strictly inside (0, 1), never exactly 1/2.
    return ((raw >> np.uint64(11)) + 0.5) * _U53_SCALE


class RngLane:
    """One independent stream addressed by (root_seed, trial, role).

    Sample position within the lane is the protocol round index. Lanes with
    distinct keys are independent Philox counter streams; re-creating a lane
    and re-reading a position always yields the same value.
    """

    __slots__ = ("root_seed", "trial", "role", "_key")

    def __init__(self, root_seed: int, trial: int, role: int) -> None:
        self._key = _lane_key(root_seed, trial, role)
        self.root_seed = root_seed
        self.trial = trial
        self.role = role

    def uniforms(self, count: int) -> np.ndarray:
        """Uniform(0,1) draws at positions 0..count-1."""
        raw = Philox(key=self._key).random_raw(count)
        return _raw_to_uniform(raw)

    def uniform(self, position: int) -> float:
        """The single draw at the given position."""
        return float(self.uniforms(position + 1)[position])


@dataclass(frozen=True)
class TrialLanes:
    """The per-trial lane bundle a protocol execution consumes."""

    root_seed: int
    trial: int

    @property
    def forward(self) -> RngLane:
        return RngLane(self.root_seed, self.trial, ROLE_FORWARD)

    @property
    def tap(self) -> RngLane:
        return RngLane(self.root_seed, self.trial, ROLE_TAP)

    @property
    def message(self) -> RngLane:
        return RngLane(self.root_seed, self.trial, ROLE_MESSAGE)


class _LanePool:
    """Reusable Philox instance for tight per-trial loops.

    Resetting the state dict of one bit generator is ~4x faster than fresh
    construction and produces bit-identical output (asserted in the tests).
    """

    def __init__(self) -> None:
        self._bg = Philox(key=[0, 0])
        self._key = np.zeros(2, dtype=np.uint64)
        self._template = {
            "bit_generator": "Philox",
            "state": {"counter": np.zeros(4, dtype=np.uint64), "key": self._key},
            "buffer": np.zeros(4, dtype=np.uint64),
            "buffer_pos": 4,
            "has_uint32": 0,
            "uinteger": 0,
        }

    def uniforms(self, root_seed: int, trial: int, role: int, count: int) -> np.ndarray:
        k0, k1 = _lane_key(root_seed, trial, role)
        self._key[0] = k0
        self._key[1] = k1
        self._bg.state = self._template
        return _raw_to_uniform(self._bg.random_raw(count))


def noise_from_uniforms(nm: NoiseModel, u: np.ndarray) -> np.ndarray:
    """Map uniform draws to noise draws with the declared mean and variance.

    One uniform consumed per sample for every family, which keeps lane
    positions aligned with round indices:

    - gaussian: inverse normal CDF, scaled;
    - uniform: support of half-width sqrt(3 variance) around the mean;
    - two-point: +/- sqrt(variance) around the mean, equiprobable;
    - shifted-exponential: exponential minus one scale, so mean and variance
      match while the skewness (= 2) does not.
    """
    scale = math.sqrt(nm.variance)
    if nm.family == "gaussian":
        return nm.mean + scale * ndtri(u)
    if nm.family == "uniform":
        return nm.mean + math.sqrt(3.0 * nm.variance) * (2.0 * u - 1.0)
    if nm.family == "two-point":
        return nm.mean + scale * np.where(u < 0.5, -1.0, 1.0)
    # shifted-exponential
    return nm.mean + scale * (-np.log1p(-u) - 1.0)


def sample_noise(nm: NoiseModel, lane: RngLane, position: int = 0) -> float:
    """One noise draw from the lane at the given round position."""
    return float(noise_from_uniforms(nm, lane.uniforms(position + 1)[position : position + 1])[0])


def forward_transmit(ch: AffineChannel, x: float, lane: RngLane, position: int) -> float:
    """Send x through the affine channel; returns gain * (x + noise).

    The realized noise is recoverable by the caller as y/gain - x.
    """
    return ch.gain * (x + sample_noise(ch.noise, lane, position))


def eve_tap_transmit(tap: EveTap, y: float, lane: RngLane, position: int = 0) -> float:
    """Eavesdropper's copy of the round-0 feedback value: y plus Gaussian tap noise."""
    return y + math.sqrt(tap.variance) * float(ndtri(lane.uniforms(position + 1)[position]))


# ---------------------------------------------------------------------------
# Config (de)serialization
# ---------------------------------------------------------------------------


def noise_model_from_config(obj: Mapping) -> NoiseModel:
    """Parse {"family": ..., "variance": ..., "mean": ...}; unknown keys are rejected."""
    unknown = set(obj) - {"family", "variance", "mean"}
    if unknown:
        raise ValueError(f"unknown noise fields: {sorted(unknown)}")
    if "family" not in obj or "variance" not in obj:
        raise ValueError("noise model requires 'family' and 'variance'")
    return NoiseModel(
        family=obj["family"],
        variance=float(obj["variance"]),
        mean=float(obj.get("mean", 0.0)),
    )


def noise_model_to_config(nm: NoiseModel) -> dict:
    return {"family": nm.family, "variance": nm.variance, "mean": nm.mean}
