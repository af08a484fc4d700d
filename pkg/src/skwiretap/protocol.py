"""Schalkwijk-Kailath feedback encoder/decoder over an induced affine channel.

Round 0 carries the message as a codebook midpoint; every later round refines
the receiver's linear MMSE estimate of the round-0 noise using the noiseless
feedback of his measurements. The scalar gain/estimator/variance schedule is
precomputed per configuration; a full-covariance solve is kept alongside as an
independent cross-check of the recursive estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .channels import AffineChannel, EveTap, TrialLanes, eve_tap_transmit, forward_transmit

__all__ = [
    "ProtocolOrderError",
    "Codebook",
    "SkSchedule",
    "AliceState",
    "BobState",
    "Transcript",
    "make_codebook",
    "make_schedule",
    "alice_round",
    "alice_finish",
    "bob_round",
    "decode",
    "mmse_oracle",
    "run_protocol",
]

_MAX_CODEBOOK_BITS = 40


class ProtocolOrderError(RuntimeError):
    """A round method was called outside the strict round order."""


@dataclass(frozen=True)
class Codebook:
    """2^ceil(n R) equally spaced midpoints strictly inside [-sqrt(n_s), sqrt(n_s)]."""

    message_count: int
    amplitude_bound: float
    blocklength: int
    nominal_rate: float
    realized_rate: float

    @property
    def half_gap(self) -> float:
        """Half the spacing between adjacent midpoints; the decoding radius."""
        return self.amplitude_bound / self.message_count

    def midpoint(self, m: int) -> float:
        if not 1 <= m <= self.message_count:
            raise ValueError(f"message m={m} outside [1, {self.message_count}]")
        return self.amplitude_bound * (2 * m - 1 - self.message_count) / self.message_count

    def midpoints(self) -> np.ndarray:
        m = np.arange(1, self.message_count + 1)
        return self.amplitude_bound * (2 * m - 1 - self.message_count) / self.message_count

    def decode_value(self, theta) -> "int | np.ndarray":
        """Nearest midpoint index for a scalar or array of decoder statistics.

        Exact ties fall to the smaller index; values beyond the amplitude
        bound clamp to the boundary midpoints.
        """
        cells = np.ceil((theta + self.amplitude_bound) * self.message_count / (2.0 * self.amplitude_bound))
        clipped = np.clip(cells, 1, self.message_count)
        if np.ndim(theta) == 0:
            return int(clipped)
        return clipped.astype(np.int64)


def make_codebook(n: int, rate: float, n_s: float) -> Codebook:
    """Build the codebook for blocklength n and nominal rate (bits/round).

    The message count rounds the exponent up, M = 2^ceil(n rate), so realized
    rate >= nominal and intervals are never wider than the analysis assumes.
    """
    if n < 1:
        raise ValueError(f"n={n} must be >= 1")
    if rate <= 0:
        raise ValueError(f"rate={rate!r} must be > 0")
    if n_s <= 0:
        raise ValueError(f"n_s={n_s!r} must be > 0")
    exact = n * rate
    nearest = round(exact)
    # snap binary dust (e.g. 0.07 * 300 = 21.000000000000004) before the ceiling
    bits = nearest if abs(exact - nearest) <= 1e-9 * max(1.0, abs(exact)) else math.ceil(exact)
    bits = max(bits, 1)
    if bits > _MAX_CODEBOOK_BITS:
        raise ValueError(
            f"codebook would need 2^{bits} messages (n*rate too large; limit 2^{_MAX_CODEBOOK_BITS})"
        )
    m_count = 1 << bits
    return Codebook(
        message_count=m_count,
        amplitude_bound=math.sqrt(n_s),
        blocklength=n,
        nominal_rate=rate,
        realized_rate=bits / n,
    )


@dataclass(frozen=True)
class SkSchedule:
    """Per-round protocol constants.

    ``gamma[i]`` scales round i's transmission to mean power n_s, ``k_gain[i]``
    is the estimator update weight, ``v[i]`` the residual estimation variance
    after round i (v[0] = sigma2). Index 0 of gamma/k_gain is unused (nan).
    ``log2_v`` tracks v in log space so very deep schedules stay meaningful
    after v underflows.
    """

    blocklength: int
    n_s: float
    sigma2: float
    gain: float
    gamma: np.ndarray
    k_gain: np.ndarray
    v: np.ndarray
    log2_v: np.ndarray


def make_schedule(n: int, n_s: float, sigma2: float, gain: float = 1.0) -> SkSchedule:
    """Run the scalar MMSE recursion for n rounds.

    v[i] = v[i-1] * sigma2 / (n_s + sigma2), gamma[i] = sqrt(n_s / v[i-1]),
    k[i] = gamma[i] * v[i-1] / (n_s + sigma2). The channel gain never enters
    the recursion: received values are divided by it before estimation.
    """
    if n < 1:
        raise ValueError(f"n={n} must be >= 1")
    if n_s <= 0 or sigma2 <= 0:
        raise ValueError(f"n_s={n_s!r} and sigma2={sigma2!r} must be > 0")
    if gain == 0:
        raise ValueError("gain must be nonzero")
    shrink = sigma2 / (n_s + sigma2)
    log2_shrink = math.log2(shrink)
    gamma = np.full(n + 1, math.nan)
    k_gain = np.full(n + 1, math.nan)
    v = np.empty(n + 1)
    log2_v = np.empty(n + 1)
    v[0] = sigma2
    log2_v[0] = math.log2(sigma2)
    log2_n_s = math.log2(n_s)
    for i in range(1, n + 1):
        v_prev, l_prev = v[i - 1], log2_v[i - 1]
        if v_prev > 0 and log2_n_s - l_prev < 1000.0:
            gamma[i] = math.sqrt(n_s / v_prev)
            k_gain[i] = gamma[i] * v_prev / (n_s + sigma2)
        else:
            # n_s / v_prev no longer fits in a double: log-space recursion
            gamma[i] = 2.0 ** (0.5 * (log2_n_s - l_prev))
            k_gain[i] = 2.0 ** (0.5 * (log2_n_s + l_prev)) / (n_s + sigma2)
        v[i] = v_prev * shrink
        log2_v[i] = l_prev + log2_shrink
    for arr in (gamma, k_gain, v, log2_v):
        arr.setflags(write=False)
    return SkSchedule(
        blocklength=n, n_s=n_s, sigma2=sigma2, gain=gain,
        gamma=gamma, k_gain=k_gain, v=v, log2_v=log2_v,
    )


class AliceState:
    """Sender side: knows the round-0 noise exactly and mirrors the receiver's estimate."""

    __slots__ = ("schedule", "first_round_noise", "nhat", "i", "noise_mean")

    def __init__(self, schedule: SkSchedule, first_round_noise: float, noise_mean: float = 0.0) -> None:
        self.schedule = schedule
        self.first_round_noise = first_round_noise
        # E[N0 | nothing] is the declared noise mean
        self.nhat = noise_mean
        self.noise_mean = noise_mean
        self.i = 1


class BobState:
    """Receiver side: accumulates the linear MMSE estimate round by round."""

    __slots__ = ("schedule", "first_round_observation", "nhat", "i", "noise_mean")

    def __init__(self, schedule: SkSchedule, first_round_observation: float, noise_mean: float = 0.0) -> None:
        self.schedule = schedule
        # stored in reduced units (already divided by the channel gain)
        self.first_round_observation = first_round_observation
        self.nhat = noise_mean
        self.noise_mean = noise_mean
        self.i = 1

    @property
    def theta(self) -> float:
        """Decoder statistic after all rounds: round-0 observation minus the estimate."""
        if self.i != self.schedule.blocklength + 1:
            raise ProtocolOrderError(
                f"theta requested after round {self.i - 1} of {self.schedule.blocklength}"
            )
        return float(self.first_round_observation - self.nhat)


def _absorb(nhat: float, k: float, y_raw: float, gain: float, mean: float) -> float:
    # shared estimator update so both parties stay bit-identical
    return nhat + k * (y_raw / gain - mean)


def alice_round(state: AliceState, y_prev: float) -> float:
    """Absorb the previous feedback and emit round i's transmission.

    At i = 1 the feedback is the round-0 observation, which carries no
    estimator update (the prior estimate is the declared noise mean); it is
    the value the sender already used to compute the round-0 noise.
    """
    sched = state.schedule
    if state.i > sched.blocklength:
        raise ProtocolOrderError(f"alice_round called past round n={sched.blocklength}")
    i = state.i
    if i > 1:
        state.nhat = _absorb(state.nhat, sched.k_gain[i - 1], y_prev, sched.gain, state.noise_mean)
    x = sched.gamma[i] * (state.first_round_noise - state.nhat)
    state.i = i + 1
    return x


def alice_finish(state: AliceState, y_last: float) -> None:
    """Absorb the final-round feedback so the sender's estimate matches the receiver's."""
    sched = state.schedule
    if state.i != sched.blocklength + 1:
        raise ProtocolOrderError("alice_finish called before all rounds were transmitted")
    state.nhat = _absorb(state.nhat, sched.k_gain[sched.blocklength], y_last, sched.gain, state.noise_mean)
    state.i += 1


def bob_round(state: BobState, y: float) -> None:
    """Fold the round-i measurement into the receiver's estimate."""
    sched = state.schedule
    if state.i > sched.blocklength:
        raise ProtocolOrderError(f"bob_round called past round n={sched.blocklength}")
    state.nhat = _absorb(state.nhat, sched.k_gain[state.i], y, sched.gain, state.noise_mean)
    state.i += 1


def decode(bob: BobState, codebook: Codebook) -> int:
    """Nearest-midpoint decision on the decoder statistic; requires all rounds consumed."""
    return int(codebook.decode_value(bob.theta))


def mmse_oracle(
    observations: Sequence[float],
    schedule: SkSchedule,
    noise_mean: float = 0.0,
) -> float:
    """Estimate the round-0 noise from raw observations by a full covariance solve.

    Expands each observation linearly in (N0, N1, .., Nk) under the schedule,
    builds the k x k observation covariance and the cross-covariance with N0
    explicitly, and solves the dense linear system. No recursion is used, so
    this is an independent oracle for the recursive estimator.
    """
    k = len(observations)
    if k > schedule.blocklength:
        raise ValueError(f"{k} observations exceed blocklength {schedule.blocklength}")
    if k == 0:
        return noise_mean
    sigma2 = schedule.sigma2
    # rows: centered observations; columns: basis (N0', N1', .., Nk')
    coeffs = np.zeros((k, k + 1))
    basis_n0 = np.zeros(k + 1)
    basis_n0[0] = 1.0
    est = np.zeros(k + 1)  # running expansion of the centered estimate
    for i in range(1, k + 1):
        coeffs[i - 1] = schedule.gamma[i] * (basis_n0 - est)
        coeffs[i - 1, i] += 1.0
        est = est + schedule.k_gain[i] * coeffs[i - 1]
    cov = sigma2 * (coeffs @ coeffs.T)
    cross = sigma2 * coeffs[:, 0]
    weights = np.linalg.solve(cov, cross)
    centered = np.asarray(observations, dtype=float) / schedule.gain - noise_mean
    return noise_mean + float(weights @ centered)


@dataclass(frozen=True)
class Transcript:
    """Complete audit record of one protocol execution.

    ``x``, ``noise``, ``y`` cover rounds 0..n; ``y`` holds raw channel outputs
    (before dividing by the gain) and ``theta_n`` the reduced-unit decoder
    statistic.
    """

    m: int
    m_hat: int
    theta_m: float
    theta_n: float
    w0: float
    x: np.ndarray
    noise: np.ndarray
    y: np.ndarray


def run_protocol(
    m: int,
    codebook: Codebook,
    schedule: SkSchedule,
    channel: AffineChannel,
    tap: Optional[EveTap],
    lanes: TrialLanes,
) -> Transcript:
    """Execute one complete trial: message round, n refinement rounds, decode.

    The eavesdropper's tap acts on the round-0 feedback value only; its output
    is recorded in the transcript and never decoded (privacy is accounted
    analytically). The protocol spends n + 1 channel uses in total.
    """
    n = schedule.blocklength
    if not 1 <= m <= codebook.message_count:
        raise ValueError(f"message m={m} outside [1, {codebook.message_count}]")
    gain = channel.gain
    mean = channel.noise.mean
    forward = lanes.forward

    x = np.empty(n + 1)
    noise = np.empty(n + 1)
    y = np.empty(n + 1)

    theta_m = codebook.midpoint(m)
    x[0] = theta_m
    y[0] = forward_transmit(channel, x[0], forward, 0)
    noise[0] = y[0] / gain - x[0]
    w0 = eve_tap_transmit(tap, y[0], lanes.tap) if tap is not None else math.nan

    alice = AliceState(schedule, first_round_noise=noise[0], noise_mean=mean)
    bob = BobState(schedule, first_round_observation=y[0] / gain, noise_mean=mean)

    y_prev = y[0]
    for i in range(1, n + 1):
        x[i] = alice_round(alice, y_prev)
        y[i] = forward_transmit(channel, x[i], forward, i)
        noise[i] = y[i] / gain - x[i]
        bob_round(bob, y[i])
        y_prev = y[i]
    alice_finish(alice, y_prev)

    theta_n = bob.theta
    m_hat = decode(bob, codebook)
    return Transcript(m=m, m_hat=m_hat, theta_m=theta_m, theta_n=theta_n, w0=w0, x=x, noise=noise, y=y)
