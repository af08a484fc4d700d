"""Closed-form rates, capacities, error bounds, and the privacy-leakage budget.

Everything in this module is a pure scalar function of its arguments: no
randomness, no state. All rates and entropies are in bits (base-2 logs);
natural logs appear only inside the exponentials of tail bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import bisect
from scipy.special import erfc

__all__ = [
    "RateQuery",
    "BoundQuery",
    "LeakageBudget",
    "TetrationBound",
    "BoundNotActiveError",
    "g_entropy",
    "awgn_capacity",
    "induced_sigma2",
    "rate_coherent_homodyne",
    "rate_squeezed_homodyne",
    "sk_error_bound",
    "sk_error_bound_log10",
    "chebyshev_error_bound",
    "phi",
    "phi_inverse",
    "tetration_order",
    "tetration_error_bound",
    "q_function",
    "leakage_budget",
]

_LN2 = math.log(2.0)
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


class BoundNotActiveError(ValueError):
    """Raised when an asymptotic bound is requested outside its active regime."""


def _require(cond: bool, name: str, value, valid: str) -> None:
    if not cond:
        raise ValueError(f"{name}={value!r} is outside its valid range ({valid})")


@dataclass(frozen=True)
class RateQuery:
    """Physical operating point for the rate formulas.

    Attributes
    ----------
    n_s : float
        Mean photon number per mode, > 0.
    sigma2 : float
        Noise variance of the induced additive channel (quadrature units), > 0.
        Use :meth:`from_channel` to derive it from (eta, n_th).
    eta : float
        Transmissivity in (0, 1].
    n_th : float
        Thermal occupation of the environment mode, >= 0.
    """

    n_s: float
    sigma2: float
    eta: float = 1.0
    n_th: float = 0.0

    def __post_init__(self) -> None:
        _require(self.n_s > 0, "n_s", self.n_s, "> 0")
        _require(self.sigma2 > 0, "sigma2", self.sigma2, "> 0")
        _require(0 < self.eta <= 1, "eta", self.eta, "(0, 1]")
        _require(self.n_th >= 0, "n_th", self.n_th, ">= 0")

    @classmethod
    def from_channel(cls, eta: float, n_th: float, n_s: float) -> "RateQuery":
        """Build a query whose sigma2 is the induced-channel value for (eta, n_th)."""
        return cls(n_s=n_s, sigma2=induced_sigma2(eta, n_th), eta=eta, n_th=n_th)


@dataclass(frozen=True)
class BoundQuery(RateQuery):
    """A :class:`RateQuery` plus blocklength and nominal rate.

    ``n`` counts the estimation rounds after the message-bearing round 0.
    ``rate`` may exceed the coherent-homodyne rate; the bounds then stop
    being meaningful but are still evaluated.
    """

    n: int = 1
    rate: float = 0.5

    def __post_init__(self) -> None:
        super().__post_init__()
        _require(isinstance(self.n, int) and self.n >= 1, "n", self.n, "integer >= 1")
        _require(self.rate > 0, "rate", self.rate, "> 0")


@dataclass(frozen=True)
class LeakageBudget:
    """Analytic upper bound on the eavesdropper's information, in bits."""

    tap_capacity: float
    eve_entropy_bound: float
    total_bits: float
    per_mode_bits: float


@dataclass(frozen=True)
class TetrationBound:
    """Tower-exponential error bound ``1 / (e ^^ order)``.

    ``value`` is 0.0 with ``underflow=True`` once the tower exceeds double
    range (order >= 4); ``log10_value`` stays finite one level longer and is
    -inf beyond that. The order itself is the informative output in the
    underflow regime.
    """

    value: float
    order: int
    underflow: bool
    log10_value: float


def g_entropy(x: float) -> float:
    """Entropy of a thermal state with mean photon number ``x``, in bits.

    g(x) = (x+1) log2(x+1) - x log2(x), with g(0) = 0 by the x log x -> 0
    convention.
    """
    _require(x >= 0, "x", x, ">= 0")
    if x == 0:
        return 0.0
    return (x + 1.0) * math.log1p(x) / _LN2 - x * math.log2(x)


def awgn_capacity(power: float, noise: float) -> float:
    """Shannon capacity (1/2) log2(1 + power/noise) of a real AWGN channel."""
    _require(noise > 0, "noise", noise, "> 0")
    _require(power >= 0, "power", power, ">= 0")
    return 0.5 * math.log1p(power / noise) / _LN2


def induced_sigma2(eta: float, n_th: float) -> float:
    """Noise variance of the induced additive channel after homodyne rescaling.

    sigma2 = 1/(4 eta) + (1 - eta) n_th / (2 eta). The vacuum x-quadrature
    variance is 1/4, so eta = 1 with n_th = 0 gives 0.25.
    """
    _require(0 < eta <= 1, "eta", eta, "(0, 1]")
    _require(n_th >= 0, "n_th", n_th, ">= 0")
    return 1.0 / (4.0 * eta) + (1.0 - eta) * n_th / (2.0 * eta)


def rate_coherent_homodyne(query: RateQuery) -> float:
    """Achievable bits/mode with coherent encoding and homodyne detection.

    Equals ``awgn_capacity(n_s, sigma2)``: the capacity of the induced
    additive Gaussian channel.
    """
    return awgn_capacity(query.n_s, query.sigma2)


def rate_squeezed_homodyne(eta: float, n_s: float) -> float:
    """Bits/mode with optimal squeezed-state encoding over the pure-loss channel.

    Valid for 0 < eta < 1 (the internal gain expression divides by 1 - eta);
    the lossless limit is not implemented. Exceeds the coherent-homodyne rate
    at the same (eta, n_s) with n_th = 0.
    """
    _require(0 < eta < 1, "eta", eta, "(0, 1); eta=1 has no squeezing gain expression")
    _require(n_s > 0, "n_s", n_s, "> 0")
    f = (
        eta
        * (math.sqrt(1.0 + (2.0 * (1.0 - eta) / eta) * ((1.0 + eta) / (2.0 * eta) + 2.0 * n_s)) - 1.0)
        / (1.0 - eta)
    )
    num = 4.0 * n_s + 2.0 - f + 1.0 / f
    den = (1.0 - eta) / eta + 1.0 / f
    return 0.5 * math.log1p(num / den) / _LN2


def sk_error_bound(b: BoundQuery) -> float:
    """Doubly-exponential decoding-error bound for the feedback protocol.

    sqrt(2/pi) * exp(-2^(2 n (P_H - R) - 1) * n_s / sigma2), clamped to its
    sqrt(2/pi) prefactor. Vanishes super-exponentially in n for R < P_H and
    underflows to exactly 0.0 well inside double range; use
    :func:`sk_error_bound_log10` for reporting in that regime.
    """
    p_h = rate_coherent_homodyne(b)
    exponent = 2.0 ** (2.0 * b.n * (p_h - b.rate) - 1.0) * b.n_s / b.sigma2
    return min(_SQRT_2_OVER_PI * math.exp(-exponent), _SQRT_2_OVER_PI)


def sk_error_bound_log10(b: BoundQuery) -> float:
    """log10 of :func:`sk_error_bound`, finite even when the bound underflows."""
    p_h = rate_coherent_homodyne(b)
    exponent = 2.0 ** (2.0 * b.n * (p_h - b.rate) - 1.0) * b.n_s / b.sigma2
    return math.log10(_SQRT_2_OVER_PI) - exponent / math.log(10.0)


def chebyshev_error_bound(gain: float, var_noise: float, b: BoundQuery) -> float:
    """Second-moment decoding-error bound for general affine channels.

    gain^2 * 2^(-2 n (C - R)) * var_noise / n_s with C the AWGN capacity at
    the same second moments. Valid for any additive noise, Gaussian or not.
    """
    _require(gain != 0, "gain", gain, "!= 0")
    _require(var_noise > 0, "var_noise", var_noise, "> 0")
    c = awgn_capacity(b.n_s, var_noise)
    return gain * gain * 2.0 ** (-2.0 * b.n * (c - b.rate)) * var_noise / b.n_s


def phi(nu: float, n_s: float, sigma2: float) -> float:
    """(nu/2) log2(1 + n_s / (sigma2 nu)): capacity of a nu-fraction of rounds.

    Strictly increasing on (0, 1]; phi(1) is the coherent-homodyne rate.
    """
    _require(0 < nu <= 1, "nu", nu, "(0, 1]")
    _require(n_s > 0, "n_s", n_s, "> 0")
    _require(sigma2 > 0, "sigma2", sigma2, "> 0")
    return 0.5 * nu * math.log1p(n_s / (sigma2 * nu)) / _LN2


def phi_inverse(rate: float, n_s: float, sigma2: float) -> float:
    """The unique nu in (0, 1] with phi(nu) = rate, by bisection.

    Absolute tolerance 1e-12 on nu; the round-trip residual
    |phi(phi_inverse(R)) - R| stays below 1e-10.
    """
    p_h = awgn_capacity(n_s, sigma2)
    _require(0 < rate <= p_h, "rate", rate, f"(0, P_H] with P_H={p_h!r}")
    if rate == p_h:
        return 1.0
    return float(bisect(lambda nu: phi(nu, n_s, sigma2) - rate, 1e-300, 1.0, xtol=1e-12))


def tetration_order(b: BoundQuery) -> int:
    """Height of the error-bound exponential tower at blocklength n.

    floor(n (1 - nu*) - 5 (1 - nu*) / (P_H - R)) with nu* = phi_inverse(R).
    Nonpositive values mean the tower bound is not yet active at this n.
    """
    p_h = rate_coherent_homodyne(b)
    _require(b.rate < p_h, "rate", b.rate, f"< P_H={p_h!r} for tower bounds")
    nu_star = phi_inverse(b.rate, b.n_s, b.sigma2)
    slack = 1.0 - nu_star
    return math.floor(b.n * slack - 5.0 * slack / (p_h - b.rate))


# e, e^e, e^(e^e): the tallest towers whose reciprocal (resp. its log10)
# still fits in a double. Height 4 underflows both.
_TOWER = (math.e, math.exp(math.e), math.exp(math.exp(math.e)))


def tetration_error_bound(b: BoundQuery) -> TetrationBound:
    """Error bound 1 / (e ^^ f(n)) with f(n) = :func:`tetration_order`.

    Raises :class:`BoundNotActiveError` when f(n) < 1. Towers of height >= 4
    exceed double range; the result then carries an explicit underflow marker
    and the tower order, which is the informative quantity.
    """
    order = tetration_order(b)
    if order < 1:
        raise BoundNotActiveError(
            f"tower order f(n)={order} < 1: bound not active at n={b.n}"
        )
    if order <= 3:
        value = 1.0 / _TOWER[order - 1]
        return TetrationBound(value=value, order=order, underflow=False, log10_value=math.log10(value))
    if order == 4:
        # 1/(e^^4) = exp(-e^e^e): underflows, but its log10 is still finite.
        return TetrationBound(value=0.0, order=order, underflow=True, log10_value=-_TOWER[2] * math.log10(math.e))
    return TetrationBound(value=0.0, order=order, underflow=True, log10_value=-math.inf)


def q_function(x: float) -> float:
    """Standard Gaussian upper-tail probability Q(x), via erfc."""
    return 0.5 * float(erfc(x / math.sqrt(2.0)))


def leakage_budget(
    eta: float,
    n_th: float,
    n_s: float,
    sigma2: float,
    tap_variance: float,
    n: int,
) -> LeakageBudget:
    """Bits the eavesdropper can learn, bounded analytically and normalized.

    The budget is the capacity of the round-0 feedback tap at input power
    n_s + sigma2 plus the thermal-entropy bound g((1-eta) n_s + eta n_th) on
    the eavesdropper's optical port. The per-mode figure divides by the n+1
    channel uses; the numerator does not grow with n, which is the entire
    privacy argument.
    """
    _require(0 < eta <= 1, "eta", eta, "(0, 1]")
    _require(n_th >= 0, "n_th", n_th, ">= 0")
    _require(n_s > 0, "n_s", n_s, "> 0")
    _require(sigma2 > 0, "sigma2", sigma2, "> 0")
    _require(
        tap_variance > 0, "tap_variance", tap_variance,
        "> 0; a noiseless tap has infinite capacity",
    )
    _require(isinstance(n, int) and n >= 1, "n", n, "integer >= 1")
    tap_capacity = awgn_capacity(n_s + sigma2, tap_variance)
    eve_entropy_bound = g_entropy((1.0 - eta) * n_s + eta * n_th)
    total = tap_capacity + eve_entropy_bound
    return LeakageBudget(
        tap_capacity=tap_capacity,
        eve_entropy_bound=eve_entropy_bound,
        total_bits=total,
        per_mode_bits=total / (n + 1),
    )
