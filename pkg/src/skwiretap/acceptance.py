"""Built-in verification suite: every analytic claim checked at desk scale.

Each criterion is a deterministic check at pinned seeds and pinned trial
counts; together they are the exit gate run by ``skwiretap verify`` and by
the test suite. Monte Carlo experiments are shared across criteria and
cached per process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, List, Optional

import numpy as np

from .channels import AffineChannel, EveTap, NoiseModel, ThermalWiretapParams
from .harness import ExperimentConfig, ExperimentReport, run_experiment
from .infotheory import (
    BoundQuery,
    awgn_capacity,
    chebyshev_error_bound,
    leakage_budget,
    phi,
    phi_inverse,
    sk_error_bound,
    tetration_error_bound,
    tetration_order,
)
from .protocol import BobState, bob_round, make_schedule, mmse_oracle

__all__ = ["CriterionResult", "ROOT_SEED", "TRIALS", "shared_reports", "run_all", "CRITERIA"]

ROOT_SEED = 20260809
TRIALS = 100_000

# thermal channel with sigma2 exactly 1: eta=0.5, n_th=1 gives 0.5 + 0.5
_THERMAL = ThermalWiretapParams(eta=0.5, n_th=1.0, n_s=3.0)
_TAP = EveTap(variance=1.0)


@dataclass(frozen=True)
class CriterionResult:
    index: int
    name: str
    passed: bool
    details: str


def _cfg_gaussian(n: int, rate: float) -> ExperimentConfig:
    return ExperimentConfig.from_thermal(
        _THERMAL, _TAP, n=n, rate=rate, trials=TRIALS, root_seed=ROOT_SEED
    )


def _cfg_affine(family: str, gain: float, n: int, rate: float) -> ExperimentConfig:
    return ExperimentConfig(
        channel=AffineChannel(gain=gain, noise=NoiseModel(family, 1.0, 0.0)),
        n_s=3.0,
        tap=_TAP,
        n=n,
        rate=rate,
        trials=TRIALS,
        root_seed=ROOT_SEED,
    )


@lru_cache(maxsize=4)
def shared_reports(threads: int = 1) -> Dict[str, ExperimentReport]:
    """All Monte Carlo runs the criteria consume, keyed by short names."""
    return {
        "main": run_experiment(_cfg_gaussian(n=10, rate=0.5), threads=threads),
        "independence": run_experiment(_cfg_gaussian(n=6, rate=0.5), threads=threads),
        "edge": run_experiment(_cfg_gaussian(n=2, rate=0.95), threads=threads),
        "two-point_a1": run_experiment(_cfg_affine("two-point", 1.0, n=8, rate=0.5), threads=threads),
        "two-point_a2": run_experiment(_cfg_affine("two-point", 2.0, n=8, rate=0.5), threads=threads),
        "uniform_a1": run_experiment(_cfg_affine("uniform", 1.0, n=8, rate=0.5), threads=threads),
        "uniform_a2": run_experiment(_cfg_affine("uniform", 2.0, n=8, rate=0.5), threads=threads),
        "two-point_cheb": run_experiment(_cfg_affine("two-point", 1.0, n=2, rate=0.9), threads=threads),
        "uniform_cheb": run_experiment(_cfg_affine("uniform", 1.0, n=2, rate=0.9), threads=threads),
    }


def criterion_variance_identity() -> CriterionResult:
    """1: schedule recursion lands exactly on sigma2 * 2^(-2 n P_H)."""
    worst = 0.0
    for eta in (0.1, 0.3, 0.5, 0.8, 1.0):
        for n_th in (0.0, 0.5, 2.0):
            for n_s in (0.5, 3.0, 10.0):
                thermal = ThermalWiretapParams(eta=eta, n_th=n_th, n_s=n_s)
                sigma2 = thermal.sigma2
                p_h = awgn_capacity(n_s, sigma2)
                for n in (1, 10, 50):
                    sched = make_schedule(n, n_s, sigma2)
                    closed = sigma2 * 2.0 ** (-2.0 * n * p_h)
                    worst = max(worst, abs(sched.v[n] / closed - 1.0))
    return CriterionResult(
        1, "conditional-variance identity", worst <= 1e-12,
        f"max relative deviation {worst:.3e} (tolerance 1e-12) over the 135-point grid",
    )


def criterion_oracle_equivalence() -> CriterionResult:
    """2: recursive estimate vs full-covariance solve on random transcripts."""
    rng = np.random.default_rng(ROOT_SEED)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 21))
        n_s = float(rng.uniform(0.5, 10.0))
        sigma2 = float(rng.uniform(0.25, 4.0))
        sched = make_schedule(n, n_s, sigma2)
        ys = rng.normal(0.0, math.sqrt(n_s + sigma2), size=n)
        bob = BobState(sched, first_round_observation=0.0)
        for y in ys:
            bob_round(bob, float(y))
        oracle = mmse_oracle(ys, sched)
        worst = max(worst, abs(bob.nhat - oracle) / (1.0 + abs(bob.nhat)))
    return CriterionResult(
        2, "recursion vs full-solve oracle", worst <= 1e-9,
        f"max relative disagreement {worst:.3e} (tolerance 1e-9) over 100 transcripts, n <= 20",
    )


def criterion_variance_of_theta(reports: Dict[str, ExperimentReport]) -> CriterionResult:
    """3: empirical variance of the decoder statistic matches the closed form."""
    r = reports["main"]
    ratio = r.empirical_var_theta / r.predicted_var_theta
    return CriterionResult(
        3, "decoder-statistic variance", 0.95 <= ratio <= 1.05,
        f"empirical/predicted = {ratio:.4f} at n=10, {TRIALS} trials (window [0.95, 1.05])",
    )


def criterion_error_bound(reports: Dict[str, ExperimentReport]) -> CriterionResult:
    """4: zero errors deep in the reliable regime; bound respected near capacity."""
    main, edge = reports["main"], reports["edge"]
    bound_main = sk_error_bound(
        BoundQuery(n_s=3.0, sigma2=1.0, eta=0.5, n_th=1.0, n=10, rate=0.5)
    )
    ok_a = main.error_count == 0 and bound_main < 1e-300
    bound_edge = edge.analytic_error_bound
    slack = bound_edge + 5.0 * math.sqrt(bound_edge * (1.0 - bound_edge) / TRIALS)
    ok_b = edge.error_rate <= slack
    return CriterionResult(
        4, "decoding-error bound", ok_a and ok_b,
        f"(a) n=10: errors={main.error_count}, bound={bound_main:.3g}; "
        f"(b) n=2, R=0.95: rate={edge.error_rate:.5f} <= {slack:.5f}",
    )


def criterion_power_constraint(reports: Dict[str, ExperimentReport]) -> CriterionResult:
    """5: per-round mean power sits on n_s; round 0 under it by construction."""
    r = reports["main"]
    n_s = r.config.n_s
    z = np.abs(r.power_mean[1:] - n_s) / r.power_se[1:]
    ok = bool(np.all(z <= 5.0)) and r.power_mean[0] <= n_s
    return CriterionResult(
        5, "per-round power constraint", ok,
        f"max |z| = {float(np.max(z)):.2f} over rounds 1..{r.config.n} (limit 5); "
        f"round-0 mean {float(r.power_mean[0]):.4f} <= {n_s}",
    )


def criterion_non_gaussian(reports: Dict[str, ExperimentReport]) -> CriterionResult:
    """6: affine-channel variance identity and second-moment error bound."""
    details = []
    ok = True
    for key in ("two-point_a1", "two-point_a2", "uniform_a1", "uniform_a2"):
        r = reports[key]
        ratio = r.empirical_var_theta / r.predicted_var_theta
        ok &= 0.95 <= ratio <= 1.05
        details.append(f"{key}: ratio={ratio:.4f}")
    for key in ("two-point_cheb", "uniform_cheb"):
        r = reports[key]
        bound = chebyshev_error_bound(
            r.config.channel.gain,
            r.config.channel.noise.variance,
            BoundQuery(n_s=3.0, sigma2=1.0, n=2, rate=0.9),
        )
        ok &= r.error_rate <= bound
        details.append(f"{key}: rate={r.error_rate:.5f} <= {bound:.5f}")
    return CriterionResult(6, "non-Gaussian affine channels", ok, "; ".join(details))


def criterion_independence(reports: Dict[str, ExperimentReport]) -> CriterionResult:
    """7: feedback observations uncorrelated; decoder statistic Gaussian-shaped."""
    r = reports["independence"]
    corr_tol = 5.0 / math.sqrt(TRIALS)
    skew_tol = 5.0 * math.sqrt(6.0 / TRIALS)
    kurt_tol = 5.0 * math.sqrt(24.0 / TRIALS)
    d = r.diag
    ok = (
        d.max_abs_offdiag_corr < corr_tol
        and abs(d.theta_skewness) < skew_tol
        and abs(d.theta_excess_kurtosis) < kurt_tol
    )
    return CriterionResult(
        7, "feedback independence and Gaussianity", ok,
        f"max|corr|={d.max_abs_offdiag_corr:.5f} (<{corr_tol:.5f}), "
        f"skew={d.theta_skewness:.5f} (<{skew_tol:.5f}), "
        f"exkurt={d.theta_excess_kurtosis:.5f} (<{kurt_tol:.5f}) at n=6",
    )


def criterion_leakage_budget() -> CriterionResult:
    """8: leakage budget value and exact 1/(n+1) scaling."""
    budgets = {n: leakage_budget(0.5, 0.0, 2.0, 0.5, 1.0, n) for n in (9, 99, 999)}
    ok_value = abs(budgets[99].per_mode_bits - 0.029037) <= 1e-6
    totals = {n: b.total_bits for n, b in budgets.items()}
    ok_totals = totals[9] == totals[99] == totals[999]
    ok_scaling = all(
        abs(b.per_mode_bits * (n + 1) - b.total_bits) <= 1e-12 * b.total_bits
        for n, b in budgets.items()
    )
    return CriterionResult(
        8, "leakage budget", ok_value and ok_totals and ok_scaling,
        f"per_mode_bits(n=99) = {budgets[99].per_mode_bits:.9f} (target 0.029037 +/- 1e-6); "
        f"numerator n-independent: {ok_totals}; (n+1)-scaling exact: {ok_scaling}",
    )


def criterion_tetration() -> CriterionResult:
    """9: tower-order machinery round-trips and reports underflow correctly."""
    n_s, sigma2 = 3.0, 1.0
    p_h = awgn_capacity(n_s, sigma2)
    rng = np.random.default_rng(ROOT_SEED + 9)
    worst = 0.0
    for _ in range(100):
        rate = float(rng.uniform(0.01, 0.999) * p_h)
        nu = phi_inverse(rate, n_s, sigma2)
        worst = max(worst, abs(phi(nu, n_s, sigma2) - rate))
    ok_round = worst < 1e-10

    orders = [tetration_order(BoundQuery(n_s=n_s, sigma2=sigma2, n=n, rate=0.5)) for n in range(1, 201)]
    ok_monotone = all(b >= a for a, b in zip(orders, orders[1:]))

    first = {order: 1 + orders.index(order) for order in (1, 4) if order in orders}
    ok_unit = ok_deep = False
    if 1 in first:
        b1 = tetration_error_bound(BoundQuery(n_s=n_s, sigma2=sigma2, n=first[1], rate=0.5))
        ok_unit = abs(b1.value - 1.0 / math.e) <= 1e-15 and not b1.underflow
    if 4 in first:
        b4 = tetration_error_bound(BoundQuery(n_s=n_s, sigma2=sigma2, n=first[4], rate=0.5))
        ok_deep = b4.underflow and b4.value == 0.0 and b4.order == 4
    return CriterionResult(
        9, "tetration machinery", ok_round and ok_monotone and ok_unit and ok_deep,
        f"max round-trip residual {worst:.3e} (<1e-10); order nondecreasing: {ok_monotone}; "
        f"order-1 bound = 1/e: {ok_unit}; order-4 underflow marker: {ok_deep}",
    )


def criterion_determinism() -> CriterionResult:
    """10: byte-identical reports for the same seed under different worker counts."""
    serial = shared_reports(threads=1)
    parallel = shared_reports(threads=2)
    mismatched = [k for k in serial if serial[k].to_json() != parallel[k].to_json()]
    return CriterionResult(
        10, "determinism across worker counts", not mismatched,
        "all reports byte-identical" if not mismatched else f"mismatched: {mismatched}",
    )


CRITERIA = (
    "conditional-variance identity",
    "recursion vs full-solve oracle",
    "decoder-statistic variance",
    "decoding-error bound",
    "per-round power constraint",
    "non-Gaussian affine channels",
    "feedback independence and Gaussianity",
    "leakage budget",
    "tetration machinery",
    "determinism across worker counts",
)


def run_all(progress: Optional[Callable[[str], None]] = None) -> List[CriterionResult]:
    """Evaluate all ten criteria; shared experiments run once per process."""
    emit = progress or (lambda _msg: None)
    emit("running Monte Carlo experiments (pinned seeds)...")
    reports = shared_reports(threads=1)
    results = [
        criterion_variance_identity(),
        criterion_oracle_equivalence(),
        criterion_variance_of_theta(reports),
        criterion_error_bound(reports),
        criterion_power_constraint(reports),
        criterion_non_gaussian(reports),
        criterion_independence(reports),
        criterion_leakage_budget(),
        criterion_tetration(),
        criterion_determinism(),
    ]
    for r in results:
        emit(f"{'PASS' if r.passed else 'FAIL'}  {r.index:>2}. {r.name}: {r.details}")
    return results
