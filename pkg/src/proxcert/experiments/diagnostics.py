"""Statistical validation suites: martingale drift and concentration coverage.

The martingale diagnostic estimates the conditional mean of the cumulative
error-term increments by binning on the running sum; symmetric injectors
should show no drift, deliberately biased ones should.  The coverage suites
draw bounded-increment martingales / bounded i.i.d. sums and compare the
empirical tail exceedance with the stated concentration bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..bounds import u_sequence
from ..solvers import SolverConfig, run_accelerated, run_basic, reference_solution


@dataclass
class DiagnosticReport:
    name: str
    trials: int
    statistics: dict
    thresholds: dict
    status: str  # "pass" | "fail" | "inconclusive"
    details: list = field(default_factory=list)

    @property
    def passed(self):
        return self.status == "pass"


def _increment_pairs(trace, x_star, accelerated):
    """(T_{k-1}, dT_k) pairs of the cumulative error term along one trace."""
    nu = trace.eps1 - trace.res / trace.steps[:, None]
    if accelerated:
        useq = u_sequence(trace, x_star)
        incr = trace.alphas * np.einsum("ij,ij->i", nu, useq)
    else:
        incr = np.einsum("ij,ij->i", nu, x_star - trace.xs[1:])
    before = np.concatenate([[0.0], np.cumsum(incr)[:-1]])
    return before, incr


def martingale_diagnostic(
    problem,
    grad_spec,
    prox_spec,
    trials,
    k_max,
    seed=0,
    variant="basic",
    bins=10,
    x0=None,
    x_star=None,
):
    """Monte-Carlo zero-drift check of the cumulative error term.

    Pools (T_{k-1}, dT_k) pairs over iterations and trials, bins them into
    equal-probability bins on T_{k-1}, and flags drift when any bin's mean
    increment exceeds ``4 / sqrt(bin count)`` increment standard deviations.
    Fewer than 100 trials or under 30 pairs per bin is inconclusive.
    """
    if x_star is None:
        x_star, _ = reference_solution(problem)
    if x0 is None:
        x0 = np.zeros(problem.n)
    runner = run_accelerated if variant == "accelerated" else run_basic
    seeds = np.random.SeedSequence(seed).generate_state(trials)
    befores, incrs = [], []
    for trial_seed in seeds:
        config = SolverConfig(
            variant=variant,
            max_iters=k_max,
            grad_error=grad_spec,
            prox_error=prox_spec,
            seed=int(trial_seed),
        )
        trace = runner(problem, config, x0)
        b, d = _increment_pairs(trace, x_star, variant == "accelerated")
        befores.append(b)
        incrs.append(d)
    before = np.concatenate(befores)
    incr = np.concatenate(incrs)
    std = float(incr.std())
    if std == 0.0:
        # zero errors: the term is identically zero
        return DiagnosticReport(
            name=f"martingale-{variant}",
            trials=trials,
            statistics={"max_drift_ratio": 0.0, "increment_std": 0.0},
            thresholds={"max_drift_ratio": 0.0, "min_trials": 100, "min_bin_count": 30},
            status="pass",
        )
    edges = np.quantile(before, np.linspace(0.0, 1.0, bins + 1))
    which = np.clip(np.searchsorted(edges, before, side="right") - 1, 0, bins - 1)
    bin_means, bin_counts = [], []
    for b in range(bins):
        sel = which == b
        cnt = int(sel.sum())
        bin_counts.append(cnt)
        bin_means.append(float(incr[sel].mean()) if cnt else 0.0)
    min_count = min(bin_counts)
    ratio = max(abs(m) for m in bin_means) / std
    threshold = 4.0 / np.sqrt(max(min_count, 1))
    stats = {
        "max_drift_ratio": ratio,
        "increment_std": std,
        "min_bin_count": min_count,
        "pairs": int(len(incr)),
    }
    thresholds = {"max_drift_ratio": threshold, "min_trials": 100, "min_bin_count": 30}
    if trials < 100 or min_count < 30:
        status = "inconclusive"
    else:
        status = "pass" if ratio <= threshold else "fail"
    return DiagnosticReport(
        name=f"martingale-{variant}",
        trials=trials,
        statistics=stats,
        thresholds=thresholds,
        status=status,
        details=[{"bin": b, "count": bin_counts[b], "mean": bin_means[b]} for b in range(bins)],
    )


def _coverage_status(empirical, theoretical, trials):
    """Pass when empirical exceedance <= theoretical + 3 binomial sigmas."""
    theo = min(theoretical, 1.0)
    sigma = np.sqrt(theo * (1.0 - theo) / trials)
    return empirical <= theoretical + 3.0 * sigma, theoretical + 3.0 * sigma


def azuma_coverage(c_schedule, gammas, trials, seed=0):
    """Tail coverage of bounded-increment martingales.

    Samples Rademacher martingales with |increment_i| <= c_i and compares
    Pr(|E_k - E_0| > gamma * sqrt(sum c_i^2)) against 2 exp(-gamma^2 / 2).
    """
    c = np.asarray(c_schedule, dtype=float)
    if np.any(c < 0):
        raise ValueError("increment bounds must be nonnegative")
    rng = np.random.default_rng(seed)
    signs = rng.choice([-1.0, 1.0], size=(trials, len(c)))
    sums = signs @ c
    radius = float(np.sqrt((c**2).sum()))
    stats, details = {}, []
    status = "pass"
    for gamma in gammas:
        theoretical = 2.0 * np.exp(-(gamma**2) / 2.0)
        empirical = float(np.mean(np.abs(sums) > gamma * radius))
        ok, limit = _coverage_status(empirical, theoretical, trials)
        stats[f"gamma={gamma}"] = empirical
        details.append(
            {"gamma": gamma, "empirical": empirical, "theoretical": theoretical, "limit": limit}
        )
        if not ok:
            status = "fail"
    return DiagnosticReport(
        name="azuma-coverage",
        trials=trials,
        statistics=stats,
        thresholds={d["gamma"]: d["limit"] for d in details},
        status=status,
        details=details,
    )


def hoeffding_coverage(lo, hi, k, gammas, trials, seed=0):
    """Tail coverage of bounded i.i.d. sums.

    Uniform[lo, hi] summands; deviation threshold t = gamma sqrt(k) (hi-lo)/2
    gives the bound 2 exp(-gamma^2/2).  A degenerate range (hi == lo) makes
    the bound vacuous.
    """
    if hi < lo:
        raise ValueError("need hi >= lo")
    rng = np.random.default_rng(seed)
    draws = rng.uniform(lo, hi, size=(trials, k)) if hi > lo else np.full((trials, k), lo)
    dev = np.abs(draws.sum(axis=1) - k * (lo + hi) / 2.0)
    stats, details = {}, []
    status = "pass"
    for gamma in gammas:
        t = gamma * np.sqrt(k) * (hi - lo) / 2.0
        theoretical = 2.0 if hi == lo else 2.0 * np.exp(-(gamma**2) / 2.0)
        empirical = float(np.mean(dev >= t)) if t > 0 else float(np.mean(dev >= 0.0))
        ok, limit = _coverage_status(empirical, theoretical, trials)
        stats[f"gamma={gamma}"] = empirical
        details.append(
            {"gamma": gamma, "empirical": empirical, "theoretical": theoretical, "limit": limit}
        )
        if not ok:
            status = "fail"
    return DiagnosticReport(
        name="hoeffding-coverage",
        trials=trials,
        statistics=stats,
        thresholds={d["gamma"]: d["limit"] for d in details},
        status=status,
        details=details,
    )
