"""Basic and accelerated inexact proximal gradient with full trace recording.

The basic iteration is ``x^{k+1} in prox^{eps2_k}_{s h}(x^k - s(grad g(x^k) + eps1_k))``;
the accelerated variant evaluates the gradient at the momentum point
``y^k = x^k + beta_k (x^k - x^{k-1})`` with ``beta_k = (alpha_{k-1}-1)/alpha_k``.
Step ``k`` consumes errors ``eps1^k, eps2^k`` and produces ``x^{k+1}`` and the
residual ``r^{k+1}`` (inexact minus exact prox of the same point).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import (
    FixedPointFormat,
    GradientErrorSampler,
    GradientErrorSpec,
    ProxErrorSampler,
    ProxErrorSpec,
    quantized_gradient,
)
from .problems import StepsizePolicy, as_vector, backtrack_stepsize

MOMENTUM_RULES = ("fista", "linear", "none")


def alpha_sequence(rule, k):
    """Momentum parameter alpha_k.

    "fista": alpha_0 = 1, alpha_k = (1 + sqrt(1 + 4 alpha_{k-1}^2))/2, which
    satisfies alpha_k^2 - alpha_k = alpha_{k-1}^2 exactly.
    "linear": alpha_k = (k+2)/2 (the recursion holds only approximately,
    off by 1/4).
    "none": alpha_k = 1, forcing beta_k = 0 (recovers the basic scheme).
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if rule == "linear":
        return (k + 2) / 2.0
    if rule == "none":
        return 1.0
    if rule != "fista":
        raise ValueError(f"unknown momentum rule {rule!r}")
    a = 1.0
    for _ in range(k):
        a = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * a * a))
    return a


def alpha_series(rule, kmax):
    """alpha_0 .. alpha_kmax as an array."""
    if rule == "linear":
        return (np.arange(kmax + 1) + 2) / 2.0
    if rule == "none":
        return np.ones(kmax + 1)
    if rule != "fista":
        raise ValueError(f"unknown momentum rule {rule!r}")
    out = np.empty(kmax + 1)
    a = 1.0
    out[0] = a
    for k in range(1, kmax + 1):
        a = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * a * a))
        out[k] = a
    return out


@dataclass(frozen=True)
class SolverConfig:
    variant: str = "basic"
    stepsize: Optional[StepsizePolicy] = None  # None -> constant 1/L
    max_iters: int = 100
    abstol: float = 0.0
    momentum: str = "fista"
    grad_error: Union[GradientErrorSpec, FixedPointFormat, None] = None
    prox_error: Optional[ProxErrorSpec] = None
    seed: int = 0

    def __post_init__(self):
        if self.variant not in ("basic", "accelerated"):
            raise ValueError(f"unknown solver variant {self.variant!r}")
        if self.max_iters < 1:
            raise ValueError("iteration cap must be at least 1")
        if self.abstol < 0:
            raise ValueError("abstol must be nonnegative")
        if self.momentum not in MOMENTUM_RULES:
            raise ValueError(f"unknown momentum rule {self.momentum!r}")


@dataclass
class RunTrace:
    """Complete per-iteration record of one solver run.

    ``xs`` holds x^0..x^T; the step arrays have length T, entry k describing
    the step that maps x^k to x^{k+1} (stepsize, momentum, injected errors,
    and the residual r^{k+1} of that step).
    """

    xs: np.ndarray
    ys: Optional[np.ndarray]
    steps: np.ndarray
    betas: np.ndarray
    alphas: np.ndarray
    fvals: np.ndarray
    eps1: np.ndarray
    eps2: np.ndarray
    res: np.ndarray
    status: str = "ok"
    wall_clock: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def num_steps(self):
        return len(self.steps)

    @property
    def n(self):
        return self.xs.shape[1]

    def x_change(self):
        """||x^{k+1} - x^k|| produced by each step."""
        return np.linalg.norm(np.diff(self.xs, axis=0), axis=1)

    def eps1_norms(self):
        return np.linalg.norm(self.eps1, axis=1)

    def res_norms(self):
        return np.linalg.norm(self.res, axis=1)

    def f_gaps(self, f_star):
        return self.fvals - f_star

    def ergodic_averages(self):
        """Running means of x^1..x^{k+1} for k = 0..T-1."""
        csum = np.cumsum(self.xs[1:], axis=0)
        counts = np.arange(1, self.num_steps + 1)[:, None]
        return csum / counts


def ergodic_average(trace, k):
    """Arithmetic mean of the iterates x^1 .. x^{k+1}."""
    if trace.num_steps == 0:
        raise ValueError("empty trace")
    if not 0 <= k < trace.num_steps:
        raise ValueError(f"k={k} outside trace with {trace.num_steps} steps")
    return trace.xs[1 : k + 2].mean(axis=0)


def _make_samplers(config):
    ss = np.random.SeedSequence(config.seed)
    child_grad, child_prox = ss.spawn(2)
    gspec = config.grad_error
    pspec = config.prox_error if config.prox_error is not None else ProxErrorSpec()
    grad_rng = np.random.default_rng(
        gspec.seed if isinstance(gspec, GradientErrorSpec) and gspec.seed is not None else child_grad
    )
    prox_rng = np.random.default_rng(pspec.seed if pspec.seed is not None else child_prox)
    grad_sampler = (
        GradientErrorSampler(gspec, grad_rng) if isinstance(gspec, GradientErrorSpec) else None
    )
    return gspec, grad_sampler, ProxErrorSampler(pspec, prox_rng)


def _run(problem, config, x0, accelerated):
    t_start = time.perf_counter()
    x0 = as_vector(x0, problem.n, "x0")
    gspec, grad_sampler, prox_sampler = _make_samplers(config)
    policy = config.stepsize or StepsizePolicy.constant(1.0 / problem.lipschitz)
    alphas_all = alpha_series(config.momentum, config.max_iters)

    xs = [x0]
    ys = []
    steps, betas, eps2s = [], [], []
    eps1s, ress = [], []
    fvals = [problem.f_value(x0)]
    status = "iteration-cap"

    s = policy.s0
    x_prev = x0
    x = x0
    for k in range(config.max_iters):
        alpha_k = alphas_all[k]
        if accelerated and k > 0:
            beta_k = (alphas_all[k - 1] - 1.0) / alpha_k
            y = x + beta_k * (x - x_prev)
        else:
            beta_k = 0.0
            y = x
        g = problem.grad(y)
        if grad_sampler is not None:
            noisy, eps1 = grad_sampler.inject(g, k)
        elif isinstance(gspec, FixedPointFormat):
            noisy, eps1 = quantized_gradient(gspec, problem.smooth, y)
        else:
            noisy, eps1 = g, np.zeros_like(g)
        if policy.mode == "backtracking":
            s, _ = backtrack_stepsize(problem, s, y, noisy, eta=policy.eta)
        # overflow during divergence is an expected, reported outcome
        with np.errstate(over="ignore", invalid="ignore"):
            w = y - s * noisy
            x_next, gap, r = prox_sampler.apply(problem.reg, s, w, k)

        ys.append(y)
        steps.append(s)
        betas.append(beta_k)
        eps1s.append(eps1)
        eps2s.append(gap)
        ress.append(r)
        xs.append(x_next)
        if not np.all(np.isfinite(x_next)):
            fvals.append(np.nan)
            status = "non-finite-iterate"
            break
        with np.errstate(over="ignore", invalid="ignore"):
            fvals.append(problem.f_value(x_next))
            change = float(np.linalg.norm(x_next - x))
        x_prev, x = x, x_next
        if config.abstol > 0 and change <= config.abstol:
            status = "converged"
            break

    t = len(steps)
    return RunTrace(
        xs=np.asarray(xs),
        ys=np.asarray(ys) if accelerated else None,
        steps=np.asarray(steps),
        betas=np.asarray(betas),
        alphas=alphas_all[:t],
        fvals=np.asarray(fvals),
        eps1=np.asarray(eps1s),
        eps2=np.asarray(eps2s),
        res=np.asarray(ress),
        status=status,
        wall_clock=time.perf_counter() - t_start,
        meta={"variant": "accelerated" if accelerated else "basic", "seed": config.seed},
    )


def run_basic(problem, config, x0):
    """Inexact basic proximal gradient; returns the full trace."""
    return _run(problem, config, x0, accelerated=False)


def run_accelerated(problem, config, x0):
    """Inexact accelerated proximal gradient; returns the full trace."""
    return _run(problem, config, x0, accelerated=True)


def run(problem, config, x0):
    if config.variant == "accelerated":
        return run_accelerated(problem, config, x0)
    return run_basic(problem, config, x0)


def reference_solution(problem, max_iters=100_000, abstol=1e-12):
    """High-accuracy (x_star, f_star) surrogate from a long exact FISTA run."""
    if problem.x_star is not None and problem.f_star is not None:
        return np.asarray(problem.x_star, dtype=float), float(problem.f_star)
    config = SolverConfig(
        variant="accelerated",
        stepsize=StepsizePolicy.constant(1.0 / problem.lipschitz),
        max_iters=max_iters,
        abstol=abstol,
    )
    trace = run_accelerated(problem, config, np.zeros(problem.n))
    x_star = trace.xs[-1]
    return x_star, problem.f_value(x_star)
