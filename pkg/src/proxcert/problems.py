"""Composite problems, exact oracles, and stepsize management.

A composite problem is ``f(x) = g(x) + h(x)`` with ``g`` smooth convex
(Lipschitz gradient, constant ``L``) and ``h`` convex, possibly nonsmooth,
with an exact proximal operator.  Everything here is the exact,
double-precision reference path; error injection lives in
:mod:`proxcert.errors`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class OracleError(RuntimeError):
    """An oracle returned non-finite values or a linear solve failed."""


def as_vector(x, n=None, name="x"):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector, got shape {x.shape}")
    if n is not None and x.shape[0] != n:
        raise ValueError(f"{name} has dimension {x.shape[0]}, expected {n}")
    return x


def power_iteration(mat, iters=200, rtol=1e-10, seed=0, return_converged=False):
    """Largest eigenvalue of ``mat.T @ mat`` (squared top singular value).

    Runs at most ``iters`` iterations, stopping early once the Rayleigh
    quotient changes by less than ``rtol`` relatively.
    """
    mat = np.asarray(mat, dtype=float)
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(mat.shape[1])
    w /= np.linalg.norm(w)
    lam = 0.0
    converged = False
    for _ in range(iters):
        z = mat.T @ (mat @ w)
        nz = np.linalg.norm(z)
        if nz == 0.0:
            lam, converged = 0.0, True
            break
        w = z / nz
        lam_new = w @ (mat.T @ (mat @ w))
        if abs(lam_new - lam) <= rtol * max(abs(lam_new), 1.0):
            lam, converged = lam_new, True
            break
        lam = lam_new
    return (lam, converged) if return_converged else lam


def symmetric_sqrt(mat):
    """(H^{1/2}, H^{-1/2}) of a symmetric PSD matrix via eigendecomposition.

    Eigenvalues below ``1e-12 * lambda_max`` are clamped to that floor so the
    inverse root stays finite on numerically rank-deficient inputs.
    """
    mat = np.asarray(mat, dtype=float)
    sym = 0.5 * (mat + mat.T)
    w, v = np.linalg.eigh(sym)
    if w[-1] <= 0.0:
        raise OracleError("matrix is not positive semidefinite")
    w = np.maximum(w, 1e-12 * w[-1])
    root = np.sqrt(w)
    return (v * root) @ v.T, (v / root) @ v.T


@dataclass(frozen=True)
class QuadraticSmooth:
    """Smooth part ``||M x - v||^2``, or the 1/2-scaled variant.

    ``half=False`` is the unscaled convention (condensed control objective);
    ``half=True`` is the usual least-squares ``(1/2)||Mx - v||^2``.
    """

    mat: np.ndarray
    vec: np.ndarray
    half: bool = False

    def __post_init__(self):
        mat = np.atleast_2d(np.asarray(self.mat, dtype=float))
        vec = as_vector(self.vec, mat.shape[0], "v")
        object.__setattr__(self, "mat", mat)
        object.__setattr__(self, "vec", vec)

    @property
    def n(self):
        return self.mat.shape[1]

    def value(self, x):
        r = self.mat @ x - self.vec
        q = float(r @ r)
        return 0.5 * q if self.half else q

    def grad(self, x):
        g = self.mat.T @ (self.mat @ x - self.vec)
        return g if self.half else 2.0 * g

    def lipschitz(self):
        smax_sq, converged = power_iteration(self.mat, return_converged=True)
        if not converged:
            # nearly degenerate top of the spectrum: the iteration cap binds
            # before 1e-6 accuracy; fall back to the exact dense eigensolve
            # so the 1/L stepsize premise stays valid
            smax_sq = float(np.linalg.eigvalsh(self.mat.T @ self.mat)[-1])
        return smax_sq if self.half else 2.0 * smax_sq


@dataclass(frozen=True)
class L1Term:
    """Nonsmooth part ``lam * ||x||_1`` with closed-form prox."""

    lam: float = 0.0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("l1 weight must be nonnegative")

    def value(self, x):
        return self.lam * float(np.abs(x).sum())

    def value_delta(self, base, direction, t):
        """``value(base + t*direction) - value(base)``, evaluated piecewise.

        On coordinates that do not cross zero the difference is exactly
        ``t * d_j * sign(base_j)``, avoiding the catastrophic cancellation of
        subtracting two near-equal l1 values (needed when targeting prox
        gaps near machine precision).
        """
        base = np.asarray(base, dtype=float)
        step = t * np.asarray(direction, dtype=float)
        moved = base + step
        same_side = np.sign(moved) == np.sign(base)
        terms = np.where(
            base == 0.0,
            np.abs(step),
            np.where(same_side, np.sign(base) * step, np.abs(moved) - np.abs(base)),
        )
        return self.lam * float(terms.sum())

    def prox(self, s, y):
        if s <= 0:
            raise ValueError("prox stepsize must be positive")
        t = s * self.lam
        y = np.asarray(y, dtype=float)
        return np.sign(y) * np.maximum(np.abs(y) - t, 0.0)


def prox_exact(h, s, y):
    """Exact proximal operator of ``s*h`` at ``y`` (soft threshold for l1)."""
    return h.prox(s, y)


@dataclass
class CompositeProblem:
    """The pair (g, h) plus the gradient Lipschitz constant.

    ``smooth`` needs ``value``/``grad``; ``reg`` needs ``value``/``prox``.
    ``x_star``/``f_star`` are optional diagnostics (a known optimum).
    """

    n: int
    smooth: QuadraticSmooth
    reg: L1Term
    lipschitz: float
    x_star: Optional[np.ndarray] = None
    f_star: Optional[float] = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_quadratic(cls, quad, lam, x_star=None, f_star=None, meta=None):
        prob = cls(
            n=quad.n,
            smooth=quad,
            reg=L1Term(lam),
            lipschitz=quad.lipschitz(),
            x_star=None if x_star is None else np.asarray(x_star, dtype=float),
            f_star=f_star,
            meta=meta or {},
        )
        return prob

    def grad(self, x):
        x = as_vector(x, self.n)
        return self.smooth.grad(x)

    def f_value(self, x):
        x = as_vector(x, self.n)
        return float(self.smooth.value(x)) + float(self.reg.value(x))

    def prox(self, s, y):
        return self.reg.prox(s, y)


def grad(problem, x):
    return problem.grad(x)


def f_value(problem, x):
    return problem.f_value(x)


def backtrack_stepsize(problem, s, probe, grad_probe, eta=0.5, max_shrinks=60):
    """Procedure-B2 backtracking for the prox-gradient step.

    Shrinks ``s`` by ``eta`` until the candidate ``z = prox_{sh}(probe - s*grad)``
    satisfies ``g(z) <= g(probe) + grad'(z-probe) + ||z-probe||^2/(2s)``.
    Returns ``(accepted_s, z)``.  Never expands the stepsize.
    """
    if s <= 0:
        raise ValueError("initial stepsize must be positive")
    if not 0.0 < eta < 1.0:
        raise ValueError("shrink factor must lie in (0, 1)")
    probe = as_vector(probe, problem.n, "probe")
    grad_probe = as_vector(grad_probe, problem.n, "gradient")
    g_probe = float(problem.smooth.value(probe))
    for _ in range(max_shrinks + 1):
        z = problem.prox(s, probe - s * grad_probe)
        delta = z - probe
        lhs = float(problem.smooth.value(z))
        rhs = g_probe + float(grad_probe @ delta) + float(delta @ delta) / (2.0 * s)
        # relative slack guards exact-arithmetic equality at s = 1/L
        if np.isfinite(lhs) and lhs <= rhs + 1e-12 * max(1.0, abs(rhs)):
            return s, z
        s *= eta
    raise OracleError(
        f"backtracking failed after {max_shrinks} shrinks (non-finite oracle values?)"
    )


@dataclass(frozen=True)
class StepsizePolicy:
    """Constant stepsize or monotone backtracking (shrink factor eta)."""

    mode: str
    s0: float
    eta: float = 0.5

    def __post_init__(self):
        if self.mode not in ("constant", "backtracking"):
            raise ValueError(f"unknown stepsize mode {self.mode!r}")
        if self.s0 <= 0:
            raise ValueError("stepsize must be positive")
        if self.mode == "backtracking" and not 0.0 < self.eta < 1.0:
            raise ValueError("shrink factor must lie in (0, 1)")

    @classmethod
    def constant(cls, s):
        return cls("constant", s)

    @classmethod
    def backtracking(cls, s0, eta=0.5):
        return cls("backtracking", s0, eta)


def max_constant_stepsize(lipschitz, delta=0.0, relative=False):
    """Largest admissible constant stepsize: 1/L, or 1/((1+delta)L) under the
    relative gradient-error model."""
    L = lipschitz * (1.0 + delta) if relative else lipschitz
    return 1.0 / L


def lqr_closed_form(mpc, x0):
    """Closed-form quadratic (l2-regularized) control solution.

    Solves the weighted stationarity system
    ``(Phi' Q Phi + R) U = Phi' Q (Rs - Psi x0)``.
    """
    psi, phi = mpc.prediction_matrices()
    q_full = mpc.output_weight()
    r_full = mpc.input_weight()
    rs = mpc.setpoint_stack()
    x0 = as_vector(x0, psi.shape[1], "x0")
    normal = phi.T @ q_full @ phi + r_full
    try:
        np.linalg.cholesky(normal)
    except np.linalg.LinAlgError as exc:
        raise OracleError("normal matrix is not positive definite") from exc
    rhs = phi.T @ (q_full @ (rs - psi @ x0))
    return np.linalg.solve(normal, rhs)


def problem_to_json(problem):
    """Serialize a quadratic+l1 composite problem to the JSON document schema."""
    quad = problem.smooth
    doc = {
        "n": problem.n,
        "M": [float(t) for t in quad.mat.ravel(order="C")],
        "v": [float(t) for t in quad.vec],
        "scale": 0.5 if quad.half else 1.0,
        "lambda": problem.reg.lam,
        "L": problem.lipschitz,
    }
    return json.dumps(doc)


def problem_from_json(text):
    doc = json.loads(text) if isinstance(text, str) else dict(text)
    n = int(doc["n"])
    v = np.asarray(doc["v"], dtype=float)
    mat = np.asarray(doc["M"], dtype=float).reshape(len(v), n)
    scale = float(doc.get("scale", 1.0))
    if scale not in (0.5, 1.0):
        raise ValueError("scale must be 0.5 or 1.0")
    quad = QuadraticSmooth(mat, v, half=scale == 0.5)
    lam = float(doc.get("lambda", 0.0))
    prob = CompositeProblem.from_quadratic(quad, lam)
    if "L" in doc and doc["L"] is not None:
        prob.lipschitz = float(doc["L"])
    return prob
