"""Shared numerical kernels.

Hermite functions, Gauss rules, Gaussian-weighted 2D quadrature with
discontinuity splitting, special functions, Gaussian sampling and the
bivariate-normal sign correlation.
"""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import special

__all__ = [
    "QuadratureSpec",
    "GaussianForm2D",
    "QuadratureResult",
    "hermite_function",
    "hermite_functions",
    "gauss_hermite",
    "gauss_legendre",
    "integrate_gaussian_2d",
    "gaussian_rule_2d",
    "erf",
    "erfi",
    "dawson",
    "orthant_correlation",
    "mvn_sample",
    "make_rng",
]

_log = logging.getLogger(__name__)

HERMITE_NMAX = 5000
GH_MAX_ORDER = 512

_PI_QUARTER = math.pi ** -0.25


# ---------------------------------------------------------------------------
# Hermite functions
# ---------------------------------------------------------------------------

def hermite_functions(nmax: int, x) -> np.ndarray:
    """All normalized oscillator eigenfunctions phi_0..phi_nmax at points ``x``.

    Returns an array of shape ``(nmax + 1,) + x.shape``. The three-term
    recurrence runs on a rescaled sequence with a running log-scale so that
    nothing under- or overflows in the classically allowed region.
    """
    if not 0 <= nmax <= HERMITE_NMAX:
        raise ValueError(f"n must lie in [0, {HERMITE_NMAX}], got {nmax}")
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    # phi_n = y_n * exp(logs); y_0 = pi^{-1/4}, logs = -x^2/2
    logs = -0.5 * x * x
    y_prev = np.zeros_like(x)
    y = np.full_like(x, _PI_QUARTER)
    out[0] = y * np.exp(logs)
    for n in range(nmax):
        y_next = x * math.sqrt(2.0 / (n + 1)) * y - math.sqrt(n / (n + 1)) * y_prev
        y_prev, y = y, y_next
        big = np.abs(y) > 1e150
        if np.any(big):
            scale = np.where(big, 1e-150, 1.0)
            y = y * scale
            y_prev = y_prev * scale
            logs = logs + np.where(big, 150.0 * math.log(10.0), 0.0)
        out[n + 1] = y * np.exp(logs)
    return out


def hermite_function(n: int, x):
    """Normalized oscillator eigenfunction phi_n(x)."""
    if not 0 <= n <= HERMITE_NMAX:
        raise ValueError(f"n must lie in [0, {HERMITE_NMAX}], got {n}")
    vals = hermite_functions(n, x)[n]
    return float(vals) if np.ndim(vals) == 0 else vals


# ---------------------------------------------------------------------------
# Gauss rules
# ---------------------------------------------------------------------------

_rule_lock = threading.Lock()


@lru_cache(maxsize=None)
def _gh_cached(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = special.roots_hermite(order)
    # exact mirror symmetry so odd integrands cancel to rounding
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_hermite(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for the weight function e^{-x^2}."""
    if not 1 <= order <= GH_MAX_ORDER:
        raise ValueError(f"order must lie in [1, {GH_MAX_ORDER}], got {order}")
    with _rule_lock:
        return _gh_cached(int(order))


@lru_cache(maxsize=None)
def _gl_cached(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    if order < 1:
        raise ValueError("order must be >= 1")
    with _rule_lock:
        return _gl_cached(int(order))


# ---------------------------------------------------------------------------
# Gaussian-weighted 2D quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureSpec:
    """Controls for :func:`integrate_gaussian_2d`.

    ``order`` is the number of nodes per Gauss rule: per panel on split axes,
    over the whole line on unsplit axes. Each refinement multiplies it by 1.5.
    """

    order: int = 10
    splits_x: tuple[float, ...] = ()
    splits_y: tuple[float, ...] = ()
    target_rel_error: float = 1e-10
    target_abs_error: float = 1e-14
    max_refinements: int = 4
    grading_levels: int = 10
    cutoff: float = 7.5

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        for splits in (self.splits_x, self.splits_y):
            if not all(math.isfinite(s) for s in splits):
                raise ValueError("breakpoints must be finite")
        object.__setattr__(self, "splits_x", tuple(sorted(float(s) for s in self.splits_x)))
        object.__setattr__(self, "splits_y", tuple(sorted(float(s) for s in self.splits_y)))
        if self.target_rel_error <= 0:
            raise ValueError("target_rel_error must be positive")

    def with_splits(self, splits_x=(), splits_y=()) -> "QuadratureSpec":
        return QuadratureSpec(
            order=self.order,
            splits_x=tuple(splits_x),
            splits_y=tuple(splits_y),
            target_rel_error=self.target_rel_error,
            target_abs_error=self.target_abs_error,
            max_refinements=self.max_refinements,
            grading_levels=self.grading_levels,
            cutoff=self.cutoff,
        )


@dataclass(frozen=True)
class GaussianForm2D:
    """Exponent ``-aa x^2 - bb y^2 + 2 ab x y + lx x + ly y + const``."""

    aa: float
    bb: float
    ab: float
    lx: float = 0.0
    ly: float = 0.0
    const: float = 0.0

    def __post_init__(self):
        if not (self.aa > 0 and self.bb > 0 and self.aa * self.bb > self.ab ** 2):
            raise ValueError("quadratic part of the Gaussian form is not negative definite")

    def exponent(self, x, y):
        return (-self.aa * x * x - self.bb * y * y + 2 * self.ab * x * y
                + self.lx * x + self.ly * y + self.const)

    def swapped(self) -> "GaussianForm2D":
        return GaussianForm2D(self.bb, self.aa, self.ab, self.ly, self.lx, self.const)

    def total_mass(self) -> float:
        """Integral of exp(exponent) over the plane."""
        det = self.aa * self.bb - self.ab ** 2
        lin = np.array([self.lx, self.ly])
        mat = np.array([[self.aa, -self.ab], [-self.ab, self.bb]])
        shift = 0.25 * lin @ np.linalg.solve(mat, lin)
        return math.pi / math.sqrt(det) * math.exp(self.const + shift)


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error: float
    converged: bool
    order: int = field(default=0, compare=False)

    def __complex__(self):
        return complex(self.value)

    @property
    def real(self) -> float:
        return float(np.real(self.value))


def _graded_fractions(levels: int, toward_lo: bool, toward_hi: bool, pieces: int) -> np.ndarray:
    """Panel edges on [0, 1]: ``pieces`` uniform panels, geometrically refined
    toward the flagged ends."""
    geo = 4.0 ** -np.arange(levels, 0, -1) / pieces
    parts = [np.linspace(0.0, 1.0, pieces + 1)]
    if toward_lo:
        parts.append(geo)
    if toward_hi:
        parts.append(1.0 - geo)
    return np.unique(np.concatenate(parts))


def _axis_rule(bps: np.ndarray, order: int, levels: int, cutoff: float):
    """Nodes/weights (for weight e^{-t^2}) on a standardized axis.

    ``bps`` has shape ``(rows, nb)``: breakpoints per row. Without
    breakpoints the Gauss-Hermite rule is returned; otherwise composite
    Gauss-Legendre on [-cutoff, cutoff] split at the breakpoints, graded
    toward them. Output shapes are ``(rows, nodes)``.
    """
    rows, nb = bps.shape
    if nb == 0:
        t, w = gauss_hermite(order)
        return np.broadcast_to(t, (rows, t.size)), np.broadcast_to(w, (rows, w.size))
    pts = np.sort(np.clip(bps, -cutoff, cutoff), axis=1)
    ends = np.concatenate(
        (np.full((rows, 1), -cutoff), pts, np.full((rows, 1), cutoff)), axis=1
    )
    x, w = gauss_legendre(order)
    all_t, all_w = [], []
    for k in range(nb + 1):
        lo, hi = ends[:, k:k + 1], ends[:, k + 1:k + 2]
        # panels at most one standardized unit wide
        fr = _graded_fractions(levels, k > 0, k < nb, int(math.ceil(2 * cutoff)))
        edges = lo + (hi - lo) * fr  # (rows, nedges)
        a, b = edges[:, :-1, None], edges[:, 1:, None]
        half = 0.5 * (b - a)
        t = (0.5 * (a + b) + half * x).reshape(rows, -1)
        ww = (half * w).reshape(rows, -1)
        all_t.append(t)
        all_w.append(ww * np.exp(-t * t))
    return np.concatenate(all_t, axis=1), np.concatenate(all_w, axis=1)


def _integrate_once(f, form: GaussianForm2D, splits_x, splits_y, order, levels, cutoff):
    # outer x with marginal weight, inner y conditional on x
    aa, bb, ab = form.aa, form.bb, form.ab
    a_marg = aa - ab * ab / bb
    lx_marg = form.lx + ab * form.ly / bb
    x0 = lx_marg / (2 * a_marg)
    log_pref = (form.const + form.ly ** 2 / (4 * bb) + a_marg * x0 * x0
                - 0.5 * math.log(a_marg * bb))
    sa, sb = math.sqrt(a_marg), math.sqrt(bb)

    bx = (np.asarray(splits_x, dtype=float) - x0) * sa
    t, wt = _axis_rule(bx[None, :], order, levels, cutoff)
    t, wt = t[0], wt[0]
    x = x0 + t / sa
    mu = (2 * ab * x + form.ly) / (2 * bb)
    by = (np.asarray(splits_y, dtype=float)[None, :] - mu[:, None]) * sb
    u, wu = _axis_rule(by, order, levels, cutoff)
    y = mu[:, None] + u / sb
    vals = np.broadcast_to(f(x[:, None], y), y.shape)
    total = np.sum(wt[:, None] * wu * vals)
    return complex(total) * math.exp(log_pref)


def gaussian_rule_2d(form: GaussianForm2D, order: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Tensor Gauss-Hermite nodes ``(x, y, w)`` with ``sum w f(x, y)`` approximating
    the integral of ``f exp(exponent)``; for smooth ``f`` only."""
    aa, bb, ab = form.aa, form.bb, form.ab
    a_marg = aa - ab * ab / bb
    x0 = (form.lx + ab * form.ly / bb) / (2 * a_marg)
    log_pref = (form.const + form.ly ** 2 / (4 * bb) + a_marg * x0 * x0
                - 0.5 * math.log(a_marg * bb))
    t, w = gauss_hermite(order)
    x = x0 + t / math.sqrt(a_marg)
    mu = (2 * ab * x + form.ly) / (2 * bb)
    y = mu[:, None] + t[None, :] / math.sqrt(bb)
    ww = np.outer(w, w) * math.exp(log_pref)
    return np.broadcast_to(x[:, None], y.shape).ravel(), y.ravel(), ww.ravel()


def integrate_gaussian_2d(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    form: GaussianForm2D,
    spec: QuadratureSpec | None = None,
    outer: str = "x",
) -> QuadratureResult:
    """Integrate ``f(x, y) * exp(form.exponent(x, y))`` over the plane.

    ``f`` must broadcast: it is called with ``x`` of shape ``(n, 1)`` and
    ``y`` of shape ``(n, m)``.

    The Gaussian is factored into a marginal for the outer variable and a
    conditional for the inner one; each axis is standardized and integrated
    either by Gauss-Hermite or, where breakpoints are given, by graded
    composite Gauss-Legendre. The order is raised until two successive
    estimates agree to ``target_rel_error``.
    """
    spec = spec or QuadratureSpec()
    if outer == "y":
        return integrate_gaussian_2d(
            lambda x, y: f(y, x), form.swapped(),
            spec.with_splits(spec.splits_y, spec.splits_x), outer="x",
        )
    order = spec.order
    prev = _integrate_once(f, form, spec.splits_x, spec.splits_y, order,
                           spec.grading_levels, spec.cutoff)
    err = math.inf
    for _ in range(max(spec.max_refinements, 1)):
        order = int(math.ceil(order * 1.5))
        if not (spec.splits_x and spec.splits_y):
            order = min(order, GH_MAX_ORDER)
        cur = _integrate_once(f, form, spec.splits_x, spec.splits_y, order,
                              spec.grading_levels, spec.cutoff)
        err = abs(cur - prev)
        _log.debug("order %d: value %r, change %.3e", order, cur, err)
        prev = cur
        if err <= max(spec.target_rel_error * abs(cur), spec.target_abs_error):
            return QuadratureResult(cur, err, True, order)
    return QuadratureResult(prev, err, False, order)


# ---------------------------------------------------------------------------
# Special functions
# ---------------------------------------------------------------------------

def erf(x):
    return special.erf(x)


def dawson(x):
    return special.dawsn(x)


def erfi(x):
    """Imaginary error function -i erf(ix), real for real x."""
    return special.erfi(x)


# ---------------------------------------------------------------------------
# Bivariate orthant statistics and sampling
# ---------------------------------------------------------------------------

def orthant_correlation(rho: float, shift_x: float = 0.0, shift_y: float = 0.0) -> float:
    """E[sgn(X - shift_x) sgn(Y - shift_y)] for a standard bivariate normal."""
    if not -1.0 < rho < 1.0:
        raise ValueError(f"|rho| must be < 1, got {rho}")
    if shift_x == 0.0 and shift_y == 0.0:
        return 2.0 / math.pi * math.asin(rho)
    # density exp(-(x^2 - 2 rho x y + y^2) / (2 (1 - rho^2))) / (2 pi sqrt(1 - rho^2))
    k = 1.0 / (2.0 * (1.0 - rho * rho))
    form = GaussianForm2D(k, k, rho * k, const=-math.log(2 * math.pi * math.sqrt(1 - rho * rho)))
    spec = QuadratureSpec(order=12, splits_x=(shift_x,), splits_y=(shift_y,), target_rel_error=1e-12)
    res = integrate_gaussian_2d(
        lambda x, y: np.sign(x - shift_x) * np.sign(y - shift_y), form, spec
    )
    return res.real


def make_rng(seed: int | None) -> np.random.Generator:
    """Versioned generator: PCG64 seeded through SeedSequence."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def mvn_sample(cov, count: int, seed: int | None = 0) -> np.ndarray:
    """Zero-mean Gaussian samples, shape ``(count, dim)``, via Cholesky."""
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError("covariance must be a square matrix")
    if not np.allclose(cov, cov.T, atol=1e-12 * max(1.0, np.abs(cov).max())):
        raise ValueError("covariance must be symmetric")
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ValueError("covariance is not positive definite") from exc
    if count < 1:
        raise ValueError("count must be >= 1")
    z = make_rng(seed).standard_normal((count, cov.shape[0]))
    return z @ chol.T

