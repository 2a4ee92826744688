"""Two-party correlations E = <Psi| A(alpha) x B(beta) |Psi> and Bell scans.

Three independent engines:

* ``ClosedForm``: the analytic Gaussian result for displaced parity
  inversions with position-only shifts;
* ``Quadrature``: the delta-line kernels collapse the expectation value to a
  single Gaussian-weighted 2D integral over (x_a, x_b);
* ``FockTruncation``: sum_{m,n<N} c_m c_n <m|A|n><m|B|n> over the Schmidt basis.

Signs follow the kernel algebra. For the parity inversion on the EPR state
this gives ``E(0, 0) = -(2/pi) arctan(s2)``; :func:`closed_form_E` returns the
magnitude and ``ClosedForm`` attaches ``KERNEL_SIGN``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .epr_state import EprState
from .numerics import GaussianForm2D, QuadratureSpec, integrate_gaussian_2d
from .observables import (
    ObservableSpec,
    QuadratureError,
    check_hermitian,
    fock_matrix,
    kernel_weight,
    make_parity_inversion,
    make_unsharp,
)

__all__ = [
    "ClosedForm",
    "Quadrature",
    "FockTruncation",
    "BellSettings",
    "CorrelationResult",
    "ScanResult",
    "ConvergenceError",
    "KERNEL_SIGN",
    "closed_form_E",
    "correlation",
    "correlation_detail",
    "bell_value",
    "real_settings",
    "complex_settings",
    "bell_real_scan",
    "bell_complex_scan",
    "max_violation",
    "unsharp_threshold",
    "oracle_compare",
]

KERNEL_SIGN = -1.0

Shift = tuple[float, float]


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, error: float):
        super().__init__(f"{message} (achieved error estimate {error:.3e})")
        self.error = error


@dataclass(frozen=True)
class ClosedForm:
    tag = "closed_form"


@dataclass(frozen=True)
class Quadrature:
    spec: QuadratureSpec = QuadratureSpec(order=8, target_rel_error=1e-11,
                                          target_abs_error=1e-13, max_refinements=6)
    tag = "quadrature"


@dataclass(frozen=True)
class FockTruncation:
    """Schmidt-basis truncation; ``n=None`` picks N from the Schmidt tail."""

    n: int | None = None
    tol: float = 1e-7
    cap: int = 2048
    tag = "fock"


Method = ClosedForm | Quadrature | FockTruncation


@dataclass(frozen=True)
class CorrelationResult:
    value: float
    error: float
    converged: bool
    method: str
    n_used: int | None = None


@dataclass(frozen=True)
class BellSettings:
    alice: tuple[Shift, Shift]
    bob: tuple[Shift, Shift]

    def __post_init__(self):
        for pair in (self.alice, self.bob):
            if len(pair) != 2:
                raise ValueError("each party needs two settings")
            for q, p in pair:
                if not (math.isfinite(q) and math.isfinite(p)):
                    raise ValueError("settings must be finite")
        object.__setattr__(self, "alice", tuple((float(q), float(p)) for q, p in self.alice))
        object.__setattr__(self, "bob", tuple((float(q), float(p)) for q, p in self.bob))

    def pairs(self) -> list[tuple[Shift, Shift, float]]:
        """(alice shift, bob shift, CHSH sign) for the four terms."""
        (a, a2), (b, b2) = self.alice, self.bob
        return [(a, b, 1.0), (a, b2, 1.0), (a2, b, 1.0), (a2, b2, -1.0)]


def real_settings(d: float) -> BellSettings:
    """E(0,0) + E(0,d) + E(-d,0) - E(-d,d)."""
    return BellSettings(alice=((0.0, 0.0), (-d, 0.0)), bob=((0.0, 0.0), (d, 0.0)))


def complex_settings(d: float) -> BellSettings:
    """Shifts alpha' = -d + i d/2, beta' = d + i d/2 mapped to (Re, Im) = (q0, p0)."""
    return BellSettings(alice=((0.0, 0.0), (-d, d / 2)), bob=((0.0, 0.0), (d, d / 2)))


# ---------------------------------------------------------------------------
# Single correlations
# ---------------------------------------------------------------------------

def closed_form_E(q: float, q2: float, state: EprState) -> float:
    """(2/pi) arctan(s2) exp(-c2 (q^2 + q'^2) + 2 s2 q q'), the magnitude."""
    c2, s2 = state.c2, state.s2
    return 2.0 / math.pi * math.atan(s2) * math.exp(-c2 * (q * q + q2 * q2) + 2 * s2 * q * q2)


def _is_parity_inversion(spec: ObservableSpec) -> bool:
    p = spec.profile
    return spec.epsilon == -1 and p.tag == "sign" and p.imaginary


def _pair_form(state: EprState, spec_a: ObservableSpec, spec_b: ObservableSpec) -> GaussianForm2D:
    """Gaussian form of Psi(x) Psi(x') with x' the reflected kernel points."""
    half_c, half_s = 0.5 * state.c2, 0.5 * state.s2
    k = np.array([[half_c, -half_s], [-half_s, half_c]])
    eps = np.array([spec_a.epsilon, spec_b.epsilon], dtype=float)
    h = (1.0 - eps) * np.array([spec_a.shift[0], spec_b.shift[0]])
    lk = eps[:, None] * k
    m = k + lk * eps[None, :]
    lin = -2.0 * lk @ h
    const = -h @ k @ h - math.log(math.pi)
    return GaussianForm2D(m[0, 0], m[1, 1], -m[0, 1], lin[0], lin[1], const)


def _quadrature_E(state, spec_a, spec_b, method: Quadrature) -> CorrelationResult:
    form = _pair_form(state, spec_a, spec_b)
    qa, qb = spec_a.shift[0], spec_b.shift[0]
    spec = method.spec.with_splits(
        sorted({qa} | {qa + k for k in spec_a.profile.kinks}),
        sorted({qb} | {qb + k for k in spec_b.profile.kinks}),
    )
    res = integrate_gaussian_2d(
        lambda x, y: kernel_weight(spec_a, x) * kernel_weight(spec_b, y), form, spec
    )
    value = complex(res.value)
    err = res.error + abs(value.imag)
    return CorrelationResult(value.real, err, res.converged, "quadrature")


@lru_cache(maxsize=512)
def _cached_fock(spec: ObservableSpec, n: int) -> np.ndarray:
    mat = fock_matrix(spec, n)
    mat.setflags(write=False)
    return mat


def _fock_sum(state: EprState, ma: np.ndarray, mb: np.ndarray, n: int) -> complex:
    c = state.schmidt_coefficients(n)
    return complex(c @ (ma[:n, :n] * mb[:n, :n]) @ c)


def _fock_E(state, spec_a, spec_b, method: FockTruncation) -> CorrelationResult:
    explicit = method.n is not None
    n = method.n if explicit else min(method.cap, state.default_truncation(1e-10, method.cap))
    n = max(n, 8)
    while True:
        try:
            ma, mb = _cached_fock(spec_a, n), _cached_fock(spec_b, n)
        except QuadratureError as exc:
            return CorrelationResult(math.nan, exc.error, False, "fock", n)
        full = _fock_sum(state, ma, mb, n)
        # successive truncations converge geometrically in the Schmidt ratio
        coarse = _fock_sum(state, ma, mb, (3 * n) // 4)
        r = state.schmidt_ratio ** (n / 8)
        est = abs(full - coarse) * r / (1.0 - r) + abs(full.imag)
        ok = est <= method.tol
        if ok or explicit or n >= method.cap:
            return CorrelationResult(full.real, est, ok, "fock", n)
        n = min(method.cap, 2 * n)


def correlation_detail(state: EprState, spec_a: ObservableSpec, spec_b: ObservableSpec,
                       method: Method) -> CorrelationResult:
    for spec in (spec_a, spec_b):
        if not check_hermitian(spec):
            raise ValueError(f"observable {spec.label} is not hermitian")
    if isinstance(method, ClosedForm):
        if not (_is_parity_inversion(spec_a) and _is_parity_inversion(spec_b)):
            raise ValueError("closed form exists only for the parity inversion")
        if spec_a.shift[1] != 0.0 or spec_b.shift[1] != 0.0:
            raise ValueError("closed form requires position-only (real) shifts")
        val = KERNEL_SIGN * closed_form_E(spec_a.shift[0], spec_b.shift[0], state)
        return CorrelationResult(val, 0.0, True, "closed_form")
    if isinstance(method, Quadrature):
        return _quadrature_E(state, spec_a, spec_b, method)
    if isinstance(method, FockTruncation):
        return _fock_E(state, spec_a, spec_b, method)
    raise TypeError(f"unknown correlation method {method!r}")


_cached_detail = lru_cache(maxsize=8192)(correlation_detail)


def correlation(state: EprState, spec_a: ObservableSpec, spec_b: ObservableSpec,
                method: Method | None = None) -> float:
    """E = <Psi| A x B |Psi>; raises :class:`ConvergenceError` on failure."""
    res = _cached_detail(state, spec_a, spec_b, method or Quadrature())
    if not res.converged:
        raise ConvergenceError(f"{res.method} correlation did not converge", res.error)
    return res.value


# ---------------------------------------------------------------------------
# Bell combinations and scans
# ---------------------------------------------------------------------------

def _bell_detail(state, spec, settings: BellSettings, method) -> tuple[float, float, bool]:
    total, err, ok = 0.0, 0.0, True
    for sa, sb, sign in settings.pairs():
        res = _cached_detail(state, spec.shifted(*sa), spec.shifted(*sb), method)
        total += sign * res.value
        err += res.error
        ok = ok and res.converged
    return total, err, ok


def bell_value(state: EprState, spec: ObservableSpec, settings: BellSettings,
               method: Method | None = None) -> float:
    """B = E(a,b) + E(a,b') + E(a',b) - E(a',b') with the same observable for both parties."""
    val, err, ok = _bell_detail(state, spec, settings, method or Quadrature())
    if not ok:
        raise ConvergenceError("Bell combination did not converge", err)
    return val


@dataclass
class ScanResult:
    n_grid: np.ndarray
    d_grid: np.ndarray
    values: np.ndarray
    converged: np.ndarray
    errors: np.ndarray
    method: str
    kind: str
    observable: str = ""
    s: float | None = None

    def __post_init__(self):
        shape = (len(self.n_grid), len(self.d_grid))
        for arr in (self.values, self.converged, self.errors):
            if arr.shape != shape:
                raise ValueError("scan arrays have inconsistent dimensions")

    def max_abs(self) -> tuple[float, float, float]:
        """(n_mean, d, |B|) of the largest converged cell."""
        masked = np.where(self.converged, np.abs(self.values), -np.inf)
        i, j = np.unravel_index(np.argmax(masked), masked.shape)
        return float(self.n_grid[i]), float(self.d_grid[j]), float(masked[i, j])

    def rows(self) -> Iterable[tuple[float, float, float, bool]]:
        for i, n in enumerate(self.n_grid):
            for j, d in enumerate(self.d_grid):
                yield float(d), float(n), float(self.values[i, j]), bool(self.converged[i, j])


def _workers() -> int:
    env = os.environ.get("CVBELL_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _scan(n_grid, d_grid, spec, method, settings_fn, kind) -> ScanResult:
    n_grid = np.asarray(list(n_grid), dtype=float)
    d_grid = np.asarray(list(d_grid), dtype=float)
    if n_grid.size == 0 or d_grid.size == 0:
        raise ValueError("scan grids must be nonempty")
    states = [EprState(n) for n in n_grid]
    cells = [(i, j) for i in range(n_grid.size) for j in range(d_grid.size)]

    def run(cell):
        i, j = cell
        return _bell_detail(states[i], spec, settings_fn(d_grid[j]), method)

    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        out = list(pool.map(run, cells))
    shape = (n_grid.size, d_grid.size)
    values = np.array([o[0] for o in out]).reshape(shape)
    errors = np.array([o[1] for o in out]).reshape(shape)
    conv = np.array([o[2] for o in out]).reshape(shape)
    return ScanResult(n_grid, d_grid, values, conv, errors, method.tag, kind,
                      spec.label, spec.profile.s)


def bell_real_scan(state_grid: Sequence[float], d_grid: Sequence[float],
                   spec: ObservableSpec | None = None, method: Method | None = None) -> ScanResult:
    """B(d, n) for position-only shifts."""
    spec = spec or make_parity_inversion()
    if method is None:
        method = ClosedForm() if _is_parity_inversion(spec) else Quadrature()
    return _scan(state_grid, d_grid, spec, method, real_settings, "real")


def bell_complex_scan(state_grid: Sequence[float], d_grid: Sequence[float],
                      spec: ObservableSpec | None = None, method: Method | None = None) -> ScanResult:
    """B(d, n) for the composed position and momentum shifts."""
    spec = spec or make_parity_inversion()
    method = method or Quadrature()
    if isinstance(method, ClosedForm):
        raise ValueError("no closed form exists for momentum shifts")
    return _scan(state_grid, d_grid, spec, method, complex_settings, "complex")


def _golden_max(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    inv = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def max_violation(state: EprState, spec: ObservableSpec | None = None, scan_kind: str = "real",
                  method: Method | None = None, grid_points: int = 61,
                  d_max: float | None = None, tol: float = 1e-6) -> tuple[float, float]:
    """(d*, |B|*) maximizing |B| over d >= 0 by grid search and golden section."""
    spec = spec or make_parity_inversion()
    if scan_kind not in ("real", "complex"):
        raise ValueError(f"scan kind must be 'real' or 'complex', got {scan_kind!r}")
    settings_fn = real_settings if scan_kind == "real" else complex_settings
    if method is None:
        method = ClosedForm() if (scan_kind == "real" and _is_parity_inversion(spec)) else Quadrature()
    if d_max is None:
        d_max = 4.0 / math.sqrt(state.c2 + state.s2)

    def absb(d):
        val, err, ok = _bell_detail(state, spec, settings_fn(d), method)
        if not ok:
            raise ConvergenceError(f"Bell value at d={d:g} did not converge", err)
        return abs(val)

    grid = np.linspace(0.0, d_max, grid_points)
    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        vals = list(pool.map(absb, grid))
    k = int(np.argmax(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid_points - 1)]
    if hi - lo <= tol:
        return float(grid[k]), float(vals[k])
    d_star, b_star = _golden_max(absb, lo, hi, tol)
    if vals[k] > b_star:
        return float(grid[k]), float(vals[k])
    return d_star, b_star


def unsharp_threshold(state: EprState, l: int, s_list: Sequence[float],
                      scan_kind: str = "real", method: Method | None = None) -> list[tuple[float, float]]:
    """(s, max_d |B|) for the smooth family ``f_l`` at each steepness."""
    if not s_list:
        raise ValueError("s_list must be nonempty")
    return [(float(s), max_violation(state, make_unsharp(l, s), scan_kind, method)[1]) for s in s_list]


def oracle_compare(state: EprState, spec: ObservableSpec,
                   settings_list: Sequence[tuple[Shift, Shift]],
                   methods: Sequence[Method] | None = None) -> dict[tuple[str, str], float]:
    """Largest signed discrepancy |E_1 - E_2| per pair of methods over the settings."""
    if not settings_list:
        raise ValueError("settings list is empty")
    if methods is None:
        methods = [Quadrature(), FockTruncation(256)]
        if _is_parity_inversion(spec) and all(sa[1] == 0 and sb[1] == 0 for sa, sb in settings_list):
            methods.append(ClosedForm())
    report: dict[tuple[str, str], float] = {}
    for sa, sb in settings_list:
        a, b = spec.shifted(*sa), spec.shifted(*sb)
        vals = {}
        for m in methods:
            res = _cached_detail(state, a, b, m)
            vals[m.tag] = res.value if res.converged else math.nan
        tags = list(vals)
        for i in range(len(tags)):
            for j in range(i + 1, len(tags)):
                key = (tags[i], tags[j])
                diff = abs(vals[tags[i]] - vals[tags[j]])
                if math.isnan(diff):
                    diff = math.inf
                report[key] = max(report.get(key, 0.0), diff)
    return report

