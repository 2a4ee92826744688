"""Kernel observables ``A = int dq a(q) |q><eps q|`` and their displaced forms.

A spec is an immutable value: reflection sign ``epsilon``, a profile ``a`` and
a phase-space shift ``(q0, p0)``. The displaced kernel is

    <x| D A D^+ |x'> = a(x - q0) exp(i p0 (x - x')) delta(x' - [eps (x - q0) + q0])

which is stored structurally (weight on a reflection line) and never sampled.

Wigner symbols use ``W(q, p) = (1/2pi) int dxi e^{i p xi} <q - xi/2| A |q + xi/2>``
so that the identity has symbol 1/2pi and ``Tr(A rho) = 2pi int W_A W_rho``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import integrate

from .numerics import dawson, gauss_legendre, hermite_functions

__all__ = [
    "Profile",
    "ObservableSpec",
    "WignerSymbol",
    "Boundedness",
    "SymbolError",
    "QuadratureError",
    "make_parity",
    "make_sign",
    "make_parity_inversion",
    "make_unsharp",
    "make_custom",
    "check_hermitian",
    "check_sharp",
    "apply",
    "fock_matrix",
    "wigner_symbol",
    "classify_boundedness",
    "single_mode_expectations",
    "commutator_residuals",
    "pauli_matrices",
]

_REAL_TAGS = {"unit", "sign", "tanh", "expsat", "gausssat"}
_UNSHARP_TAGS = {1: "tanh", 2: "expsat", 3: "gausssat"}


class SymbolError(ValueError):
    """Raised when a Wigner symbol cannot be classified."""


class QuadratureError(RuntimeError):
    def __init__(self, message: str, error: float):
        super().__init__(f"{message} (achieved error estimate {error:.3e})")
        self.error = error


# ---------------------------------------------------------------------------
# Profiles
# ---------------------------------------------------------------------------

def _expsat(q, s):
    q = np.asarray(q, dtype=float)
    return np.sign(q) * -np.expm1(-s * np.abs(q))


def _gausssat(q, s):
    q = np.asarray(q, dtype=float)
    return np.sign(q) * -np.expm1(-s * q * q)


@dataclass(frozen=True)
class Profile:
    """Multiplier ``a(q)`` of a kernel observable.

    Built-in tags are ``unit``, ``sign``, ``tanh``, ``expsat``, ``gausssat``
    (the last three take a steepness ``s``) and ``custom`` (takes ``func``).
    ``imaginary`` multiplies the real profile by ``i``.
    """

    tag: str
    s: float | None = None
    imaginary: bool = False
    func: Callable | None = None

    def __post_init__(self):
        if self.tag == "custom":
            if self.func is None:
                raise ValueError("custom profile needs a function")
        elif self.tag not in _REAL_TAGS:
            raise ValueError(f"unknown profile tag {self.tag!r}")
        if self.tag in {"tanh", "expsat", "gausssat"}:
            if self.s is None or not (self.s > 0 and math.isfinite(self.s)):
                raise ValueError(f"steepness s must be positive, got {self.s}")

    @property
    def builtin(self) -> bool:
        return self.tag != "custom"

    @property
    def kinks(self) -> tuple[float, ...]:
        # tanh and gausssat are smooth, but steep for large s: split there too
        return () if self.tag == "unit" else (0.0,)

    def real_part(self, q):
        """The real function multiplying ``i`` (or 1)."""
        q = np.asarray(q, dtype=float)
        if self.tag == "unit":
            return np.ones_like(q)
        if self.tag == "sign":
            return np.sign(q)
        if self.tag == "tanh":
            return np.tanh(self.s * q)
        if self.tag == "expsat":
            return _expsat(q, self.s)
        if self.tag == "gausssat":
            return _gausssat(q, self.s)
        return self.func(q)

    def __call__(self, q):
        vals = self.real_part(q)
        return 1j * vals if self.imaginary else vals

    @property
    def label(self) -> str:
        base = self.tag if self.s is None else f"{self.tag}(s={self.s:g})"
        return f"i*{base}" if self.imaginary else base


# ---------------------------------------------------------------------------
# Specs and constructors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ObservableSpec:
    epsilon: int
    profile: Profile
    shift: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.epsilon not in (1, -1):
            raise ValueError(f"epsilon must be +1 or -1, got {self.epsilon}")
        q0, p0 = self.shift
        if not (math.isfinite(q0) and math.isfinite(p0)):
            raise ValueError("shift must be finite")
        object.__setattr__(self, "shift", (float(q0), float(p0)))

    def shifted(self, q0: float, p0: float = 0.0) -> "ObservableSpec":
        return replace(self, shift=(q0, p0))

    @property
    def hermitian(self) -> bool:
        return check_hermitian(self)

    @property
    def sharp(self) -> bool:
        return check_sharp(self)

    @property
    def label(self) -> str:
        return f"eps={self.epsilon:+d},{self.profile.label}"


def make_parity() -> ObservableSpec:
    return ObservableSpec(-1, Profile("unit"))


def make_sign() -> ObservableSpec:
    return ObservableSpec(1, Profile("sign"))


def make_parity_inversion() -> ObservableSpec:
    return ObservableSpec(-1, Profile("sign", imaginary=True))


def make_unsharp(l: int, s: float) -> ObservableSpec:
    """Parity inversion with ``sgn`` replaced by the smooth family ``f_l(., s)``."""
    if l not in _UNSHARP_TAGS:
        raise ValueError(f"family index must be 1, 2 or 3, got {l}")
    if not (s > 0 and math.isfinite(s)):
        raise ValueError(f"steepness s must be positive, got {s}")
    return ObservableSpec(-1, Profile(_UNSHARP_TAGS[l], s=float(s), imaginary=True))


def make_custom(func: Callable, epsilon: int, imaginary: bool = False) -> ObservableSpec:
    return ObservableSpec(epsilon, Profile("custom", func=func, imaginary=imaginary))


_CHECK_GRID = np.concatenate((-np.geomspace(1e-6, 50, 400)[::-1], np.geomspace(1e-6, 50, 400)))


def _parity_of_real_part(profile: Profile) -> int | None:
    """+1 even, -1 odd, None if neither (built-ins known exactly)."""
    if profile.tag == "unit":
        return 1
    if profile.builtin:
        return -1
    f = np.asarray(profile.real_part(_CHECK_GRID))
    g = np.asarray(profile.real_part(-_CHECK_GRID))
    if np.iscomplexobj(f) or np.iscomplexobj(g):
        return None
    scale = max(1.0, float(np.max(np.abs(f))))
    if np.allclose(f, g, atol=1e-12 * scale, rtol=0):
        return 1
    if np.allclose(f, -g, atol=1e-12 * scale, rtol=0):
        return -1
    return None


def check_hermitian(spec: ObservableSpec) -> bool:
    """``a(q) == conj(a(q / eps))``."""
    prof = spec.profile
    if prof.builtin:
        if spec.epsilon == 1:
            return not prof.imaginary
        parity = _parity_of_real_part(prof)
        # conj(a(-q)) = a(q): real even, or imaginary odd
        return (parity == 1) != prof.imaginary
    a = np.asarray(prof(_CHECK_GRID), dtype=complex)
    b = np.conj(np.asarray(prof(spec.epsilon * _CHECK_GRID), dtype=complex))
    scale = max(1.0, float(np.max(np.abs(a))))
    return bool(np.allclose(a, b, atol=1e-12 * scale, rtol=0))


def check_sharp(spec: ObservableSpec) -> bool:
    """``a(q) a(eps q) == 1`` almost everywhere."""
    prof = spec.profile
    if prof.builtin:
        if prof.tag not in {"unit", "sign"}:
            return False
        a = np.asarray(prof(_CHECK_GRID), dtype=complex)
        b = np.asarray(prof(spec.epsilon * _CHECK_GRID), dtype=complex)
        return bool(np.allclose(a * b, 1.0, atol=1e-14, rtol=0))
    a = np.asarray(prof(_CHECK_GRID), dtype=complex)
    b = np.asarray(prof(spec.epsilon * _CHECK_GRID), dtype=complex)
    return bool(np.allclose(a * b, 1.0, atol=1e-10, rtol=0))


# ---------------------------------------------------------------------------
# Action on wavefunctions and Fock matrices
# ---------------------------------------------------------------------------

def reflected_point(spec: ObservableSpec, x):
    q0 = spec.shift[0]
    return spec.epsilon * (x - q0) + q0


def kernel_weight(spec: ObservableSpec, x):
    """Weight ``a(x - q0) exp(i p0 (x - x'))`` on the kernel line at ``x``."""
    q0, p0 = spec.shift
    x = np.asarray(x, dtype=float)
    w = spec.profile(x - q0)
    if p0 != 0.0 and spec.epsilon == -1:
        w = w * np.exp(2j * p0 * (x - q0))
    return w


def apply(spec: ObservableSpec, psi: Callable, x):
    """Evaluate ``(A psi)(x)``."""
    x = np.asarray(x, dtype=float)
    return kernel_weight(spec, x) * psi(reflected_point(spec, x))


def _line_nodes(center: float, half_width: float, kinks, panel: float, order: int, levels: int = 12):
    """Composite Gauss-Legendre nodes on [center - hw, center + hw] split at kinks."""
    lo, hi = center - half_width, center + half_width
    cuts = sorted(k for k in kinks if lo < k < hi)
    ends = [lo] + cuts + [hi]
    x, w = gauss_legendre(order)
    geo = 4.0 ** -np.arange(levels, 0, -1)
    edges = []
    for i in range(len(ends) - 1):
        a, b = ends[i], ends[i + 1]
        n = max(1, int(math.ceil((b - a) / panel)))
        e = list(np.linspace(a, b, n + 1))
        if i > 0:  # graded toward the left kink
            first = e[1] - e[0]
            e = [a] + list(a + first * geo) + e[1:]
        if i < len(ends) - 2:
            last = e[-1] - e[-2]
            e = e[:-1] + list(b - last * geo[::-1]) + [b]
        edges.extend(e if not edges else e[1:])
    edges = np.asarray(edges)
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    return (0.5 * (a + b) + half * x).ravel(), (half * w).ravel()


def _fock_once(spec: ObservableSpec, n: int, order: int, chunk: int = 4096) -> np.ndarray:
    q0, _ = spec.shift
    reach = math.sqrt(2 * n + 1) + 10.0
    panel = min(1.0, 8.0 / math.sqrt(2 * n + 1))
    # y = x - q0; both phi_m(q0 + y) and phi_k(q0 + eps y) must be covered
    y, w = _line_nodes(0.0, reach + abs(q0), spec.profile.kinks, panel, order)
    out = np.zeros((n, n), dtype=complex)
    for start in range(0, y.size, chunk):
        x = q0 + y[start:start + chunk]
        phi_x = hermite_functions(n - 1, x)
        phi_r = phi_x if spec.epsilon == 1 else hermite_functions(n - 1, reflected_point(spec, x))
        wk = w[start:start + chunk] * kernel_weight(spec, x)
        out += (phi_x * wk) @ phi_r.T
    return out


def fock_matrix(spec: ObservableSpec, n: int, tol: float = 1e-10, order: int = 16) -> np.ndarray:
    """Matrix elements ``<m| A |k>`` for ``m, k < n``.

    Computed by composite Gauss-Legendre over the kernel line at two orders;
    raises :class:`QuadratureError` if they disagree by more than ``tol``.
    """
    if n < 1:
        raise ValueError("N must be >= 1")
    if not check_hermitian(spec):
        raise ValueError(f"observable {spec.label} is not hermitian")
    lo = _fock_once(spec, n, order)
    hi = _fock_once(spec, n, order + 8)
    err = float(np.max(np.abs(hi - lo)))
    if err > tol:
        raise QuadratureError(f"Fock matrix of {spec.label} did not converge", err)
    return hi


def pauli_matrices(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Truncated Fock matrices of (P, S, R)."""
    return (fock_matrix(make_parity(), n), fock_matrix(make_sign(), n),
            fock_matrix(make_parity_inversion(), n))


def commutator_residuals(n: int, block: int) -> tuple[float, float, float]:
    """Max-entry residuals of [S,R]=2iP, [P,S]=2iR, [R,P]=2iS on the leading block."""
    if not 1 <= block <= n:
        raise ValueError("block must lie in [1, N]")
    p, s, r = pauli_matrices(n)
    b = slice(0, block)

    def res(x, y, z):
        return float(np.max(np.abs((x @ y - y @ x - 2j * z)[b, b])))

    return res(s, r, p), res(p, s, r), res(r, p, s)


# ---------------------------------------------------------------------------
# Wigner symbols
# ---------------------------------------------------------------------------

class Boundedness(enum.Enum):
    BOUNDED = "bounded"
    SINGULAR = "singular"


@dataclass(frozen=True)
class WignerSymbol:
    """Phase-space symbol of an observable.

    ``regular``: a bounded function ``func(q, p)`` with supremum ``sup``.
    ``singular_line``: ``delta_q * delta(q) * [pv * P(1/p) + smooth(p) + delta_p * delta(p)]``.
    """

    kind: str
    func: Callable | None = field(default=None, compare=False)
    sup: float | None = None
    kinks: tuple[float, ...] = ()
    p_dependent: bool = False
    delta_q_coefficient: float = 0.0
    pv_coefficient: float = 0.0
    smooth: Callable | None = field(default=None, compare=False)
    delta_p_coefficient: float = 0.0
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("regular", "singular_line"):
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        if self.kind == "regular" and self.func is None:
            raise ValueError("regular symbol needs a function")

    def __call__(self, q, p):
        if self.kind != "regular":
            raise SymbolError("a singular symbol has no pointwise values")
        return self.func(q, p)

    def smooth_part(self, p):
        p = np.asarray(p, dtype=float)
        if self.smooth is None:
            return np.zeros_like(p)
        return self.smooth(p)

    @property
    def line_pv(self) -> float:
        """Overall coefficient of delta(q) P(1/p)."""
        return self.delta_q_coefficient * self.pv_coefficient

    @property
    def line_delta_p(self) -> float:
        """Overall coefficient of delta(q) delta(p)."""
        return self.delta_q_coefficient * self.delta_p_coefficient


def _tanh_smooth(s):
    # (1/s) [csch(z) - 1/z] with z = pi p / s
    def smooth(p):
        z = np.pi * np.asarray(p, dtype=float) / s
        small = np.abs(z) < 1e-3
        zz = np.where(small | (np.abs(z) > 700), 1.0, z)
        exact = 1.0 / np.sinh(zz) - 1.0 / zz
        out = np.where(small, -z / 6 + 7 * z ** 3 / 360, exact)
        out = np.where(np.abs(z) > 700, -1.0 / np.where(small, 1.0, z), out)
        return out / s
    return smooth


def _expsat_smooth(s):
    return lambda p: -4.0 * np.asarray(p) / (np.pi * (s * s + 4.0 * np.asarray(p) ** 2))


def _gausssat_smooth(s):
    r = math.sqrt(s)
    return lambda p: -2.0 / (np.pi * r) * dawson(np.asarray(p) / r)


def _custom_smooth(f: Callable):
    # -(2/pi) int_0^inf (1 - f(u)) sin(2 p u) du, Fourier-sine via QAWF
    def one(p):
        if p == 0:
            return 0.0
        val, _ = integrate.quad(lambda u: 1.0 - float(f(np.array(u))), 0, np.inf,
                                weight="sin", wvar=2 * abs(p), limlst=200)
        return -math.copysign(2.0 / math.pi * val, p)
    return np.vectorize(one, otypes=[float])


def wigner_symbol(spec: ObservableSpec) -> WignerSymbol:
    """Structured Wigner symbol of an unshifted observable."""
    if spec.shift != (0.0, 0.0):
        raise ValueError("wigner_symbol expects an unshifted observable")
    prof = spec.profile
    if spec.epsilon == 1:
        if prof.imaginary:
            raise SymbolError("non-hermitian observable has no real symbol")
        if prof.builtin:
            sup = 1.0 / (2 * math.pi)
        else:
            grid = np.linspace(-60, 60, 24001)
            sup = float(np.max(np.abs(prof(grid)))) / (2 * math.pi)
            if not math.isfinite(sup):
                raise SymbolError("symbol not classifiable: profile is unbounded")
        return WignerSymbol(
            "regular",
            func=lambda q, p: np.asarray(prof(q)) / (2 * math.pi) + 0.0 * np.asarray(p),
            sup=sup, kinks=prof.kinks, label=prof.label,
        )

    if prof.tag == "unit" and not prof.imaginary:
        return WignerSymbol("singular_line", delta_q_coefficient=0.5, delta_p_coefficient=1.0,
                            label=prof.label)
    if not check_hermitian(spec):
        raise SymbolError("symbol not classifiable: observable is not hermitian")
    smooth_factory = {"tanh": _tanh_smooth, "expsat": _expsat_smooth, "gausssat": _gausssat_smooth}
    if prof.builtin:
        smooth = smooth_factory[prof.tag](prof.s) if prof.tag in smooth_factory else None
        return WignerSymbol("singular_line", delta_q_coefficient=0.5,
                            pv_coefficient=1.0 / math.pi, smooth=smooth, label=prof.label)
    # custom eps=-1, i * odd real profile with a sign-type tail
    f = prof.real_part
    far = np.array([40.0, 60.0, 80.0])
    tail = np.asarray(f(far))
    if not (prof.imaginary and not np.iscomplexobj(tail) and _parity_of_real_part(prof) == -1
            and np.allclose(tail, 1.0, atol=1e-8)):
        raise SymbolError("symbol not classifiable: no sign-type tail")
    return WignerSymbol("singular_line", delta_q_coefficient=0.5,
                        pv_coefficient=1.0 / math.pi, smooth=_custom_smooth(f),
                        label=prof.label)


def classify_boundedness(symbol: WignerSymbol) -> Boundedness:
    return Boundedness.BOUNDED if symbol.kind == "regular" else Boundedness.SINGULAR


# ---------------------------------------------------------------------------
# Single-mode expectations
# ---------------------------------------------------------------------------

def single_mode_expectations(psi: Callable, reach: float = 30.0) -> tuple[float, float, float]:
    """(<P>, <S>, <R>) for a normalized wavefunction by split quadrature."""
    q, w = _line_nodes(0.0, reach, (0.0,), 0.5, 24)
    f = np.asarray(psi(q), dtype=complex)
    fr = np.asarray(psi(-q), dtype=complex)
    norm = float(np.sum(w * np.abs(f) ** 2))
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"wavefunction is not normalized: norm = {norm:.9g}")
    overlap = np.conj(f) * fr
    sgn = np.sign(q)
    vals = (np.sum(w * overlap), np.sum(w * sgn * np.abs(f) ** 2), 1j * np.sum(w * sgn * overlap))
    for v in vals:
        if abs(v.imag) > 1e-8:
            raise ValueError(f"expectation has imaginary part {v.imag:.3e}")
    return tuple(float(v.real) for v in vals)
