"""Correlations as phase-space averages against the positive EPR Wigner function.

With the state's Wigner function normalized to one and each observable's
symbol rescaled to a response function ``2 pi W(q, p)``, the correlation is

    E = int dq_a dp_a dq_b dp_b  R_A(q_a, p_a) R_B(q_b, p_b) W_Psi(q_a, p_a, q_b, p_b)

which is a local hidden-variable average whenever the responses are bounded
by one. Singular symbols are refused.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .correlators import BellSettings, Quadrature
from .epr_state import EprState
from .numerics import gaussian_rule_2d, integrate_gaussian_2d, mvn_sample
from .observables import Boundedness, SymbolError, WignerSymbol, classify_boundedness

__all__ = [
    "MonteCarlo",
    "LhvRun",
    "lhv_correlation",
    "lhv_chsh_scan",
    "lhv_chsh_grid",
    "sample_state",
    "random_shifts",
]

SAMPLE_BLOCK = 1 << 16
SINGULAR_MESSAGE = (
    "observable has a singular (unbounded) Wigner symbol; only bounded symbols act as "
    "local hidden-variable responses, so a violation cannot be excluded and the "
    "phase-space average is not defined"
)

Shift = tuple[float, float]


@dataclass(frozen=True)
class MonteCarlo:
    count: int = 1_000_000
    seed: int = 0
    tag = "monte_carlo"

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")


@dataclass(frozen=True)
class LhvRun:
    method: MonteCarlo | Quadrature
    symbols: tuple[WignerSymbol, WignerSymbol]
    shifts: BellSettings

    def __post_init__(self):
        for sym in self.symbols:
            _require_regular(sym)


def _require_regular(symbol: WignerSymbol) -> None:
    if classify_boundedness(symbol) is not Boundedness.BOUNDED:
        raise SymbolError(SINGULAR_MESSAGE)


def _response(symbol: WignerSymbol, shift: Shift, q, p):
    return 2 * math.pi * np.real(symbol(q - shift[0], p - shift[1]))


def sample_state(state: EprState, count: int, seed: int = 0) -> np.ndarray:
    """Phase-space samples, columns (q_a, q_b, p_a, p_b).

    The stream is drawn in fixed blocks with spawned child seeds, so a given
    (count, seed) is reproducible however the blocks are distributed.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    cov = state.covariance_matrix()
    children = np.random.SeedSequence(seed).spawn(-(-count // SAMPLE_BLOCK))
    blocks = []
    for i, child in enumerate(children):
        size = min(SAMPLE_BLOCK, count - i * SAMPLE_BLOCK)
        blocks.append(mvn_sample(cov, size, seed=child.generate_state(1)[0]))
    return np.concatenate(blocks)


@lru_cache(maxsize=8)
def _cached_samples(state: EprState, count: int, seed: int) -> np.ndarray:
    out = sample_state(state, count, seed)
    out.setflags(write=False)
    return out


def _quadrature(state, sym_a, sym_b, shift_a, shift_b, method: Quadrature) -> float:
    if sym_a.p_dependent or sym_b.p_dependent:
        # p-plane by a fixed tensor rule, q-plane adaptively
        pa, pb, pw = gaussian_rule_2d(state.momentum_density_form(), 24)

        def f(x, y):
            ra = _response(sym_a, shift_a, x[..., None], pa)
            rb = _response(sym_b, shift_b, y[..., None], pb)
            return np.sum(ra * rb * pw, axis=-1)
    else:
        def f(x, y):
            return _response(sym_a, shift_a, x, 0.0) * _response(sym_b, shift_b, y, 0.0)

    spec = method.spec.with_splits(
        sorted({shift_a[0] + k for k in sym_a.kinks}),
        sorted({shift_b[0] + k for k in sym_b.kinks}),
    )
    res = integrate_gaussian_2d(f, state.position_density_form(), spec)
    if not res.converged:
        raise RuntimeError(f"phase-space quadrature did not converge (error {res.error:.3e})")
    return res.real


def _monte_carlo(state, sym_a, sym_b, shift_a, shift_b, method: MonteCarlo) -> float:
    s = _cached_samples(state, method.count, method.seed)
    ra = _response(sym_a, shift_a, s[:, 0], s[:, 2])
    rb = _response(sym_b, shift_b, s[:, 1], s[:, 3])
    return float(np.mean(ra * rb))


def lhv_correlation(state: EprState, symbol_a: WignerSymbol, symbol_b: WignerSymbol,
                    shift_a: Shift = (0.0, 0.0), shift_b: Shift = (0.0, 0.0),
                    method: MonteCarlo | Quadrature | None = None) -> float:
    """Phase-space average of the two shifted response functions."""
    _require_regular(symbol_a)
    _require_regular(symbol_b)
    method = method or Quadrature()
    if isinstance(method, MonteCarlo):
        return _monte_carlo(state, symbol_a, symbol_b, shift_a, shift_b, method)
    return _quadrature(state, symbol_a, symbol_b, shift_a, shift_b, method)


def _check_response_bound(symbol: WignerSymbol) -> None:
    _require_regular(symbol)
    if symbol.sup is None or 2 * math.pi * symbol.sup > 1 + 1e-12:
        raise ValueError("response function must be bounded by 1")


def lhv_chsh_scan(state: EprState, symbol: WignerSymbol, settings_list: Sequence[BellSettings],
                  method: MonteCarlo | Quadrature | None = None) -> tuple[float, BellSettings]:
    """max |B| over the given settings, both parties using ``symbol``."""
    _check_response_bound(symbol)
    if not settings_list:
        raise ValueError("settings list is empty")
    cache: dict[tuple[Shift, Shift], float] = {}

    def corr(sa, sb):
        if (sa, sb) not in cache:
            cache[sa, sb] = lhv_correlation(state, symbol, symbol, sa, sb, method)
        return cache[sa, sb]

    best, arg = -1.0, settings_list[0]
    for st in settings_list:
        b = abs(sum(sign * corr(sa, sb) for sa, sb, sign in st.pairs()))
        if b > best:
            best, arg = b, st
    return best, arg


def lhv_chsh_grid(state: EprState, symbol: WignerSymbol, alice: Sequence[Shift],
                  bob: Sequence[Shift], method: MonteCarlo | Quadrature | None = None):
    """max |B| over every CHSH choice (a, a', b, b') from the two shift lists.

    Returns ``(max_abs_B, (i, i2, j, j2), correlation_matrix)``.
    """
    _check_response_bound(symbol)
    corr = np.array([[lhv_correlation(state, symbol, symbol, tuple(a), tuple(b), method)
                      for b in bob] for a in alice])
    # B[i, i2, j, j2] = E[i,j] + E[i,j2] + E[i2,j] - E[i2,j2]
    b = (corr[:, None, :, None] + corr[:, None, None, :]
         + corr[None, :, :, None] - corr[None, :, None, :])
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    return float(np.abs(b[idx])), tuple(int(i) for i in idx), corr


def random_shifts(count: int, seed: int, scale: float = 1.0) -> list[Shift]:
    rng = np.random.Generator(np.random.PCG64(seed))
    pts = rng.uniform(-scale, scale, size=(count, 2))
    return [(float(q), float(p)) for q, p in pts]
