"""The two-mode squeezed (NOPA/EPR) state.

Units are hbar = 1 oscillator quadratures. Internally the Wigner function is
normalized to one over plain ``dq_a dp_a dq_b dp_b`` and both wavefunctions
carry the prefactor ``pi^{-1/2}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import GaussianForm2D

__all__ = ["EprState", "PhasePoint", "from_mean_photon", "from_squeezing"]


@dataclass(frozen=True)
class PhasePoint:
    q: float
    p: float

    def __post_init__(self):
        if not (math.isfinite(self.q) and math.isfinite(self.p)):
            raise ValueError("phase-space coordinates must be finite")


@dataclass(frozen=True)
class EprState:
    """Two-mode squeezed vacuum with ``n_mean`` photons per mode.

    ``c2 = 1 + 2 n_mean`` and ``s2 = 2 sqrt(n_mean (n_mean + 1))`` are the
    cosh(2r) / sinh(2r) that appear in every exponent.
    """

    n_mean: float
    r: float = field(init=False)
    c2: float = field(init=False)
    s2: float = field(init=False)

    def __post_init__(self):
        n = self.n_mean
        if not math.isfinite(n) or n < 0:
            raise ValueError(f"n_mean must be finite and >= 0, got {n}")
        object.__setattr__(self, "n_mean", float(n))
        object.__setattr__(self, "r", math.asinh(math.sqrt(n)))
        object.__setattr__(self, "c2", 1.0 + 2.0 * n)
        object.__setattr__(self, "s2", 2.0 * math.sqrt(n * (n + 1.0)))

    # -- Schmidt form ------------------------------------------------------

    @property
    def schmidt_ratio(self) -> float:
        """tanh(r)^2 = n/(n+1): the geometric ratio of the Schmidt weights."""
        return self.n_mean / (1.0 + self.n_mean)

    def schmidt_coefficient(self, n: int) -> float:
        if n < 0:
            raise ValueError("Fock index must be >= 0")
        if self.n_mean == 0:
            return 1.0 if n == 0 else 0.0
        return math.exp(0.5 * n * math.log(self.schmidt_ratio)) / math.sqrt(1.0 + self.n_mean)

    def schmidt_coefficients(self, count: int) -> np.ndarray:
        if self.n_mean == 0:
            out = np.zeros(count)
            out[0] = 1.0
            return out
        n = np.arange(count)
        return np.exp(0.5 * n * math.log(self.schmidt_ratio)) / math.sqrt(1.0 + self.n_mean)

    def schmidt_tail(self, count: int) -> float:
        """Norm-squared weight beyond the first ``count`` Schmidt terms."""
        return self.schmidt_ratio ** count

    def default_truncation(self, tol: float = 1e-12, cap: int = 2048) -> int:
        x = self.schmidt_ratio
        if x == 0:
            return 1
        return int(min(cap, max(1, math.ceil(math.log(tol) / math.log(x)))))

    # -- position / momentum / phase space ----------------------------------

    def position_amplitude(self, q_a, q_b):
        return np.exp(-0.5 * self.c2 * (q_a * q_a + q_b * q_b) + self.s2 * q_a * q_b) / math.sqrt(math.pi)

    def momentum_amplitude(self, p_a, p_b):
        return np.exp(-0.5 * self.c2 * (p_a * p_a + p_b * p_b) - self.s2 * p_a * p_b) / math.sqrt(math.pi)

    def wigner(self, q_a, p_a, q_b, p_b):
        expo = (-self.c2 * (p_a * p_a + p_b * p_b) - 2 * self.s2 * p_a * p_b
                - self.c2 * (q_a * q_a + q_b * q_b) + 2 * self.s2 * q_a * q_b)
        return np.exp(expo) / math.pi ** 2

    def position_density_form(self) -> GaussianForm2D:
        """|Psi(q_a, q_b)|^2 as a Gaussian form."""
        return GaussianForm2D(self.c2, self.c2, self.s2, const=-math.log(math.pi))

    def momentum_density_form(self) -> GaussianForm2D:
        return GaussianForm2D(self.c2, self.c2, -self.s2, const=-math.log(math.pi))

    def covariance_matrix(self) -> np.ndarray:
        """Covariance of (q_a, q_b, p_a, p_b) under the Wigner function."""
        v, c = 0.5 * self.c2, 0.5 * self.s2
        return np.array([
            [v, c, 0, 0],
            [c, v, 0, 0],
            [0, 0, v, -c],
            [0, 0, -c, v],
        ])


def from_mean_photon(n_mean: float) -> EprState:
    return EprState(n_mean)


def from_squeezing(r: float) -> EprState:
    if not math.isfinite(r) or r < 0:
        raise ValueError(f"squeezing r must be finite and >= 0, got {r}")
    return EprState(math.sinh(r) ** 2)
