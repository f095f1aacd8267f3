"""The fixed window profile used by every test-function family.

One bit-exact choice, shared everywhere:

    phi(u) = sinc(2*GAMMA*u) * exp(-u^2 / (2*BETA^2)),   sinc(v) = sin(pi v)/(pi v)

with GAMMA = 9/20 and BETA = 24.  Its Fourier transform is the indicator of
[-GAMMA, GAMMA] (scaled) convolved with a Gaussian of width 1/(2 pi BETA), so
the Fourier mass outside [-1/2, 1/2] is below erfc(sqrt(2) pi BETA (1/2 -
GAMMA)) ~ 5e-14, i.e. the profile is band-limited to |xi| <= 1/2 up to a
10^-12 truncation.  In space, |phi(u)| <= exp(-u^2/1152)/(2 pi GAMMA |u|)
drops below 1e-12 by |u| = SUPPORT_CUTOFF = 160, where the profile is
truncated to exactly zero.

Multi-dimensional bumps are tensor products of this profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

GAMMA = 0.45
BETA = 24.0
SUPPORT_CUTOFF = 160.0


def _phi_raw(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    out = np.sinc(2.0 * GAMMA * u) * np.exp(-(u**2) / (2.0 * BETA**2))
    return np.where(np.abs(u) <= SUPPORT_CUTOFF, out, 0.0)


@dataclass(frozen=True)
class BumpProfile:
    """Callable profile with cached power norms and a sampling table."""

    gamma: float = GAMMA
    beta: float = BETA

    def __call__(self, u) -> np.ndarray:
        return _phi_raw(u)

    def power_norm(self, p: float, inner_radius: float = SUPPORT_CUTOFF,
                   spacing: float = 1.0 / 64) -> float:
        """(integral of |phi|^p)^(1/p) by midpoint quadrature at `spacing`."""
        return _power_norm_cached(round(p * 1024), inner_radius, spacing)

    def table(self, radius: float, du: float) -> np.ndarray:
        """Samples phi(-radius), phi(-radius + du), ..., phi(radius)."""
        m = int(round(2 * radius / du))
        return _phi_raw(-radius + du * np.arange(m + 1))


@lru_cache(maxsize=32)
def _power_norm_cached(p_scaled: int, radius: float, spacing: float) -> float:
    p = p_scaled / 1024.0
    u = (np.arange(int(2 * radius / spacing)) + 0.5) * spacing - radius
    vals = np.abs(_phi_raw(u)) ** p
    return float(np.sum(vals) * spacing) ** (1.0 / p)


default_bump = BumpProfile()


def tensor_bump(X: np.ndarray) -> np.ndarray:
    """Product profile over the last axis: eta(x) = prod_i phi(x_i)."""
    return np.prod(_phi_raw(np.asarray(X, dtype=float)), axis=-1)
