"""Extension operator on sampled grid functions, and the standard weights."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from ..quadforms import Cap, QuadTuple


@dataclass(frozen=True)
class WeightSpec:
    """w(x) = (1 + |x - center| / radius)^-E."""

    center: np.ndarray
    radius: float
    E: float

    @staticmethod
    def ball(dim: int, radius: float, E: Optional[float] = None) -> "WeightSpec":
        return WeightSpec(np.zeros(dim), float(radius), float(E if E is not None else 10 * dim))


def weight_eval(W: WeightSpec, x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    dist = np.linalg.norm(x - W.center[None, :], axis=1)
    return (1.0 + dist / W.radius) ** (-W.E)


@dataclass
class GridFunction:
    """Complex samples of g on the midpoint lattice of a cube at spacing h."""

    domain: Cap
    h: Fraction
    values: np.ndarray  # shape (m,)*d, index i maps to anchor + (i + 1/2) h

    def __post_init__(self):
        self.h = Fraction(self.h)
        m = int(self.domain.scale / self.h)
        if m * self.h != self.domain.scale:
            raise ValueError("spacing must divide the domain side")
        if self.values.shape != (m,) * self.domain.d:
            raise ValueError(f"expected value grid of shape {(m,) * self.domain.d}")

    @staticmethod
    def constant(domain: Cap, h, value=1.0) -> "GridFunction":
        m = int(domain.scale / Fraction(h))
        vals = np.full((m,) * domain.d, value, dtype=complex)
        return GridFunction(domain, Fraction(h), vals)

    def points(self) -> np.ndarray:
        m = self.values.shape[0]
        axes = [float(a) + (np.arange(m) + 0.5) * float(self.h) for a in self.domain.anchor]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)

    def restrict_mask(self, R: Cap) -> np.ndarray:
        """Boolean mask over flattened points for samples inside the subcube R."""
        pts = self.points()
        lo = np.array([float(a) for a in R.anchor])
        hi = lo + float(R.scale)
        return ((pts >= lo - 1e-15) & (pts < hi - 1e-15)).all(axis=1)


class SpacingTooCoarse(ValueError):
    pass


def extension_eval(T: QuadTuple, g: GridFunction, R: Cap, x: Sequence[float]) -> dict:
    """Midpoint-rule value of the extension integral over R at one point x.

    The lattice spacing must satisfy h <= 1/(8 (1 + |x|)) so the phase moves
    less than about pi/4 per cell; a rigid error bound from the second
    derivative of the integrand is reported alongside the value.
    """
    x = np.asarray(x, dtype=float)
    d, n = T.d, T.n
    if len(x) != d + n:
        raise ValueError("evaluation point must live in R^{d+n}")
    if not g.domain.contains_cap(R):
        raise ValueError("R must lie inside the grid function's domain")
    xmax = float(np.max(np.abs(x)))
    if float(g.h) > 1.0 / (8.0 * (1.0 + xmax)):
        raise SpacingTooCoarse(
            f"grid spacing {float(g.h)} too coarse for |x| = {xmax}: "
            f"need h <= {1.0 / (8.0 * (1.0 + xmax))}"
        )
    mask = g.restrict_mask(R)
    pts = g.points()[mask]
    vals = g.values.ravel()[mask]
    forms = np.array([[[float(v) for v in row] for row in M] for M in T.forms])
    Pt = np.einsum("md,ndk,mk->mn", pts, forms, pts)
    phase = pts @ x[:d] + Pt @ x[d:]
    h = float(g.h)
    total = complex(np.sum(vals * np.exp(2j * np.pi * phase)) * h**d)
    # midpoint error: |I - Q| <= |R| h^2 sup|f''| / 24 per dimension
    max_m = max(float(abs(v)) for M in T.forms for row in M for v in row)
    grad_bound = 2 * np.pi * (xmax * (1 + 2 * d * max(max_m, 1.0)))
    err = float(len(pts)) * h**d * d * (h**2) * (grad_bound**2 + grad_bound) / 24.0
    err *= float(np.max(np.abs(vals))) if len(vals) else 0.0
    return {"value": total, "error_bound": err, "points": int(len(pts)), "h": h}
