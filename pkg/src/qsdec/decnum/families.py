"""The test-function families behind the sharpness experiments.

Two constructions:

* modulated: f_cap(x) = eta(delta^2 x) e(c_cap . x) with c_cap the surface
  point over the cap center and eta the fixed tensor bump.  A common slowly
  varying envelope times per-cap unit phases.
* rescaled: f_cap = M_cap f, the parabolic-rescaling orbit of the fixed bump
  f(u) = prod phi(u_i); concretely e(a . x' + P(a) . x'') *
  prod_i phi(delta x'_i) * prod_l phi((delta x' G)_l + delta^2 x''_l)
  with a the cap anchor and G = grad P(a).

Plus grid families realized through the extension operator: each cap's piece
is the extension integral of a sampled g, i.e. a finite sum of unit phases
with quadrature weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from ..quadforms import Cap, QuadTuple, caps_partition, subcaps
from .bump import default_bump, tensor_bump
from .extension import GridFunction


@dataclass
class ExampleFamily:
    kind: str  # modulated | rescaled | grid
    T: QuadTuple
    delta: Fraction
    caps: List[Cap]
    # phase data: freqs[k] is (m_k, d+n); weights[k] matches (unit for the
    # analytic families)
    freqs: List[np.ndarray]
    weights: List[np.ndarray]
    # rescaled-family geometry
    anchors: Optional[np.ndarray] = None  # (NC, d)
    pvals: Optional[np.ndarray] = None    # (NC, n)
    grads: Optional[np.ndarray] = None    # (NC, d, n)

    @property
    def ncaps(self) -> int:
        return len(self.caps)

    def has_common_envelope(self) -> bool:
        return self.kind == "modulated"

    def envelope(self, X: np.ndarray) -> np.ndarray:
        if self.kind != "modulated":
            raise ValueError("only the modulated family has a common envelope")
        return tensor_bump(float(self.delta) ** 2 * np.asarray(X, dtype=float))

    def eval_cap(self, k: int, X: np.ndarray) -> np.ndarray:
        """f_cap at points X (m, d+n)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind == "rescaled":
            d = self.T.d
            delta = float(self.delta)
            a, pv, G = self.anchors[k], self.pvals[k], self.grads[k]
            phase = np.exp(2j * np.pi * (X[:, :d] @ a + X[:, d:] @ pv))
            u1 = delta * X[:, :d]
            u2 = delta * (X[:, :d] @ G) + delta**2 * X[:, d:]
            env = np.prod(default_bump(u1), axis=1) * np.prod(default_bump(u2), axis=1)
            return phase * env
        vals = self.weights[k] @ np.exp(2j * np.pi * (self.freqs[k] @ X.T))
        if self.kind == "modulated":
            vals = vals * self.envelope(X)
        return vals

    def eval_sum(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        total = np.zeros(len(X), dtype=complex)
        for k in range(self.ncaps):
            total += self.eval_cap(k, X)
        return total


def example_family_modulated(T: QuadTuple, delta) -> ExampleFamily:
    """One unit phase per cap, frequency at the surface point over the center."""
    delta = Fraction(delta)
    caps = caps_partition(delta, T.d)
    freqs, weights = [], []
    for c in caps:
        center = c.center()
        fv = [float(x) for x in center] + [float(v) for v in T.eval_forms(center)]
        freqs.append(np.array([fv]))
        weights.append(np.array([1.0 + 0j]))
    return ExampleFamily("modulated", T, delta, caps, freqs, weights)


def example_family_rescaled(T: QuadTuple, delta) -> ExampleFamily:
    """The parabolic-rescaling orbit of the fixed tensor bump, cap anchors."""
    delta = Fraction(delta)
    caps = caps_partition(delta, T.d)
    anchors, pvals, grads, freqs, weights = [], [], [], [], []
    for c in caps:
        a = c.anchor
        anchors.append([float(x) for x in a])
        pvals.append([float(v) for v in T.eval_forms(a)])
        grads.append([[float(v) for v in row] for row in T.gradient_matrix(a)])
        freqs.append(np.array([anchors[-1] + pvals[-1]]))
        weights.append(np.array([1.0 + 0j]))
    return ExampleFamily(
        "rescaled", T, delta, caps, freqs, weights,
        anchors=np.array(anchors), pvals=np.array(pvals), grads=np.array(grads),
    )


def family_from_grid(T: QuadTuple, g: GridFunction, delta) -> ExampleFamily:
    """Cap pieces realized as extension integrals of a sampled g."""
    delta = Fraction(delta)
    caps = subcaps(g.domain, delta)
    pts = g.points()
    vals = g.values.ravel()
    forms = np.array([[[float(v) for v in row] for row in M] for M in T.forms])
    Pt = np.einsum("md,ndk,mk->mn", pts, forms, pts)
    h = float(g.h) ** T.d
    freqs, weights = [], []
    for c in caps:
        mask = g.restrict_mask(c)
        freqs.append(np.hstack([pts[mask], Pt[mask]]))
        weights.append(vals[mask] * h)
    return ExampleFamily("grid", T, delta, caps, freqs, weights)


def rescaled_norm_scaling(T: QuadTuple, p: float) -> float:
    """The exact change-of-variables exponent: ||f_cap||_p ~ delta^-(d+2n)/p."""
    return (T.d + 2 * T.n) / p


def modulated_norm_scaling(T: QuadTuple, p: float) -> float:
    """||f_cap||_p ~ delta^-2(d+n)/p for the modulated family."""
    return 2 * (T.d + T.n) / p
