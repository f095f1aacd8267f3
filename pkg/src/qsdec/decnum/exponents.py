"""Exact exponent arithmetic: the sharpness lower bound, the interpolation
parameters (p~, kappa), the multilinear gain eta~, and the descent recursion
eta <- max(Lambda, eta - eta~(eta - d(1/2 - 1/p)))."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple


def lower_bound_exponent(d: int, n: int, p, q) -> Fraction:
    """max(d - d/q - (d+2n)/p, d(1/2 - 1/q)), exactly."""
    pf, qf = Fraction(p), Fraction(q)
    if pf < 2 or qf < 2:
        raise ValueError("require p, q >= 2")
    first = d - Fraction(d) / qf - Fraction(d + 2 * n) / pf
    second = d * (Fraction(1, 2) - 1 / qf)
    return max(first, second)


def kappa_ptilde(d: int, n: int, p) -> Tuple[Fraction, Fraction]:
    """p~ = max(2, pd/(d+n)) and the kappa solving 1/p~ = (1-kappa)/2 + kappa/p.

    kappa <= 1/2 exactly when p <= 2(d+2n)/d; this equivalence is asserted.
    """
    pf = Fraction(p)
    if pf < 2:
        raise ValueError("require p >= 2")
    ptilde = max(Fraction(2), pf * d / (d + n))
    if pf == 2:
        kappa = Fraction(0)
    else:
        # 1/pt = 1/2 - kappa (1/2 - 1/p)
        kappa = (Fraction(1, 2) - 1 / ptilde) / (Fraction(1, 2) - 1 / pf)
    boundary = 2 * Fraction(d + 2 * n, d)
    assert (kappa <= Fraction(1, 2)) == (pf <= boundary)
    return ptilde, kappa


def eta_tilde(sigma, d: int, n: int, p) -> Fraction:
    """sigma (1-kappa)^ceil(d / (2 kappa sigma)), exactly.

    Evaluated as plain arithmetic for every p > 2 (kappa is then in (0, 1)),
    even though the iteration proof only invokes it in the kappa <= 1/2
    regime p <= 2 + 4n/d.
    """
    sf = Fraction(sigma)
    if sf <= 0:
        raise ValueError("sigma must be positive")
    pf = Fraction(p)
    _, kappa = kappa_ptilde(d, n, pf)
    if kappa == 0:
        raise ValueError(
            "kappa = 0 (p d/(d+n) <= 2): no multilinear gain is defined"
        )
    m = math.ceil(Fraction(d) / (2 * kappa * sf))
    return sf * (1 - kappa) ** m


@dataclass
class DescentState:
    d: int
    n: int
    p: Fraction
    Lambda: Fraction
    eta0: Fraction

    def __post_init__(self):
        self.p = Fraction(self.p)
        self.Lambda = Fraction(self.Lambda)
        self.eta0 = Fraction(self.eta0)
        base = self.d * (Fraction(1, 2) - 1 / self.p)
        if self.Lambda < base:
            raise ValueError(f"Lambda = {self.Lambda} below d(1/2 - 1/p) = {base}")
        if self.eta0 < self.Lambda:
            raise ValueError("eta0 must start at or above Lambda")

    @property
    def base_exponent(self) -> Fraction:
        return self.d * (Fraction(1, 2) - 1 / self.p)

    @staticmethod
    def standard(d: int, n: int, p, eta0, Lambda=None) -> "DescentState":
        pf = Fraction(p)
        lam = Fraction(Lambda) if Lambda is not None else d * (Fraction(1, 2) - 1 / pf)
        return DescentState(d, n, pf, lam, Fraction(eta0))


def descent_iterate(state: DescentState, steps: int) -> List[Fraction]:
    """eta_{k+1} = max(Lambda, eta_k - eta~(eta_k - d(1/2-1/p))).

    The sequence is returned including eta_0; it is nonincreasing, clamped at
    Lambda, and stops early if the gap sigma ever vanishes.
    """
    out = [state.eta0]
    base = state.base_exponent
    eta = state.eta0
    _, kappa = kappa_ptilde(state.d, state.n, state.p)
    if kappa == 0:
        return out  # p~ = 2: the multilinear step yields no gain
    for _ in range(steps):
        sigma = eta - base
        if sigma <= 0:
            break
        nxt = max(state.Lambda, eta - eta_tilde(sigma, state.d, state.n, state.p))
        out.append(nxt)
        eta = nxt
    return out
