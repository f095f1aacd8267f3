"""Deciders for the non-degeneracy hypotheses on quadratic-form tuples.

Two conditions are checked: the determinant condition (for every linearly
independent w_1..w_{d-n} the polynomial det[grad P_1(t); ..; grad P_n(t);
w_1; ..; w_{d-n}] is not identically zero) and the hyperplane rank condition
(for every hyperplane H some combination sum lambda_j P_j restricted to H has
rank >= d-2).

Both quantify over continua, so the general strategy is: exact certificates
for the structured cases (codimension one with full rank, simultaneously
diagonal pairs passing the 2x2-minor criterion, d = n where no w-vectors
remain), exact checks at sampled rational points, and local minimization of a
smoothed objective to hunt for counterexamples.  FAIL verdicts always carry a
witness that re-verifies exactly; PASS without a certificate is reported as
LIKELY_PASS with the evidence size.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import ndtri

from .exactla import mat_rank
from .polyalg import MultiPoly, PolyMatrix, polymat_det, polymat_minors, poly_is_zero
from .quadforms import Hyperplane, QuadTuple, restrict_to_hyperplane


@dataclass
class CheckConfig:
    seed: int
    samples: int = 2048
    opt_starts: int = 2
    opt_maxiter: int = 200
    zero_test_trials: int = 64
    rationalize_den: int = 10**6


@dataclass
class HypothesisReport:
    verdict: str  # PASS | FAIL | LIKELY_PASS
    condition: str
    witness: Optional[dict] = None
    samples: int = 0
    seed: Optional[int] = None
    method: str = ""

    def to_json_obj(self):
        return {
            "verdict": self.verdict,
            "condition": self.condition,
            "witness": self.witness,
            "samples": self.samples,
            "seed": self.seed,
            "method": self.method,
        }


# ---------------------------------------------------------------------------
# structured exact criteria
# ---------------------------------------------------------------------------


def check_diagonal_criterion(a: Sequence, b: Sequence) -> bool:
    """Every 2x2 minor [[a_i, a_j], [b_i, b_j]] has rank 2, exactly."""
    if len(a) != len(b):
        raise ValueError("coefficient lists must have equal length")
    d = len(a)
    if not 2 <= d <= 4:
        warnings.warn(f"diagonal criterion is lemma-backed only for 2 <= d <= 4 (got d={d})")
    af = [Fraction(x) for x in a]
    bf = [Fraction(x) for x in b]
    for i in range(d):
        for j in range(i + 1, d):
            if af[i] * bf[j] - af[j] * bf[i] == 0:
                return False
    return True


def codim1_shortcut(T: QuadTuple) -> str:
    """APPLIES iff n = 1 and the single form has full rank d (then both
    hypotheses hold without any sampling)."""
    if T.n == 1 and mat_rank(T.forms[0]) == T.d:
        return "APPLIES"
    return "NOT_APPLICABLE"


def _diagonal_lemma_applies(T: QuadTuple) -> bool:
    if T.n != 2 or not T.is_diagonal() or not 2 <= T.d <= 4:
        return False
    a = [T.forms[0][i][i] for i in range(T.d)]
    b = [T.forms[1][i][i] for i in range(T.d)]
    return check_diagonal_criterion(a, b)


# ---------------------------------------------------------------------------
# determinant condition
# ---------------------------------------------------------------------------


def _det_poly(T: QuadTuple, ws: Sequence[Sequence[Fraction]]) -> MultiPoly:
    """det[grad P_1(t); ...; grad P_n(t); w_1; ...; w_{d-n}] as a polynomial in t."""
    d = T.d
    rows = T.gradient_polys()
    for w in ws:
        rows.append([MultiPoly.constant(d, Fraction(x)) for x in w])
    return polymat_det(PolyMatrix.from_rows(rows))


def _rationalize(vec, den: int) -> List[Fraction]:
    return [Fraction(float(x)).limit_denominator(den) for x in vec]


def _halton(index: int, base: int) -> float:
    f, r = 1.0, 0.0
    i = index
    while i > 0:
        f /= base
        r += f * (i % base)
        i //= base
    return r


_PRIMES = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


def low_discrepancy_sphere(count: int, dim: int, skip: int = 17) -> np.ndarray:
    """Low-discrepancy unit vectors: Halton points pushed through the inverse
    normal CDF and normalized."""
    pts = np.empty((count, dim))
    for k in range(count):
        u = np.array([_halton(k + skip, _PRIMES[j % len(_PRIMES)]) for j in range(dim)])
        u = np.clip(u, 1e-12, 1 - 1e-12)
        g = ndtri(u)
        nrm = np.linalg.norm(g)
        pts[k] = g / (nrm if nrm > 0 else 1.0)
    return pts


def _float_det_probe_points(T: QuadTuple, rng: np.random.Generator, count: int) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, size=(count, T.d))


def _det_eval_norm(T: QuadTuple, W: np.ndarray, probes: np.ndarray, grads: np.ndarray) -> float:
    """l2 norm over probe points of det[grad P(t); W]; zero iff det == 0 when
    the probe count exceeds the number of monomials of degree n."""
    d, n = T.d, T.n
    vals = np.empty(len(probes))
    for i, t in enumerate(probes):
        rows = np.vstack([2.0 * grads @ t, W])  # n gradient rows then w rows
        vals[i] = np.linalg.det(rows)
    return float(np.sqrt(np.mean(vals**2)))


def check_nondegeneracy(T: QuadTuple, cfg: CheckConfig) -> HypothesisReport:
    """Decide the determinant condition for a quadratic tuple."""
    d, n = T.d, T.n
    if n > d:
        raise ValueError("condition requires n <= d")
    cond = "nondegeneracy"

    # degenerate input: a vanishing form forces a zero gradient row
    for j, M in enumerate(T.forms):
        if all(x == 0 for row in M for x in row):
            ws = _standard_basis_ws(d, d - n)
            return HypothesisReport(
                "FAIL", cond,
                witness={"w": [[str(x) for x in w] for w in ws], "reason": f"P_{j+1} == 0"},
                seed=cfg.seed, method="degenerate-form shortcut",
            )

    if n == d:
        det = _det_poly(T, [])
        if det.is_zero():
            return HypothesisReport(
                "FAIL", cond, witness={"w": []}, seed=cfg.seed, method="exact determinant (d=n)"
            )
        return HypothesisReport("PASS", cond, seed=cfg.seed, method="exact determinant (d=n)")

    if codim1_shortcut(T) == "APPLIES":
        return HypothesisReport("PASS", cond, seed=cfg.seed, method="codimension-one full rank")

    if _diagonal_lemma_applies(T):
        return HypothesisReport("PASS", cond, seed=cfg.seed, method="diagonal 2x2-minor criterion")

    rng = np.random.default_rng(cfg.seed)
    nw = d - n
    checked = 0
    for _ in range(cfg.samples):
        W = rng.integers(-3, 4, size=(nw, d))
        if np.linalg.matrix_rank(W) < nw:
            continue
        ws = [[Fraction(int(x)) for x in row] for row in W]
        checked += 1
        det = _det_poly(T, ws)
        if det.is_zero():
            return HypothesisReport(
                "FAIL", cond,
                witness={"w": [[str(x) for x in w] for w in ws]},
                samples=checked, seed=cfg.seed, method="sampled w-tuple",
            )

    # local minimization hunting for a vanishing determinant
    grads = np.array([[[float(x) for x in row] for row in M] for M in T.forms])
    n_mono = math.comb(n + d - 1, n)
    probes = _float_det_probe_points(T, np.random.default_rng(cfg.seed + 1), 2 * n_mono + 8)

    def objective(flat):
        W = flat.reshape(nw, d)
        q, _ = np.linalg.qr(W.T)
        Wo = q[:, :nw].T
        return _det_eval_norm(T, Wo, probes, grads)

    for s in range(cfg.opt_starts):
        x0 = np.random.default_rng(cfg.seed + 10 + s).normal(size=nw * d)
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"maxiter": cfg.opt_maxiter, "xatol": 1e-10, "fatol": 1e-14})
        if res.fun < 1e-9:
            W = res.x.reshape(nw, d)
            q, _ = np.linalg.qr(W.T)
            ws = [_rationalize(row, cfg.rationalize_den) for row in q[:, :nw].T]
            if mat_rank(ws) == nw and _det_poly(T, ws).is_zero():
                return HypothesisReport(
                    "FAIL", cond,
                    witness={"w": [[str(x) for x in w] for w in ws]},
                    samples=checked, seed=cfg.seed, method="optimized w-tuple",
                )

    return HypothesisReport(
        "LIKELY_PASS", cond, samples=checked, seed=cfg.seed,
        method=f"{checked} sampled w-tuples + {cfg.opt_starts} optimizer starts",
    )


def _standard_basis_ws(d: int, count: int) -> List[List[Fraction]]:
    out = []
    for i in range(count):
        w = [Fraction(0)] * d
        w[i] = Fraction(1)
        out.append(w)
    return out


# ---------------------------------------------------------------------------
# hyperplane rank condition
# ---------------------------------------------------------------------------


def hyperplane_rank_subcheck(T: QuadTuple, H: Hyperplane) -> bool:
    """Exact decision at one hyperplane: does some lambda give
    rank((lambda . P)|_H) >= d-2?

    Works symbolically: the restricted pencil sum lambda_j M_j' has entries
    linear in lambda, and the rank is >= d-2 for some lambda iff some
    (d-2)-minor is not the zero polynomial.
    """
    d, n = T.d, T.n
    if d <= 2:
        return True
    R = restrict_to_hyperplane(T, H)
    size = d - 1
    entries = []
    for r in range(size):
        row = []
        for c in range(size):
            row.append(MultiPoly.linear([R.forms[j][r][c] for j in range(n)]))
        row = tuple(row)
        entries.append(row)
    pencil = PolyMatrix(size, size, tuple(entries))
    for m in polymat_minors(pencil, d - 2):
        if not m.is_zero():
            return True
    return False


def check_hyperplane_rank(T: QuadTuple, cfg: CheckConfig,
                          extra_planes: Sequence[Hyperplane] = ()) -> HypothesisReport:
    """Decide the hyperplane rank condition for a quadratic tuple."""
    d, n = T.d, T.n
    cond = "hyperplane-rank"
    if d <= 2:
        return HypothesisReport("PASS", cond, seed=cfg.seed, method="vacuous (d-2 <= 0)")

    if codim1_shortcut(T) == "APPLIES":
        return HypothesisReport("PASS", cond, seed=cfg.seed, method="codimension-one full rank")

    if _diagonal_lemma_applies(T):
        return HypothesisReport("PASS", cond, seed=cfg.seed, method="diagonal 2x2-minor criterion")

    # exact subcheck at coordinate planes, user-supplied planes, and sampled normals
    planes: List[Hyperplane] = list(extra_planes)
    for g in range(d):
        planes.append(Hyperplane(d, tuple(Fraction(0) for _ in range(d - 1)), g))
    normals = low_discrepancy_sphere(cfg.samples, d)
    checked = 0
    for k in range(len(planes) + len(normals)):
        if k < len(planes):
            H = planes[k]
        else:
            nrm = _rationalize(normals[k - len(planes)], cfg.rationalize_den)
            if all(x == 0 for x in nrm):
                continue
            H = Hyperplane.from_normal(nrm)
        checked += 1
        if not hyperplane_rank_subcheck(T, H):
            return HypothesisReport(
                "FAIL", cond, witness={"hyperplane": H.to_json_obj()},
                samples=checked, seed=cfg.seed, method="exact lambda-minor subcheck",
            )

    # optimizer hunting for a low-rank plane: minimize a smoothed proxy for
    # max over lambda of sigma_{d-2}(pencil)
    lam_probes = np.random.default_rng(cfg.seed + 2).normal(size=(8, n))

    def objective(nrm):
        v = nrm / max(np.linalg.norm(nrm), 1e-12)
        H = Hyperplane.from_normal(_rationalize(v, 10**3))
        R = restrict_to_hyperplane(T, H)
        Ms = np.array([[[float(x) for x in row] for row in M] for M in R.forms])
        total = 0.0
        for lam in lam_probes:
            pencil = np.tensordot(lam, Ms, axes=1)
            sv = np.linalg.svd(pencil, compute_uv=False)
            total += sv[d - 3] ** 2  # (d-2)-th largest singular value
        return total

    for s in range(cfg.opt_starts):
        x0 = np.random.default_rng(cfg.seed + 20 + s).normal(size=d)
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"maxiter": cfg.opt_maxiter, "xatol": 1e-10, "fatol": 1e-14})
        if res.fun < 1e-9:
            H = Hyperplane.from_normal(_rationalize(res.x / np.linalg.norm(res.x),
                                                    cfg.rationalize_den))
            checked += 1
            if not hyperplane_rank_subcheck(T, H):
                return HypothesisReport(
                    "FAIL", cond, witness={"hyperplane": H.to_json_obj()},
                    samples=checked, seed=cfg.seed, method="optimized hyperplane",
                )

    return HypothesisReport(
        "LIKELY_PASS", cond, samples=checked, seed=cfg.seed,
        method=f"{checked} exact plane subchecks + {cfg.opt_starts} optimizer starts",
    )


def diag_rank_degenerate_family(a4=1, b4=1, b3=1, lam=1) -> Tuple[QuadTuple, Hyperplane]:
    """The diagonal family where the rank condition genuinely fails.

    a = (-a4 lam^2, 0, 0, a4), b = (-b4 lam^2, 0, b3, b4): restricted to the
    plane t_4 = lam t_1 the first form vanishes and the second has rank one,
    so the whole pencil has rank <= 1 < d-2 there.
    """
    from .quadforms import diag_pair

    a4, b4, b3, lam = Fraction(a4), Fraction(b4), Fraction(b3), Fraction(lam)
    a = (-a4 * lam**2, Fraction(0), Fraction(0), a4)
    b = (-b4 * lam**2, Fraction(0), b3, b4)
    T = diag_pair(a, b)
    H = Hyperplane(4, (lam, Fraction(0), Fraction(0)), 3)  # t_4 = lam t_1
    return T, H


# ---------------------------------------------------------------------------
# flat-decoupling exponent for restricted tuples
# ---------------------------------------------------------------------------


def hyperplane_decoupling_exponent(d: int, n: int, p) -> Fraction:
    """The exponent d(1/2 - 1/p) for decoupling along a hyperplane restriction,
    valid in the range 2 <= p <= 2 + 4n/d and n(d-2) <= d."""
    pf = Fraction(p)
    if pf < 2 or pf > 2 + Fraction(4 * n, d):
        raise ValueError(f"p = {pf} outside [2, 2 + 4n/d] = [2, {2 + Fraction(4*n, d)}]")
    if n * (d - 2) > d:
        raise ValueError(f"range violation: n(d-2) = {n*(d-2)} exceeds d = {d}")
    return d * (Fraction(1, 2) - 1 / pf)
