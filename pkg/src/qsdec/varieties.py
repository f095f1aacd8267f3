"""Sublevel-set decomposition of polynomial zero-set neighborhoods and dyadic
cube covers at ladder scales.

The decomposition emits, for a normalized polynomial P of degree D, a chain
of multiindices alpha_D < ... < alpha_1 with |alpha_j| = D - j such that the
1/K-sublevel set of P inside the unit ball is covered by neighborhoods
N_{1/K_j^A}(Z of d^{alpha_j}P intersected with a gradient floor 1/K_j).  The
chain is chosen greedily (largest first-derivative l1-norm, graded-lex ties),
the constants are recorded in the certificate, and verification is
statistical: seeded samplers walk the sublevel set / the variety neighborhood
and check membership numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .polyalg import MultiPoly, poly_gradient, poly_norm1, poly_partial
from .quadforms import Cap

# ---------------------------------------------------------------------------
# numpy evaluation of exact polynomials
# ---------------------------------------------------------------------------


def numpy_poly(P: MultiPoly):
    """Vectorized evaluator X (m, nvars) -> P(X) (m,)."""
    if P.is_zero():
        return lambda X: np.zeros(len(np.atleast_2d(X)))
    exps = np.array([list(a) for a in P.terms.keys()], dtype=np.int64)
    coeffs = np.array([float(c) for c in P.terms.values()])

    def ev(X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return (X[:, None, :] ** exps[None, :, :]).prod(axis=2) @ coeffs

    return ev


def numpy_gradient(P: MultiPoly):
    """Vectorized evaluator X (m, nvars) -> grad P(X) (m, nvars)."""
    parts = [numpy_poly(g) for g in poly_gradient(P)]

    def ev(X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.stack([p(X) for p in parts], axis=1)

    return ev


# ---------------------------------------------------------------------------
# scale ladders
# ---------------------------------------------------------------------------


class LadderError(ValueError):
    pass


@dataclass(frozen=True)
class ScaleLadder:
    """Dyadic scales K_1 <= ... <= K_{D+1} = K with K_{j+1} ~ K_j^{A+1}."""

    D: int
    A: int
    K: int
    scales: Tuple[int, ...]          # lemma-mode K_j, j = 1..D+1
    corollary_scales: Tuple[int, ...]  # clamped K~_j, j = 1..D (empty if D = 0)
    c_exponent: Fraction             # the clamp floor exponent (A+1)^-D

    def comparability_constant(self) -> float:
        """max_j K_j^{A+1} / K_{j+1}; dyadic rounding keeps this <= 2^{A+1}."""
        worst = 1.0
        for j in range(self.D):
            worst = max(worst, self.scales[j] ** (self.A + 1) / self.scales[j + 1])
        return worst

    def to_json_obj(self):
        return {
            "D": self.D,
            "A": self.A,
            "K": self.K,
            "scales": list(self.scales),
            "corollary_scales": list(self.corollary_scales),
            "c_exponent": str(self.c_exponent),
            "comparability": self.comparability_constant(),
        }


def scale_ladder(K: int, A: int, D: int, mode: str = "lemma") -> ScaleLadder:
    """Build the dyadic ladder.

    Lemma mode rounds K^{(A+1)^{j-D-1}} down to a dyadic (floor on the
    exponent), which preserves K_j^{A+1} <= K_{j+1} except possibly at the
    clamped bottom rung; corollary mode additionally clamps K~_j = K_j^A into
    [K^c, sqrt(K)] with c = (A+1)^{-D}.
    """
    if K < 2 or (K & (K - 1)) != 0:
        raise LadderError(f"K = {K} must be a dyadic integer >= 2")
    if A < 1 or D < 0:
        raise LadderError("require A >= 1 and D >= 0")
    k = K.bit_length() - 1
    c = Fraction(1, (A + 1) ** D)
    if D == 0:
        return ScaleLadder(0, A, K, (K,), (), c)
    if k * c < Fraction(1, 2):
        raise LadderError(
            f"K = 2^{k} is too small for D = {D}, A = {A}: K^(1/(A+1)^D) rounds below 2"
        )
    exps = []
    for j in range(1, D + 2):
        e = Fraction(k) * Fraction(1, (A + 1) ** (D + 1 - j))
        exps.append(max(1, math.floor(e)))
    for j in range(1, D + 1):  # monotone after the bottom clamp
        exps[j] = max(exps[j], exps[j - 1])
    scales = tuple(2**e for e in exps)
    lo = math.ceil(k * c)
    hi = math.floor(Fraction(k, 2))
    cor = []
    for j in range(D):
        e = min(max(A * exps[j], lo), hi)
        cor.append(e)
    for j in range(1, D):
        cor[j] = max(cor[j], cor[j - 1])
    if mode not in ("lemma", "corollary"):
        raise LadderError(f"unknown mode {mode!r}")
    return ScaleLadder(D, A, K, scales, tuple(2**e for e in cor), c)


# ---------------------------------------------------------------------------
# sublevel decomposition
# ---------------------------------------------------------------------------


class AllDerivativesSmall(ValueError):
    """Every first-order derivative is below c1: the sublevel set is empty."""


def _first_order_multiindices(nv: int) -> List[Tuple[int, ...]]:
    out = []
    for i in range(nv):
        e = [0] * nv
        e[i] = 1
        out.append(tuple(e))
    return out


def hessian_bound(nv: int, D: int) -> Fraction:
    """sup over B(0,2) of |H P| for a normalized degree-D polynomial in nv
    variables: each second derivative of a monomial x^alpha is bounded by
    D(D-1) 2^{D-2} there, and the matrix norm costs a factor nv."""
    if D < 2:
        return Fraction(1)
    return Fraction(nv * D * (D - 1) * 2 ** max(D - 2, 0))


@dataclass
class SublevelCertificate:
    """Chain alpha_D < ... < alpha_1 with the per-level pieces and constants."""

    D: int
    alphas: List[Tuple[int, ...]]     # index j-1 holds alpha_j, j = 1..D
    pieces: List[MultiPoly]           # index j-1 holds P_j = d^{alpha_j} P
    grad_floors: List[Fraction]       # 1/K_j
    radii: List[Fraction]             # 1/K_j^A
    c0: Fraction
    c1: Fraction

    def to_json_obj(self):
        return {
            "D": self.D,
            "alphas": [list(a) for a in self.alphas],
            "pieces": [p.to_json_obj() for p in self.pieces],
            "grad_floors": [str(x) for x in self.grad_floors],
            "radii": [str(x) for x in self.radii],
            "c0": str(self.c0),
            "c1": str(self.c1),
        }


def sublevel_decompose(P: MultiPoly, ladder: ScaleLadder) -> SublevelCertificate:
    """Greedy multiindex chain for a normalized polynomial of degree <= D."""
    if poly_norm1(P) != 1:
        raise ValueError("P must be normalized (l1 coefficient sum = 1)")
    D = ladder.D
    if P.degree() > D:
        raise ValueError(f"deg P = {P.degree()} exceeds ladder D = {D}")
    nv = P.nvars
    c1 = Fraction(1, 2 * nv)
    c0 = 1 / hessian_bound(nv, D)
    firsts = _first_order_multiindices(nv)

    top_norms = [poly_norm1(poly_partial(P, e)) for e in firsts]
    if D >= 1 and all(x < c1 for x in top_norms):
        raise AllDerivativesSmall(
            "all first-order derivative norms are below c1; sublevel set is empty"
        )

    alphas: List[Tuple[int, ...]] = [(0,) * nv]  # alpha_D
    current = P
    for _ in range(D - 1):
        norms = []
        for e in firsts:
            q = poly_partial(current, e)
            nrm = poly_norm1(q)
            norms.append((nrm, e, q))
        # greedy max, graded-lex-first tie break (firsts are already in that order)
        best = max(norms, key=lambda x: x[0])
        chosen = next(x for x in norms if x[0] == best[0])
        alphas.append(tuple(a + b for a, b in zip(alphas[-1], chosen[1])))
        current = chosen[2]

    # alphas holds [alpha_D, ..., alpha_1]; re-index so entry j-1 is alpha_j
    ordered = list(reversed(alphas))
    pieces = [poly_partial(P, a) for a in ordered]
    floors = [Fraction(1, ladder.scales[j - 1]) for j in range(1, D + 1)]
    radii = [Fraction(1, ladder.scales[j - 1] ** ladder.A) for j in range(1, D + 1)]
    return SublevelCertificate(D, ordered, pieces, floors, radii, c0, c1)


# ---------------------------------------------------------------------------
# samplers and verification
# ---------------------------------------------------------------------------


def _newton_project(ev, gr, X, tol=1e-13, iters=60):
    """Batched Newton steps toward the zero set of one polynomial."""
    X = X.copy()
    for _ in range(iters):
        v = ev(X)
        g = gr(X)
        gn = (g**2).sum(axis=1)
        act = (np.abs(v) > tol) & (gn > 1e-18)
        if not act.any():
            break
        step = np.zeros_like(X)
        step[act] = (v[act] / gn[act])[:, None] * g[act]
        X = X - step
    return X


def sample_sublevel_points(P: MultiPoly, bound: float, count: int, seed: int,
                           max_batches: int = 80) -> np.ndarray:
    """Seeded points with |P| < bound inside B(0,1): Newton walkers from
    uniform starts plus tangential jitter along the zero set."""
    nv = P.nvars
    ev, gr = numpy_poly(P), numpy_gradient(P)
    rng = np.random.default_rng(seed)
    got: List[np.ndarray] = []
    total = 0
    for _ in range(max_batches):
        X = rng.uniform(-1, 1, size=(max(count, 256), nv))
        X = X[(X**2).sum(axis=1) <= 1]
        Z = _newton_project(ev, gr, X)
        # tangential jitter then re-project, to spread samples along the set
        g = gr(Z)
        gn = np.linalg.norm(g, axis=1, keepdims=True)
        tang = rng.normal(size=Z.shape)
        ok = gn[:, 0] > 1e-12
        tang[ok] -= (tang[ok] * g[ok]).sum(axis=1, keepdims=True) * g[ok] / gn[ok] ** 2
        step = rng.uniform(0, 0.05, size=(len(Z), 1))
        Z2 = _newton_project(ev, gr, Z + step * tang)
        cand = np.vstack([Z, Z2])
        keep = (np.abs(ev(cand)) < bound) & ((cand**2).sum(axis=1) <= 1)
        cand = cand[keep]
        if len(cand):
            got.append(cand)
            total += len(cand)
        if total >= count:
            break
    if not got:
        return np.empty((0, nv))
    return np.vstack(got)[:count]


def verify_sublevel_inclusion(P: MultiPoly, cert: SublevelCertificate,
                              ladder: ScaleLadder, samples: int, seed: int) -> dict:
    """Sample the sublevel set and check each point lands in some piece's
    neighborhood N_{1/K_j^A}(Z_{P_j} cap {|grad P_j| >= 1/K_j})."""
    bound = 1.0 / ladder.scales[-1]
    pts = sample_sublevel_points(P, bound, samples, seed)
    if len(pts) == 0:
        return {"samples": 0, "violations": 0, "vacuous": True, "violation_points": []}
    evs = [(numpy_poly(pc), numpy_gradient(pc)) for pc in cert.pieces]
    uncovered = np.ones(len(pts), dtype=bool)
    for j in range(cert.D, 0, -1):  # finest scale first: catches generic points
        if not uncovered.any():
            break
        ev, gr = evs[j - 1]
        radius = float(cert.radii[j - 1]) * 1.1  # stated tolerance 1/(10 K_j^A)
        floor = float(cert.grad_floors[j - 1])
        X = pts[uncovered]
        Z = _newton_project(ev, gr, X)
        dist = np.linalg.norm(Z - X, axis=1)
        gz = np.linalg.norm(gr(Z), axis=1)
        vz = np.abs(ev(Z))
        hit = (dist <= radius) & (gz >= floor) & (vz <= 1e-9)
        idx = np.where(uncovered)[0]
        uncovered[idx[hit]] = False
    bad = pts[uncovered]
    return {
        "samples": int(len(pts)),
        "violations": int(uncovered.sum()),
        "vacuous": False,
        "violation_points": [list(map(float, b)) for b in bad[:16]],
    }


def taylor_ivt_violations(f: MultiPoly, sigma: float, eta: float,
                          samples: int, seed: int, domain_radius: float = 2.0) -> dict:
    """Direct check of the sublevel-vs-gradient inclusion: points with
    |f| <= sigma*eta and |grad f| > sigma + eta lie within 1.05*sigma of the
    domain boundary or of Z_f cap {|grad f| > eta}."""
    nv = f.nvars
    ev, gr = numpy_poly(f), numpy_gradient(f)
    rng = np.random.default_rng(seed)
    X = rng.uniform(-domain_radius, domain_radius, size=(samples * 20, nv))
    X = X[(X**2).sum(axis=1) <= domain_radius**2]
    # walk toward the sublevel set so the conditioning filter has mass
    X = _newton_project(ev, gr, X, tol=sigma * eta * 0.5, iters=8)
    X = X[(X**2).sum(axis=1) <= domain_radius**2]
    v = np.abs(ev(X))
    g = np.linalg.norm(gr(X), axis=1)
    sel = (v <= sigma * eta) & (g > sigma + eta)
    X = X[sel][:samples]
    if len(X) == 0:
        return {"samples": 0, "violations": 0}
    Z = _newton_project(ev, gr, X)
    dist = np.linalg.norm(Z - X, axis=1)
    gz = np.linalg.norm(gr(Z), axis=1)
    ok_zero = (dist <= 1.05 * sigma) & (gz > eta) & (np.abs(ev(Z)) <= 1e-9)
    ok_boundary = np.linalg.norm(X, axis=1) >= domain_radius - 1.05 * sigma
    bad = ~(ok_zero | ok_boundary)
    return {"samples": int(len(X)), "violations": int(bad.sum())}


# ---------------------------------------------------------------------------
# cube covers
# ---------------------------------------------------------------------------


@dataclass
class CubeCover:
    """Per-level collections of pairwise disjoint dyadic cubes covering the
    1/K-neighborhood of the zero set inside the unit cube."""

    layers: List[Tuple[Fraction, List[Cap]]]
    ladder: ScaleLadder
    certificate: Optional[SublevelCertificate]

    def _index(self):
        # anchor-index sets per layer for O(1) membership
        if not hasattr(self, "_idx"):
            idx = []
            for s, cubes in self.layers:
                k = int(1 / s)
                idx.append((k, {tuple(int(a * k) for a in c.anchor) for c in cubes}))
            self._idx = idx
        return self._idx

    def contains_point(self, x: Sequence[float]) -> bool:
        for k, anchors in self._index():
            cell = tuple(min(int(math.floor(xi * k)), k - 1) for xi in x)
            if cell in anchors:
                return True
            # boundary points belong to the neighboring cell too
            for i, xi in enumerate(x):
                if xi * k == cell[i] and cell[i] > 0:
                    alt = cell[:i] + (cell[i] - 1,) + cell[i + 1 :]
                    if alt in anchors:
                        return True
        return False

    def all_cubes(self) -> List[Cap]:
        return [c for _, cubes in self.layers for c in cubes]

    def to_json_obj(self):
        return {
            "layers": [
                {"scale": str(s), "cubes": [c.to_json_obj() for c in cubes]}
                for s, cubes in self.layers
            ],
            "ladder": self.ladder.to_json_obj(),
            "certificate": self.certificate.to_json_obj() if self.certificate else None,
        }


def variety_cube_cover(P: MultiPoly, K: int, A: int, d: int, mode: str = "corollary",
                       dilate: int = 4, grid_res: int = 4) -> CubeCover:
    """Layered dyadic cube cover of N_{1/K}(Z_P) in [0,1]^d.

    Layer j collects the cubes of side 1/K~_j (or 1/K_j^A in lemma mode)
    whose `dilate`-fold enlargement meets Z_j = Z_{P_j} cap {|grad P_j| >=
    1/K_j}, membership decided by a sign change of P_j on a refined sample
    grid plus the gradient floor; cubes inside an earlier (coarser) layer are
    removed exactly.
    """
    if P.is_zero():
        raise ValueError("P must be nonzero")
    if P.nvars != d:
        raise ValueError("polynomial arity disagrees with d")
    nrm = poly_norm1(P)
    Pn = P.scale(1 / nrm)
    D = max(P.degree(), 1)
    ladder = scale_ladder(K, A, D, mode=mode)
    try:
        cert = sublevel_decompose(Pn, ladder)
    except AllDerivativesSmall:
        return CubeCover([], ladder, None)

    # Lipschitz bound of the normalized polynomial on [0,1]^d, for the
    # near-sublevel refinement of the flag test
    lip = float(sum(abs(c) * sum(a) for a, c in Pn.terms.items()))

    layers: List[Tuple[Fraction, List[Cap]]] = []
    kept_prev: List[Tuple[Fraction, List[Cap]]] = []
    for j in range(1, D + 1):
        if mode == "corollary":
            side = Fraction(1, ladder.corollary_scales[j - 1])
        else:
            side = Fraction(1, ladder.scales[j - 1] ** A)
        piece = cert.pieces[j - 1]
        floor = float(cert.grad_floors[j - 1])
        # a cube is kept only if its sample grid also comes near the sublevel
        # set of P itself: any true zero of P in the dilated cube has a grid
        # neighbor within spacing side/grid_res, so this margin loses nothing
        margin = lip * math.sqrt(d) * float(side) / grid_res + 1.0 / K
        cubes = _flag_cubes(Pn, margin, piece, side, floor, d, dilate, grid_res)
        # exact cross-layer dedup: drop cubes inside any earlier-layer cube
        fresh = []
        for c in cubes:
            inside = False
            for s_prev, prev in kept_prev:
                if s_prev < c.scale:
                    continue
                for pc in prev:
                    if pc.contains_cap(c):
                        inside = True
                        break
                if inside:
                    break
            if not inside:
                fresh.append(c)
        layers.append((side, fresh))
        kept_prev.append((side, fresh))
    return CubeCover(layers, ladder, cert)


def _flag_cubes(P: MultiPoly, margin: float, piece: MultiPoly, side: Fraction,
                grad_floor: float, d: int, dilate: int, grid_res: int) -> List[Cap]:
    """Cubes of Part_side whose dilated copy shows a sign change of the piece,
    clears the gradient floor, and comes within `margin` of the sublevel set
    of P itself, all tested on the refined sample grid."""
    if piece.is_zero():
        return []
    ev, gr = numpy_poly(piece), numpy_gradient(piece)
    evP = numpy_poly(P)
    k = int(1 / side)
    s = float(side)
    axes = [np.arange(k) * s for _ in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    anchors = np.stack([m.ravel() for m in mesh], axis=1)  # (k^d, d)
    npts = dilate * grid_res + 1
    offs_1d = np.linspace(-(dilate - 1) / 2 * s, (dilate + 1) / 2 * s, npts)
    grids = np.meshgrid(*[offs_1d] * d, indexing="ij")
    offsets = np.stack([g.ravel() for g in grids], axis=1)  # (npts^d, d)
    G = len(offsets)
    flags = np.zeros(len(anchors), dtype=bool)
    chunk = max(1, 2_000_000 // G)
    for start in range(0, len(anchors), chunk):
        anc = anchors[start : start + chunk]
        pts = (anc[:, None, :] + offsets[None, :, :]).reshape(-1, d)
        vals = ev(pts).reshape(len(anc), G)
        gnorm = np.linalg.norm(gr(pts), axis=1).reshape(len(anc), G)
        small = np.abs(evP(pts)).reshape(len(anc), G).min(axis=1) <= margin
        sign_change = (vals.min(axis=1) <= 0) & (vals.max(axis=1) >= 0)
        flags[start : start + chunk] = sign_change & (gnorm.max(axis=1) >= grad_floor) & small
    out = []
    for a in anchors[flags]:
        anchor = tuple(Fraction(round(x / s)) * side for x in a)
        out.append(Cap(anchor, side))
    return out


def sample_variety_neighborhood(P: MultiPoly, radius: float, count: int, seed: int,
                                max_batches: int = 60) -> np.ndarray:
    """Points of N_radius(Z_P) inside [0,1]^d, by walking to the zero set and
    jittering within the stated radius (membership holds by construction)."""
    nv = P.nvars
    ev, gr = numpy_poly(P), numpy_gradient(P)
    rng = np.random.default_rng(seed)
    got: List[np.ndarray] = []
    total = 0
    for _ in range(max_batches):
        X = rng.uniform(0, 1, size=(max(count, 512), nv))
        Z = _newton_project(ev, gr, X)
        keep = np.abs(ev(Z)) <= 1e-10
        Z = Z[keep]
        jit = rng.normal(size=Z.shape)
        jit /= np.maximum(np.linalg.norm(jit, axis=1, keepdims=True), 1e-12)
        r = rng.uniform(0, radius, size=(len(Z), 1))
        cand = Z + r * jit
        inside = ((cand >= 0) & (cand <= 1)).all(axis=1)
        cand = cand[inside]
        if len(cand):
            got.append(cand)
            total += len(cand)
        if total >= count:
            break
    if not got:
        return np.empty((0, nv))
    return np.vstack(got)[:count]
