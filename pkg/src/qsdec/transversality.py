"""Projection dimensions onto tangent spaces, the BCCT dimension condition,
Brascamp-Lieb constants by the Gaussian ansatz, and nu-transversality of cap
tuples.

Rank statements are decided exactly over the rationals whenever the inputs
are rational; the Brascamp-Lieb value itself is numeric (fixed-point
iteration over positive-definite Gaussian parameters, which attains the
constant by Lieb's theorem).  Because the compactness argument behind the
abstract transversality bound is ineffective, reports carry the concrete
estimate nu_hat = 1 / (max estimated BL constant) instead.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .exactla import independent_subset, mat_rank, nullspace
from .polyalg import MultiPoly, PolyMatrix, polymat_minors, poly_is_zero
from .quadforms import Cap, QuadTuple

S1 = "S1"
S2 = "S2"


@dataclass
class TransvConfig:
    seed: int
    random_subspaces: int = 12
    tuple_samples: int = 4
    bl_max_iter: int = 100000
    bl_tol: float = 1e-10
    bl_divergence: float = 1e12
    bl_cond_floor: float = 1e-12
    nu_min: float = 1e-6
    rationalize_den: int = 10**6
    exact_proj_cutoff: int = 64  # above this many caps, prescreen ranks in floats


@dataclass(frozen=True)
class Subspace:
    """Linear subspace of R^{d+n} given by an exactly independent basis."""

    ambient: int
    basis: Tuple[Tuple[Fraction, ...], ...]

    def __post_init__(self):
        b = tuple(tuple(Fraction(x) for x in v) for v in self.basis)
        for v in b:
            if len(v) != self.ambient:
                raise ValueError("basis vector has wrong ambient dimension")
        if b and mat_rank(b) != len(b):
            raise ValueError("basis is not linearly independent")
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def to_json_obj(self):
        return {"ambient": self.ambient, "basis": [[str(x) for x in v] for v in self.basis]}

    @staticmethod
    def coordinate(ambient: int, idxs: Sequence[int]) -> "Subspace":
        basis = []
        for i in idxs:
            v = [Fraction(0)] * ambient
            v[i] = Fraction(1)
            basis.append(tuple(v))
        return Subspace(ambient, tuple(basis))

    def float_basis(self) -> np.ndarray:
        return np.array([[float(x) for x in v] for v in self.basis], dtype=float)


def _proj_matrix(T: QuadTuple, V: Subspace, t: Sequence) -> List[List[Fraction]]:
    """Rows <v_i, n_j(t)> = w_i + grad P(t) . z_i, one row per basis vector."""
    d, n = T.d, T.n
    G = T.gradient_matrix(t)  # d x n
    rows = []
    for v in V.basis:
        w, z = v[:d], v[d:]
        rows.append([w[j] + sum(G[j][l] * z[l] for l in range(n)) for j in range(d)])
    return rows


def proj_dim(T: QuadTuple, V: Subspace, t: Sequence) -> int:
    """dim of the projection of V onto the tangent space at t, exactly."""
    if V.ambient != T.d + T.n:
        raise ValueError("subspace ambient dimension mismatch")
    if V.dim == 0:
        return 0
    return mat_rank(_proj_matrix(T, V, t))


class NoCertificateError(Exception):
    """All candidate minors vanish exactly; the lemma hypothesis failed here."""


def _adapted_vectors(V: Subspace, d: int, n: int, H1: int, H2: int):
    """H1 vectors from V cap S1 and H2 vectors with independent z-parts."""
    zblock = [v[d:] for v in V.basis]
    # coefficients c with c . zblock = 0 give V cap S1
    ns = nullspace([[zblock[r][c] for r in range(V.dim)] for c in range(n)]) if V.dim else []
    cap_s1 = []
    for c in ns:
        vec = [sum(c[r] * V.basis[r][i] for r in range(V.dim)) for i in range(V.ambient)]
        cap_s1.append(vec)
    keep = independent_subset(cap_s1)
    cap_s1 = [cap_s1[i] for i in keep]
    if H1 > len(cap_s1):
        raise ValueError(f"H1 = {H1} exceeds dim(V cap S1) = {len(cap_s1)}")
    zidx = independent_subset(zblock)
    if H2 > len(zidx):
        raise ValueError(f"H2 = {H2} exceeds dim(V / S1) = {len(zidx)}")
    vecs = cap_s1[:H1] + [list(V.basis[i]) for i in zidx[:H2]]
    return vecs


def proj_dim_certificate(T: QuadTuple, V: Subspace, H1: int, H2: int) -> MultiPoly:
    """A nonzero (H1+H2)-minor of (w_i + grad P(t) z_i), certifying
    proj_dim >= H1 + H2 off a variety of degree <= H2."""
    d, n = T.d, T.n
    if H1 < 0 or H2 < 0:
        raise ValueError("H1, H2 must be nonnegative")
    if H1 > d - n:
        raise ValueError(f"H1 = {H1} exceeds d - n = {d - n}")
    vecs = _adapted_vectors(V, d, n, H1, H2)
    H = H1 + H2
    if H == 0:
        return MultiPoly.constant(d, 1)
    grad_polys = T.gradient_polys()  # n rows of d linear polys
    rows = []
    for v in vecs:
        w, z = v[:d], v[d:]
        row = []
        for j in range(d):
            entry = MultiPoly.constant(d, w[j])
            for l in range(n):
                if z[l] != 0:
                    entry = entry + grad_polys[l][j].scale(z[l])
            row.append(entry)
        rows.append(row)
    mat = PolyMatrix.from_rows(rows)
    for minor in polymat_minors(mat, H):
        if not minor.is_zero():
            if minor.degree() > H2:
                raise AssertionError("certificate degree exceeds H2")
            return minor
    raise NoCertificateError(f"all {H}x{H} minors vanish for this subspace")


# ---------------------------------------------------------------------------
# BCCT condition
# ---------------------------------------------------------------------------


def bcct_check(T: QuadTuple, ts: Sequence[Sequence], V: Subspace) -> bool:
    """dim(V) <= (d+n)/(d M) * sum_j proj_dim(V, t_j), exactly."""
    M = len(ts)
    if M == 0:
        raise ValueError("need at least one point")
    total = sum(proj_dim(T, V, t) for t in ts)
    return Fraction(V.dim) <= Fraction(T.d + T.n, T.d * M) * total


def _orthocomplement(basis: Sequence[Sequence[Fraction]], N: int) -> List[List[Fraction]]:
    if not basis:
        return [list(row) for row in Subspace.coordinate(N, range(N)).basis]
    return nullspace(basis)


def _intersection(A: Sequence[Sequence[Fraction]], B: Sequence[Sequence[Fraction]],
                  N: int) -> List[List[Fraction]]:
    """Basis of span(A) cap span(B): solve A^T a = B^T b."""
    rows = []
    for i in range(N):
        rows.append([v[i] for v in A] + [-v[i] for v in B])
    out = []
    for coeffs in nullspace(rows):
        a = coeffs[: len(A)]
        vec = [sum(a[k] * A[k][i] for k in range(len(A))) for i in range(N)]
        if any(x != 0 for x in vec):
            out.append(vec)
    keep = independent_subset(out)
    return [out[i] for i in keep]


def _structured_candidates(T: QuadTuple, ts: Sequence[Sequence],
                           cfg: TransvConfig) -> List[Tuple[str, Subspace]]:
    d, n = T.d, T.n
    N = d + n
    cands: List[Tuple[str, Subspace]] = []
    cands.append((S1, Subspace.coordinate(N, range(d))))
    cands.append((S2, Subspace.coordinate(N, range(d, N))))
    if N <= 6:
        for r in range(1, N):
            for idxs in itertools.combinations(range(N), r):
                cands.append((f"coord{idxs}", Subspace.coordinate(N, idxs)))
    # tangent and normal spaces at (a subsample of) the points, their
    # pairwise intersections, and orthocomplements: shared tangent directions
    # are exactly how transversality degenerates on lines and subvarieties
    sub = list(range(len(ts))) if len(ts) <= 8 else list(range(8))
    frames = {}
    for i in sub:
        frame = [list(map(Fraction, v)) for v in T.tangent_frame(ts[i])]
        frames[i] = frame
        cands.append((f"tangent@{i}", Subspace(N, tuple(map(tuple, frame)))))
        nrm = nullspace(frame)
        if nrm:
            cands.append((f"normal@{i}", Subspace(N, tuple(map(tuple, nrm)))))
    seen_bases = set()
    for i, j in itertools.combinations(sub, 2):
        inter = _intersection(frames[i], frames[j], N)
        if 0 < len(inter) < N:
            key = tuple(sorted(tuple(map(str, v)) for v in inter))
            if key not in seen_bases:
                seen_bases.add(key)
                cands.append((f"tt-cap@{i},{j}", Subspace(N, tuple(map(tuple, inter)))))
                comp = _orthocomplement(inter, N)
                if comp:
                    cands.append(
                        (f"tt-cap-perp@{i},{j}", Subspace(N, tuple(map(tuple, comp))))
                    )
    rng = np.random.default_rng(cfg.seed)
    for dim in range(1, N):
        for k in range(cfg.random_subspaces):
            Braw = rng.normal(size=(dim, N))
            q, _ = np.linalg.qr(Braw.T)
            basis = tuple(
                tuple(Fraction(float(x)).limit_denominator(cfg.rationalize_den) for x in col)
                for col in q[:, :dim].T
            )
            if mat_rank(basis) == dim:
                cands.append((f"random{dim}.{k}", Subspace(N, basis)))
    return cands


def bcct_sampled(T: QuadTuple, ts: Sequence[Sequence], cfg: TransvConfig):
    """Search structured and random subspaces for a BCCT violation.

    Returns ("FEASIBLE", None) or ("INFEASIBLE", V_hat); any INFEASIBLE
    verdict is confirmed with exact rational ranks before being reported.
    With many points, ranks are prescreened in floating point and only
    near-violations re-checked exactly.
    """
    M = len(ts)
    if M == 0:
        raise ValueError("need at least one point")
    cands = _structured_candidates(T, ts, cfg)
    use_float = M > cfg.exact_proj_cutoff
    c = Fraction(T.d + T.n, T.d * M)
    if use_float:
        tarr = np.array([[float(x) for x in t] for t in ts])
        forms = np.array([[[float(x) for x in row] for row in Mj] for Mj in T.forms])
        # tangent frames at every point: frame[m] is d x (d+n)
        grads = 2.0 * np.einsum("nij,mj->mni", forms, tarr)  # m, n, d -> grad columns
        frames = np.zeros((M, T.d, T.d + T.n))
        frames[:, :, : T.d] = np.eye(T.d)
        frames[:, :, T.d:] = np.transpose(grads, (0, 2, 1))
    for name, V in cands:
        if not use_float:
            if not bcct_check(T, ts, V):
                return "INFEASIBLE", V
            continue
        B = V.float_basis()
        prods = np.einsum("vk,mjk->mvj", B, frames)  # per point: dimV x d
        dims = np.linalg.matrix_rank(prods, tol=1e-9)
        slack = float(c) * float(dims.sum()) - V.dim
        if slack < 0.5:  # exact confirmation for violations and near-ties
            if not bcct_check(T, ts, V):
                return "INFEASIBLE", V
    return "FEASIBLE", None


# ---------------------------------------------------------------------------
# Brascamp-Lieb constants via the Gaussian ansatz
# ---------------------------------------------------------------------------


@dataclass
class BLDatum:
    """M subspaces of dimension d in R^{d+n} with exponent c = (d+n)/(dM)."""

    subspaces: List[np.ndarray]  # each (d+n) x d with orthonormal columns
    c: float

    @staticmethod
    def from_bases(bases: Sequence[np.ndarray]) -> "BLDatum":
        if not bases:
            raise ValueError("need at least one subspace")
        qs = []
        d = None
        for B in bases:
            B = np.asarray(B, dtype=float)
            if B.ndim != 2:
                raise ValueError("basis must be a matrix")
            if B.shape[0] < B.shape[1]:
                B = B.T
            q, r = np.linalg.qr(B)
            dim = int(np.sum(np.abs(np.diag(r)) > 1e-12 * max(1.0, abs(r[0, 0]))))
            if d is None:
                d = dim
            elif dim != d:
                raise ValueError("all subspaces must share the dimension d")
            qs.append(q[:, :dim])
        N = qs[0].shape[0]
        M = len(qs)
        c = (N) / (d * M)
        return BLDatum(qs, c)

    @staticmethod
    def from_tangent_spaces(T: QuadTuple, ts: Sequence[Sequence]) -> "BLDatum":
        bases = []
        for t in ts:
            frame = np.array([[float(x) for x in v] for v in T.tangent_frame(t)])
            bases.append(frame.T)  # columns span V(t)
        return BLDatum.from_bases(bases)


@dataclass
class BLResult:
    divergent: bool
    value: Optional[float] = None
    iterations: int = 0
    converged: bool = True

    def to_json_obj(self):
        return {
            "divergent": self.divergent,
            "value": self.value,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def bl_constant_gaussian(datum: BLDatum, cfg: Optional[TransvConfig] = None) -> BLResult:
    """Maximize prod det(A_j)^{c/2} / det(sum_j c Q_j A_j Q_j^T)^{1/2} over
    positive-definite A_j by simultaneous fixed-point updates
    A_j <- (Q_j^T M^{-1} Q_j)^{-1}."""
    cfg = cfg or TransvConfig(seed=0)
    Q = np.stack(datum.subspaces)  # (M, N, d)
    Mn, N, d = Q.shape
    c = datum.c
    A = np.broadcast_to(np.eye(d), (Mn, d, d)).copy()
    prev = None
    for it in range(1, cfg.bl_max_iter + 1):
        Mmat = c * np.einsum("mab,mbc,mdc->ad", Q, A, Q)
        ev = np.linalg.eigvalsh(Mmat)
        if ev[0] <= cfg.bl_cond_floor * max(ev[-1], 1.0):
            return BLResult(True, iterations=it)
        sign, logdetM = np.linalg.slogdet(Mmat)
        _, logdetA = np.linalg.slogdet(A)
        logobj = 0.5 * c * float(np.sum(logdetA)) - 0.5 * float(logdetM)
        if logobj > math.log(cfg.bl_divergence):
            return BLResult(True, iterations=it)
        if prev is not None and abs(logobj - prev) < cfg.bl_tol * max(1.0, abs(logobj)):
            return BLResult(False, value=float(np.exp(logobj)), iterations=it)
        prev = logobj
        Minv = np.linalg.inv(Mmat)
        S = np.einsum("mba,bc,mcd->mad", Q, Minv, Q)
        A = np.linalg.inv(S)
        # global rescaling (objective-invariant) to keep the iterates bounded
        _, logdets = np.linalg.slogdet(A)
        scale = np.exp(-float(np.mean(logdets)) / d)
        A = A * scale
    return BLResult(False, value=float(np.exp(prev)) if prev is not None else None,
                    iterations=cfg.bl_max_iter, converged=False)


# ---------------------------------------------------------------------------
# nu-transversality of cap tuples
# ---------------------------------------------------------------------------


@dataclass
class TransversalityReport:
    verdict: str  # TRANSVERSE | NOT_TRANSVERSE
    nu_hat: Optional[float] = None
    max_bl: Optional[float] = None
    witness_subspace: Optional[dict] = None
    witness_points: Optional[list] = None
    samples: int = 0
    seed: Optional[int] = None

    def to_json_obj(self):
        return {
            "verdict": self.verdict,
            "nu_hat": self.nu_hat,
            "max_bl": self.max_bl,
            "witness_subspace": self.witness_subspace,
            "witness_points": self.witness_points,
            "samples": self.samples,
            "seed": self.seed,
        }


def _tuple_samples(caps: Sequence[Cap], cfg: TransvConfig) -> List[List[tuple]]:
    """Aligned corner tuples, the center tuple, and seeded random rational tuples."""
    d = caps[0].d
    tuples = [[c.center() for c in caps]]
    for mask in range(1 << d):
        tup = []
        for cap in caps:
            pt = tuple(
                a + (cap.scale if (mask >> i) & 1 else 0)
                for i, a in enumerate(cap.anchor)
            )
            tup.append(pt)
        tuples.append(tup)
    rng = np.random.default_rng(cfg.seed)
    q = 16
    for _ in range(cfg.tuple_samples):
        tup = []
        for cap in caps:
            pt = tuple(
                a + cap.scale * Fraction(int(rng.integers(0, q + 1)), q)
                for a in cap.anchor
            )
            tup.append(pt)
        tuples.append(tup)
    return tuples


def nu_transverse(T: QuadTuple, caps: Sequence[Cap], cfg: TransvConfig) -> TransversalityReport:
    """Sample point tuples over the caps and test BCCT feasibility plus the
    Gaussian BL value; nu_hat = 1 / max BL over the samples."""
    if not caps:
        raise ValueError("empty cap list")
    scale = caps[0].scale
    if any(c.scale != scale for c in caps):
        raise ValueError("caps must share a common scale")
    max_bl = 0.0
    count = 0
    for ts in _tuple_samples(caps, cfg):
        count += 1
        verdict, V = bcct_sampled(T, ts, cfg)
        if verdict == "INFEASIBLE":
            return TransversalityReport(
                "NOT_TRANSVERSE", witness_subspace=V.to_json_obj(),
                witness_points=[[str(x) for x in t] for t in ts],
                samples=count, seed=cfg.seed,
            )
        res = bl_constant_gaussian(BLDatum.from_tangent_spaces(T, ts), cfg)
        if res.divergent or res.value is None or res.value > 1.0 / cfg.nu_min:
            return TransversalityReport(
                "NOT_TRANSVERSE",
                max_bl=res.value if not res.divergent else None,
                witness_points=[[str(x) for x in t] for t in ts],
                samples=count, seed=cfg.seed,
            )
        max_bl = max(max_bl, res.value)
    return TransversalityReport(
        "TRANSVERSE", nu_hat=1.0 / max_bl if max_bl > 0 else None,
        max_bl=max_bl, samples=count, seed=cfg.seed,
    )


# ---------------------------------------------------------------------------
# the concentration fraction theta and the transversality hypothesis audit
# ---------------------------------------------------------------------------


def compute_theta(d: int, n: int) -> Fraction:
    """1 minus the maximum over dim V of
    [dimV * d/(d+n)] / floor(d*dimV/(d+n) + 1), exactly."""
    if d < 1 or n < 1:
        raise ValueError("require d, n >= 1")
    best = Fraction(0)
    for dimv in range(1, d + n + 1):
        num = Fraction(dimv * d, d + n)
        den = math.floor(num) + 1
        best = max(best, num / den)
    return 1 - best


@dataclass
class AuditEntry:
    dim: int
    alt1: int = 0
    alt2: int = 0
    unknown: int = 0
    max_cert_degree: int = 0
    unknown_witnesses: list = field(default_factory=list)


def hypothesis_transverse_audit(T: QuadTuple, cfg: TransvConfig) -> Dict[int, AuditEntry]:
    """For random and coordinate subspaces of every dimension, decide which
    alternative of the transversality hypothesis holds: (1) the projection
    bound holds for every t (certified via dim(V cap S1)), or (2) it is
    strict for some t (certified by a nonzero minor).  Subspaces certifying
    neither are tallied UNKNOWN with an exact witness, not guessed."""
    d, n = T.d, T.n
    N = d + n
    rng = np.random.default_rng(cfg.seed)
    out: Dict[int, AuditEntry] = {}
    for dim in range(1, N):
        entry = AuditEntry(dim)
        cands: List[Subspace] = []
        if N <= 6:
            for idxs in itertools.combinations(range(N), dim):
                cands.append(Subspace.coordinate(N, idxs))
        for _ in range(cfg.random_subspaces):
            B = rng.normal(size=(dim, N))
            q, _ = np.linalg.qr(B.T)
            basis = tuple(
                tuple(Fraction(float(x)).limit_denominator(cfg.rationalize_den) for x in col)
                for col in q[:, :dim].T
            )
            if mat_rank(basis) == dim:
                cands.append(Subspace(N, basis))
        bound = Fraction(d * dim, d + n)
        for V in cands:
            zblock = [[v[d + l] for l in range(n)] for v in V.basis]
            dim_cap_s1 = V.dim - mat_rank(zblock)
            if Fraction(dim_cap_s1) >= bound:
                entry.alt1 += 1
                continue
            r2 = math.floor(bound) + 1
            h2max = V.dim - dim_cap_s1
            found = False
            for h2 in range(min(r2, h2max), -1, -1):
                h1 = r2 - h2
                if h1 < 0 or h1 > min(dim_cap_s1, d - n) or h1 + h2 > d:
                    continue
                try:
                    cert = proj_dim_certificate(T, V, h1, h2)
                    entry.alt2 += 1
                    entry.max_cert_degree = max(entry.max_cert_degree, max(cert.degree(), 0))
                    found = True
                    break
                except (NoCertificateError, ValueError):
                    continue
            if not found:
                entry.unknown += 1
                entry.unknown_witnesses.append(V.to_json_obj())
        out[dim] = entry
    return out
