"""Quadratic-form tuples, dyadic caps, parabolic reparametrizations and
uncertainty boxes, and hyperplane restriction.

Everything here is exact: points, anchors and matrices are rationals, and
containment/nesting questions are decided by solving the associated linear
systems in Fraction arithmetic.  Numeric modules convert at their boundary.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Tuple

from .exactla import mat_rank, mat_solve
from .polyalg import MultiPoly

Point = Tuple[Fraction, ...]


def _frac(x) -> Fraction:
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


def _symmetric(m: Sequence[Sequence]) -> List[List[Fraction]]:
    out = [[_frac(x) for x in row] for row in m]
    d = len(out)
    for row in out:
        if len(row) != d:
            raise ValueError("form matrix is not square")
    for i in range(d):
        for j in range(i):
            if out[i][j] != out[j][i]:
                raise ValueError("form matrix is not symmetric")
    return out


@dataclass(frozen=True)
class QuadTuple:
    """A tuple of n real quadratic forms P_j(t) = t^T M_j t on R^d."""

    d: int
    n: int
    forms: Tuple[Tuple[Tuple[Fraction, ...], ...], ...]

    def __post_init__(self):
        if self.d < 1 or self.n < 1:
            raise ValueError("require d >= 1 and n >= 1")
        if len(self.forms) != self.n:
            raise ValueError(f"expected {self.n} forms, got {len(self.forms)}")
        frozen = []
        for m in self.forms:
            sym = _symmetric(m)
            if len(sym) != self.d:
                raise ValueError("form dimension disagrees with d")
            frozen.append(tuple(tuple(row) for row in sym))
        object.__setattr__(self, "forms", tuple(frozen))

    # -- evaluation -----------------------------------------------------

    def eval_forms(self, t: Sequence) -> Tuple[Fraction, ...]:
        """(P_1(t), ..., P_n(t)) exactly."""
        tf = [_frac(x) for x in t]
        if len(tf) != self.d:
            raise ValueError("point dimension mismatch")
        vals = []
        for M in self.forms:
            s = Fraction(0)
            for i in range(self.d):
                if tf[i] == 0:
                    continue
                row = M[i]
                s += tf[i] * sum(row[j] * tf[j] for j in range(self.d))
            vals.append(s)
        return tuple(vals)

    def gradient_matrix(self, a: Sequence) -> List[List[Fraction]]:
        """d x n matrix with column j equal to grad P_j(a) = 2 M_j a."""
        af = [_frac(x) for x in a]
        if len(af) != self.d:
            raise ValueError("point dimension mismatch")
        cols = []
        for M in self.forms:
            cols.append([2 * sum(M[i][j] * af[j] for j in range(self.d)) for i in range(self.d)])
        # transpose columns into a d x n layout
        return [[cols[j][i] for j in range(self.n)] for i in range(self.d)]

    def tangent_frame(self, t: Sequence) -> List[List[Fraction]]:
        """The d tangent vectors n_j(t) = (e_j, grad P(t) . e_j) in R^{d+n}."""
        G = self.gradient_matrix(t)  # d x n
        frame = []
        for j in range(self.d):
            v = [Fraction(0)] * self.d + list(G[j])
            v[j] = Fraction(1)
            frame.append(v)
        return frame

    def gradient_polys(self) -> List[List[MultiPoly]]:
        """Rows grad P_j(t) as linear polynomials in t (n rows of d entries)."""
        rows = []
        for M in self.forms:
            rows.append(
                [MultiPoly.linear([2 * M[i][k] for k in range(self.d)]) for i in range(self.d)]
            )
        return rows

    def max_coeff(self) -> Fraction:
        return max((abs(x) for M in self.forms for row in M for x in row), default=Fraction(0))

    def graph_box_constant(self) -> Fraction:
        """Hard floor on the box constant: C >= d^2 max||M||_inf makes the
        normal slab swallow the quadratic remainder of the graph over a cap."""
        return max(Fraction(1), self.d * self.d * self.max_coeff())

    def min_box_constant(self) -> Fraction:
        """Normal-block constant C making the uncertainty boxes dyadically
        nested (with the fixed tangential constant TANGENTIAL_C).

        1 + 3 d max||M||_inf (d+2) dominates the worst-case tangent-plane
        mismatch quad + 2 Ct delta ||M h||_1 over all realizable anchor
        offsets h; a single isotropic constant cannot work for d >= 2, where
        the mismatch term scales with C itself.
        """
        return 1 + 3 * self.d * self.max_coeff() * (self.d + 2)

    def is_diagonal(self) -> bool:
        return all(
            M[i][j] == 0 for M in self.forms for i in range(self.d) for j in range(self.d) if i != j
        )

    def validate_dn(self) -> bool:
        """Whether (d, n) lies in the range the main theorem covers."""
        if self.n == 1:
            return self.d >= 1
        if self.n == 2:
            return 2 <= self.d <= 4
        if self.n == 3:
            return self.d == 3
        return False

    # -- serialization ----------------------------------------------------

    def to_json_obj(self):
        return {
            "d": self.d,
            "n": self.n,
            "forms": [[str(x) for row in M for x in row] for M in self.forms],
        }

    @staticmethod
    def from_json_obj(obj) -> "QuadTuple":
        d = int(obj["d"])
        forms = []
        for flat in obj["forms"]:
            if len(flat) != d * d:
                raise ValueError("row-major form entry count disagrees with d")
            forms.append([[_frac(flat[i * d + j]) for j in range(d)] for i in range(d)])
        return QuadTuple(d, int(obj["n"]), tuple(map(tuple, (tuple(map(tuple, f)) for f in forms))))


# -- presets ---------------------------------------------------------------


def parabola(d: int) -> QuadTuple:
    """(t, |t|^2): the elliptic paraboloid, n = 1."""
    eye = [[Fraction(1 if i == j else 0) for j in range(d)] for i in range(d)]
    return QuadTuple(d, 1, (tuple(map(tuple, eye)),))


def diag_pair(a: Sequence, b: Sequence) -> QuadTuple:
    """Simultaneously diagonal pair P = sum a_j t_j^2, Q = sum b_j t_j^2."""
    if len(a) != len(b):
        raise ValueError("diagonal coefficient lists must have equal length")
    d = len(a)
    A = [[_frac(a[i]) if i == j else Fraction(0) for j in range(d)] for i in range(d)]
    B = [[_frac(b[i]) if i == j else Fraction(0) for j in range(d)] for i in range(d)]
    return QuadTuple(d, 2, (tuple(map(tuple, A)), tuple(map(tuple, B))))


def diag_forms(*coeff_lists: Sequence) -> QuadTuple:
    """n simultaneously diagonal forms from n coefficient lists."""
    d = len(coeff_lists[0])
    forms = []
    for cl in coeff_lists:
        if len(cl) != d:
            raise ValueError("coefficient lists must share a length")
        forms.append(
            tuple(
                tuple(_frac(cl[i]) if i == j else Fraction(0) for j in range(d))
                for i in range(d)
            )
        )
    return QuadTuple(d, len(forms), tuple(forms))


def bd_d2n2(A: Sequence, B: Sequence) -> QuadTuple:
    """The planar pair A1 t1^2 + 2 A2 t1 t2 + A3 t2^2 and likewise for B."""
    if len(A) != 3 or len(B) != 3:
        raise ValueError("expected coefficient triples (A1, A2, A3) and (B1, B2, B3)")
    A1, A2, A3 = map(_frac, A)
    B1, B2, B3 = map(_frac, B)
    return QuadTuple(
        2, 2, (((A1, A2), (A2, A3)), ((B1, B2), (B2, B3)))
    )


def zero_form(d: int) -> QuadTuple:
    """Degenerate flat piece P == 0; used by the sharpness lower-bound family."""
    z = tuple(tuple(Fraction(0) for _ in range(d)) for _ in range(d))
    return QuadTuple(d, 1, (z,))


_PRESET_RE = re.compile(r"^([A-Za-z0-9_-]+)\((.*)\)$")


def parse_forms_spec(spec: str) -> QuadTuple:
    """Parse a preset string like 'parabola(2)' or 'diag(1,1,1,1;1,2,3,4)'."""
    m = _PRESET_RE.match(spec.strip())
    if not m:
        raise ValueError(f"not a preset spec: {spec!r}")
    name, args = m.group(1), m.group(2)
    if name == "parabola":
        return parabola(int(args))
    if name == "zero":
        return zero_form(int(args))
    if name == "diag":
        lists = [[_frac(x) for x in part.split(",")] for part in args.split(";")]
        return diag_forms(*lists)
    if name in ("BD-d2n2", "bd-d2n2"):
        a, b = args.split(";")
        return bd_d2n2([_frac(x) for x in a.split(",")], [_frac(x) for x in b.split(",")])
    raise ValueError(f"unknown preset {name!r}")


def load_forms(path_or_spec: str) -> QuadTuple:
    """Load a QuadTuple from a JSON file path or a preset spec string."""
    try:
        with open(path_or_spec) as fh:
            return QuadTuple.from_json_obj(json.load(fh))
    except (OSError, IsADirectoryError):
        return parse_forms_spec(path_or_spec)


# ---------------------------------------------------------------------------
# caps
# ---------------------------------------------------------------------------


def _is_dyadic(x: Fraction) -> bool:
    return x > 0 and (x.denominator & (x.denominator - 1)) == 0 and (
        x.numerator & (x.numerator - 1)
    ) == 0 and x <= 1


@dataclass(frozen=True)
class Cap:
    """A dyadic cube anchor + delta*[0,1]^d inside [0,1]^d."""

    anchor: Point
    scale: Fraction

    def __post_init__(self):
        sc = _frac(self.scale)
        if not _is_dyadic(sc):
            raise ValueError(f"scale {sc} is not dyadic in (0, 1]")
        anchor = tuple(_frac(x) for x in self.anchor)
        for x in anchor:
            if x < 0 or x + sc > 1:
                raise ValueError(f"cap {anchor} at scale {sc} leaves [0,1]^d")
            if (x / sc).denominator != 1:
                raise ValueError("anchor is not on the delta-grid")
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "scale", sc)

    @property
    def d(self) -> int:
        return len(self.anchor)

    def center(self) -> Point:
        h = self.scale / 2
        return tuple(a + h for a in self.anchor)

    def corners(self) -> List[Point]:
        pts = [()]
        for a in self.anchor:
            pts = [p + (a + b * self.scale,) for p in pts for b in (0, 1)]
        return pts

    def dilate_bounds(self, factor: int = 2) -> List[Tuple[Fraction, Fraction]]:
        """Per-coordinate bounds of factor*cap (dilation about the center)."""
        h = self.scale * factor / 2
        return [(c - h, c + h) for c in self.center()]

    def contains_point(self, t: Sequence) -> bool:
        tf = [_frac(x) for x in t]
        return all(a <= x <= a + self.scale for a, x in zip(self.anchor, tf))

    def contains_cap(self, other: "Cap") -> bool:
        return other.scale <= self.scale and all(
            a <= b and b + other.scale <= a + self.scale
            for a, b in zip(self.anchor, other.anchor)
        )

    def to_json_obj(self):
        return {"anchor": [str(a) for a in self.anchor], "scale": str(self.scale)}


def caps_partition(delta, d: int) -> List[Cap]:
    """Part_delta: the tiling of [0,1]^d by dyadic cubes of side delta."""
    sc = _frac(delta)
    if not _is_dyadic(sc):
        raise ValueError(f"{sc} is not dyadic")
    k = int(1 / sc)
    anchors = [()]
    for _ in range(d):
        anchors = [p + (Fraction(i) * sc,) for p in anchors for i in range(k)]
    return [Cap(a, sc) for a in anchors]


def subcaps(Q: Cap, delta) -> List[Cap]:
    """Partition of the cap Q into dyadic cubes of side delta <= side(Q)."""
    sc = _frac(delta)
    if not _is_dyadic(sc) or sc > Q.scale:
        raise ValueError("delta must be dyadic and at most side(Q)")
    k = int(Q.scale / sc)
    anchors = [()]
    for a0 in Q.anchor:
        anchors = [p + (a0 + Fraction(i) * sc,) for p in anchors for i in range(k)]
    return [Cap(a, sc) for a in anchors]


def twocap_nested(theta: Cap, theta2: Cap) -> bool:
    """Whether 2*theta is contained in 2*theta2 (dilations about centers)."""
    for (lo, hi), (lo2, hi2) in zip(theta.dilate_bounds(2), theta2.dilate_bounds(2)):
        if lo < lo2 or hi > hi2:
            return False
    return True


# ---------------------------------------------------------------------------
# reparametrization and uncertainty boxes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Reparam:
    """The parabolic rescaling data of a cap: L_theta and grad P(anchor)."""

    anchor: Point
    scale: Fraction
    grad: Tuple[Tuple[Fraction, ...], ...]  # d x n
    matrix: Tuple[Tuple[Fraction, ...], ...]  # (d+n) x (d+n)


def reparam(theta: Cap, T: QuadTuple) -> Reparam:
    """L_theta = diag(delta I_d, delta^2 I_n) . [[I_d, grad P(a)], [0, I_n]]."""
    if theta.d != T.d:
        raise ValueError("cap dimension disagrees with the tuple")
    d, n = T.d, T.n
    delta = theta.scale
    G = T.gradient_matrix(theta.anchor)
    L = [[Fraction(0)] * (d + n) for _ in range(d + n)]
    for i in range(d):
        L[i][i] = delta
        for j in range(n):
            L[i][d + j] = delta * G[i][j]
    for j in range(n):
        L[d + j][d + j] = delta * delta
    return Reparam(theta.anchor, delta, tuple(map(tuple, G)), tuple(map(tuple, L)))


# tangential box constant: the cube factor of every uncertainty box is the
# fixed dilate TANGENTIAL_C * theta; only the normal thickness carries the
# large tuple-dependent constant.  (With a single isotropic constant the
# nesting property is false for d >= 2: the tangent-plane mismatch over the
# C delta-inflated cube grows like C delta^2 itself.)
TANGENTIAL_C = Fraction(2)


@dataclass(frozen=True)
class UncertaintyBox:
    """Parallelepiped center + L_theta^T([-Ct, Ct]^d x [-C, C]^n): the slab
    around the tangent plane over the (dilated) cap."""

    center: Point
    generator: Tuple[Tuple[Fraction, ...], ...]  # L_theta^T, acting on columns
    d: int
    C: Fraction
    Ct: Fraction = TANGENTIAL_C

    def _bounds(self) -> List[Fraction]:
        N = len(self.center)
        return [self.Ct] * self.d + [self.C] * (N - self.d)

    def contains(self, x: Sequence) -> bool:
        xf = [_frac(v) for v in x]
        diff = [xi - ci for xi, ci in zip(xf, self.center)]
        y = mat_solve([list(r) for r in self.generator], diff)
        if y is None:
            return False
        return all(abs(v) <= b for v, b in zip(y, self._bounds()))

    def corners(self) -> List[Point]:
        N = len(self.center)
        bounds = self._bounds()
        pts = []
        for mask in range(1 << N):
            y = [bounds[i] if (mask >> i) & 1 else -bounds[i] for i in range(N)]
            pts.append(
                tuple(
                    c + sum(self.generator[i][j] * y[j] for j in range(N))
                    for i, c in enumerate(self.center)
                )
            )
        return pts


def uncertainty_box(theta: Cap, T: QuadTuple, C=None) -> UncertaintyBox:
    """The uncertainty parallelepiped of a cap.

    C defaults to the module's nesting constant; explicit values below the
    graph-containment floor are rejected.
    """
    C = T.min_box_constant() if C is None else _frac(C)
    if C < T.graph_box_constant():
        raise ValueError(
            f"C = {C} is below the graph-containment floor {T.graph_box_constant()}"
        )
    rp = reparam(theta, T)
    d, n = T.d, T.n
    LT = [[rp.matrix[j][i] for j in range(d + n)] for i in range(d + n)]
    center = tuple(theta.anchor) + T.eval_forms(theta.anchor)
    return UncertaintyBox(center, tuple(map(tuple, LT)), d, C)


def uncertainty_nested(theta: Cap, theta2: Cap, T: QuadTuple, C=None) -> bool:
    """Exact check that U_theta fits inside U_theta2.

    Containment reduces to per-row conditions on h = a - a2 and the scales:
    tangential rows need (delta/delta2) Ct + |h_i|/delta2 <= Ct, and each
    normal row needs |h^T M_j h| + 2 Ct delta ||M_j h||_1 + C delta^2 <=
    C delta2^2 (the supremum over the y-box is attained at corners).
    """
    C = T.min_box_constant() if C is None else _frac(C)
    Ct = TANGENTIAL_C
    d = T.d
    delta, delta2 = theta.scale, theta2.scale
    h = [x - y for x, y in zip(theta.anchor, theta2.anchor)]
    for hi in h:
        if (delta / delta2) * Ct + abs(hi) / delta2 > Ct:
            return False
    for M in T.forms:
        Mh = [sum(M[i][j] * h[j] for j in range(d)) for i in range(d)]
        l1 = sum(abs(v) for v in Mh)
        quad = abs(sum(h[i] * Mh[i] for i in range(d)))
        if quad + 2 * Ct * delta * l1 + C * delta * delta > C * delta2 * delta2:
            return False
    return True


def nesting_violations_diagonal(T: QuadTuple, min_scale: Fraction, C=None) -> List[dict]:
    """Exhaustive nesting audit for diagonal tuples over all dyadic cap pairs
    with 2*theta inside 2*theta2 at scales >= min_scale.

    The containment condition depends on the pair only through h = a - a2 and
    the two scales, and for diagonal forms its maximum over the realizable
    h-box is attained at per-coordinate extreme values, so each scale pair is
    decided by O(d) exact operations instead of enumerating caps.
    """
    if not T.is_diagonal():
        raise ValueError("closed-form audit requires a diagonal tuple")
    C = T.min_box_constant() if C is None else _frac(C)
    Ct = TANGENTIAL_C
    d = T.d
    diag = [[M[i][i] for i in range(d)] for M in T.forms]
    kmax = 0
    s = Fraction(1)
    while s > min_scale:
        s /= 2
        kmax += 1
    if s != min_scale:
        raise ValueError("min_scale must be dyadic")
    bad = []
    for k in range(kmax + 1):  # fine scale delta = 2^-k
        delta = Fraction(1, 2**k)
        for k2 in range(k + 1):  # coarse scale delta2 = 2^-k2 >= delta
            delta2 = Fraction(1, 2**k2)
            # realizable per-coordinate h = a - a2 on the delta-grid,
            # constrained by 2theta inside 2theta2
            lo = delta / 2 - delta2 / 2
            hi = 3 * (delta2 - delta) / 2
            lo_g = delta * math.ceil(lo / delta)
            hi_g = delta * math.floor(hi / delta)
            if lo_g > hi_g:
                continue
            H = max(abs(lo_g), abs(hi_g))
            # tangential rows
            if (delta / delta2) * Ct + H / delta2 > Ct:
                bad.append({"delta": str(delta), "delta2": str(delta2), "row": "translation"})
                continue
            # normal rows, exact max over the h-box (separable for diagonal forms)
            for j, m in enumerate(diag):
                l1 = sum(abs(mi) * H for mi in m)
                qpos = sum(mi * H * H for mi in m if mi > 0)
                qneg = sum(-mi * H * H for mi in m if mi < 0)
                lhs = max(qpos, qneg) + 2 * Ct * delta * l1 + C * delta * delta
                if lhs > C * delta2 * delta2:
                    bad.append(
                        {"delta": str(delta), "delta2": str(delta2), "row": f"form{j}"}
                    )
                    break
    return bad


# ---------------------------------------------------------------------------
# hyperplanes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Hyperplane:
    """A linear hyperplane in R^d, as a graph t_g = sum coeffs . t_other.

    ``graph_coord`` is the coordinate solved for; ``coeffs`` has length d-1
    and refers to the remaining coordinates in increasing index order.
    Equivalently the plane has normal n with n[graph_coord] = -1.
    """

    d: int
    coeffs: Tuple[Fraction, ...]
    graph_coord: int = -1

    def __post_init__(self):
        gc = self.graph_coord % self.d
        cf = tuple(_frac(c) for c in self.coeffs)
        if len(cf) != self.d - 1:
            raise ValueError("expected d-1 graph coefficients")
        object.__setattr__(self, "graph_coord", gc)
        object.__setattr__(self, "coeffs", cf)

    def normal(self) -> List[Fraction]:
        nrm = [Fraction(0)] * self.d
        others = [i for i in range(self.d) if i != self.graph_coord]
        for i, c in zip(others, self.coeffs):
            nrm[i] = c
        nrm[self.graph_coord] = Fraction(-1)
        return nrm

    @staticmethod
    def from_normal(nrm: Sequence) -> "Hyperplane":
        """Graph the plane over the coordinate with the largest |normal| entry."""
        v = [_frac(x) for x in nrm]
        d = len(v)
        if all(x == 0 for x in v):
            raise ValueError("zero normal")
        g = max(range(d), key=lambda i: abs(v[i]))
        pivot = v[g]
        coeffs = [-v[i] / pivot for i in range(d) if i != g]
        return Hyperplane(d, tuple(coeffs), g)

    def grad_norm_bounded(self) -> bool:
        return all(abs(c) <= 1 for c in self.coeffs)

    def regraphed(self) -> "Hyperplane":
        """Re-graph over the largest normal component so |grad L| <= 1."""
        return self if self.grad_norm_bounded() else Hyperplane.from_normal(self.normal())

    def to_json_obj(self):
        return {
            "d": self.d,
            "graph_coord": self.graph_coord,
            "coeffs": [str(c) for c in self.coeffs],
        }


def restrict_to_hyperplane(T: QuadTuple, H: Hyperplane) -> QuadTuple:
    """Exact restriction P_j'(t') = P_j(t', L(t')) as (d-1)-variable forms."""
    if H.d != T.d:
        raise ValueError("hyperplane dimension disagrees with the tuple")
    if T.d < 2:
        raise ValueError("cannot restrict a 1-dimensional tuple")
    H = H.regraphed()
    d = T.d
    g = H.graph_coord
    others = [i for i in range(d) if i != g]
    # substitution matrix S: t = S t', with t_others = t' and t_g = coeffs . t'
    S = [[Fraction(0)] * (d - 1) for _ in range(d)]
    for col, i in enumerate(others):
        S[i][col] = Fraction(1)
    for col in range(d - 1):
        S[g][col] = H.coeffs[col]
    new_forms = []
    for M in T.forms:
        MS = [[sum(M[i][k] * S[k][c] for k in range(d)) for c in range(d - 1)] for i in range(d)]
        Mp = [
            [sum(S[k][r] * MS[k][c] for k in range(d)) for c in range(d - 1)]
            for r in range(d - 1)
        ]
        new_forms.append(tuple(tuple(row) for row in Mp))
    return QuadTuple(d - 1, T.n, tuple(new_forms))


def form_rank(M: Sequence[Sequence[Fraction]]) -> int:
    return mat_rank(M)
