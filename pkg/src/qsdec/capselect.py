"""The transverse-or-concentrated cap-selection algorithm.

Starting from the stock of caps whose norms clear the K^-d threshold, each
round either certifies the surviving caps transverse (and stops), or finds a
low-degree polynomial whose small neighborhood captures a theta-fraction of
them, covers that variety neighborhood with dyadic cube layers, removes the
covered caps, and repeats.  Since every productive round removes at least a
theta-fraction, the loop ends after O(log K) rounds; when no concentrating
variety can be exhibited for a non-transverse stock, the honest error
NO_VARIETY_FOUND is raised rather than forcing either branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from .polyalg import MultiPoly
from .quadforms import Cap, QuadTuple
from .transversality import TransvConfig, TransversalityReport, compute_theta, nu_transverse
from .varieties import CubeCover, numpy_poly, variety_cube_cover


class NoVarietyFound(RuntimeError):
    pass


class RoundLimit(RuntimeError):
    pass


@dataclass
class SelectConfig:
    seed: int
    A: int = 2
    theta: Optional[Fraction] = None
    n_ransac: int = 64
    dilate: int = 4
    exact_fit_rtol: float = 1e-8
    transv: Optional[TransvConfig] = None

    def transv_config(self) -> TransvConfig:
        return self.transv or TransvConfig(seed=self.seed, random_subspaces=6, tuple_samples=2)


@dataclass
class CapStock:
    round: int
    caps: List[Cap]
    norms: Dict[Cap, float]


@dataclass
class ConcentrationCertificate:
    poly: MultiPoly
    degree: int
    fraction: float
    residual: float
    captured: List[Cap]

    def to_json_obj(self):
        return {
            "poly": self.poly.to_json_obj(),
            "degree": self.degree,
            "fraction": self.fraction,
            "residual": self.residual,
            "captured": len(self.captured),
        }


@dataclass
class SelectionOutcome:
    transverse: List[Cap]
    transverse_report: Optional[TransversalityReport]
    layers: List[dict]  # {round, level, scale, cubes}
    rounds: int
    removed_per_round: List[int]
    subthreshold: List[Cap]

    def to_json_obj(self):
        return {
            "transverse": [c.to_json_obj() for c in self.transverse],
            "transverse_report": (
                self.transverse_report.to_json_obj() if self.transverse_report else None
            ),
            "layers": [
                {
                    "round": l["round"],
                    "level": l["level"],
                    "scale": str(l["scale"]),
                    "cubes": [c.to_json_obj() for c in l["cubes"]],
                }
                for l in self.layers
            ],
            "rounds": self.rounds,
            "removed_per_round": self.removed_per_round,
            "subthreshold": [c.to_json_obj() for c in self.subthreshold],
        }


def initial_stock(norms: Dict[Cap, float], K: int) -> CapStock:
    """Keep the caps whose norm is at least K^-d times the maximum."""
    if not norms:
        return CapStock(0, [], {})
    d = next(iter(norms)).d
    peak = max(norms.values())
    thr = peak * float(K) ** (-d)
    caps = sorted(
        (c for c, v in norms.items() if v >= thr),
        key=lambda c: tuple(c.anchor),
    )
    return CapStock(0, caps, dict(norms))


def _monomials_upto(d: int, degree: int) -> List[Tuple[int, ...]]:
    out: List[Tuple[int, ...]] = []

    def rec(prefix, remaining, budget):
        if remaining == 0:
            out.append(tuple(prefix))
            return
        for e in range(budget + 1):
            rec(prefix + [e], remaining - 1, budget - e)

    rec([], d, degree)
    return sorted(out, key=lambda a: (sum(a), a))


def _lipschitz_bound(coeffs: np.ndarray, monos: Sequence[Tuple[int, ...]]) -> float:
    """sup of |grad P| on [0,1]^d is at most sum |c_alpha| * |alpha|."""
    return float(sum(abs(c) * sum(a) for c, a in zip(coeffs, monos)))


def find_concentrating_variety(caps: Sequence[Cap], d: int, theta, cfg: SelectConfig
                               ) -> Optional[ConcentrationCertificate]:
    """RANSAC search for a polynomial of degree <= d whose 2/K-neighborhood
    captures a theta-fraction of the cap centers.

    Centers are pushed through the Veronese map; the candidate polynomial is
    the smallest right singular vector of the moment matrix of a subset, and
    acceptance tests |P(center)| <= Lip * (2/K) with P normalized to unit l1
    coefficient sum.  Degrees are tried in increasing order, so exact
    low-degree concentrations (collinear centers) yield degree-1 certificates.
    """
    if not caps:
        return None
    theta = float(theta)
    K = int(1 / caps[0].scale)
    centers = np.array([[float(x) for x in c.center()] for c in caps])
    N = len(caps)
    rng = np.random.default_rng(cfg.seed)
    for degree in range(1, d + 1):
        monos = _monomials_upto(d, degree)
        V = np.stack([np.prod(centers ** np.array(m), axis=1) for m in monos], axis=1)
        scale = max(float(np.linalg.norm(V)), 1e-30)
        need = len(monos)
        subset_size = max(need, math.ceil(theta * N))
        for attempt in range(cfg.n_ransac + 1):
            if attempt == 0 or subset_size >= N:
                idx = np.arange(N)  # deterministic full-set fit first
            else:
                idx = rng.choice(N, size=subset_size, replace=False)
            _, sv, vt = np.linalg.svd(V[idx], full_matrices=True)
            coeffs = vt[-1]
            l1 = float(np.abs(coeffs).sum())
            if l1 == 0:
                continue
            coeffs = coeffs / l1
            smin = float(sv[-1]) if len(sv) >= len(monos) else 0.0
            lip = max(_lipschitz_bound(coeffs, monos), 1e-12)
            vals = np.abs(V @ coeffs)
            near = vals <= lip * (2.0 / K)
            if near.sum() >= theta * N:
                terms = {
                    m: Fraction(float(c))
                    for m, c in zip(monos, coeffs)
                    if abs(c) > 1e-14
                }
                captured = [c for c, hit in zip(caps, near) if hit]
                P = MultiPoly(d, terms)
                return ConcentrationCertificate(
                    poly=P,
                    degree=max(P.degree(), 1),
                    fraction=float(near.sum()) / N,
                    residual=smin / scale,
                    captured=captured,
                )
            if attempt > 0 and subset_size >= N:
                break
    return None


def bg_select(T: QuadTuple, norms: Dict[Cap, float], K: int, cfg: SelectConfig
              ) -> SelectionOutcome:
    """Run the selection loop on one norm map.

    Removal per round: caps lying inside a covering cube of this round's
    layers, together with the caps counted by the concentration certificate
    (both are certified near the variety; the union keeps the theta-fraction
    contraction that bounds the round count).
    """
    theta = cfg.theta if cfg.theta is not None else compute_theta(T.d, T.n)
    stock = initial_stock(norms, K)
    part = sorted(norms.keys(), key=lambda c: tuple(c.anchor))
    sub = [c for c in part if c not in set(stock.caps)]
    max_rounds = math.ceil(math.log2(max(K, 2))) * math.ceil(1 / float(theta))
    layers_out: List[dict] = []
    removed_counts: List[int] = []
    seen_by_level: Dict[int, Set[Cap]] = {}
    kept_by_level: Dict[int, List[Tuple[Fraction, Cap]]] = {}
    tcfg = cfg.transv_config()

    current = list(stock.caps)
    rounds = 0
    while True:
        if not current:
            return SelectionOutcome([], None, layers_out, rounds, removed_counts, sub)
        report = nu_transverse(T, current, tcfg)
        if report.verdict == "TRANSVERSE":
            return SelectionOutcome(current, report, layers_out, rounds, removed_counts, sub)
        if rounds >= max_rounds:
            raise RoundLimit(f"exceeded {max_rounds} selection rounds")
        cert = find_concentrating_variety(current, T.d, theta, cfg)
        if cert is None:
            raise NoVarietyFound(
                "stock is not transverse but no concentrating variety was found"
            )
        assert cert.fraction >= float(theta), "certificate under the fraction bound"
        cover = variety_cube_cover(cert.poly, K, cfg.A, T.d, mode="corollary",
                                   dilate=cfg.dilate)
        raw_cubes: List[Cap] = []
        for level, (scale, cubes) in enumerate(cover.layers, start=1):
            seen = seen_by_level.setdefault(level, set())
            kept_prev = [
                pc for lv in range(1, level) for _, pc in kept_by_level.get(lv, [])
            ]
            fresh = []
            for c in cubes:
                raw_cubes.append(c)
                if c in seen:
                    continue
                if any(pc.contains_cap(c) for pc in kept_prev if pc.scale >= c.scale):
                    continue
                fresh.append(c)
            seen.update(cubes)
            kept_by_level.setdefault(level, []).extend((scale, c) for c in fresh)
            layers_out.append(
                {"round": rounds, "level": level, "scale": scale, "cubes": fresh}
            )
        covered = set(cert.captured)
        for cap in current:
            if cap in covered:
                continue
            for cube in raw_cubes:
                if cube.contains_cap(cap):
                    covered.add(cap)
                    break
        remaining = [c for c in current if c not in covered]
        removed_counts.append(len(current) - len(remaining))
        assert removed_counts[-1] >= float(theta) * len(current) or not remaining
        current = remaining
        rounds += 1
