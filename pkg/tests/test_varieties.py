import random
from fractions import Fraction as F

import numpy as np
import pytest

from qsdec.polyalg import MultiPoly, poly_norm1
from qsdec.varieties import (
    AllDerivativesSmall,
    LadderError,
    sample_sublevel_points,
    sample_variety_neighborhood,
    scale_ladder,
    sublevel_decompose,
    taylor_ivt_violations,
    variety_cube_cover,
    verify_sublevel_inclusion,
)


def random_poly(rng, nvars=2, deg=3, normalized=True):
    terms = {}
    for _ in range(rng.randint(3, 7)):
        alpha = tuple(rng.randint(0, deg) for _ in range(nvars))
        if sum(alpha) > deg:
            continue
        terms[alpha] = F(rng.randint(-20, 20), rng.randint(1, 9))
    P = MultiPoly(nvars, terms)
    if P.is_zero() or P.degree() < 1:
        return random_poly(rng, nvars, deg, normalized)
    if normalized:
        P = P.scale(1 / poly_norm1(P))
    return P


def test_ladder_trivial():
    assert scale_ladder(256, 1, 0).scales == (256,)


def test_ladder_examples():
    assert scale_ladder(2**8, 1, 2).scales == (4, 16, 256)
    assert scale_ladder(2**9, 2, 1).scales == (8, 512)


def test_ladder_monotone_dyadic():
    lad = scale_ladder(2**20, 2, 3)
    assert lad.scales[-1] == 2**20
    for a, b in zip(lad.scales, lad.scales[1:]):
        assert a <= b and (a & (a - 1)) == 0


def test_ladder_growth_comparability():
    # floor rounding keeps K_j^{A+1} <= K_{j+1} except at the clamped bottom
    lad = scale_ladder(2**20, 2, 3)
    for j in range(1, lad.D):
        assert lad.scales[j] ** (lad.A + 1) <= 2 * lad.scales[j + 1]
    assert lad.comparability_constant() <= 2 ** (lad.A + 1)


def test_ladder_corollary_range():
    lad = scale_ladder(2**20, 2, 3, mode="corollary")
    K = 2**20
    c = float(lad.c_exponent)
    for kt in lad.corollary_scales:
        assert K**c <= kt <= K**0.5
    assert list(lad.corollary_scales) == sorted(lad.corollary_scales)


def test_ladder_too_small():
    with pytest.raises(LadderError):
        scale_ladder(2**4, 2, 3)
    with pytest.raises(LadderError):
        scale_ladder(100, 2, 1)  # not dyadic


def test_sublevel_chain_linear():
    P = MultiPoly(2, {(1, 0): 1})
    cert = sublevel_decompose(P, scale_ladder(2**10, 2, 1))
    assert cert.alphas == [(0, 0)]
    assert cert.pieces == [P]


def test_sublevel_chain_product():
    # P = x1 x2: the greedy tie-break picks d/dx1, piece x2
    P = MultiPoly(2, {(1, 1): 1})
    cert = sublevel_decompose(P, scale_ladder(2**12, 2, 2))
    assert cert.alphas == [(1, 0), (0, 0)]
    assert cert.pieces[0] == MultiPoly(2, {(0, 1): 1})
    assert [sum(a) for a in cert.alphas] == [1, 0]


def test_sublevel_requires_normalized():
    with pytest.raises(ValueError):
        sublevel_decompose(MultiPoly(2, {(1, 0): 2}), scale_ladder(2**10, 2, 1))


def test_sublevel_all_derivatives_small():
    # nearly constant polynomial: every first derivative below c1 = 1/(2 nv)
    P = MultiPoly(2, {(0, 0): F(9, 10), (1, 1): F(1, 10)})
    with pytest.raises(AllDerivativesSmall):
        sublevel_decompose(P, scale_ladder(2**12, 2, 2))


def test_sublevel_inclusion_quadratic():
    P = MultiPoly(2, {(2, 0): F(1, 2), (0, 2): F(1, 2)})
    lad = scale_ladder(2**12, 2, 2)
    cert = sublevel_decompose(P, lad)
    rep = verify_sublevel_inclusion(P, cert, lad, 800, seed=3)
    assert rep["violations"] == 0
    assert rep["samples"] > 100


def test_sublevel_inclusion_random_cubics():
    rng = random.Random(17)
    lad = scale_ladder(2**20, 2, 3)
    for _ in range(6):
        P = random_poly(rng)
        lad_p = scale_ladder(2**20, 2, max(P.degree(), 1))
        try:
            cert = sublevel_decompose(P, lad_p)
        except AllDerivativesSmall:
            continue
        rep = verify_sublevel_inclusion(P, cert, lad_p, 400, seed=5)
        assert rep["violations"] == 0


def test_sublevel_vacuous_no_real_zeros():
    P = MultiPoly(2, {(2, 0): F(1, 3), (0, 2): F(1, 3), (0, 0): F(1, 3)})
    lad = scale_ladder(2**12, 2, 2)
    cert = sublevel_decompose(P, lad)
    rep = verify_sublevel_inclusion(P, cert, lad, 200, seed=7)
    assert rep["vacuous"] and rep["violations"] == 0


def test_taylor_ivt_direct():
    rng = random.Random(23)
    total_samples = 0
    for _ in range(20):
        P = random_poly(rng)
        rep = taylor_ivt_violations(P, sigma=0.02, eta=0.1, samples=200, seed=31)
        assert rep["violations"] == 0
        total_samples += rep["samples"]
    assert total_samples > 200


def test_cover_strip():
    P = MultiPoly(2, {(1, 0): F(2, 3), (0, 0): F(-1, 3)})  # zero set x1 = 1/2
    cover = variety_cube_cover(P, 1024, 2, 2)
    assert len(cover.layers) == 1
    pts = sample_variety_neighborhood(P, 1.0 / 1024, 500, seed=2)
    assert len(pts) == 500
    assert all(cover.contains_point(x) for x in pts)
    # cubes hug the line x1 = 1/2
    for _, cubes in cover.layers:
        for c in cubes:
            assert abs(float(c.anchor[0]) + float(c.scale) / 2 - 0.5) < 4 * float(c.scale)


def test_cover_empty_for_positive_poly():
    P = MultiPoly(2, {(2, 0): F(1, 3), (0, 2): F(1, 3), (0, 0): F(1, 3)})
    cover = variety_cube_cover(P, 1024, 2, 2)
    assert all(len(c) == 0 for _, c in cover.layers)


def test_cover_layers_disjoint_and_deduped():
    rng = random.Random(29)
    for _ in range(3):
        P = random_poly(rng)
        cover = variety_cube_cover(P, 2**14, 2, 2)
        for _, cubes in cover.layers:
            seen = set()
            for c in cubes:
                assert c not in seen
                seen.add(c)
            # same-scale dyadic cubes with distinct anchors are disjoint
        flat = [(s, c) for s, cs in cover.layers for c in cs]
        for i, (si, ci) in enumerate(flat):
            for sj, cj in flat[:i]:
                if sj > si:
                    assert not cj.contains_cap(ci)


def test_cover_random_cubics():
    rng = random.Random(41)
    for _ in range(4):
        P = random_poly(rng)
        cover = variety_cube_cover(P, 2**14, 2, 2)
        pts = sample_variety_neighborhood(P, 1.0 / 2**14, 400, seed=11)
        if len(pts) == 0:
            continue
        misses = sum(0 if cover.contains_point(x) else 1 for x in pts)
        assert misses == 0


def test_zero_poly_rejected():
    with pytest.raises(ValueError):
        variety_cube_cover(MultiPoly.zero(2), 1024, 2, 2)
