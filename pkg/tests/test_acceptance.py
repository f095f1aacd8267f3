"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines and timings.  The heavy sharpness criterion needs the compiled kernel
backend to stay inside its time budget.
"""

import json
import math
import random
import time
from fractions import Fraction as F

import numpy as np
import pytest

from qsdec.capselect import SelectConfig, bg_select, find_concentrating_variety
from qsdec.decnum.exponents import DescentState, descent_iterate, eta_tilde, kappa_ptilde
from qsdec.decnum.families import example_family_modulated, example_family_rescaled
from qsdec.decnum.fitting import fit_exponent
from qsdec.decnum.ratios import dec_ratio
from qsdec.hypotheses import (
    CheckConfig,
    check_diagonal_criterion,
    check_hyperplane_rank,
    check_nondegeneracy,
    diag_rank_degenerate_family,
    hyperplane_rank_subcheck,
)
from qsdec.polyalg import MultiPoly, poly_norm1
from qsdec.quadforms import (
    caps_partition,
    diag_pair,
    nesting_violations_diagonal,
    parabola,
    zero_form,
)
from qsdec.transversality import (
    BLDatum,
    TransvConfig,
    bcct_sampled,
    bl_constant_gaussian,
    compute_theta,
)
from qsdec.varieties import (
    AllDerivativesSmall,
    sample_variety_neighborhood,
    scale_ladder,
    sublevel_decompose,
    variety_cube_cover,
    verify_sublevel_inclusion,
)


def report(name, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name} {detail}")
    assert ok, f"{name}: {detail}"


def random_normalized_poly(rng, nvars=2, deg=3):
    terms = {}
    for _ in range(8):
        alpha = tuple(rng.randint(0, deg) for _ in range(nvars))
        if sum(alpha) <= deg:
            terms[alpha] = F(rng.randint(-20, 20), rng.randint(1, 7))
    P = MultiPoly(nvars, terms)
    if P.is_zero() or P.degree() < 1:
        return random_normalized_poly(rng, nvars, deg)
    return P.scale(1 / poly_norm1(P))


def test_criterion_1_diagonal_criterion_equivalence():
    t0 = time.time()
    rng = random.Random(1001)
    cfg = CheckConfig(seed=7, samples=32, opt_starts=1, opt_maxiter=50)
    fails = 0
    trues = 0
    for _ in range(200):
        a = [F(rng.randint(-5, 5)) for _ in range(4)]
        b = [F(rng.randint(-5, 5)) for _ in range(4)]
        if not check_diagonal_criterion(a, b):
            continue
        trues += 1
        T = diag_pair(a, b)
        if check_nondegeneracy(T, cfg).verdict == "FAIL":
            fails += 1
        if check_hyperplane_rank(T, cfg).verdict == "FAIL":
            fails += 1
    T_bad, H_bad = diag_rank_degenerate_family()
    detected = not hyperplane_rank_subcheck(T_bad, H_bad)
    dt = time.time() - t0
    report(
        "criterion 1 (diagonal criterion equivalence)",
        fails == 0 and detected and trues > 50 and dt < 300,
        f"{trues} criterion-true pairs, {fails} FAILs, degenerate family detected={detected}, {dt:.1f}s",
    )


def test_criterion_2_bl_closed_form():
    t0 = time.time()
    ok = True
    worst = 0.0
    for phi in (math.pi / 2, math.pi / 3, math.pi / 4, math.pi / 6):
        datum = BLDatum.from_bases(
            [np.array([[1.0], [0.0]]), np.array([[math.cos(phi)], [math.sin(phi)]])]
        )
        res = bl_constant_gaussian(datum)
        err = abs(res.value - 1.0 / math.sin(phi))
        worst = max(worst, err)
        ok &= not res.divergent and err < 1e-6
    coincident = bl_constant_gaussian(
        BLDatum.from_bases([np.array([[1.0], [0.0]])] * 2)
    ).divergent
    dt = time.time() - t0
    report("criterion 2 (BL closed form)", ok and coincident and dt < 60,
           f"worst error {worst:.2e}, coincident divergent={coincident}, {dt:.1f}s")


def test_criterion_3_bcct_bl_equivalence():
    rng = np.random.default_rng(77)
    cfg = TransvConfig(seed=9, random_subspaces=4, tuple_samples=2)
    T = parabola(2)
    disagreements = 0
    for _ in range(20):
        angles = rng.uniform(0, math.pi, size=3)
        bases = [np.array([[math.cos(a)], [math.sin(a)]]) for a in angles]
        div = bl_constant_gaussian(BLDatum.from_bases(bases)).divergent
        feasible = True
        for b in bases:
            v = np.array([-b[1, 0], b[0, 0]])
            dims = sum(int(abs(float(v @ bb[:, 0])) > 1e-12) for bb in bases)
            if 1.0 > (2.0 / 3.0) * dims + 1e-12:
                feasible = False
        if div == feasible:
            disagreements += 1
    for _ in range(20):
        ts = [[F(int(a), 16), F(int(b), 16)] for a, b in rng.integers(0, 17, size=(3, 2))]
        div = bl_constant_gaussian(BLDatum.from_tangent_spaces(T, ts)).divergent
        verdict, _ = bcct_sampled(T, ts, cfg)
        if div != (verdict == "INFEASIBLE"):
            disagreements += 1
    report("criterion 3 (BCCT/BL oracle equivalence)", disagreements == 0,
           f"{disagreements} disagreements over 40 configurations")


@pytest.mark.slow
def test_criterion_4_sharpness_exponents():
    t0 = time.time()
    target = 1.0 / 3.0
    slopes = {}
    for name, T, family, lo in [
        ("modulated", parabola(1), example_family_modulated, None),
        ("rescaled", parabola(1), example_family_rescaled, None),
        ("flat", zero_form(1), example_family_modulated, 2 * (0.5 - 1 / 6.0) - 0.1),
    ]:
        table = {}
        for k in range(3, 8):
            fam = family(T, F(1, 2**k))
            table[str(F(1, 2**k))] = dec_ratio(fam, 6.0, q=6.0)["ratio"]
        slopes[name] = fit_exponent(table).slope
    dt = time.time() - t0
    ok = (
        abs(slopes["modulated"] - target) <= 0.1
        and abs(slopes["rescaled"] - target) <= 0.1
        and slopes["flat"] >= 2 * (0.5 - 1 / 6.0) - 0.1
        and dt < 1800
    )
    report("criterion 4 (sharpness exponents)", ok,
           f"slopes modulated={slopes['modulated']:.4f} rescaled={slopes['rescaled']:.4f} "
           f"flat={slopes['flat']:.4f} (target 1/3, 1/3, >=0.5667), {dt:.0f}s")


def test_criterion_5_exponent_descent():
    rng = random.Random(55)
    worst = 0.0
    for _ in range(1000):
        d, n = rng.randint(1, 4), rng.randint(1, 4)
        # stay in the kappa > 0 regime: p > 2(d+n)/d
        p = 2 * F(d + n, d) + F(rng.randint(1, 60), 10)
        sigma = F(rng.randint(1, 40), rng.randint(1, 16))
        _, kappa = kappa_ptilde(d, n, p)
        m = math.ceil(F(d) / (2 * kappa * sigma))
        expect = float(sigma) * (1 - float(kappa)) ** m
        worst = max(worst, abs(float(eta_tilde(sigma, d, n, p)) - expect))
    ok_formula = worst <= 1e-12

    ok_descent = True
    for _ in range(100):
        d, n = rng.randint(1, 4), rng.randint(1, 4)
        p = 2 * F(d + n, d) + F(rng.randint(1, 40), 10)
        lam = d * (F(1, 2) - 1 / p) + F(rng.randint(0, 8), 13)
        st = DescentState.standard(d, n, p, eta0=lam + F(rng.randint(1, 40), 9), Lambda=lam)
        seq = descent_iterate(st, 30)
        for a, b in zip(seq, seq[1:]):
            ok_descent &= (b < a or (a == lam and b == lam)) and b >= lam

    ok_boundary = all(
        kappa_ptilde(d, n, 2 * F(d + 2 * n, d))[1] == F(1, 2)
        for d in range(1, 5) for n in range(1, 5)
    )
    first = descent_iterate(DescentState.standard(2, 1, 6, eta0=2, Lambda=F(2, 3)), 1)[1]
    report(
        "criterion 5 (exponent descent)",
        ok_formula and ok_descent and ok_boundary and first == F(5, 3),
        f"formula err {worst:.1e}, monotone={ok_descent}, boundary={ok_boundary}, "
        f"first step {first}",
    )


def test_criterion_6_sublevel_covering():
    t0 = time.time()
    rng = random.Random(606)
    total_violations = 0
    total_samples = 0
    for i in range(50):
        P = random_normalized_poly(rng)
        D = max(P.degree(), 1)
        ladder = scale_ladder(2**20, 2, D)
        try:
            cert = sublevel_decompose(P, ladder)
        except AllDerivativesSmall:
            continue
        rep = verify_sublevel_inclusion(P, cert, ladder, 10_000, seed=1000 + i)
        total_violations += rep["violations"]
        total_samples += rep["samples"]
    dt = time.time() - t0
    report("criterion 6 (sublevel covering)",
           total_violations == 0 and total_samples > 10_000 and dt < 600,
           f"{total_samples} samples, {total_violations} violations, {dt:.0f}s")


def test_criterion_7_variety_cube_covers():
    t0 = time.time()
    rng = random.Random(707)
    K = 2**14
    misses = 0
    total = 0
    for i in range(20):
        P = random_normalized_poly(rng)
        cover = variety_cube_cover(P, K, 2, 2)
        # per-layer disjointness and cross-layer dedup, exactly
        flat = []
        for s, cubes in cover.layers:
            assert len(set(cubes)) == len(cubes)
            flat.extend((s, c) for c in cubes)
        for idx, (si, ci) in enumerate(flat):
            for sj, cj in flat[:idx]:
                if sj > si:
                    assert not cj.contains_cap(ci)
        pts = sample_variety_neighborhood(P, 1.0 / K, 10_000, seed=2000 + i)
        total += len(pts)
        for x in pts:
            if not cover.contains_point(x):
                misses += 1
    dt = time.time() - t0
    report("criterion 7 (variety cube covers)",
           misses == 0 and total > 10_000 and dt < 600,
           f"{total} neighborhood samples, {misses} uncovered, {dt:.0f}s")


def test_criterion_8_cap_selection():
    t0 = time.time()
    ok_theta = compute_theta(4, 2) == F(1, 9) and compute_theta(1, 1) == F(1, 2)

    # collinear cap sets: degree-1 certificate with fraction >= theta
    ok_collinear = True
    theta21 = compute_theta(2, 1)
    for K in (8, 16, 32):
        part = caps_partition(F(1, K), 2)
        line = [c for c in part if c.anchor[0] == c.anchor[1]]
        cert = find_concentrating_variety(line, 2, theta21, SelectConfig(seed=4))
        ok_collinear &= cert is not None and cert.degree == 1 and cert.fraction >= float(theta21)

    # round-count bound over random norm maps
    rng = np.random.default_rng(88)
    T = parabola(2)
    tcfg = TransvConfig(seed=5, random_subspaces=3, tuple_samples=1)
    ok_rounds = True
    for K in (8, 16, 32):
        part = caps_partition(F(1, K), 2)
        bound = math.ceil(math.log2(K)) * math.ceil(1 / float(theta21))
        for trial in range(2 if K == 32 else 4):
            norms = {c: float(v) for c, v in zip(part, rng.uniform(0.2, 1.0, len(part)))}
            out = bg_select(T, norms, K, SelectConfig(seed=int(rng.integers(10**6)),
                                                      transv=tcfg))
            ok_rounds &= out.rounds <= bound
    dt = time.time() - t0
    report("criterion 8 (cap selection)", ok_theta and ok_collinear and ok_rounds,
           f"theta ok={ok_theta}, collinear deg-1={ok_collinear}, rounds bounded={ok_rounds}, {dt:.0f}s")


def test_criterion_9_uncertainty_nesting():
    t0 = time.time()
    results = {}
    for name, T in [("parabola(1)", parabola(1)), ("parabola(2)", parabola(2)),
                    ("diag42", diag_pair([1, 1, 1, 1], [1, 2, 3, 4]))]:
        results[name] = nesting_violations_diagonal(T, F(1, 64))
    ok = all(len(v) == 0 for v in results.values())
    dt = time.time() - t0
    report("criterion 9 (uncertainty-box nesting)", ok,
           f"violations {[ (k, len(v)) for k, v in results.items() ]}, {dt:.1f}s")


def test_criterion_10_cli_determinism(tmp_path):
    from qsdec.cli import main

    runs = [
        ["exponent-descent", "--d", "2", "--n", "1", "--p", "6", "--eta0", "2",
         "--steps", "20"],
        ["check-hypotheses", "--forms", "diag(1,1,1,1;1,2,3,4)", "--seed", "3",
         "--samples", "8"],
        ["transversality", "--forms", "parabola(1)", "--caps", "2", "--tuple", "0", "1",
         "--seed", "5", "--samples", "2"],
        ["dec-estimate", "--forms", "parabola(1)", "--delta", "1/4", "--p", "6"],
        ["bl-constant", "--subspaces", None],  # placeholder, filled below
    ]
    spath = tmp_path / "subspaces.json"
    spath.write_text(json.dumps({"subspaces": [[[1.0], [0.0]], [[0.5], [0.8]]]}))
    runs[-1][-1] = str(spath)
    ok = True
    for argv in runs:
        full = argv + ["--out", str(tmp_path / "runs")]
        assert main(full) == 0
        rdirs = sorted((tmp_path / "runs").glob(f"{argv[0]}-*"))
        blobs1 = {p.name: p.read_bytes() for p in rdirs[-1].iterdir()
                  if p.name != "manifest.json"}
        assert main(full) == 0
        blobs2 = {p.name: p.read_bytes() for p in rdirs[-1].iterdir()
                  if p.name != "manifest.json"}
        ok &= blobs1 == blobs2
    report("criterion 10 (CLI determinism)", ok, f"{len(runs)} commands rerun byte-identical")
