import random
from fractions import Fraction as F

import pytest

from qsdec.hypotheses import (
    CheckConfig,
    check_diagonal_criterion,
    check_hyperplane_rank,
    check_nondegeneracy,
    codim1_shortcut,
    diag_rank_degenerate_family,
    hyperplane_decoupling_exponent,
    hyperplane_rank_subcheck,
)
from qsdec.quadforms import (
    Hyperplane,
    QuadTuple,
    bd_d2n2,
    diag_forms,
    diag_pair,
    parabola,
)

CFG = CheckConfig(seed=11, samples=48, opt_starts=1, opt_maxiter=60)


def test_diagonal_criterion_examples():
    assert check_diagonal_criterion([1, 1, 1, 1], [1, 2, 3, 4])
    assert not check_diagonal_criterion([1, 2, 3], [1, 2, 3])
    assert check_diagonal_criterion([1, 1, 1], [0, 1, 2])


def test_diagonal_criterion_permutation_symmetric():
    rng = random.Random(0)
    for _ in range(30):
        a = [F(rng.randint(-5, 5)) for _ in range(4)]
        b = [F(rng.randint(-5, 5)) for _ in range(4)]
        perm = list(range(4))
        rng.shuffle(perm)
        ap, bp = [a[i] for i in perm], [b[i] for i in perm]
        assert check_diagonal_criterion(a, b) == check_diagonal_criterion(ap, bp)


def test_codim1():
    assert codim1_shortcut(parabola(3)) == "APPLIES"
    assert codim1_shortcut(QuadTuple(2, 1, (((F(1), F(0)), (F(0), F(0))),))) == "NOT_APPLICABLE"
    assert codim1_shortcut(diag_pair([1, 1], [1, 2])) == "NOT_APPLICABLE"


def test_nondegeneracy_full_rank_codim1():
    assert check_nondegeneracy(parabola(4), CFG).verdict == "PASS"


def test_nondegeneracy_duplicated_forms_fail():
    T = diag_pair([1, 2, 3, 4], [1, 2, 3, 4])
    # identical forms: dependent gradient rows, determinant vanishes for all w
    T = QuadTuple(4, 2, (T.forms[0], T.forms[0]))
    rep = check_nondegeneracy(T, CFG)
    assert rep.verdict == "FAIL"


def test_nondegeneracy_diagonal_pass():
    rep = check_nondegeneracy(diag_pair([1, 1, 1, 1], [1, 2, 3, 4]), CFG)
    assert rep.verdict == "PASS"


def test_nondegeneracy_zero_form_fails():
    T = diag_forms([0, 0, 0], [1, 2, 3])
    assert check_nondegeneracy(T, CFG).verdict == "FAIL"


def test_nondegeneracy_d_equals_n():
    assert check_nondegeneracy(bd_d2n2([1, 0, 0], [0, 0, 1]), CFG).verdict == "PASS"
    # both forms multiples of each other: fails
    assert check_nondegeneracy(bd_d2n2([1, 0, 1], [2, 0, 2]), CFG).verdict == "FAIL"


def test_nondegeneracy_invariant_under_pencil_change():
    rng = random.Random(7)
    for _ in range(12):
        a = [F(rng.randint(-4, 4)) for _ in range(3)]
        b = [F(rng.randint(-4, 4)) for _ in range(3)]
        T = diag_pair(a, b)
        Tsum = diag_pair([x + y for x, y in zip(a, b)], b)
        r1 = check_nondegeneracy(T, CFG).verdict
        r2 = check_nondegeneracy(Tsum, CFG).verdict
        assert (r1 == "FAIL") == (r2 == "FAIL")


def test_hyperplane_rank_vacuous_d2():
    assert check_hyperplane_rank(bd_d2n2([1, 2, 3], [4, 5, 6]), CFG).verdict == "PASS"


def test_hyperplane_rank_diagonal_pass():
    rep = check_hyperplane_rank(diag_pair([1, 1, 1, 1], [1, 2, 3, 4]), CFG)
    assert rep.verdict == "PASS"


def test_appendix_pattern_detected_exactly():
    T, H = diag_rank_degenerate_family()
    assert not hyperplane_rank_subcheck(T, H)
    rep = check_hyperplane_rank(T, CFG, extra_planes=[H])
    assert rep.verdict == "FAIL"
    assert rep.witness is not None


def test_subcheck_d3_coordinate_plane():
    T = diag_forms([1, 0, 0], [0, 1, 0])
    assert hyperplane_rank_subcheck(T, Hyperplane(3, (F(0), F(0)), 2))


def test_fail_witness_reverifies():
    T, H = diag_rank_degenerate_family(a4=2, b4=1, b3=3, lam=1)
    # re-verify: all (d-2)-minors of the restricted pencil vanish identically
    assert not hyperplane_rank_subcheck(T, H)


def test_lemma_consistency_seeded():
    # diagonal criterion true implies no FAIL from either checker
    rng = random.Random(20)
    checked = 0
    for _ in range(60):
        a = [F(rng.randint(-5, 5)) for _ in range(4)]
        b = [F(rng.randint(-5, 5)) for _ in range(4)]
        if not check_diagonal_criterion(a, b):
            continue
        T = diag_pair(a, b)
        assert check_nondegeneracy(T, CFG).verdict in ("PASS", "LIKELY_PASS")
        assert check_hyperplane_rank(T, CFG).verdict in ("PASS", "LIKELY_PASS")
        checked += 1
    assert checked > 10


def test_hyperplane_decoupling_exponent():
    assert hyperplane_decoupling_exponent(4, 2, 4) == 1
    assert hyperplane_decoupling_exponent(3, 1, 2) == 0
    with pytest.raises(ValueError):
        hyperplane_decoupling_exponent(5, 2, 3)
    with pytest.raises(ValueError):
        hyperplane_decoupling_exponent(4, 2, 5)  # p > 2 + 4n/d
