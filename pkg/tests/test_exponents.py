import math
import random
from fractions import Fraction as F

import pytest

from qsdec.decnum.exponents import (
    DescentState,
    descent_iterate,
    eta_tilde,
    kappa_ptilde,
    lower_bound_exponent,
)
from qsdec.decnum.fitting import fit_exponent


def test_lower_bound_examples():
    assert lower_bound_exponent(1, 1, 6, 6) == F(1, 3)
    assert lower_bound_exponent(4, 2, 4, 4) == 1
    assert lower_bound_exponent(3, 2, 2, 2) == 0


def test_kappa_examples():
    assert kappa_ptilde(4, 2, 2) == (2, 0)
    assert kappa_ptilde(4, 2, 4) == (F(8, 3), F(1, 2))
    assert kappa_ptilde(2, 1, 6) == (4, F(3, 4))


def test_kappa_boundary_exact():
    for d in range(1, 5):
        for n in range(1, 5):
            p = 2 * F(d + 2 * n, d)
            _, kappa = kappa_ptilde(d, n, p)
            assert kappa == F(1, 2)


def test_eta_tilde_examples():
    assert eta_tilde(F(2, 3), 2, 1, 6) == F(1, 24)
    # large sigma: m = 1, eta~ = sigma(1-kappa)
    _, kappa = kappa_ptilde(2, 1, 6)
    assert eta_tilde(100, 2, 1, 6) == 100 * (1 - kappa)


def test_eta_tilde_closed_formula_random():
    rng = random.Random(2)
    for _ in range(1000):
        d = rng.randint(1, 4)
        n = rng.randint(1, 4)
        # stay in the kappa > 0 regime: p > 2(d+n)/d
        p = 2 * F(d + n, d) + F(rng.randint(1, 60), 10)
        sigma = F(rng.randint(1, 50), rng.randint(1, 20))
        _, kappa = kappa_ptilde(d, n, p)
        m = math.ceil(F(d) / (2 * kappa * sigma))
        expect = float(sigma) * (1 - float(kappa)) ** m
        got = float(eta_tilde(sigma, d, n, p))
        assert abs(got - expect) <= 1e-12 * max(1.0, abs(expect))


def test_eta_tilde_monotone_spot():
    vals = [eta_tilde(s, 2, 1, 6) for s in (F(1, 4), F(1, 2), F(1))]
    assert vals[0] <= vals[1] <= vals[2]


def test_eta_tilde_errors():
    with pytest.raises(ValueError):
        eta_tilde(0, 2, 1, 6)
    with pytest.raises(ValueError):
        eta_tilde(1, 2, 1, 2)  # kappa = 0 at p = 2


def test_descent_first_step():
    st = DescentState.standard(2, 1, 6, eta0=2, Lambda=F(2, 3))
    seq = descent_iterate(st, 1)
    assert seq[1] == F(5, 3)


def test_descent_fixed_point():
    st = DescentState.standard(2, 1, 6, eta0=F(2, 3), Lambda=F(2, 3))
    seq = descent_iterate(st, 5)
    assert all(v == F(2, 3) for v in seq)


def test_descent_monotone_bounded():
    rng = random.Random(9)
    for _ in range(100):
        d = rng.randint(1, 4)
        n = rng.randint(1, 4)
        p = 2 * F(d + n, d) + F(rng.randint(1, 40), 10)
        lam = d * (F(1, 2) - 1 / p) + F(rng.randint(0, 10), 17)
        eta0 = lam + F(rng.randint(1, 30), 7)
        st = DescentState.standard(d, n, p, eta0=eta0, Lambda=lam)
        seq = descent_iterate(st, 40)
        for a, b in zip(seq, seq[1:]):
            assert b <= a
            assert b >= lam
        above = [v for v in seq if v > lam]
        for a, b in zip(above, above[1:]):
            assert b < a  # strictly decreasing while above Lambda
        # decrement equals eta~ exactly while the clamp is inactive
        base = st.base_exponent
        for a, b in zip(seq, seq[1:]):
            if b > lam:
                assert a - b == eta_tilde(a - base, d, n, p)


def test_descent_invalid_state():
    with pytest.raises(ValueError):
        DescentState.standard(2, 1, 6, eta0=F(1, 2), Lambda=F(2, 3))
    with pytest.raises(ValueError):
        DescentState(2, 1, F(6), F(1, 3), F(2))  # Lambda below d(1/2-1/p)


def test_fit_exact_power():
    table = {str(F(1, 2**k)): float(2**k) ** (1 / 3) for k in range(3, 8)}
    fit = fit_exponent(table)
    assert abs(fit.slope - 1 / 3) < 1e-12
    assert fit.stderr < 1e-12 and fit.r2 > 1 - 1e-12


def test_fit_constant():
    table = {str(F(1, 2**k)): 2.0 for k in range(3, 7)}
    assert abs(fit_exponent(table).slope) < 1e-12


def test_fit_noisy():
    rng = random.Random(4)
    table = {
        str(F(1, 2**k)): float(2**k) ** (1 / 3) * (1 + 0.01 * (rng.random() - 0.5))
        for k in range(3, 9)
    }
    assert abs(fit_exponent(table).slope - 1 / 3) < 0.02


def test_fit_needs_three_points():
    with pytest.raises(ValueError):
        fit_exponent({"1/2": 1.0, "1/4": 2.0})
