import random
from fractions import Fraction as F

import numpy as np
import pytest

from qsdec.capselect import (
    NoVarietyFound,
    SelectConfig,
    bg_select,
    find_concentrating_variety,
    initial_stock,
)
from qsdec.quadforms import Cap, caps_partition, parabola
from qsdec.transversality import TransvConfig, compute_theta

FAST_TRANSV = TransvConfig(seed=3, random_subspaces=3, tuple_samples=1)


def test_initial_stock_threshold():
    caps = caps_partition(F(1, 2), 1)
    st = initial_stock({caps[0]: 1.0, caps[1]: 0.4}, 2)
    assert st.caps == [caps[0]]


def test_initial_stock_all_equal():
    caps = caps_partition(F(1, 4), 1)
    st = initial_stock({c: 2.5 for c in caps}, 4)
    assert len(st.caps) == len(caps)


def test_initial_stock_empty():
    assert initial_stock({}, 8).caps == []


def test_collinear_degree_one_certificate():
    for K in (8, 16, 32):
        part = caps_partition(F(1, K), 2)
        line = [c for c in part if c.anchor[0] == c.anchor[1]]
        theta = compute_theta(2, 1)
        cert = find_concentrating_variety(line, 2, theta, SelectConfig(seed=5))
        assert cert is not None
        assert cert.degree == 1
        assert cert.fraction >= float(theta)


def test_three_caps_always_fit():
    part = caps_partition(F(1, 8), 2)
    rng = random.Random(2)
    caps = rng.sample(part, 3)
    cert = find_concentrating_variety(caps, 2, compute_theta(2, 1), SelectConfig(seed=5))
    assert cert is not None and cert.fraction >= float(compute_theta(2, 1))


def test_certificate_fraction_bound_generic():
    # any emitted certificate satisfies its own fraction bound
    rng = random.Random(3)
    part = caps_partition(F(1, 16), 2)
    theta = compute_theta(2, 1)
    for _ in range(5):
        caps = rng.sample(part, 40)
        cert = find_concentrating_variety(caps, 2, theta, SelectConfig(seed=rng.randint(0, 99)))
        if cert is not None:
            assert cert.fraction >= float(theta)


def test_bg_select_line_concentration():
    K = 16
    T = parabola(2)
    part = caps_partition(F(1, K), 2)
    norms = {c: (1.0 if c.anchor[0] == c.anchor[1] else 1e-12) for c in part}
    out = bg_select(T, norms, K, SelectConfig(seed=7, transv=FAST_TRANSV))
    assert out.transverse == []
    assert out.rounds == 1
    assert len(out.layers) >= 1
    levels = {l["level"] for l in out.layers}
    assert levels == {1}  # degree-1 certificate: one variety layer


def test_bg_select_separated_caps_transverse():
    T = parabola(1)
    part = caps_partition(F(1, 8), 1)
    norms = {part[0]: 1.0, part[-1]: 0.9}
    out = bg_select(T, norms, 8, SelectConfig(seed=7, transv=FAST_TRANSV))
    assert len(out.transverse) == 2
    assert out.rounds == 0 and out.layers == []


def test_bg_select_empty():
    out = bg_select(parabola(1), {}, 8, SelectConfig(seed=7, transv=FAST_TRANSV))
    assert out.rounds == 0 and out.transverse == [] and out.subthreshold == []


def test_bg_select_partition_accounting():
    K = 16
    T = parabola(2)
    part = caps_partition(F(1, K), 2)
    norms = {c: (1.0 if c.anchor[0] == c.anchor[1] else 1e-12) for c in part}
    out = bg_select(T, norms, K, SelectConfig(seed=7, transv=FAST_TRANSV))
    removed = sum(out.removed_per_round)
    assert removed + len(out.transverse) + len(out.subthreshold) == len(part)


def test_bg_select_round_bound_random_norms():
    rng = np.random.default_rng(19)
    T = parabola(2)
    theta = compute_theta(2, 1)
    for K in (8, 16):
        part = caps_partition(F(1, K), 2)
        for trial in range(3):
            norms = {c: float(v) for c, v in zip(part, rng.uniform(0.5, 1.0, len(part)))}
            cfg = SelectConfig(seed=int(rng.integers(0, 10**6)), transv=FAST_TRANSV)
            out = bg_select(T, norms, K, cfg)
            import math

            assert out.rounds <= math.ceil(math.log2(K)) * math.ceil(1 / float(theta))


def test_bg_select_deterministic():
    K = 16
    T = parabola(2)
    part = caps_partition(F(1, K), 2)
    rng = np.random.default_rng(5)
    norms = {c: float(v) for c, v in zip(part, rng.uniform(0.1, 1.0, len(part)))}
    out1 = bg_select(T, norms, K, SelectConfig(seed=77, transv=FAST_TRANSV))
    out2 = bg_select(T, norms, K, SelectConfig(seed=77, transv=FAST_TRANSV))
    assert out1.to_json_obj() == out2.to_json_obj()
