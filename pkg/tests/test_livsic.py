import math

import numpy as np
from hypothesis import given, settings, strategies as st

from sftlab import LocallyConstantFn, birkhoff_sum, enumerate_words, new_sft, periodic_orbits
from sftlab import recode_to_blocks
from sftlab.livsic import cycle_obstructions, zero_variance_classify
from sftlab.observables import edge_values

from conftest import mixing_sfts

GOLDEN = new_sft(2, [[1, 1], [1, 0]])


def test_golden_indicator_is_obstructed(golden):
    rep = cycle_obstructions(golden.system, golden.g, golden.mean)
    sums = {c.orbit.word: c.centred_sum for c in rep.cycles}
    assert set(sums) == {(0,), (0, 1)}
    assert abs(sums[(0, 1)] + 1 / math.sqrt(5)) < 1e-12
    assert abs(sums[(0,)] - (1 - golden.mean)) < 1e-12
    assert rep.status == "obstructed" and rep.is_coboundary is False
    assert rep.transfer is None
    js = rep.to_json(golden.system)
    assert js["cycles"][1]["word"] == "12"


def test_default_mean_is_maximal_entropy_mean(golden):
    assert abs(cycle_obstructions(golden.system, golden.g).mean - golden.mean) < 1e-14


def test_coboundary_detected_with_transfer():
    u = LocallyConstantFn(GOLDEN, 2, {(0, 0): 0.7, (0, 1): -0.2, (1, 0): 1.9})
    g = LocallyConstantFn.coboundary(u) + 0.25
    system, (gb,) = recode_to_blocks(GOLDEN, [g])
    rep = cycle_obstructions(system, gb, 0.25)
    assert rep.status == "coboundary"
    assert rep.transfer_residual < 1e-12
    ge = edge_values(gb)
    adm = system.block_sft.transitions > 0
    w = rep.transfer
    assert np.max(np.abs(np.where(adm, ge - 0.25 - (w[None, :] - w[:, None]), 0))) < 1e-12


def test_tiny_obstruction_is_indeterminate(golden):
    g = golden.g * 1e-7
    rep = cycle_obstructions(golden.system, g, golden.mean * 1e-7)
    assert rep.status == "indeterminate" and rep.is_coboundary is None


def test_zero_variance_classification(golden, full2):
    r = zero_variance_classify(golden.system, golden.phi, golden.g)
    assert r.consistent and r.is_coboundary is False
    assert abs(r.sigma2 - 1 / (5 * math.sqrt(5))) < 1e-8
    u = LocallyConstantFn.indicator(full2.system.block_sft, 0)
    c = LocallyConstantFn.coboundary(u)
    r = zero_variance_classify(full2.system, full2.phi, c)
    assert r.consistent and r.is_coboundary and r.sigma2 < 1e-8


@settings(max_examples=30, deadline=None)
@given(mixing_sfts(3), st.integers(0, 10**6), st.booleans())
def test_cycle_sums_match_periodic_orbits(sft, seed, cobound):
    rng = np.random.default_rng(seed)
    if cobound:
        u = LocallyConstantFn(sft, 2, {w: float(rng.normal()) for w in enumerate_words(sft, 2)})
        g = LocallyConstantFn.coboundary(u) + 0.3
    else:
        g = LocallyConstantFn(sft, 2, {w: float(rng.integers(-3, 4)) for w in enumerate_words(sft, 2)})
    system, (gb,) = recode_to_blocks(sft, [g])
    rep = cycle_obstructions(system, gb, 0.3)
    ge = edge_values(gb)
    for c in rep.cycles:
        w = c.orbit.word
        direct = sum(ge[a, b] - 0.3 for a, b in zip(w, w[1:] + w[:1]))
        assert abs(direct - c.centred_sum) < 1e-9
    if cobound:
        assert rep.status == "coboundary"
    # every periodic orbit sum is a combination of basis cycles, so it vanishes with them
    if rep.status == "coboundary":
        for orb in periodic_orbits(sft, 5):
            word = orb.word * 3
            gbar = birkhoff_sum(g, word, orb.period) - 0.3 * orb.period
            assert abs(gbar) < 1e-8


@settings(max_examples=30, deadline=None)
@given(mixing_sfts(3), st.integers(0, 10**6), st.booleans())
def test_variance_and_cycle_test_agree(sft, seed, cobound):
    rng = np.random.default_rng(seed)
    phi = LocallyConstantFn(sft, 1, {w: float(rng.normal()) for w in enumerate_words(sft, 1)})
    if cobound:
        u = LocallyConstantFn(sft, 1, {w: float(rng.integers(-3, 4)) for w in enumerate_words(sft, 1)})
        g = LocallyConstantFn.coboundary(u) + float(rng.integers(-2, 3))
    else:
        g = LocallyConstantFn(sft, 2, {w: float(rng.integers(-3, 4)) / 4 for w in enumerate_words(sft, 2)})
    system, (pb, gb) = recode_to_blocks(sft, [phi, g])
    r = zero_variance_classify(system, pb, gb)
    assert r.consistent
    if cobound:
        assert r.is_coboundary and r.sigma2 <= 1e-8
