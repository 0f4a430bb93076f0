import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binom, norm

from sftlab import LocallyConstantFn, enumerate_words, gibbs_chain, new_sft, recode_to_blocks
from sftlab.correlations import mean
from sftlab.errors import MemoryCap, NonLattice
from sftlab.exact import (distribution_csv_rows, exact_dist, interval_prob, ks_vs_gaussian,
                          lattice_check, local_limit_check)
from sftlab.observables import block_system, edge_values
from sftlab.spectral import solve

from conftest import mixing_sfts

FULL2 = new_sft(2, [[1, 1], [1, 1]])


def bernoulli(p):
    phi = LocallyConstantFn.from_symbol_values(FULL2, [math.log(p), math.log(1 - p)])
    g = LocallyConstantFn.indicator(FULL2, 0)
    return solve(block_system(FULL2, 1), phi), g


def test_lattice_check_denominators():
    assert lattice_check(LocallyConstantFn.from_symbol_values(FULL2, [1.0, 3.0])).q == 1
    spec = lattice_check(LocallyConstantFn.from_symbol_values(FULL2, [1 / 3, 0.5]))
    assert spec.q == 6
    assert spec.integer_values.tolist() == [[2, 2], [3, 3]]
    with pytest.raises(NonLattice):
        lattice_check(LocallyConstantFn.from_symbol_values(FULL2, [0.0, math.pi]))
    with pytest.raises(NonLattice):
        lattice_check(LocallyConstantFn.from_symbol_values(FULL2, [0.0, 1 / 7919]), q_max=1000)


@pytest.mark.parametrize("p", [0.5, 0.2])
def test_bernoulli_law_is_binomial(p):
    rpf, g = bernoulli(p)
    n = 40
    d = exact_dist(gibbs_chain(rpf), lattice_check(g), n)
    assert d.support.tolist() == list(range(n + 1))
    assert np.max(np.abs(d.probs - binom.pmf(d.support, n, p))) < 1e-14
    assert abs(d.mean - n * p) < 1e-11 and abs(d.variance - n * p * (1 - p)) < 1e-10


def test_golden_law_matches_enumeration(golden):
    n = 12
    chain = golden.chain
    ge = edge_values(golden.g)
    brute = {}
    for w in enumerate_words(golden.system.block_sft, n + 1):
        s = int(sum(ge[a, b] for a, b in zip(w, w[1:])))
        brute[s] = brute.get(s, 0.0) + chain.cylinder_measure(w)
    d = exact_dist(chain, lattice_check(golden.g), n)
    assert sorted(brute) == d.support.tolist()
    assert max(abs(brute[k] - p) for k, p in zip(d.support.tolist(), d.probs)) < 1e-15


def test_span_of_even_lattice():
    rpf, _ = bernoulli(0.5)
    g = LocallyConstantFn.from_symbol_values(FULL2, [2.0, 0.0])
    d = exact_dist(gibbs_chain(rpf), lattice_check(g), 10)
    assert d.span == 2
    assert local_limit_check(d, 1.0, 1.0) < 0.1


def test_ks_matches_direct_computation():
    rpf, g = bernoulli(0.5)
    n = 100
    d = exact_dist(gibbs_chain(rpf), lattice_check(g), n)
    k = np.arange(n + 1)
    z = (k - n / 2) / (0.5 * math.sqrt(n))
    cdf = binom.cdf(k, n, 0.5)
    direct = max(np.max(np.abs(cdf - norm.cdf(z))), np.max(np.abs(cdf - binom.pmf(k, n, 0.5) - norm.cdf(z))))
    assert abs(ks_vs_gaussian(d, 0.5, 0.5) - direct) < 1e-12


def test_binomial_local_limit():
    rpf, g = bernoulli(0.5)
    d = exact_dist(gibbs_chain(rpf), lattice_check(g), 512)
    assert local_limit_check(d, 0.5, 0.5) <= 0.02


def test_interval_prob_and_csv():
    rpf, g = bernoulli(0.5)
    d = exact_dist(gibbs_chain(rpf), lattice_check(g), 10)
    assert abs(interval_prob(d, 0.5, 0.1) - sum(binom.pmf(k, 10, 0.5) for k in (4, 5, 6))) < 1e-15
    rows = list(distribution_csv_rows(d))
    assert rows[3][:2] == (3, 3.0)


def test_memory_cap():
    rpf, g = bernoulli(0.5)
    with pytest.raises(MemoryCap):
        exact_dist(gibbs_chain(rpf), lattice_check(g), 10**4, memory_cap=1000)


def test_pruning_reports_lost_mass():
    rpf, g = bernoulli(0.5)
    d = exact_dist(gibbs_chain(rpf), lattice_check(g), 100, prune=1e-20)
    assert 0 < d.pruned_mass < 1e-15
    assert abs(d.probs.sum() + d.pruned_mass - 1) < 1e-12


@settings(max_examples=30, deadline=None)
@given(mixing_sfts(3), st.integers(0, 10**6), st.integers(1, 3), st.integers(1, 40))
def test_law_moments(sft, seed, r, n):
    rng = np.random.default_rng(seed)
    phi = LocallyConstantFn(sft, 1, {w: float(rng.normal()) for w in enumerate_words(sft, 1)})
    g = LocallyConstantFn(sft, r, {w: int(rng.integers(-2, 3)) / 2 for w in enumerate_words(sft, r)})
    system, (pb, gb) = recode_to_blocks(sft, [phi, g])
    rpf = solve(system, pb)
    d = exact_dist(gibbs_chain(rpf), lattice_check(gb), n)
    assert abs(d.probs.sum() - 1) < 1e-12
    assert np.all(d.probs >= 0)
    assert abs(d.mean - n * mean(rpf, gb)) < 1e-9 * max(1, n)
    assert d.q in (1, 2)
