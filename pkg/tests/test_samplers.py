import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stoqtherm import hbm as H
from stoqtherm.boltzmann import DeepBoltzmannMachine, dbm_distribution, rbm_from_distribution
from stoqtherm.gibbs2sff import build_sff
from stoqtherm.hamcore import ClassicalHamiltonian, ClassicalTerm, coherent_gibbs_state, gibbs_distribution, ground_space
from stoqtherm.models import ferromagnet, random_classical
from stoqtherm.samplers import (
    ChainConfig,
    dbm_block_gibbs,
    dbm_conditionals,
    default_beta,
    flip_probabilities,
    gibbs_chain,
    gibbs_site_kernel,
    gibbs_sweep_kernel,
    oracle_walk_kernel,
    safe_beta,
    sff_walk,
    sff_walk_kernel,
    site_conditional,
    spectral_gap,
    tv_diagnostic,
)

from oracles import naive_gibbs

seeds = st.integers(0, 2 ** 32 - 1)
CFG = ChainConfig(seed=7, burn_in=1000, steps=100_000)


def detailed_balance_residual(pi, K):
    flow = pi[:, None] * K
    return np.max(np.abs(flow - flow.T))


def test_gibbs_zero_energy_uniform():
    rep = gibbs_chain(ClassicalHamiltonian(3, ()), CFG)
    assert np.max(np.abs(rep.empirical() - 0.125)) <= 0.02


def test_gibbs_single_bit_field():
    hc = ClassicalHamiltonian(1, (ClassicalTerm((0,), [0.0, 1.0]),))
    rep = gibbs_chain(hc, CFG, exact=gibbs_distribution(hc))
    assert rep.empirical()[0] == pytest.approx(0.73106, abs=0.02)


def test_gibbs_site_detailed_balance_two_bits():
    hc = random_classical(2, np.random.default_rng(1))
    pi = naive_gibbs(hc)
    for j in range(2):
        assert detailed_balance_residual(pi, gibbs_site_kernel(hc, j)) <= 1e-12


def test_gibbs_marginalises_hidden_bits():
    hbm = H.HyperBoltzmannMachine((0,), (1,), (H.Hyperedge((0, 1), [0.0, 1.5, -0.5, 0.2]),))
    hc, vis = H.to_classical(hbm)
    exact = H.distribution(hbm, brute=True)
    rep = gibbs_chain(hc, CFG, visible=vis, exact=exact)
    assert rep.n == 1 and rep.empirical_tv <= 0.02


def test_block_gibbs_zero_dbm_uniform():
    dbm = DeepBoltzmannMachine(np.zeros(2), np.zeros(2), np.zeros(1), np.zeros((2, 2)), np.zeros((2, 1)))
    rep = dbm_block_gibbs(dbm, CFG)
    assert np.max(np.abs(rep.empirical() - 0.25)) <= 0.02


def test_block_gibbs_two_point_rbm():
    rbm = rbm_from_distribution([0.75, 0.25], 1e-3).rbm
    rep = dbm_block_gibbs(rbm, CFG, exact=dbm_distribution(rbm))
    assert rep.empirical_tv <= 0.03


def test_block_conditionals_match_generic_gibbs():
    rng = np.random.default_rng(2)
    dbm = DeepBoltzmannMachine(rng.normal(size=2), rng.normal(size=3), rng.normal(size=2),
                               rng.normal(size=(2, 3)), rng.normal(size=(3, 2)))
    hc, _ = H.to_classical(dbm.as_hbm())
    n, p = dbm.n, dbm.middle
    for _ in range(20):
        y = rng.integers(0, 2, size=hc.n)
        x, h, g = y[:n], y[n:n + p], y[n + p:]
        px, ph, pg = dbm_conditionals(dbm, x, h, g)
        generic = [site_conditional(hc, y, j) for j in range(hc.n)]
        np.testing.assert_allclose(np.concatenate([px, ph, pg]), generic, atol=1e-12)


def test_walk_zero_energy_uniform():
    hc = ClassicalHamiltonian(3, ())
    rep = sff_walk(hc, None, CFG)
    assert np.max(np.abs(rep.empirical() - 0.125)) <= 0.02
    assert rep.stats["beta"] == pytest.approx(default_beta(hc))


def test_walk_ferromagnet():
    hc = ferromagnet()
    rep = sff_walk(hc, None, CFG, exact=gibbs_distribution(hc))
    assert rep.empirical_tv <= 0.03


def test_walk_rejects_large_beta():
    hc = ferromagnet()
    with pytest.raises(ValueError, match="safe"):
        sff_walk(hc, 2 * safe_beta(hc), CFG)


def test_walk_kernel_equals_oracle_ratio_kernel():
    hc = random_classical(3, np.random.default_rng(5))
    beta = default_beta(hc)
    K = sff_walk_kernel(hc, beta)
    Ko = oracle_walk_kernel(build_sff(hc).h_sff, coherent_gibbs_state(hc), beta)
    np.testing.assert_allclose(K, Ko, atol=1e-12)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_walk_spectral_gap_matches_sff_gap(n):
    hc = random_classical(n, np.random.default_rng(n))
    beta = default_beta(hc)
    gap = ground_space(build_sff(hc).h_sff).gap
    assert spectral_gap(sff_walk_kernel(hc, beta)) == pytest.approx(beta * gap, abs=1e-8)


def test_tv_diagnostic_cases():
    assert tv_diagnostic([0, 0, 0], np.array([0.0, 1.0])) == pytest.approx(1.0)
    assert tv_diagnostic([0, 1], np.array([1.0, 0.0])) == pytest.approx(0.5)
    rng = np.random.default_rng(0)
    p = gibbs_distribution(random_classical(3, rng)).probs
    draws = np.searchsorted(np.cumsum(p), rng.random(100_000), side="right")
    assert tv_diagnostic(np.minimum(draws, 7), p) <= 0.02


def test_chain_config_validation():
    with pytest.raises(ValueError):
        ChainConfig(steps=0)
    with pytest.raises(ValueError):
        ChainConfig(seed=-1)


def test_chains_get_distinct_streams():
    gens = ChainConfig(seed=3, chains=3).generators()
    draws = [g.integers(0, 2 ** 62, size=4).tolist() for g in gens]
    assert len({tuple(d) for d in draws}) == 3


def test_multi_chain_streams_are_uncorrelated():
    hc = ClassicalHamiltonian(1, ())
    rep = gibbs_chain(hc, ChainConfig(seed=1, burn_in=0, steps=20_000, chains=2))
    a, b = rep.samples[:20_000].astype(float), rep.samples[20_000:].astype(float)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.05


def test_thinning_and_summary():
    cfg = ChainConfig(seed=0, burn_in=10, steps=100, chains=2, thin=5)
    rep = gibbs_chain(ferromagnet(), cfg)
    assert rep.samples.size == 2 * 20
    s = rep.summary(cfg, beta=None)
    assert {"empirical_tv", "chains", "steps", "seed", "beta"} <= set(s)
    assert all(len(b) == 2 for b in rep.bitstrings())


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_samplers_deterministic(seed):
    hc = random_classical(3, np.random.default_rng(seed))
    cfg = ChainConfig(seed=seed, burn_in=10, steps=300, chains=2)
    np.testing.assert_array_equal(gibbs_chain(hc, cfg).samples, gibbs_chain(hc, cfg).samples)
    np.testing.assert_array_equal(sff_walk(hc, None, cfg).samples, sff_walk(hc, None, cfg).samples)
    rs = ChainConfig(seed=seed, burn_in=10, steps=300, random_scan=True)
    np.testing.assert_array_equal(gibbs_chain(hc, rs).samples, gibbs_chain(hc, rs).samples)


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(1, 3))
def test_detailed_balance_kernels(seed, n):
    hc = random_classical(n, np.random.default_rng(seed), scale=2.0)
    pi = naive_gibbs(hc)
    for j in range(n):
        assert detailed_balance_residual(pi, gibbs_site_kernel(hc, j)) <= 1e-12
    K = sff_walk_kernel(hc, default_beta(hc))
    assert np.all(K >= -1e-15)
    np.testing.assert_allclose(K.sum(axis=1), 1.0, atol=1e-12)
    assert detailed_balance_residual(pi, K) <= 1e-12
    np.testing.assert_allclose(pi @ gibbs_sweep_kernel(hc), pi, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(3, 6))
def test_walk_probabilities_are_local(seed, n):
    # changing a term far from bit 0 leaves the flip probability of bit 0 unchanged
    rng = np.random.default_rng(seed)
    terms = [ClassicalTerm((0, 1), rng.normal(size=4)), ClassicalTerm((n - 1,), rng.normal(size=2))]
    hc = ClassicalHamiltonian(n, tuple(terms))
    other = ClassicalHamiltonian(n, (terms[0], ClassicalTerm((n - 1,), rng.normal(size=2) * 3)))
    beta = min(safe_beta(hc), safe_beta(other))
    for x in range(2 ** n):
        b = [(x >> (n - 1 - q)) & 1 for q in range(n)]
        assert flip_probabilities(hc, b, beta)[0] == pytest.approx(flip_probabilities(other, b, beta)[0], rel=1e-14)
