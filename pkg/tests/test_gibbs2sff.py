import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stoqtherm.gibbs2sff import build_sff, gamma_operator, locality_bound
from stoqtherm.hamcore import (
    ClassicalHamiltonian,
    ClassicalTerm,
    apply_local,
    assemble_dense,
    coherent_gibbs_state,
    ground_space,
    is_frustration_free,
    is_stoquastic,
    plus_state,
)
from stoqtherm.models import X, ferromagnet, random_classical

from oracles import naive_energy

seeds = st.integers(0, 2 ** 32 - 1)


def dense_sff_oracle(hc):
    """sum_j (Gamma_j - X_j) with Gamma_j computed from the full 2^n energy vector."""
    n = hc.n
    D = 2 ** n
    e = np.array([naive_energy(hc, x) for x in range(D)])
    H = np.zeros((D, D))
    for j in range(n):
        flip = 1 << (n - 1 - j)
        for x in range(D):
            H[x, x] += np.exp(0.5 * (e[x] - e[x ^ flip]))
            H[x, x ^ flip] -= 1.0
    return H


def test_gamma_identity_for_zero_and_constant():
    for hc in (ClassicalHamiltonian(2, ()), ClassicalHamiltonian(2, (ClassicalTerm((), [3.7]),))):
        for j in range(2):
            _, diag = gamma_operator(hc, j)
            np.testing.assert_allclose(diag, 1.0)


def test_gamma_single_bit_field():
    b = 0.8
    hc = ClassicalHamiltonian(1, (ClassicalTerm((0,), [0.0, b]),))
    support, diag = gamma_operator(hc, 0)
    assert support == (0,)
    np.testing.assert_allclose(diag, [np.exp(-b / 2), np.exp(b / 2)])


def test_zero_hamiltonian_gives_plus_plus():
    g = ground_space(build_sff(ClassicalHamiltonian(2, ())).h_sff)
    assert g.ground_dim == 1 and g.gap > 0
    np.testing.assert_allclose(g.psi0, plus_state(2), atol=1e-12)
    # each term I - X_j has gap 2 and the terms commute
    assert g.gap == pytest.approx(2.0)


def test_ferromagnet_compilation():
    hc = ferromagnet()
    comp = build_sff(hc)
    assert comp.locality == 2
    g = ground_space(comp.h_sff)
    np.testing.assert_allclose(g.psi0, coherent_gibbs_state(hc), atol=1e-10)


def test_locality_of_random_two_local():
    hc = random_classical(5, np.random.default_rng(0), max_terms_per_bit=2)
    assert hc.k_prime <= 2
    comp = build_sff(hc)
    assert comp.max_support_observed <= 3
    assert comp.locality == locality_bound(hc)


def test_gamma_rejects_bad_index():
    with pytest.raises(ValueError):
        gamma_operator(ferromagnet(), 2)


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(1, 6))
def test_matches_dense_oracle(seed, n):
    hc = random_classical(n, np.random.default_rng(seed))
    np.testing.assert_allclose(assemble_dense(build_sff(hc).h_sff), dense_sff_oracle(hc), rtol=1e-12, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(1, 7))
def test_sff_properties(seed, n):
    hc = random_classical(n, np.random.default_rng(seed))
    comp = build_sff(hc)
    h = comp.h_sff
    psi = coherent_gibbs_state(hc)
    assert h.L == n
    assert is_stoquastic(h)
    for t in h.terms:
        assert np.linalg.norm(apply_local(t.matrix, t.support, psi, n)) <= 1e-10
        assert np.all(np.diag(t.matrix) > 0)
    assert np.linalg.norm(assemble_dense(h) @ psi) <= 1e-10
    g = ground_space(h)
    assert g.ground_dim == 1
    assert g.ground_energy == pytest.approx(0.0, abs=1e-10)
    assert is_frustration_free(h, oracle=g)
    assert comp.max_support_observed <= comp.locality
