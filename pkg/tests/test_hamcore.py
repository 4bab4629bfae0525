import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stoqtherm.hamcore import (
    ClassicalHamiltonian,
    ClassicalTerm,
    DimensionError,
    Distribution,
    LocalHamiltonian,
    LocalTerm,
    assemble_dense,
    coherent_gibbs_state,
    gibbs_distribution,
    ground_space,
    is_frustration_free,
    is_stoquastic,
    marginal,
    plus_state,
)
from stoqtherm.models import X, Z, I2, random_classical, random_stoquastic

from oracles import general_eigenvalues, naive_dense, naive_gibbs

seeds = st.integers(0, 2 ** 32 - 1)


def test_single_z_on_first_qubit_is_big_endian():
    h = LocalHamiltonian(2, (LocalTerm((0,), Z),))
    np.testing.assert_array_equal(np.diag(assemble_dense(h)), [1, 1, -1, -1])


def test_empty_hamiltonian_is_zero():
    h = LocalHamiltonian(3, ())
    np.testing.assert_array_equal(assemble_dense(h), np.zeros((8, 8)))


def test_overlapping_terms_match_basis_loop():
    rng = np.random.default_rng(1)
    A, B = rng.normal(size=(4, 4)), rng.normal(size=(4, 4))
    h = LocalHamiltonian(3, (LocalTerm((0, 1), A + A.T), LocalTerm((1, 2), B + B.T)))
    np.testing.assert_allclose(assemble_dense(h), naive_dense(h), atol=1e-12)


def test_nonadjacent_support_matches_basis_loop():
    rng = np.random.default_rng(2)
    A = rng.normal(size=(4, 4))
    h = LocalHamiltonian(4, (LocalTerm((0, 3), A + A.T),))
    np.testing.assert_allclose(assemble_dense(h), naive_dense(h), atol=1e-12)


def test_dense_limit():
    with pytest.raises(DimensionError):
        assemble_dense(LocalHamiltonian(15, ()))


def test_rejects_asymmetric_term():
    with pytest.raises(ValueError):
        LocalTerm((0,), np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_rejects_support_out_of_range():
    with pytest.raises(ValueError):
        LocalHamiltonian(2, (LocalTerm((2,), Z),))


@pytest.mark.parametrize("matrix, expected", [
    (-X, True),
    (X, False),
    (-np.kron(Z, Z) - np.kron(X, I2), True),
])
def test_is_stoquastic(matrix, expected):
    k = int(np.log2(matrix.shape[0]))
    h = LocalHamiltonian(k, (LocalTerm(tuple(range(k)), matrix),))
    assert is_stoquastic(h) is expected


def test_ground_space_of_half_i_minus_x():
    g = ground_space(LocalHamiltonian(1, (LocalTerm((0,), (I2 - X) / 2),)))
    assert g.ground_energy == pytest.approx(0.0, abs=1e-12)
    assert g.gap == pytest.approx(1.0)
    assert g.eta == pytest.approx(1.0)
    np.testing.assert_allclose(g.psi0, plus_state(1), atol=1e-12)


def test_ground_space_classical_overlap():
    g = ground_space(LocalHamiltonian(1, (LocalTerm((0,), (I2 - Z) / 2),)))
    assert g.eta == pytest.approx(0.70711, abs=1e-5)
    np.testing.assert_allclose(g.psi0, [1.0, 0.0], atol=1e-12)


def test_ground_space_spectrum_matches_general_solver():
    h = random_stoquastic(4, np.random.default_rng(3))
    g = ground_space(h)
    w = general_eigenvalues(naive_dense(h))
    np.testing.assert_allclose(g.spectrum, w, atol=1e-8)
    assert g.gap == pytest.approx(w[1] - w[0], abs=1e-8)


def test_degenerate_ground_space_uses_projection_of_plus():
    # Z on qubit 0 only: ground space spanned by |1x>, psi0 is |1>|+>
    g = ground_space(LocalHamiltonian(2, (LocalTerm((0,), Z),)))
    assert g.ground_dim == 2
    np.testing.assert_allclose(g.psi0, [0, 0, 2 ** -0.5, 2 ** -0.5], atol=1e-12)
    assert g.eta ** 2 == pytest.approx(0.5)


def test_frustration_free_examples():
    n = 3
    h = LocalHamiltonian(n, tuple(LocalTerm((i,), (I2 - X) / 2) for i in range(n)))
    assert is_frustration_free(h)
    afm = (np.kron(Z, Z) + np.eye(4)) / 2
    tri = LocalHamiltonian(3, tuple(LocalTerm(e, afm) for e in [(0, 1), (1, 2), (0, 2)]))
    assert not is_frustration_free(tri)
    single = LocalHamiltonian(2, (LocalTerm((0, 1), np.diag([3.0, 1.0, -2.0, 0.5])),))
    assert is_frustration_free(single)


def test_antiferromagnetic_triangle_energy():
    # each bond costs 1 when aligned; a triangle always has one aligned bond
    afm = (np.kron(Z, Z) + np.eye(4)) / 2
    tri = LocalHamiltonian(3, tuple(LocalTerm(e, afm) for e in [(0, 1), (1, 2), (0, 2)]))
    assert ground_space(tri).ground_energy == pytest.approx(1.0)


def test_gibbs_examples():
    np.testing.assert_allclose(gibbs_distribution(ClassicalHamiltonian(3, ())).probs, np.full(8, 0.125))
    one = ClassicalHamiltonian(1, (ClassicalTerm((0,), [0.0, 1.0]),))
    p = gibbs_distribution(one)
    assert p.probs[0] == pytest.approx(1 / (1 + np.exp(-1)), abs=1e-12)
    assert p.probs[0] == pytest.approx(0.73106, abs=1e-5)
    assert p.log_Z == pytest.approx(np.log(1 + np.exp(-1)))
    p0 = 1 / (1 + np.exp(-1))
    np.testing.assert_allclose(coherent_gibbs_state(one), [np.sqrt(p0), np.sqrt(1 - p0)], atol=1e-12)
    np.testing.assert_allclose(coherent_gibbs_state(one), [0.85502, 0.51860], atol=1e-5)
    np.testing.assert_allclose(coherent_gibbs_state(ClassicalHamiltonian(2, ())), np.full(4, 0.5))


def test_gibbs_handles_huge_energies():
    hc = ClassicalHamiltonian(2, (ClassicalTerm((0, 1), [1e4, 1e4 + 1, 2e4, 3e4]),))
    p = gibbs_distribution(hc).probs
    assert p[0] == pytest.approx(1 / (1 + np.exp(-1)))


def test_distribution_validation():
    with pytest.raises(ValueError):
        Distribution(1, np.array([0.7, 0.7]))
    with pytest.raises(ValueError):
        Distribution(1, np.array([1.1, -0.1]))


def test_marginal_keeps_requested_order():
    rng = np.random.default_rng(0)
    p = rng.random(8)
    p /= p.sum()
    t = p.reshape(2, 2, 2)
    np.testing.assert_allclose(marginal(p, 3, [2, 0]), t.sum(axis=1).T.reshape(-1))


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 6), st.floats(-50, 50))
def test_gibbs_invariant_under_constant_shift(seed, n, c):
    hc = random_classical(n, np.random.default_rng(seed))
    np.testing.assert_allclose(gibbs_distribution(hc.shifted(c)).probs, gibbs_distribution(hc).probs,
                               rtol=1e-12, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 6))
def test_gibbs_matches_literal_sum(seed, n):
    hc = random_classical(n, np.random.default_rng(seed))
    np.testing.assert_allclose(gibbs_distribution(hc).probs, naive_gibbs(hc), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 6))
def test_coherent_state_squares_to_gibbs(seed, n):
    hc = random_classical(n, np.random.default_rng(seed))
    psi = coherent_gibbs_state(hc)
    assert np.all(psi >= 0)
    np.testing.assert_allclose(psi ** 2, gibbs_distribution(hc).probs, atol=1e-12)
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(2, 5))
def test_stoquastic_ground_state_nonnegative(seed, n):
    h = random_stoquastic(n, np.random.default_rng(seed))
    H = assemble_dense(h)
    np.testing.assert_allclose(H, H.T)
    g = ground_space(h)
    assert np.all(g.psi0 >= -1e-9)
    assert np.linalg.norm(g.psi0) == pytest.approx(1.0)
    assert g.eta ** 2 == pytest.approx(plus_state(n) @ g.projector @ plus_state(n), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(2, 64), st.floats(1e-6, 0.5))
def test_normalized_distance_bound(seed, dim, eps):
    # ||v - w|| <= eps implies ||v/|v| - w/|w||| <= 2 eps / |v|
    rng = np.random.default_rng(seed)
    v = rng.normal(size=dim)
    d = rng.normal(size=dim)
    w = v + d * eps / np.linalg.norm(d) * rng.random()
    lhs = np.linalg.norm(v / np.linalg.norm(v) - w / np.linalg.norm(w))
    assert lhs <= 2 * np.linalg.norm(v - w) / np.linalg.norm(v) + 1e-15
