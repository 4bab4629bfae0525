"""Standard model instances and random generators used by tests and scripts."""

from __future__ import annotations

import numpy as np

from .boltzmann import BoltzmannMachine
from .hamcore import ClassicalHamiltonian, ClassicalTerm, LocalHamiltonian, LocalTerm
from .hbm import Hyperedge, HyperBoltzmannMachine

I2 = np.eye(2)
X = np.array([[0.0, 1.0], [1.0, 0.0]])
Z = np.diag([1.0, -1.0])


def tfim(n: int, coupling: float = 1.0, field: float = 1.0, periodic: bool = False) -> LocalHamiltonian:
    """Stoquastic transverse-field Ising chain sum c(I - ZZ)/2 + sum g(I - X)/2, bond terms first."""
    bonds = [(i, i + 1) for i in range(n - 1)]
    if periodic and n > 2:
        bonds.append((0, n - 1))
    terms = [LocalTerm(b, coupling * (np.eye(4) - np.kron(Z, Z)) / 2) for b in bonds]
    terms += [LocalTerm((i,), field * (I2 - X) / 2) for i in range(n)]
    return LocalHamiltonian(n, tuple(terms))


def ferromagnet() -> ClassicalHamiltonian:
    """Two bits that prefer to agree: table [-1, 1, 1, -1]."""
    return ClassicalHamiltonian(2, (ClassicalTerm((0, 1), [-1.0, 1.0, 1.0, -1.0]),))


def random_stoquastic(n: int, rng, scale: float = 1.0) -> LocalHamiltonian:
    """Nearest-neighbour 2-local terms with nonpositive off-diagonals plus 1-local -X fields."""
    terms = []
    for i in range(n - 1):
        A = rng.normal(size=(4, 4)) * scale
        A = -np.abs(A + A.T) / 2
        np.fill_diagonal(A, rng.normal(size=4) * scale)
        terms.append(LocalTerm((i, i + 1), A))
    for i in range(n):
        terms.append(LocalTerm((i,), -rng.uniform(0.2, 1.0) * X + np.diag(rng.normal(size=2)) * 0.3))
    return LocalHamiltonian(n, tuple(terms))


def random_classical(n: int, rng, max_terms_per_bit: int = 3, scale: float = 1.0) -> ClassicalHamiltonian:
    """Random 2-local classical Hamiltonian with at most ``max_terms_per_bit`` terms on any bit.

    Every bit carries a field term, and pair terms are added greedily between
    random pairs while the per-bit budget allows.
    """
    count = [1] * n
    terms = [ClassicalTerm((i,), rng.normal(size=2) * scale) for i in range(n)]
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for idx in rng.permutation(len(pairs)):
        i, j = pairs[idx]
        if count[i] < max_terms_per_bit and count[j] < max_terms_per_bit and rng.random() < 0.7:
            terms.append(ClassicalTerm((i, j), rng.normal(size=4) * scale))
            count[i] += 1
            count[j] += 1
    return ClassicalHamiltonian(n, tuple(terms))


def random_hbm(n: int, m: int, T: int, rng, max_edge: int = 3, scale: float = 1.0) -> HyperBoltzmannMachine:
    """Generic HBM with T random hyperedges of size 1..max_edge over n visible and m hidden nodes."""
    N = n + m
    edges = []
    for _ in range(T):
        size = int(rng.integers(1, min(max_edge, N) + 1))
        nodes = tuple(int(v) for v in rng.choice(N, size=size, replace=False))
        edges.append(Hyperedge(nodes, rng.normal(size=2 ** size) * scale))
    return HyperBoltzmannMachine(tuple(range(n)), tuple(range(n, N)), tuple(edges))


def random_bm(n_visible: int, n_hidden: int, rng, density: float = 0.6, scale: float = 1.0) -> BoltzmannMachine:
    N = n_visible + n_hidden
    mask = np.triu(rng.random((N, N)) < density, 1)
    W = np.where(mask, rng.normal(size=(N, N)) * scale, 0.0)
    return BoltzmannMachine(rng.normal(size=N) * scale, W + W.T, list(range(n_visible)))
