"""Compile a classical Hamiltonian into a stoquastic frustration-free one.

For H_c on n bits the compiled Hamiltonian is sum_j (Gamma_j - X_j), where
Gamma_j is diagonal with Gamma_j(x) = exp((H_c(x) - H_c(x with bit j
flipped)) / 2).  Only the terms that touch bit j contribute to that energy
difference, so Gamma_j lives on bit j and its neighbours.  The unique ground
state is the coherent Gibbs state of H_c, at energy zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamcore import ClassicalHamiltonian, LocalHamiltonian, LocalTerm, table_indices

_X = np.array([[0.0, 1.0], [1.0, 0.0]])


@dataclass
class SffCompilation:
    h_sff: LocalHamiltonian
    locality: int
    per_qubit_supports: list

    @property
    def max_support_observed(self) -> int:
        return max((len(s) for s in self.per_qubit_supports), default=0)

    def report(self) -> dict:
        return {"locality_bound": self.locality, "max_support_observed": self.max_support_observed}


def neighbourhood(hc: ClassicalHamiltonian, j: int) -> tuple:
    sup = {j}
    for t in hc.terms_touching(j):
        sup.update(t.support)
    return tuple(sorted(sup))


def _local_energies(hc: ClassicalHamiltonian, j: int, support: tuple) -> np.ndarray:
    """Energy of the terms touching j, for every assignment of ``support``."""
    s = len(support)
    xs = np.arange(2 ** s, dtype=np.int64)
    pos = {q: i for i, q in enumerate(support)}
    out = np.zeros(2 ** s)
    for t in hc.terms_touching(j):
        out += t.table[table_indices(xs, [pos[q] for q in t.support], s)]
    return out


def gamma_operator(hc: ClassicalHamiltonian, j: int):
    """Diagonal of Gamma_j on its support; returns ``(support, diag)``."""
    if not 0 <= j < hc.n:
        raise ValueError(f"bit {j} out of range")
    support = neighbourhood(hc, j)
    e = _local_energies(hc, j, support)
    flip = 1 << (len(support) - 1 - support.index(j))
    xs = np.arange(2 ** len(support))
    return support, np.exp(0.5 * (e - e[xs ^ flip]))


def locality_bound(hc: ClassicalHamiltonian) -> int:
    return hc.k_prime * (max(hc.k, 1) - 1) + 1


def build_sff(hc: ClassicalHamiltonian) -> SffCompilation:
    terms, supports = [], []
    for j in range(hc.n):
        support, diag = gamma_operator(hc, j)
        s = len(support)
        pos = support.index(j)
        x_j = np.kron(np.kron(np.eye(2 ** pos), _X), np.eye(2 ** (s - 1 - pos)))
        terms.append(LocalTerm(support, np.diag(diag) - x_j))
        supports.append(support)
    return SffCompilation(LocalHamiltonian(hc.n, tuple(terms)), locality_bound(hc), supports)
