"""Local Hamiltonians, the dense ground-space oracle and classical Gibbs states.

Basis convention: a computational basis index ``x`` is read as a big-endian
bitstring, so qubit 0 is the most significant bit.  Every module in the
package follows this convention, including the lexicographic indexing of
term matrices and energy tables over their support.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

MAX_DENSE_QUBITS = 14
MAX_GIBBS_BITS = 24

DEGENERACY_TOL = 1e-9
STOQ_TOL = 1e-12
ETA_FLOOR = 1e-12


class DimensionError(ValueError):
    """Raised when a dense object would exceed the desk-scale memory guard."""


def _check_support(support, n):
    support = tuple(int(q) for q in support)
    if list(support) != sorted(set(support)):
        raise ValueError(f"support must be sorted and distinct, got {support}")
    if support and (support[0] < 0 or support[-1] >= n):
        raise ValueError(f"support {support} out of range for n={n}")
    return support


@dataclass(frozen=True)
class LocalTerm:
    """A dense real symmetric matrix acting on ``support`` (sorted qubits)."""

    support: tuple
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        dim = 2 ** len(self.support)
        if m.shape != (dim, dim):
            raise ValueError(f"term on {len(self.support)} qubits needs a {dim}x{dim} matrix, got {m.shape}")
        if not np.allclose(m, m.T, rtol=0.0, atol=1e-12):
            raise ValueError("term matrix is not symmetric")
        m.setflags(write=False)
        object.__setattr__(self, "support", tuple(int(q) for q in self.support))
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class LocalHamiltonian:
    """H = sum_a H_a on ``n`` qubits, each H_a a :class:`LocalTerm`."""

    n: int
    terms: tuple = ()

    def __post_init__(self):
        terms = []
        for t in self.terms:
            if not isinstance(t, LocalTerm):
                t = LocalTerm(tuple(t[0]), t[1])
            _check_support(t.support, self.n)
            terms.append(t)
        object.__setattr__(self, "terms", tuple(terms))

    @property
    def L(self) -> int:
        return len(self.terms)

    @property
    def k(self) -> int:
        return max((len(t.support) for t in self.terms), default=0)

    @property
    def J(self) -> float:
        """Largest operator norm among the terms."""
        return max((float(np.max(np.abs(np.linalg.eigvalsh(t.matrix)))) for t in self.terms), default=0.0)

    def dense(self) -> np.ndarray:
        return assemble_dense(self)


@dataclass(frozen=True)
class ClassicalTerm:
    """Energy table over the bits in ``support`` (lexicographic, big-endian)."""

    support: tuple
    table: np.ndarray

    def __post_init__(self):
        t = np.array(self.table, dtype=float).reshape(-1)
        if t.shape != (2 ** len(self.support),):
            raise ValueError(f"table for {len(self.support)} bits needs {2 ** len(self.support)} entries, got {t.size}")
        if not np.all(np.isfinite(t)):
            raise ValueError("energy table has non-finite entries")
        t.setflags(write=False)
        object.__setattr__(self, "support", tuple(int(q) for q in self.support))
        object.__setattr__(self, "table", t)


@dataclass(frozen=True)
class ClassicalHamiltonian:
    """Diagonal k-local Hamiltonian H(x) = sum_t table_t[x restricted to support_t]."""

    n: int
    terms: tuple = ()

    def __post_init__(self):
        terms = []
        for t in self.terms:
            if not isinstance(t, ClassicalTerm):
                t = ClassicalTerm(tuple(t[0]), t[1])
            _check_support(t.support, self.n)
            terms.append(t)
        object.__setattr__(self, "terms", tuple(terms))

    @property
    def T(self) -> int:
        return len(self.terms)

    @property
    def k(self) -> int:
        return max((len(t.support) for t in self.terms), default=0)

    @property
    def k_prime(self) -> int:
        """Maximum number of terms touching a single bit."""
        return max(self.degrees(), default=0)

    def degrees(self) -> list:
        deg = [0] * self.n
        for t in self.terms:
            for q in t.support:
                deg[q] += 1
        return deg

    def terms_touching(self, j: int) -> list:
        return [t for t in self.terms if j in t.support]

    def energy(self, x) -> float:
        """Energy of a single assignment, given as a bit sequence or basis index."""
        bits = as_bits(x, self.n)
        e = 0.0
        for t in self.terms:
            e += t.table[local_index(bits, t.support)]
        return float(e)

    def energies(self) -> np.ndarray:
        """H(x) for every x in {0,1}^n, assembled from per-term table lookups."""
        if self.n > MAX_GIBBS_BITS:
            raise DimensionError(f"n={self.n} exceeds {MAX_GIBBS_BITS} bits")
        xs = np.arange(2 ** self.n, dtype=np.int64)
        out = np.zeros(2 ** self.n)
        for t in self.terms:
            out += t.table[table_indices(xs, t.support, self.n)]
        return out

    def shifted(self, c: float) -> "ClassicalHamiltonian":
        """Copy with the constant ``c`` added (as an extra 0-local term)."""
        return ClassicalHamiltonian(self.n, self.terms + (ClassicalTerm((), [c]),))


@dataclass(frozen=True)
class Distribution:
    n: int
    probs: np.ndarray
    log_Z: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (2 ** self.n,):
            raise ValueError("probability vector has the wrong length")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
            raise ValueError("not a probability distribution")
        object.__setattr__(self, "probs", p)

    def tv(self, other) -> float:
        q = other.probs if isinstance(other, Distribution) else np.asarray(other)
        return tv_distance(self.probs, q)


@dataclass
class GroundSpaceReport:
    ground_energy: float
    gap: float
    ground_dim: int
    ground_basis: np.ndarray
    psi0: Optional[np.ndarray]
    eta: float
    spectrum: np.ndarray = field(repr=False, default=None)

    @property
    def projector(self) -> np.ndarray:
        return self.ground_basis @ self.ground_basis.T


# --- bit helpers -----------------------------------------------------------

def as_bits(x, n: int) -> np.ndarray:
    if isinstance(x, (int, np.integer)):
        return np.array([(int(x) >> (n - 1 - q)) & 1 for q in range(n)], dtype=np.int64)
    bits = np.asarray(x, dtype=np.int64).reshape(-1)
    if bits.size != n:
        raise ValueError(f"expected {n} bits, got {bits.size}")
    return bits


def bits_to_index(bits) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def local_index(bits, support) -> int:
    idx = 0
    for q in support:
        idx = (idx << 1) | int(bits[q])
    return idx


def table_indices(xs: np.ndarray, support, n: int) -> np.ndarray:
    """Vectorised ``local_index`` for an array of basis indices."""
    idx = np.zeros_like(xs)
    for q in support:
        idx = (idx << 1) | ((xs >> (n - 1 - q)) & 1)
    return idx


def plus_state(n: int) -> np.ndarray:
    return np.full(2 ** n, 2.0 ** (-n / 2))


def tv_distance(p, q) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))


# --- local operator embedding -----------------------------------------------

def embed(matrix: np.ndarray, support, n: int) -> np.ndarray:
    """Dense 2^n x 2^n matrix of ``matrix`` acting on ``support``."""
    k = len(support)
    rest = [q for q in range(n) if q not in support]
    full = np.kron(matrix, np.eye(2 ** (n - k)))
    # axes of `full` are ordered (support..., rest...) for rows and columns
    order = list(support) + rest
    perm = np.argsort(order)
    full = full.reshape([2] * (2 * n))
    full = full.transpose(list(perm) + [n + p for p in perm])
    return full.reshape(2 ** n, 2 ** n)


def apply_local(matrix: np.ndarray, support, vec: np.ndarray, n: int) -> np.ndarray:
    """Apply a matrix on ``support`` to a state vector without forming 2^n x 2^n."""
    k = len(support)
    if k == 0:
        return matrix[0, 0] * vec
    t = vec.reshape([2] * n)
    t = np.moveaxis(t, support, range(k))
    shape = t.shape
    t = (matrix @ t.reshape(2 ** k, -1)).reshape(shape)
    return np.moveaxis(t, range(k), support).reshape(-1)


def assemble_dense(h: LocalHamiltonian) -> np.ndarray:
    if h.n > MAX_DENSE_QUBITS:
        raise DimensionError(f"n={h.n} exceeds the dense limit of {MAX_DENSE_QUBITS} qubits")
    out = np.zeros((2 ** h.n, 2 ** h.n))
    for t in h.terms:
        out += embed(t.matrix, t.support, h.n)
    return out


# --- predicates and the exact oracle ----------------------------------------

def is_stoquastic(h: LocalHamiltonian, tol: float = STOQ_TOL) -> bool:
    for t in h.terms:
        off = t.matrix - np.diag(np.diag(t.matrix))
        if np.any(off > tol):
            return False
    return True


def ground_space(h: LocalHamiltonian, degeneracy_tol: float = DEGENERACY_TOL) -> GroundSpaceReport:
    """Exact ground space of ``h`` by full diagonalisation.

    ``psi0`` is the normalised projection of |+> onto the ground space, which
    is the canonical ground state even when the ground space is degenerate.
    It is ``None`` when the overlap ``eta`` falls below 1e-12.
    """
    w, v = np.linalg.eigh(assemble_dense(h))
    e0 = float(w[0])
    cut = e0 + degeneracy_tol * max(1.0, abs(e0))
    dim = int(np.sum(w <= cut))
    basis = v[:, :dim]
    gap = float(w[dim] - e0) if dim < w.size else float("inf")
    plus = plus_state(h.n)
    coeffs = basis.T @ plus
    eta = float(np.linalg.norm(coeffs))
    psi0 = basis @ coeffs / eta if eta > ETA_FLOOR else None
    return GroundSpaceReport(e0, gap, dim, basis, psi0, min(eta, 1.0), w)


def is_frustration_free(h: LocalHamiltonian, tol: float = 1e-9,
                        oracle: Optional[GroundSpaceReport] = None) -> bool:
    oracle = oracle or ground_space(h)
    for t in h.terms:
        shifted = t.matrix - np.linalg.eigvalsh(t.matrix)[0] * np.eye(t.matrix.shape[0])
        for v in oracle.ground_basis.T:
            if float(v @ apply_local(shifted, t.support, v, h.n)) > tol:
                return False
    return True


# --- classical Gibbs states ---------------------------------------------------

def gibbs_distribution(hc: ClassicalHamiltonian) -> Distribution:
    e = hc.energies()
    emin = float(e.min())
    w = np.exp(-(e - emin))
    s = float(w.sum())
    return Distribution(hc.n, w / s, log_Z=-emin + np.log(s))


def coherent_gibbs_state(hc: ClassicalHamiltonian) -> np.ndarray:
    if hc.n > MAX_DENSE_QUBITS:
        raise DimensionError(f"n={hc.n} exceeds {MAX_DENSE_QUBITS} qubits")
    return np.sqrt(gibbs_distribution(hc).probs)


def marginal(probs: np.ndarray, n: int, keep: Sequence[int]) -> np.ndarray:
    """Marginal of a distribution on n bits onto the bits in ``keep`` (in that order)."""
    t = np.asarray(probs).reshape([2] * n)
    drop = tuple(q for q in range(n) if q not in keep)
    t = t.sum(axis=drop) if drop else t
    kept_sorted = sorted(keep)
    t = np.transpose(t, [kept_sorted.index(q) for q in keep])
    return t.reshape(-1)
