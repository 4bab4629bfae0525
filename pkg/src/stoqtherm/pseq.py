"""Entrywise-positive operator sequences that drive |+> to a ground state.

Two constructions are provided.  ``trotter_sequence`` uses a symmetric
(second-order) Trotter splitting of imaginary-time evolution for a general
stoquastic Hamiltonian; ``sff_sequence`` cycles through the ground-space
projectors of the terms of a frustration-free Hamiltonian.  In both cases a
small multiple ``alpha`` of the all-ones matrix is added to every factor so
that all entries are strictly positive, which is what allows each factor to
be written as a hyperedge energy ``-log P``.

Both constructions pick their parameters from the asymptotic scalings with
unit constants and then refine against the exact dense oracle, so every
returned sequence carries a measured (not estimated) error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .hamcore import (
    GroundSpaceReport,
    LocalHamiltonian,
    LocalTerm,
    apply_local,
    embed,
    ground_space,
    is_frustration_free,
    is_stoquastic,
    plus_state,
)

MAX_REFINEMENTS = 12
MAX_SFF_DOUBLINGS = 16


class SequenceError(ValueError):
    pass


@dataclass(frozen=True)
class Factor:
    support: tuple
    matrix: np.ndarray


@dataclass
class PSequence:
    n: int
    factors: list
    alpha: float
    meta: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return len(self.factors)

    def truncated(self, max_factors: int) -> "PSequence":
        meta = dict(self.meta, truncated_from=self.T)
        return PSequence(self.n, self.factors[:max_factors], self.alpha, meta)

    def min_entry(self) -> float:
        return min((float(f.matrix.min()) for f in self.factors), default=float("inf"))


@dataclass
class ConvergenceReport:
    l2_error: float
    target_eps: float
    iterations_used: int
    converged: bool = True


def sym_exp(matrix: np.ndarray, t: float) -> np.ndarray:
    """exp(-t * matrix) for a real symmetric matrix."""
    w, v = np.linalg.eigh(matrix)
    return (v * np.exp(-t * w)) @ v.T


def ground_projector(matrix: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    w, v = np.linalg.eigh(matrix)
    sel = w <= w[0] + tol * max(1.0, abs(w[0]))
    b = v[:, sel]
    return b @ b.T


def shift_to_zero(h: LocalHamiltonian, ground_energy: float) -> LocalHamiltonian:
    """Shift terms so that the global ground energy is exactly zero.

    Each term is first lowered by its own minimum eigenvalue; the remaining
    (non-negative) global offset is then split evenly over the terms.
    Diagonal shifts leave the off-diagonal signs untouched.
    """
    if not h.terms:
        return h
    mins = [float(np.linalg.eigvalsh(t.matrix)[0]) for t in h.terms]
    residual = ground_energy - sum(mins)
    share = residual / h.L
    terms = []
    for t, lo in zip(h.terms, mins):
        dim = t.matrix.shape[0]
        terms.append(LocalTerm(t.support, t.matrix - (lo + share) * np.eye(dim)))
    return LocalHamiltonian(h.n, tuple(terms))


def apply_sequence(p: PSequence, start: Optional[np.ndarray] = None, return_log_norm: bool = False):
    """Normalised P_T ... P_1 |start>, renormalising after every factor.

    With ``return_log_norm`` the accumulated log-norm (log sqrt(Z) for a
    normalised ``start``) is returned as well.
    """
    vec = plus_state(p.n) if start is None else np.array(start, dtype=float)
    if vec.shape != (2 ** p.n,):
        raise ValueError("start vector has the wrong dimension")
    log_norm = math.log(np.linalg.norm(vec))
    vec = vec / np.linalg.norm(vec)
    for f in p.factors:
        vec = apply_local(f.matrix, f.support, vec, p.n)
        nrm = np.linalg.norm(vec)
        assert nrm > 0, "state collapsed to zero"
        log_norm += math.log(nrm)
        vec = vec / nrm
    return (vec, log_norm) if return_log_norm else vec


def _l2_error(p: PSequence, psi0: np.ndarray) -> float:
    return float(np.linalg.norm(apply_sequence(p) - psi0))


def _check_oracle(oracle: GroundSpaceReport):
    if oracle.psi0 is None or oracle.eta <= 0:
        raise SequenceError("ground space has no overlap with |+>")
    if not oracle.gap > 0:
        raise SequenceError("Hamiltonian is gapless")


def trotter_factors(h0: LocalHamiltonian, delta: float, N: int, alpha: float) -> list:
    """Factors in application order for [(H_L..H_1)(H_1..H_L)]^N.

    The product P_T ... P_1 equals the palindrome repeated N times; the
    first factor applied to the state is the one for H_L.
    """
    mats = []
    for t in h0.terms:
        dim = t.matrix.shape[0]
        mats.append(Factor(t.support, sym_exp(t.matrix, 0.5 * delta) + alpha * np.ones((dim, dim))))
    sweep = mats[::-1] + mats
    return sweep * N


def trotter_sequence(h: LocalHamiltonian, eps: float, oracle: Optional[GroundSpaceReport] = None):
    """Trotterised imaginary-time P-sequence with measured 2-norm error <= eps.

    Returns ``(PSequence, ConvergenceReport)``.  If refinement stops before
    reaching ``eps`` the report carries ``converged=False`` and the achieved
    error.
    """
    if not is_stoquastic(h):
        raise SequenceError("Hamiltonian is not stoquastic")
    oracle = oracle or ground_space(h)
    _check_oracle(oracle)
    h0 = shift_to_zero(h, oracle.ground_energy)
    L, J, eta, gap = h0.L, max(h0.J, 1e-12), oracle.eta, oracle.gap
    log_term = math.log(1.0 / (eta * eps)) if eta * eps < 1 else 1.0
    log_term = max(log_term, 1e-3)
    tau = math.log(2.0 / (eta * eps)) / gap if math.isfinite(gap) else 0.0
    delta = math.sqrt(eta) * L ** -1.5 * J ** -1.5 * math.sqrt(gap if math.isfinite(gap) else 1.0) \
        * math.sqrt(eps) / math.sqrt(log_term)
    delta = min(delta, 1.0)
    N = max(1, math.ceil(tau / delta))
    alpha = eta * eps / (10 * 2 * N * max(L, 1))

    best = None
    for it in range(1, MAX_REFINEMENTS + 1):
        p = PSequence(h.n, trotter_factors(h0, delta, N, alpha), alpha,
                      {"kind": "trotter", "delta": delta, "N": N, "tau": tau,
                       "target_eps": eps, "L": L, "J": J, "eta": eta, "gap": gap})
        err = _l2_error(p, oracle.psi0)
        best = (p, ConvergenceReport(err, eps, it, err <= eps))
        if err <= eps:
            break
        delta /= 2
        N = max(1, math.ceil(tau / delta))
        alpha = min(alpha / 2, eta * eps / (10 * 2 * N * max(L, 1)))
    return best


def sff_factors(h: LocalHamiltonian, N: int, alpha: float) -> list:
    mats = []
    for t in h.terms:
        dim = t.matrix.shape[0]
        mats.append(Factor(t.support, ground_projector(t.matrix) + alpha * np.ones((dim, dim))))
    return mats * N


def sff_sequence(h: LocalHamiltonian, eps: float, oracle: Optional[GroundSpaceReport] = None):
    """Projector-cycling P-sequence for a stoquastic frustration-free Hamiltonian.

    The cycle count ``N`` is doubled from 1 (and ``alpha`` re-derived as
    eta*eps/(10T)) until the measured error is at most ``eps``.
    """
    if not is_stoquastic(h):
        raise SequenceError("Hamiltonian is not stoquastic")
    oracle = oracle or ground_space(h)
    if not is_frustration_free(h, oracle=oracle):
        raise SequenceError("Hamiltonian is not frustration-free")
    _check_oracle(oracle)
    L, eta = h.L, oracle.eta
    scaling_N = math.ceil(L ** 2 * h.J / oracle.gap * math.log(max(2.0, 1.0 / (eta * eps)))) \
        if math.isfinite(oracle.gap) else 1

    N, best = 1, None
    for it in range(1, MAX_SFF_DOUBLINGS + 1):
        alpha = eta * eps / (10 * N * max(L, 1))
        p = PSequence(h.n, sff_factors(h, N, alpha), alpha,
                      {"kind": "sff", "N": N, "target_eps": eps, "L": L, "J": h.J,
                       "eta": eta, "gap": oracle.gap, "scaling_N": scaling_N})
        err = _l2_error(p, oracle.psi0)
        best = (p, ConvergenceReport(err, eps, it, err <= eps))
        if err <= eps:
            break
        N *= 2
    return best


def trotter_error_probe(h: LocalHamiltonian, deltas) -> list:
    """Operator-norm distance between the symmetric Trotter step and exp(-delta H)."""
    if h.n > 10:
        raise ValueError("trotter_error_probe is limited to n <= 10")
    dense_terms = [embed(t.matrix, t.support, h.n) for t in h.terms]
    H = sum(dense_terms) if dense_terms else np.zeros((2 ** h.n, 2 ** h.n))
    out = []
    for d in deltas:
        halves = [sym_exp(m, 0.5 * d) for m in dense_terms]
        step = np.eye(2 ** h.n)
        for e in halves[::-1] + halves:
            step = e @ step
        out.append((float(d), float(np.linalg.norm(step - sym_exp(H, d), 2))))
    return out


def loglog_slope(pairs) -> float:
    x = np.log([d for d, _ in pairs])
    y = np.log([e for _, e in pairs])
    return float(np.polyfit(x, y, 1)[0])


def detectability_errors(h: LocalHamiltonian, Ns, oracle: Optional[GroundSpaceReport] = None) -> list:
    """||Pi - (Pi_L ... Pi_1)^N||_op for each N in ``Ns``."""
    oracle = oracle or ground_space(h)
    sweep = np.eye(2 ** h.n)
    for t in h.terms:
        sweep = embed(ground_projector(t.matrix), t.support, h.n) @ sweep
    pi = oracle.projector
    out = []
    for N in Ns:
        out.append(float(np.linalg.norm(pi - np.linalg.matrix_power(sweep, N), 2)))
    return out
