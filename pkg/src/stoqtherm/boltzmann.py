"""Pairwise Boltzmann machines: general BMs, three-layer DBMs, RBMs and Ising models.

Energies use bits y in {0,1}:

    BM:   F(y)        = -a.y - sum_{i<j} W_ij y_i y_j
    DBM:  F(x, h, g)  = -a.x - x.W.h - b.h - h.U.g - c.g

with x visible, h the middle layer and g the deep layer.  An RBM is a DBM
whose deep layer is empty.

``rbm_from_distribution`` builds an RBM for an arbitrary strictly positive
distribution on k bits with one hidden unit per "large" assignment, and
``hbm_to_dbm`` applies it hyperedge by hyperedge to turn an HBM into a DBM.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .hamcore import MAX_DENSE_QUBITS, Distribution, tv_distance
from .hbm import MAX_BRUTE_HIDDEN, Hyperedge, HyperBoltzmannMachine, distribution as hbm_distribution

MAX_DEEP = 22
MAX_RBM_BITS = 6
MAX_A_DOUBLINGS = 8
MAX_EDGE_REFINEMENTS = 8
DENSE_WEIGHT_LIMIT = 5_000_000


class BoltzmannError(ValueError):
    pass


def _bit_matrix(k: int) -> np.ndarray:
    """Rows are the 2^k assignments of k bits in big-endian order."""
    xs = np.arange(2 ** k)
    return ((xs[:, None] >> (k - 1 - np.arange(k))[None, :]) & 1).astype(float)


def softplus(t):
    return np.logaddexp(0.0, t)


@dataclass
class BoltzmannMachine:
    """General pairwise BM. ``W`` is symmetric with zero diagonal."""

    a: np.ndarray
    W: np.ndarray
    visible: list = None

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.W = np.asarray(self.W, dtype=float)
        N = self.a.size
        if self.W.shape != (N, N) or not np.allclose(self.W, self.W.T) or np.any(np.diag(self.W) != 0):
            raise BoltzmannError("W must be symmetric with zero diagonal")
        if self.visible is None:
            self.visible = list(range(N))

    @property
    def N(self) -> int:
        return self.a.size

    @property
    def hidden(self) -> list:
        return [i for i in range(self.N) if i not in self.visible]

    def edges(self) -> list:
        iu, ju = np.nonzero(np.triu(self.W, 1))
        return [(int(i), int(j), float(self.W[i, j])) for i, j in zip(iu, ju)]

    def max_degree(self) -> int:
        return int(np.max(np.count_nonzero(self.W, axis=1), initial=0))

    def energies(self) -> np.ndarray:
        Y = _bit_matrix(self.N)
        return -(Y @ self.a) - 0.5 * np.einsum("si,ij,sj->s", Y, self.W, Y)

    def as_hbm(self) -> HyperBoltzmannMachine:
        edges = [Hyperedge((i,), [0.0, -self.a[i]]) for i in range(self.N) if self.a[i] != 0]
        edges += [Hyperedge((i, j), [0.0, 0.0, 0.0, -w]) for i, j, w in self.edges()]
        return HyperBoltzmannMachine(tuple(self.visible), tuple(self.hidden), tuple(edges))

    def distribution(self) -> Distribution:
        return hbm_distribution(self.as_hbm(), brute=True)


@dataclass
class DeepBoltzmannMachine:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    W: np.ndarray
    U: np.ndarray
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float).reshape(-1)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        self.W = np.asarray(self.W, dtype=float).reshape(self.a.size, self.b.size)
        self.U = np.asarray(self.U, dtype=float).reshape(self.b.size, self.c.size)

    @property
    def n(self) -> int:
        return self.a.size

    @property
    def middle(self) -> int:
        return self.b.size

    @property
    def deep(self) -> int:
        return self.c.size

    @property
    def is_rbm(self) -> bool:
        return self.deep == 0

    def max_degree(self) -> int:
        deg = [np.count_nonzero(self.W, axis=1), np.count_nonzero(self.W, axis=0) + np.count_nonzero(self.U, axis=1),
               np.count_nonzero(self.U, axis=0)]
        return int(max((int(d.max()) for d in deg if d.size), default=0))

    def max_weight(self) -> float:
        parts = [np.abs(p).ravel() for p in (self.W, self.U)]
        return float(max((p.max() for p in parts if p.size), default=0.0))

    def max_bias(self) -> float:
        parts = [np.abs(p) for p in (self.a, self.b, self.c)]
        return float(max((p.max() for p in parts if p.size), default=0.0))

    def as_bm(self) -> BoltzmannMachine:
        n, p, q = self.n, self.middle, self.deep
        N = n + p + q
        W = np.zeros((N, N))
        W[:n, n:n + p] = self.W
        W[n:n + p, n + p:] = self.U
        return BoltzmannMachine(np.concatenate([self.a, self.b, self.c]), W + W.T, list(range(n)))

    def as_hbm(self) -> HyperBoltzmannMachine:
        return self.as_bm().as_hbm()


def empty_rbm(n: int) -> DeepBoltzmannMachine:
    return DeepBoltzmannMachine(np.zeros(n), [], [], np.zeros((n, 0)), np.zeros((0, 0)))


# --- exact evaluation ----------------------------------------------------------

def log_dbm_output(dbm: DeepBoltzmannMachine, xs=None) -> np.ndarray:
    """log f(x), with the middle layer summed in closed form and the deep layer by enumeration."""
    if dbm.deep > MAX_DEEP:
        raise BoltzmannError(f"deep layer of {dbm.deep} exceeds the enumeration limit {MAX_DEEP}")
    if xs is None:
        if dbm.n > MAX_DENSE_QUBITS:
            raise BoltzmannError("too many visible nodes to enumerate")
        X = _bit_matrix(dbm.n)
    else:
        X = np.atleast_2d(np.asarray(xs, dtype=float))
    base = X @ dbm.a
    pre = X @ dbm.W + dbm.b  # (S, p)
    if dbm.deep == 0:
        return base + softplus(pre).sum(axis=1)
    out = np.full(X.shape[0], -np.inf)
    chunk = 1 << 12
    for start in range(0, 2 ** dbm.deep, chunk):
        G = ((np.arange(start, min(start + chunk, 2 ** dbm.deep))[:, None]
              >> (dbm.deep - 1 - np.arange(dbm.deep))[None, :]) & 1).astype(float)
        drive = G @ dbm.U.T  # (G, p)
        terms = (G @ dbm.c)[None, :] + softplus(pre[:, None, :] + drive[None, :, :]).sum(axis=2)
        out = np.logaddexp(out, logsumexp(terms, axis=1))
    return base + out


def dbm_output(dbm: DeepBoltzmannMachine, x) -> float:
    return float(np.exp(log_dbm_output(dbm, [x])[0]))


def dbm_distribution(dbm: DeepBoltzmannMachine) -> Distribution:
    logf = log_dbm_output(dbm)
    w = np.exp(logf - logf.max())
    return Distribution(dbm.n, w / w.sum())


def brute_log_dbm_output(dbm: DeepBoltzmannMachine) -> np.ndarray:
    """Oracle: enumerate middle and deep layers explicitly."""
    H = dbm.middle + dbm.deep
    if H > 16:
        raise BoltzmannError("brute-force oracle limited to 16 hidden nodes")
    X = _bit_matrix(dbm.n)
    Y = _bit_matrix(H)
    hm, hd = Y[:, :dbm.middle], Y[:, dbm.middle:]
    neg_f = (X @ dbm.a)[:, None] + X @ dbm.W @ hm.T + (hm @ dbm.b)[None, :] \
        + np.einsum("sp,pq,sq->s", hm, dbm.U, hd)[None, :] + (hd @ dbm.c)[None, :]
    return logsumexp(neg_f, axis=1)


# --- Le Roux & Bengio construction ------------------------------------------

@dataclass
class RBMConstruction:
    rbm: DeepBoltzmannMachine
    a: float
    eps_prime: float
    lam: float
    R: float
    j: int
    tv: float
    clamped: bool

    @property
    def weight_bound(self) -> float:
        k = self.rbm.n
        return 2.0 * math.log(8 * 2 ** k * self.R ** 2 / self.eps_prime)


def clamp_distribution(pi: np.ndarray):
    """Replace zero entries by 1e-9 * (smallest positive entry) and renormalise."""
    pi = np.asarray(pi, dtype=float)
    if np.all(pi > 0):
        return pi / pi.sum(), False
    floor = 1e-9 * pi[pi > 0].min()
    pi = np.where(pi > 0, pi, floor)
    return pi / pi.sum(), True


def _rbm_params(pi, order, j, a, lam, k):
    X = _bit_matrix(k)
    ws, cs = [], []
    for i in order[j:]:
        w = a * (X[i] - 0.5)
        ws.append(w)
        cs.append(-w @ X[i] + math.log(pi[i] / lam - 1.0))
    W = np.array(ws).T if ws else np.zeros((k, 0))
    return DeepBoltzmannMachine(np.zeros(k), np.array(cs), [], W, np.zeros((len(cs), 0)))


def rbm_from_distribution(pi, eps: float, a: float = None) -> RBMConstruction:
    """RBM whose normalised output is within ``eps`` (TV) of ``pi`` on k bits.

    Assignments are sorted by probability; every assignment whose ratio to
    the minimum exceeds 1 + eps'/2^k gets one hidden unit, sharply tuned to it
    by weights a*(x_i - 1/2).  ``a`` defaults to 2 log(8 2^k R^2 / eps') and is
    doubled until the exact TV meets ``eps``.
    """
    pi = np.asarray(pi, dtype=float).reshape(-1)
    k = int(round(math.log2(pi.size)))
    if 2 ** k != pi.size:
        raise BoltzmannError("distribution length must be a power of two")
    if k > MAX_RBM_BITS:
        raise BoltzmannError(f"k={k} exceeds {MAX_RBM_BITS}")
    if np.any(pi < 0):
        raise BoltzmannError("negative probability")
    pi, clamped = clamp_distribution(pi)
    lam = float(pi.min())
    R = float(pi.max() / lam)
    eps_prime = 2 ** (k - 1) * eps
    order = np.argsort(pi, kind="stable")
    ratios = pi[order] / lam
    above = np.nonzero(ratios >= 1.0 + eps_prime / 2 ** k)[0]
    j = int(above[0]) if above.size else pi.size
    a = 2.0 * math.log(8 * 2 ** k * R ** 2 / eps_prime) if a is None else a
    for _ in range(MAX_A_DOUBLINGS):
        rbm = _rbm_params(pi, order, j, a, lam, k)
        tv = tv_distance(dbm_distribution(rbm).probs, pi)
        if tv <= eps:
            break
        a *= 2
    rbm.info.update(a=a, eps_prime=eps_prime, tv=tv)
    return RBMConstruction(rbm, a, eps_prime, lam, R, j, tv, clamped)


# --- HBM -> DBM ------------------------------------------------------------------

def _edge_distribution(e: Hyperedge) -> np.ndarray:
    z = -e.table
    return np.exp(z - logsumexp(z))


def _assemble_dbm(hbm, rbms) -> DeepBoltzmannMachine:
    vis = {v: i for i, v in enumerate(hbm.visible)}
    deep = {v: i for i, v in enumerate(hbm.hidden)}
    p = sum(r.rbm.middle for r in rbms)
    if (hbm.n + hbm.m) * p > DENSE_WEIGHT_LIMIT:
        raise BoltzmannError(f"DBM with {p} middle and {hbm.m} deep nodes exceeds the dense weight limit")
    a, b, c = np.zeros(hbm.n), np.zeros(p), np.zeros(hbm.m)
    W, U = np.zeros((hbm.n, p)), np.zeros((p, hbm.m))
    col = 0
    for e, r in zip(hbm.hyperedges, rbms):
        for pos, v in enumerate(e.nodes):
            if v in vis:
                a[vis[v]] += r.rbm.a[pos]
                W[vis[v], col:col + r.rbm.middle] = r.rbm.W[pos]
            else:
                c[deep[v]] += r.rbm.a[pos]
                U[col:col + r.rbm.middle, deep[v]] = r.rbm.W[pos]
        b[col:col + r.rbm.middle] = r.rbm.b
        col += r.rbm.middle
    return DeepBoltzmannMachine(a, b, c, W, U)


def hbm_to_dbm(hbm: HyperBoltzmannMachine, delta: float, verify: bool = None) -> DeepBoltzmannMachine:
    """DBM whose visible distribution is within ``delta`` (TV) of the HBM's.

    Visible nodes form the visible layer, HBM hidden nodes the deep layer,
    and each hyperedge contributes the hidden units of its own RBM to the
    middle layer.  Per-edge precision starts at lambda*delta/(2T) and is
    halved while exact verification (when sizes allow it) fails.
    """
    if hbm.T == 0:
        dbm = DeepBoltzmannMachine(np.zeros(hbm.n), [], np.zeros(hbm.m), np.zeros((hbm.n, 0)), np.zeros((0, hbm.m)))
        dbm.info.update(per_edge_eps=None, lam=None, tv=0.0 if hbm.m == 0 else None, verified=hbm.m == 0)
        return dbm
    dists = [_edge_distribution(e) for e in hbm.hyperedges]
    lam = min(float(d.min()) for d in dists)
    if lam <= 0:
        lam = min(float(clamp_distribution(d)[0].min()) for d in dists)
    eps = lam * delta / (2 * hbm.T)
    can_verify = hbm.n <= MAX_DENSE_QUBITS and hbm.m <= min(MAX_DEEP, MAX_BRUTE_HIDDEN)
    verify = can_verify if verify is None else verify and can_verify
    target = hbm_distribution(hbm).probs if verify else None
    for it in range(MAX_EDGE_REFINEMENTS):
        rbms = [rbm_from_distribution(d, eps) for d in dists]
        dbm = _assemble_dbm(hbm, rbms)
        tv = tv_distance(dbm_distribution(dbm).probs, target) if verify else None
        if not verify or tv <= delta:
            break
        eps /= 2
    dbm.info.update(per_edge_eps=eps, lam=lam, tv=tv, verified=bool(verify),
                    max_weight=dbm.max_weight(), max_bias=dbm.max_bias(),
                    edge_a=max(r.a for r in rbms))
    return dbm


# --- Ising ------------------------------------------------------------------------

@dataclass
class IsingModel:
    """H(s) = -sum_y fields_y s_y - sum_(i,j) w_ij s_i s_j with s in {-1/2, +1/2}."""

    fields: np.ndarray
    edges: list
    hidden_spins: list = field(default_factory=list)
    offset: float = 0.0

    def __post_init__(self):
        self.fields = np.asarray(self.fields, dtype=float)
        self.edges = [(int(i), int(j), float(w)) for i, j, w in self.edges]

    @property
    def N(self) -> int:
        return self.fields.size

    def energies(self) -> np.ndarray:
        """Ising energy for every configuration; bit 1 <-> spin +1/2."""
        S = _bit_matrix(self.N) - 0.5
        e = -(S @ self.fields)
        for i, j, w in self.edges:
            e -= w * S[:, i] * S[:, j]
        return e

    def distribution(self) -> Distribution:
        e = self.energies()
        w = np.exp(-(e - e.min()))
        return Distribution(self.N, w / w.sum())


def bm_to_ising(bm: BoltzmannMachine):
    """Substitute y = s + 1/2; returns ``(ising, hidden_spins)``.

    F_BM(y) = H_Ising(s) + offset exactly, so both Gibbs distributions
    coincide under the bijection.
    """
    edges = bm.edges()
    fields = bm.a + 0.5 * bm.W.sum(axis=1)
    offset = -0.5 * bm.a.sum() - 0.25 * sum(w for _, _, w in edges)
    hidden = bm.hidden
    return IsingModel(fields, edges, hidden, offset), hidden


def ising_to_bm(model: IsingModel) -> BoltzmannMachine:
    N = model.N
    W = np.zeros((N, N))
    for i, j, w in model.edges:
        W[i, j] += w
        W[j, i] += w
    a = model.fields - 0.5 * W.sum(axis=1)
    visible = [i for i in range(N) if i not in model.hidden_spins]
    return BoltzmannMachine(a, W, visible)
