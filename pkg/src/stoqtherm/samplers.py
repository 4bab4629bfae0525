"""Markov-chain samplers for the classical side of the correspondence.

* ``gibbs_chain``: systematic-scan single-site Gibbs sampling for any local
  classical energy (an HBM goes through ``hbm.to_classical`` first).
* ``dbm_block_gibbs``: layer-wise block Gibbs for a three-layer DBM.
* ``sff_walk``: the lazy single-bit-flip walk whose stationary law is the
  Gibbs distribution of H_c, i.e. |<x|psi>|^2 for the compiled SFF ground state.

Random numbers come from numpy's PCG64.  The master seed feeds a
``SeedSequence`` and chain ``c`` uses the ``c``-th child of
``SeedSequence(seed).spawn(chains)``; identical configs therefore produce
identical sample streams, and distinct chains get independent streams.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .hamcore import ClassicalHamiltonian, Distribution, LocalHamiltonian, assemble_dense, tv_distance
from .boltzmann import DeepBoltzmannMachine

_CHUNK = 4096


@dataclass(frozen=True)
class ChainConfig:
    seed: int = 0
    burn_in: int = 1000
    steps: int = 100_000
    chains: int = 1
    thin: int = 1
    random_scan: bool = False

    def __post_init__(self):
        if self.burn_in < 0 or self.steps < 1 or self.chains < 1 or self.thin < 1:
            raise ValueError("burn_in >= 0 and steps, chains, thin >= 1 are required")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def generators(self) -> list:
        return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(self.seed).spawn(self.chains)]


@dataclass
class SampleReport:
    samples: np.ndarray
    n: int
    empirical_tv: Optional[float] = None
    stats: dict = field(default_factory=dict)

    def empirical(self) -> np.ndarray:
        return empirical_distribution(self.samples, self.n)

    def bitstrings(self) -> list:
        return [format(int(s), f"0{self.n}b") if self.n else "" for s in self.samples]

    def summary(self, cfg: ChainConfig, **extra) -> dict:
        out = {"empirical_tv": self.empirical_tv, "chains": cfg.chains, "steps": cfg.steps,
               "burn_in": cfg.burn_in, "thin": cfg.thin, "seed": cfg.seed, "n_samples": int(self.samples.size)}
        out.update(self.stats)
        out.update(extra)
        return out


def empirical_distribution(samples, n: int) -> np.ndarray:
    samples = np.asarray(samples, dtype=np.int64)
    return np.bincount(samples, minlength=2 ** n) / max(samples.size, 1)


def tv_diagnostic(samples, exact) -> float:
    probs = exact.probs if isinstance(exact, Distribution) else np.asarray(exact)
    n = int(round(math.log2(probs.size)))
    return tv_distance(empirical_distribution(samples, n), probs)


def _finish(samples, n, exact, stats) -> SampleReport:
    samples = np.asarray(samples, dtype=np.int64)
    tv = tv_diagnostic(samples, exact) if exact is not None else None
    return SampleReport(samples, n, tv, stats)


# --- generic single-site Gibbs -------------------------------------------------

class _LocalEnergy:
    """Per-bit view of a classical Hamiltonian: the terms touching each bit."""

    def __init__(self, hc: ClassicalHamiltonian):
        self.n = hc.n
        self.site_terms = [[] for _ in range(hc.n)]
        for t in hc.terms:
            entry = (list(t.support), t.table.tolist())
            for q in t.support:
                self.site_terms[q].append(entry)

    def pair(self, y, j):
        """Local energies with bit j set to 0 and to 1."""
        e0 = e1 = 0.0
        for support, table in self.site_terms[j]:
            idx = 0
            bit = 0
            for q in support:
                idx <<= 1
                bit <<= 1
                if q == j:
                    bit |= 1
                else:
                    idx |= y[q]
            e0 += table[idx]
            e1 += table[idx | bit]
        return e0, e1


def _p_one(d: float) -> float:
    """P(bit = 1) when setting it to 1 costs energy d."""
    if d > 700:
        return 0.0
    if d < -700:
        return 1.0
    return 1.0 / (1.0 + math.exp(d))


def site_conditional(hc: ClassicalHamiltonian, y, j: int) -> float:
    """P(y_j = 1 | all other bits) under exp(-H)."""
    e0, e1 = _LocalEnergy(hc).pair(list(map(int, y)), j)
    return _p_one(e1 - e0)


def _visible_index(y, visible) -> int:
    idx = 0
    for q in visible:
        idx = (idx << 1) | y[q]
    return idx


def gibbs_chain(hc: ClassicalHamiltonian, cfg: ChainConfig, visible=None, exact=None) -> SampleReport:
    """Single-site Gibbs sampling; one step is one sweep over all bits.

    Samples are the ``visible`` bits (all bits by default) recorded after
    every ``thin``-th sweep following ``burn_in`` sweeps.
    """
    visible = list(range(hc.n)) if visible is None else list(visible)
    local = _LocalEnergy(hc)
    N = hc.n
    out, flips = [], 0
    for rng in cfg.generators():
        y = rng.integers(0, 2, size=N).tolist()
        total = cfg.burn_in + cfg.steps
        done = 0
        while done < total:
            m = min(_CHUNK, total - done)
            u = rng.random((m, N)).tolist()
            order = rng.integers(0, N, size=(m, N)).tolist() if cfg.random_scan and N else None
            for s in range(m):
                sites = order[s] if order is not None else range(N)
                us = u[s]
                for r, j in enumerate(sites):
                    e0, e1 = local.pair(y, j)
                    new = 1 if us[r] < _p_one(e1 - e0) else 0
                    flips += new != y[j]
                    y[j] = new
                step = done + s
                if step >= cfg.burn_in and (step - cfg.burn_in) % cfg.thin == 0:
                    out.append(_visible_index(y, visible))
            done += m
    updates = cfg.chains * (cfg.burn_in + cfg.steps) * N
    return _finish(out, len(visible), exact, {"flip_rate": flips / max(updates, 1), "method": "gibbs"})


def gibbs_site_kernel(hc: ClassicalHamiltonian, j: int) -> np.ndarray:
    """Transition matrix of a single update of bit j (rows: from, cols: to)."""
    N = hc.n
    K = np.zeros((2 ** N, 2 ** N))
    local = _LocalEnergy(hc)
    mask = 1 << (N - 1 - j)
    for x in range(2 ** N):
        y = [(x >> (N - 1 - q)) & 1 for q in range(N)]
        e0, e1 = local.pair(y, j)
        p1 = _p_one(e1 - e0)
        K[x, x | mask] += p1
        K[x, x & ~mask] += 1.0 - p1
    return K


def gibbs_sweep_kernel(hc: ClassicalHamiltonian) -> np.ndarray:
    K = np.eye(2 ** hc.n)
    for j in range(hc.n):
        K = K @ gibbs_site_kernel(hc, j)
    return K


# --- DBM block Gibbs ------------------------------------------------------------

def sigmoid(t):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(t)))


def dbm_conditionals(dbm: DeepBoltzmannMachine, x, h, g):
    """P(node = 1 | neighbouring layers) for the visible, middle and deep layers."""
    x, h, g = (np.asarray(v, dtype=float) for v in (x, h, g))
    px = sigmoid(dbm.a + dbm.W @ h)
    ph = sigmoid(x @ dbm.W + dbm.b + dbm.U @ g)
    pg = sigmoid(h @ dbm.U + dbm.c)
    return px, ph, pg


def dbm_block_gibbs(dbm: DeepBoltzmannMachine, cfg: ChainConfig, exact=None) -> SampleReport:
    """Alternate h | (x, g) and then (x, g) | h; report the visible layer."""
    n, p, q = dbm.n, dbm.middle, dbm.deep
    weights = 1 << np.arange(n - 1, -1, -1)
    out = []
    WT, U = dbm.W.T.copy(), dbm.U
    for rng in cfg.generators():
        x = rng.integers(0, 2, size=n).astype(float)
        g = rng.integers(0, 2, size=q).astype(float)
        total = cfg.burn_in + cfg.steps
        done = 0
        while done < total:
            m = min(_CHUNK, total - done)
            u = rng.random((m, p + n + q))
            for s in range(m):
                h = (u[s, :p] < sigmoid(x @ dbm.W + dbm.b + U @ g)).astype(float)
                x = (u[s, p:p + n] < sigmoid(dbm.a + h @ WT)).astype(float)
                g = (u[s, p + n:] < sigmoid(h @ U + dbm.c)).astype(float)
                step = done + s
                if step >= cfg.burn_in and (step - cfg.burn_in) % cfg.thin == 0:
                    out.append(int(x @ weights))
            done += m
    return _finish(out, n, exact, {"method": "block"})


# --- SFF random walk ------------------------------------------------------------

def flip_bounds(hc: ClassicalHamiltonian) -> np.ndarray:
    """Per-bit upper bound on exp((H(x) - H(x^j)) / 2) from term-table extremes."""
    bounds = np.zeros(hc.n)
    for j in range(hc.n):
        drop = 0.0
        for t in hc.terms_touching(j):
            k = len(t.support)
            flip = 1 << (k - 1 - t.support.index(j))
            idx = np.arange(2 ** k)
            drop += float(np.max(t.table - t.table[idx ^ flip]))
        bounds[j] = math.exp(0.5 * drop)
    return bounds


def safe_beta(hc: ClassicalHamiltonian) -> float:
    """Largest beta the table bounds certify: 1 / sum_j bound_j."""
    b = flip_bounds(hc)
    return 1.0 / float(b.sum()) if b.size else 1.0


def default_beta(hc: ClassicalHamiltonian) -> float:
    b = flip_bounds(hc)
    return 0.9 / (hc.n * float(b.max())) if b.size else 0.9


def _check_beta(hc, beta):
    if beta is None:
        return default_beta(hc)
    bound = safe_beta(hc)
    if not 0 < beta <= bound:
        raise ValueError(f"beta={beta} is not certified safe; the largest safe value is {bound:.6g}")
    return float(beta)


def flip_probabilities(hc: ClassicalHamiltonian, x, beta: float) -> list:
    """beta * exp(-(H(x^j) - H(x)) / 2) for every bit j, from local terms only."""
    local = _LocalEnergy(hc)
    y = [int(b) for b in x]
    out = []
    for j in range(hc.n):
        e0, e1 = local.pair(y, j)
        d = (e1 - e0) if y[j] == 0 else (e0 - e1)  # H(x^j) - H(x)
        out.append(beta * math.exp(-0.5 * d))
    return out


def sff_walk(hc: ClassicalHamiltonian, beta: Optional[float], cfg: ChainConfig, exact=None) -> SampleReport:
    """Lazy single-bit-flip walk; one step is one proposal (flip or stay)."""
    beta = _check_beta(hc, beta)
    local = _LocalEnergy(hc)
    N = hc.n
    out, moves = [], 0
    for rng in cfg.generators():
        y = rng.integers(0, 2, size=N).tolist()
        total = cfg.burn_in + cfg.steps
        done = 0
        while done < total:
            m = min(_CHUNK, total - done)
            u = rng.random(m).tolist()
            for s in range(m):
                acc = 0.0
                for j in range(N):
                    e0, e1 = local.pair(y, j)
                    d = (e1 - e0) if y[j] == 0 else (e0 - e1)
                    acc += beta * math.exp(-0.5 * d)
                    if u[s] < acc:
                        y[j] ^= 1
                        moves += 1
                        break
                step = done + s
                if step >= cfg.burn_in and (step - cfg.burn_in) % cfg.thin == 0:
                    out.append(_visible_index(y, range(N)))
            done += m
    steps = cfg.chains * (cfg.burn_in + cfg.steps)
    return _finish(out, N, exact, {"method": "walk", "beta": beta, "laziness": 1.0 - moves / steps})


def sff_walk_kernel(hc: ClassicalHamiltonian, beta: float) -> np.ndarray:
    N = hc.n
    K = np.zeros((2 ** N, 2 ** N))
    for x in range(2 ** N):
        bits = [(x >> (N - 1 - q)) & 1 for q in range(N)]
        probs = flip_probabilities(hc, bits, beta)
        for j, pj in enumerate(probs):
            K[x, x ^ (1 << (N - 1 - j))] = pj
        K[x, x] = 1.0 - sum(probs)
    return K


def oracle_walk_kernel(h: LocalHamiltonian, psi, beta: float, ground_energy: float = 0.0) -> np.ndarray:
    """P(x -> y) = psi(y)/psi(x) <y|G|x> with G = I - beta (H - E0), using a known ground state."""
    psi = np.asarray(psi, dtype=float)
    if np.any(psi <= 0):
        raise ValueError("the oracle walk needs a strictly positive ground state")
    G = np.eye(psi.size) - beta * (assemble_dense(h) - ground_energy * np.eye(psi.size))
    if np.any(G < -1e-12):
        raise ValueError("beta too large: G has negative entries")
    return (G.T * psi[None, :]) / psi[:, None]


def kernel_walk(K: np.ndarray, cfg: ChainConfig, exact=None) -> SampleReport:
    """Sample a finite chain given its explicit transition matrix."""
    n = int(round(math.log2(K.shape[0])))
    cdf = np.cumsum(K, axis=1)
    out = []
    for rng in cfg.generators():
        x = int(rng.integers(0, K.shape[0]))
        u = rng.random(cfg.burn_in + cfg.steps)
        for step, us in enumerate(u):
            x = min(int(np.searchsorted(cdf[x], us, side="right")), K.shape[0] - 1)
            if step >= cfg.burn_in and (step - cfg.burn_in) % cfg.thin == 0:
                out.append(x)
    return _finish(out, n, exact, {"method": "oracle-walk"})


def spectral_gap(K: np.ndarray) -> float:
    """1 minus the second largest eigenvalue of a reversible kernel."""
    w = np.sort(np.real(np.linalg.eigvals(K)))[::-1]
    return float(1.0 - w[1])


def config_dict(cfg: ChainConfig) -> dict:
    return asdict(cfg)
