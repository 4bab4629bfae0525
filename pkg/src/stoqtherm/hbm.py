"""Hyper Boltzmann Machines (HBMs).

An HBM is a hypergraph over binary nodes, some visible and some hidden, with
an energy table on every hyperedge.  Its output is

    f(x) = sum_h exp(-sum_e F_e(x, h)).

Node ids are plain integers.  ``visible[i]`` is the node id carrying visible
bit ``i`` (big-endian order, as everywhere else in the package), and
``hidden[j]`` likewise for hidden bit ``j``.  Hyperedge tables are indexed
lexicographically over the edge's node tuple, first node most significant.

HBMs built from P-sequences have ~T hidden nodes, far too many to sum over.
Their hyperedges are *transfer* edges: ``n_out`` leading nodes are the
freshly created visible nodes and the remaining nodes are the ones demoted
to hidden.  For such machines the output is computed by contracting the
chain of transfer edges against a 2^n vector, which costs O(2^n) per edge.
Squaring an HBM multiplies ``copies``; each copy is one contiguous block of
hyperedges.  Generic machines fall back to brute force over 2^m hidden
configurations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .hamcore import (
    MAX_DENSE_QUBITS,
    ClassicalHamiltonian,
    ClassicalTerm,
    Distribution,
    as_bits,
    tv_distance,
)

MAX_BRUTE_HIDDEN = 22


class HBMError(ValueError):
    pass


@dataclass(frozen=True)
class Hyperedge:
    nodes: tuple
    table: np.ndarray
    n_out: int = 0

    def __post_init__(self):
        nodes = tuple(int(v) for v in self.nodes)
        if len(set(nodes)) != len(nodes):
            raise HBMError(f"hyperedge has repeated nodes {nodes}")
        t = np.array(self.table, dtype=float).reshape(-1)
        if t.size != 2 ** len(nodes):
            raise HBMError(f"hyperedge on {len(nodes)} nodes needs {2 ** len(nodes)} table entries")
        if not np.all(np.isfinite(t)):
            raise HBMError("hyperedge table has non-finite entries")
        t.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "table", t)


@dataclass(frozen=True)
class HyperBoltzmannMachine:
    visible: tuple
    hidden: tuple = ()
    hyperedges: tuple = ()
    copies: int = 1

    def __post_init__(self):
        object.__setattr__(self, "visible", tuple(int(v) for v in self.visible))
        object.__setattr__(self, "hidden", tuple(int(v) for v in self.hidden))
        object.__setattr__(self, "hyperedges", tuple(self.hyperedges))
        ids = self.visible + self.hidden
        if len(set(ids)) != len(ids):
            raise HBMError("node ids must be unique")
        known = set(ids)
        for e in self.hyperedges:
            if not set(e.nodes) <= known:
                raise HBMError(f"hyperedge references unknown nodes {e.nodes}")

    @property
    def n(self) -> int:
        return len(self.visible)

    @property
    def m(self) -> int:
        return len(self.hidden)

    @property
    def T(self) -> int:
        return len(self.hyperedges)

    @property
    def locality(self) -> int:
        return max((len(e.nodes) for e in self.hyperedges), default=0)

    def node_degrees(self) -> dict:
        deg = {v: 0 for v in self.visible + self.hidden}
        for e in self.hyperedges:
            for v in e.nodes:
                deg[v] += 1
        return deg

    @property
    def k_prime(self) -> int:
        return max(self.node_degrees().values(), default=0)

    def max_abs_energy(self) -> float:
        return max((float(np.max(np.abs(e.table))) for e in self.hyperedges), default=0.0)


def empty_hbm(n: int) -> HyperBoltzmannMachine:
    return HyperBoltzmannMachine(tuple(range(n)))


def canonical(hbm: HyperBoltzmannMachine) -> HyperBoltzmannMachine:
    """Relabel nodes so visible bit i is node i and hidden bit j is node n+j."""
    relabel = {v: i for i, v in enumerate(hbm.visible + hbm.hidden)}
    edges = tuple(Hyperedge(tuple(relabel[v] for v in e.nodes), e.table, e.n_out) for e in hbm.hyperedges)
    return HyperBoltzmannMachine(tuple(range(hbm.n)), tuple(range(hbm.n, hbm.n + hbm.m)), edges, hbm.copies)


# --- construction -------------------------------------------------------------

def _transfer_edge(matrix, out_nodes, in_nodes) -> Hyperedge:
    matrix = np.asarray(matrix, dtype=float)
    if np.any(matrix <= 0):
        raise HBMError("P-factor must be entrywise strictly positive")
    return Hyperedge(tuple(out_nodes) + tuple(in_nodes), -np.log(matrix), n_out=len(out_nodes))


def apply_p(hbm: HyperBoltzmannMachine, support, matrix) -> HyperBoltzmannMachine:
    """Represent P|psi> given an HBM for |psi>.

    The visible nodes on ``support`` become hidden (keeping their edges),
    fresh visible nodes take their place, and a hyperedge on
    (fresh nodes, demoted nodes) with energy -log <x'|P|h'> is added.
    """
    support = tuple(int(q) for q in support)
    if any(q < 0 or q >= hbm.n for q in support):
        raise HBMError("support outside the visible nodes")
    next_id = max(hbm.visible + hbm.hidden, default=-1) + 1
    visible = list(hbm.visible)
    demoted = [visible[q] for q in support]
    fresh = list(range(next_id, next_id + len(support)))
    for q, v in zip(support, fresh):
        visible[q] = v
    edge = _transfer_edge(matrix, fresh, demoted)
    return HyperBoltzmannMachine(tuple(visible), hbm.hidden + tuple(demoted), hbm.hyperedges + (edge,), hbm.copies)


def build_from_sequence(p) -> HyperBoltzmannMachine:
    """Fold ``apply_p`` over the factors of a P-sequence, starting from the empty HBM."""
    visible = list(range(p.n))
    hidden, edges = [], []
    next_id = p.n
    for f in p.factors:
        demoted = [visible[q] for q in f.support]
        fresh = list(range(next_id, next_id + len(f.support)))
        next_id += len(f.support)
        for q, v in zip(f.support, fresh):
            visible[q] = v
        hidden.extend(demoted)
        edges.append(_transfer_edge(f.matrix, fresh, demoted))
    return canonical(HyperBoltzmannMachine(tuple(visible), tuple(hidden), tuple(edges)))


def square(hbm: HyperBoltzmannMachine) -> HyperBoltzmannMachine:
    """HBM with output f(x)^2: hidden nodes and their edges duplicated, visible shared."""
    next_id = max(hbm.visible + hbm.hidden, default=-1) + 1
    dup = {h: next_id + j for j, h in enumerate(hbm.hidden)}
    copy_edges = tuple(Hyperedge(tuple(dup.get(v, v) for v in e.nodes), e.table, e.n_out) for e in hbm.hyperedges)
    return HyperBoltzmannMachine(hbm.visible, hbm.hidden + tuple(dup[h] for h in hbm.hidden),
                                 hbm.hyperedges + copy_edges, hbm.copies * 2)


# --- evaluation ---------------------------------------------------------------

def _chain_log_vector(hbm: HyperBoltzmannMachine, edges) -> Optional[tuple]:
    """Contract one block of transfer edges; ``None`` if the block is not a chain.

    Returns ``(vec, log_scale)`` with f_block(x) = exp(log_scale) * vec[x].
    """
    n = hbm.n
    pos_node = list(hbm.visible)
    # walk backwards from the final visible nodes to find each position's source node
    for e in reversed(edges):
        k = e.n_out
        if k == 0 or 2 * k != len(e.nodes):
            return None
        outs, ins = e.nodes[:k], e.nodes[k:]
        for o, i in zip(outs, ins):
            if o not in pos_node:
                return None
            pos_node[pos_node.index(o)] = i
    hidden = set(hbm.hidden)
    if any(v not in hidden and v not in hbm.visible for v in pos_node):
        return None
    # sources that are hidden must be free (touched by no other edge)
    vec = np.ones(2 ** n)
    log_scale = 0.0
    for e in edges:
        k = e.n_out
        outs, ins = e.nodes[:k], e.nodes[k:]
        try:
            positions = [pos_node.index(v) for v in ins]
        except ValueError:
            return None
        mat = np.exp(-(e.table.reshape(2 ** k, 2 ** k) - e.table.min()))
        log_scale -= float(e.table.min())
        order = np.argsort(positions)
        sup = [positions[i] for i in order]
        if list(order) != list(range(k)):
            # reorder both input and output axes to sorted position order
            mat = mat.reshape([2] * (2 * k)).transpose(list(order) + [k + i for i in order]).reshape(2 ** k, 2 ** k)
        t = vec.reshape([2] * n)
        t = np.moveaxis(t, sup, range(k))
        shape = t.shape
        t = (mat @ t.reshape(2 ** k, -1)).reshape(shape)
        vec = np.moveaxis(t, range(k), sup).reshape(-1)
        for o, p in zip(outs, positions):
            pos_node[p] = o
        s = float(vec.max())
        if s <= 0:
            return None
        vec /= s
        log_scale += math.log(s)
    if tuple(pos_node) != hbm.visible:
        return None
    return vec, log_scale


def _chain_log_output(hbm: HyperBoltzmannMachine) -> Optional[np.ndarray]:
    if hbm.copies < 1 or hbm.T % hbm.copies:
        return None
    if hbm.n > MAX_DENSE_QUBITS:
        raise HBMError(f"n={hbm.n} exceeds {MAX_DENSE_QUBITS} visible nodes")
    size = hbm.T // hbm.copies
    blocks = [hbm.hyperedges[i * size:(i + 1) * size] for i in range(hbm.copies)]
    visible = set(hbm.visible)
    touched, owner = set(), {}
    for b, block in enumerate(blocks):
        outs, ins = set(), set()
        for e in block:
            k = e.n_out
            for v in e.nodes[:k]:
                if v in outs:
                    return None
                outs.add(v)
            for v in e.nodes[k:]:
                if v in ins:
                    return None
                ins.add(v)
            touched.update(e.nodes)
        for v in outs | ins:
            if v not in visible and owner.setdefault(v, b) != b:
                return None
    out = np.zeros(2 ** hbm.n)
    for block in blocks:
        if not block:
            continue
        res = _chain_log_vector(hbm, block)
        if res is None:
            return None
        vec, scale = res
        with np.errstate(divide="ignore"):
            out += np.log(vec) + scale
    # free hidden nodes (in no hyperedge) each contribute a factor 2
    free = sum(1 for h in hbm.hidden if h not in touched)
    return out + free * math.log(2.0)


def _is_chain(hbm) -> bool:
    return hbm.T > 0 and all(e.n_out > 0 for e in hbm.hyperedges)


def _brute_log_output(hbm: HyperBoltzmannMachine, xs) -> np.ndarray:
    if hbm.m > MAX_BRUTE_HIDDEN:
        raise HBMError(f"m={hbm.m} hidden nodes exceeds the brute-force limit of {MAX_BRUTE_HIDDEN}")
    n, m = hbm.n, hbm.m
    vis_pos = {v: i for i, v in enumerate(hbm.visible)}
    hid_pos = {v: j for j, v in enumerate(hbm.hidden)}
    hs = np.arange(2 ** m, dtype=np.int64)
    out = np.empty(len(xs))
    for r, x in enumerate(xs):
        bits = as_bits(int(x), n)
        energy = np.zeros(2 ** m)
        for e in hbm.hyperedges:
            idx = np.zeros(2 ** m, dtype=np.int64)
            for v in e.nodes:
                if v in vis_pos:
                    idx = (idx << 1) | int(bits[vis_pos[v]])
                else:
                    idx = (idx << 1) | ((hs >> (m - 1 - hid_pos[v])) & 1)
            energy += e.table[idx]
        emin = float(energy.min())
        out[r] = -emin + math.log(float(np.sum(np.exp(-(energy - emin)))))
    return out


def log_output(hbm: HyperBoltzmannMachine, brute: bool = False) -> np.ndarray:
    """log f(x) for every visible assignment x.

    Chain-structured machines are contracted along their transfer edges
    unless ``brute`` is set, in which case the 2^m hidden sum is used.
    """
    if hbm.n > MAX_DENSE_QUBITS:
        raise HBMError(f"n={hbm.n} exceeds {MAX_DENSE_QUBITS} visible nodes")
    if not brute and _is_chain(hbm):
        res = _chain_log_output(hbm)
        if res is not None:
            return res
    return _brute_log_output(hbm, range(2 ** hbm.n))


def evaluate(hbm: HyperBoltzmannMachine, x, brute: bool = False) -> float:
    """The output f(x) for one visible assignment (bit sequence or basis index)."""
    idx = x if isinstance(x, (int, np.integer)) else int("".join(str(int(b)) for b in x) or "0", 2)
    if brute or not _is_chain(hbm):
        return float(np.exp(_brute_log_output(hbm, [idx])[0]))
    return float(np.exp(log_output(hbm)[idx]))


def _normalized(logf: np.ndarray, power: float = 1.0) -> np.ndarray:
    z = power * logf
    z = z - z.max()
    w = np.exp(z)
    return w / w.sum()


def distribution(hbm: HyperBoltzmannMachine, brute: bool = False) -> Distribution:
    logf = log_output(hbm, brute=brute)
    return Distribution(hbm.n, _normalized(logf))


def wavefunction(hbm: HyperBoltzmannMachine, brute: bool = False) -> np.ndarray:
    """f / ||f||_2, the state the HBM represents in wavefunction."""
    return np.sqrt(_normalized(log_output(hbm, brute=brute), power=2.0))


def wavefunction_distance(hbm: HyperBoltzmannMachine, psi, brute: bool = False) -> float:
    psi = np.asarray(psi, dtype=float)
    if np.any(psi < -1e-12):
        raise HBMError("wavefunction distance is only defined for nonnegative amplitudes")
    return float(np.linalg.norm(wavefunction(hbm, brute) - psi))


def distribution_distance(hbm: HyperBoltzmannMachine, psi, brute: bool = False) -> float:
    psi = np.asarray(psi, dtype=float)
    return tv_distance(distribution(hbm, brute).probs, psi ** 2)


# --- classical equivalence ----------------------------------------------------

def permute_table(table, order, new_order) -> np.ndarray:
    """Re-index a table over ``order`` so it is indexed over ``new_order``."""
    k = len(order)
    if k == 0:
        return np.asarray(table, dtype=float).reshape(-1)
    t = np.asarray(table, dtype=float).reshape([2] * k)
    return t.transpose([list(order).index(v) for v in new_order]).reshape(-1)


def to_classical(hbm: HyperBoltzmannMachine):
    """Classical Hamiltonian on n+m bits with one term per hyperedge.

    Visible bit i maps to classical bit i and hidden bit j to bit n+j.
    Returns ``(hc, visible_bits)``.
    """
    bit = {v: i for i, v in enumerate(hbm.visible + hbm.hidden)}
    terms = []
    for e in hbm.hyperedges:
        bits = [bit[v] for v in e.nodes]
        support = sorted(bits)
        terms.append(ClassicalTerm(tuple(support), permute_table(e.table, bits, support)))
    return ClassicalHamiltonian(hbm.n + hbm.m, tuple(terms)), list(range(hbm.n))


def from_classical(hc: ClassicalHamiltonian) -> HyperBoltzmannMachine:
    edges = tuple(Hyperedge(t.support, t.table) for t in hc.terms)
    return HyperBoltzmannMachine(tuple(range(hc.n)), (), edges)


def with_edges(hbm: HyperBoltzmannMachine, edges) -> HyperBoltzmannMachine:
    return replace(hbm, hyperedges=tuple(edges))
