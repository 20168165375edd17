"""Shift-space machinery: bi-infinite sequences, sofic graphs, entropy.

Sequences over {0, 1} are stored as (left periodic tail, finite core, right
periodic tail) with an explicit index for the core start, so homoclinic-type
sequences (0-tails both sides) are exact objects.  A sofic shift is presented
by a labeled vertex graph; admissibility is a frontier sweep, entropy is the
log spectral radius of the adjacency matrix obtained by power iteration.

The vertex graph of the shift targeted by the coding is not part of the
machine-readable sources, so it is a runtime input.  The shipped default is
the golden-mean presentation, whose sigma^2 entropy ln((3 + sqrt 5)/2) matches
the claimed value; it is labeled a candidate, not ground truth.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "SymbolSequence",
    "VertexGraph",
    "shift",
    "metric",
    "admissible",
    "graph_entropy",
    "homoclinic_words",
    "admissible_cylinders",
    "full_shift_graph",
    "golden_mean_graph",
    "parity_switch_graph",
    "default_graph",
    "DEFAULT_GRAPH_NOTE",
    "NoConvergence",
]


class NoConvergence(RuntimeError):
    pass


@dataclass(frozen=True)
class SymbolSequence:
    """Bi-infinite 0/1 sequence: periodic tails around a finite core.

    ``core`` occupies indices k0 .. k0 + len(core) - 1; to the left the block
    ``left`` repeats, to the right ``right`` repeats.
    """

    left: tuple
    core: tuple
    right: tuple
    k0: int = 0

    def __post_init__(self):
        if len(self.left) == 0 or len(self.right) == 0:
            raise ValueError("tail blocks must be nonempty")

    @classmethod
    def constant(cls, sym: int) -> "SymbolSequence":
        return cls((sym,), (), (sym,), 0)

    @classmethod
    def from_core(cls, core: Sequence[int], k0: int = 0,
                  left: int = 0, right: int = 0) -> "SymbolSequence":
        return cls((left,), tuple(core), (right,), k0)

    def __getitem__(self, i: int) -> int:
        if i < self.k0:
            return self.left[(i - self.k0) % len(self.left)]
        j = i - self.k0
        if j < len(self.core):
            return self.core[j]
        return self.right[(j - len(self.core)) % len(self.right)]

    def window(self, lo: int, hi: int) -> tuple:
        """Symbols on [lo, hi] inclusive."""
        return tuple(self[i] for i in range(lo, hi + 1))

    def word(self, lo: int, hi: int) -> str:
        return "".join(str(s) for s in self.window(lo, hi))

    def _extent(self) -> int:
        return max(abs(self.k0), abs(self.k0 + len(self.core))) + 1


def shift(seq: SymbolSequence, k: int = 1) -> SymbolSequence:
    """sigma^k: the new sequence reads y_i = x_{i+k}."""
    return SymbolSequence(seq.left, seq.core, seq.right, seq.k0 - k)


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def metric(x: SymbolSequence, y: SymbolSequence) -> float:
    """rho(x, y) = 2^{-k} with k the first radius where central windows differ."""
    period = _lcm(_lcm(len(x.left), len(y.left)), _lcm(len(x.right), len(y.right)))
    bound = max(x._extent(), y._extent()) + 2 * period + 2
    for m in range(bound + 1):
        if x[m] != y[m] or x[-m] != y[-m]:
            return 2.0 ** (-m)
    return 0.0


# ---------------------------------------------------------------------------
# sofic presentations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VertexGraph:
    """Labeled directed graph presenting a sofic shift."""

    vertices: tuple
    edges: tuple  # (from, to, label)

    def __post_init__(self):
        outs = {v: 0 for v in self.vertices}
        for u, v, lab in self.edges:
            if u not in outs or v not in outs:
                raise ValueError(f"edge {(u, v, lab)} uses an unknown vertex")
            if lab not in (0, 1):
                raise ValueError("labels must be 0 or 1")
            outs[u] += 1
        if any(c == 0 for c in outs.values()):
            raise ValueError("every vertex needs an outgoing edge")

    def adjacency(self) -> np.ndarray:
        idx = {v: i for i, v in enumerate(self.vertices)}
        A = np.zeros((len(self.vertices), len(self.vertices)), dtype=float)
        for u, v, _ in self.edges:
            A[idx[u], idx[v]] += 1.0
        return A

    def step(self, frontier: set, label: int) -> set:
        return {v for (u, v, lab) in self.edges if lab == label and u in frontier}

    def to_json_dict(self) -> dict:
        return {"vertices": list(self.vertices),
                "edges": [{"from": u, "to": v, "label": lab}
                          for (u, v, lab) in self.edges]}

    @classmethod
    def from_json_dict(cls, d: dict) -> "VertexGraph":
        return cls(tuple(d["vertices"]),
                   tuple((e["from"], e["to"], int(e["label"])) for e in d["edges"]))

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)

    @classmethod
    def load(cls, path: str) -> "VertexGraph":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def full_shift_graph(n_symbols: int = 2) -> VertexGraph:
    return VertexGraph(("*",), tuple(("*", "*", s) for s in range(n_symbols)))


def golden_mean_graph() -> VertexGraph:
    """Forbidden word 11: A --0--> A, A --1--> B, B --0--> A."""
    return VertexGraph(("A", "B"), (("A", "A", 0), ("A", "B", 1), ("B", "A", 0)))


def parity_switch_graph() -> VertexGraph:
    """Switches gated by window parity: 0->1 only at even windows, 1->0 only at odd.

    This is the constraint the transit dynamics imposes: the push from the
    +1 saddle toward -1 exists only near even multiples of pi (and the mirror
    push at odd ones), which is also what the (-1)^k flip in the corridor
    profile encodes.  Vertices are (parity of the next window, current
    symbol); runs of either symbol therefore have odd length.  The sigma^2
    entropy is ln((3+sqrt5)/2).
    """
    E0, O0, E1, O1 = "e0", "o0", "e1", "o1"
    return VertexGraph(
        (E0, O0, E1, O1),
        (
            (E0, O0, 0), (E0, O1, 1),   # even window: may start a 1-run
            (O0, E0, 0),                # odd window inside a 0-run
            (O1, E0, 0), (O1, E1, 1),   # odd window: may end a 1-run
            (E1, O1, 1),                # even window inside a 1-run
        ),
    )


DEFAULT_GRAPH_NOTE = ("presentation derived from the window-parity constraint of "
                      "the transit dynamics (switch 0->1 only at even windows, "
                      "1->0 only at odd); its sigma^2 entropy equals the claimed "
                      "ln((3+sqrt5)/2).  The published figure itself is not "
                      "machine-readable, so this remains a candidate: "
                      "dynamics-derived and entropy-matched, not figure-verified")


def default_graph() -> VertexGraph:
    return parity_switch_graph()


def admissible(graph: VertexGraph, word: Iterable[int]) -> bool:
    """True iff the word labels some path in the graph."""
    frontier = set(graph.vertices)
    for sym in word:
        frontier = graph.step(frontier, int(sym))
        if not frontier:
            return False
    return True


def graph_entropy(graph: VertexGraph, power: int = 1, tol: float = 1e-12,
                  max_iter: int = 200000) -> float:
    """ln of the spectral radius of A^power, by power iteration.

    Rayleigh-quotient iteration on the nonnegative matrix; converges to
    relative tolerance ``tol`` or raises `NoConvergence`.
    """
    if power < 1:
        raise ValueError("power must be >= 1")
    A = np.linalg.matrix_power(graph.adjacency(), power)
    n = A.shape[0]
    x = np.ones(n) / math.sqrt(n)
    lam = 0.0
    for _ in range(max_iter):
        y = A @ x
        ny = float(np.linalg.norm(y))
        if ny == 0.0:
            raise NoConvergence("adjacency matrix is nilpotent on the iterate")
        lam_new = float(x @ y)
        x = y / ny
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            resid = float(np.linalg.norm(A @ x - lam_new * x))
            if resid <= 100 * tol * max(1.0, abs(lam_new)):
                return math.log(lam_new)
        lam = lam_new
    raise NoConvergence("power iteration did not settle")


# ---------------------------------------------------------------------------
# homoclinic enumeration
# ---------------------------------------------------------------------------

def _zero_cycle_vertices(graph: VertexGraph) -> set:
    """Vertices lying on a cycle of 0-labeled edges."""
    zero_edges = [(u, v) for (u, v, lab) in graph.edges if lab == 0]
    verts = list(graph.vertices)
    idx = {v: i for i, v in enumerate(verts)}
    n = len(verts)
    reach = np.zeros((n, n), dtype=np.int64)
    for u, v in zero_edges:
        reach[idx[u], idx[v]] = 1
    # transitive closure by repeated squaring
    for _ in range(max(1, n.bit_length())):
        reach = np.minimum(reach + reach @ reach, 1)
    return {v for v in verts if reach[idx[v], idx[v]]}


def _zero_reach(graph: VertexGraph, sources: set, forward: bool) -> set:
    out = set(sources)
    frontier = set(sources)
    while frontier:
        if forward:
            nxt = {v for (u, v, lab) in graph.edges if lab == 0 and u in frontier}
        else:
            nxt = {u for (u, v, lab) in graph.edges if lab == 0 and v in frontier}
        frontier = nxt - out
        out |= nxt
    return out


def _zero_tail_sets(graph: VertexGraph) -> tuple:
    """(vertices with an infinite backward 0-path, ... forward 0-path)."""
    cyc = _zero_cycle_vertices(graph)
    if not cyc:
        return set(), set()
    z_in = _zero_reach(graph, cyc, forward=True)    # reachable FROM a 0-cycle
    z_out = _zero_reach(graph, cyc, forward=False)  # can REACH a 0-cycle
    return z_in, z_out


def _zero_tail_admissible(graph: VertexGraph, core: Sequence[int],
                          z_in: set, z_out: set) -> bool:
    frontier = set(z_in)
    for sym in core:
        frontier = graph.step(frontier, int(sym))
        if not frontier:
            return False
    return bool(frontier & z_out)


def homoclinic_words(graph: VertexGraph, N: int) -> list:
    """Admissible sequences with 0-tails and free window [-N, N].

    N = 0 yields just the all-zero sequence.  For N >= 1 every admissible
    assignment of the 2N+1 central symbols gives a distinct sequence (shorter
    cores are those whose window carries leading/trailing zeros).
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    z_in, z_out = _zero_tail_sets(graph)
    if not z_in:
        return []
    if N == 0:
        return [SymbolSequence.constant(0)]
    out = []
    for core in product((0, 1), repeat=2 * N + 1):
        if _zero_tail_admissible(graph, core, z_in, z_out):
            out.append(SymbolSequence.from_core(core, k0=-N))
    return out


def admissible_cylinders(graph: VertexGraph, radius: int) -> list:
    """Central cylinder words [a_{-r} ... a_r] that occur in the shift.

    A word occurs iff it labels a path that extends to a bi-infinite one.
    """
    # vertices with arbitrary-label infinite backward / forward extensions:
    # every vertex has out-degree >= 1, so forward extension is automatic;
    # backward extension requires positive in-degree closure
    verts = list(graph.vertices)
    has_in = {v for (_, v, _) in graph.edges}
    back_ok = set(verts)
    while True:
        nxt = {v for v in back_ok
               if any(u in back_ok for (u, vv, _) in graph.edges if vv == v)}
        if nxt == back_ok:
            break
        back_ok = nxt
    out = []
    for word in product((0, 1), repeat=2 * radius + 1):
        frontier = set(back_ok)
        for sym in word:
            frontier = graph.step(frontier, sym)
            if not frontier:
                break
        if frontier:
            out.append(word)
    return out
