"""Distributional-chaos statistics on orbit pairs.

The lower/upper distribution functions F and F* are limits over n of the
running proximity fraction (1/n) #{i < n : rho(f^i x, f^i y) < t}.  Finite
data cannot produce a liminf/limsup, so this module computes running averages
and extracts min/max proxies over a tail window; every verdict is therefore
labeled evidence, never proof.

Works on any pair of state sequences plus a metric; helpers are provided for
symbol-sequence orbits under the shift and for planar Poincare iterates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import shifts
from .shifts import SymbolSequence

__all__ = [
    "DistributionEstimate",
    "xi_count",
    "estimate_F",
    "dc1_pair_report",
    "symbol_orbit",
    "planar_metric",
    "block_pair_fourpow",
    "block_pair_ratio",
    "default_thresholds",
]


def planar_metric(x: complex, y: complex) -> float:
    return abs(x - y)


def symbol_orbit(seq: SymbolSequence, n: int, step: int = 1) -> list:
    """The first n shift iterates sigma^{step*i}(seq)."""
    return [shifts.shift(seq, step * i) for i in range(n)]


def xi_count(x_orbit: Sequence, y_orbit: Sequence, t: float, n: int,
             metric: Callable = None) -> int:
    """Exact count #{i : rho(x_i, y_i) < t, 0 <= i < n}."""
    if metric is None:
        metric = shifts.metric if isinstance(x_orbit[0], SymbolSequence) else planar_metric
    if n > min(len(x_orbit), len(y_orbit)):
        raise ValueError("orbits shorter than n")
    return sum(1 for i in range(n) if metric(x_orbit[i], y_orbit[i]) < t)


def default_thresholds(symbolic: bool = True) -> np.ndarray:
    """Geometric grid 2^-10 .. 1 (symbolic) or 2^-10 .. 2 (planar)."""
    top = 0 if symbolic else 1
    return 2.0 ** np.arange(-10, top + 1)


@dataclass
class DistributionEstimate:
    """Running proximity averages and their tail-window extremes.

    ``F_proxy[j]`` (min over the tail window) stands in for the liminf at
    ``thresholds[j]``; ``Fstar_proxy[j]`` (max) for the limsup.  Both are
    finite-horizon evidence.
    """

    thresholds: np.ndarray
    n_max: int
    tail_fraction: float
    running: np.ndarray = field(repr=False)   # shape (len(thresholds), n_max)
    F_proxy: np.ndarray = None
    Fstar_proxy: np.ndarray = None
    counts_at_n_max: np.ndarray = None

    def __post_init__(self):
        lo = max(1, int(math.ceil(self.tail_fraction * self.n_max)))
        tail = self.running[:, lo - 1:]
        self.F_proxy = tail.min(axis=1)
        self.Fstar_proxy = tail.max(axis=1)

    def monotone_in_t(self) -> bool:
        return bool(np.all(np.diff(self.running, axis=0) >= -1e-12))


def estimate_F(x_orbit: Sequence, y_orbit: Sequence, thresholds,
               n_max: int, tail_fraction: float = 0.2,
               metric: Callable = None) -> DistributionEstimate:
    """Running averages of the proximity counts for each threshold.

    liminf/limsup proxies are the min/max of the running average over
    n in [tail_fraction * n_max, n_max].
    """
    if n_max < 1:
        raise ValueError("n_max must be positive")
    if metric is None:
        metric = shifts.metric if isinstance(x_orbit[0], SymbolSequence) else planar_metric
    thresholds = np.asarray(sorted(thresholds), dtype=float)
    d = np.array([metric(x_orbit[i], y_orbit[i]) for i in range(n_max)])
    ns = np.arange(1, n_max + 1, dtype=float)
    running = np.empty((len(thresholds), n_max))
    counts = np.empty(len(thresholds), dtype=int)
    for j, t in enumerate(thresholds):
        hits = (d < t).astype(float)
        running[j] = np.cumsum(hits) / ns
        counts[j] = int(hits.sum())
    est = DistributionEstimate(thresholds, n_max, tail_fraction, running)
    est.counts_at_n_max = counts
    return est


def dc1_pair_report(x_orbit: Sequence, y_orbit: Sequence, s_grid=None,
                    n_max: Optional[int] = None, tail_fraction: float = 0.2,
                    margin: float = 0.05, metric: Callable = None) -> dict:
    """Check the two DC1 conditions on proxies, with a decision margin.

    consistent-with-DC1:  some threshold has F proxy <= margin AND every
                          threshold has F* proxy >= 1 - margin;
    inconsistent:         a condition fails by a wide margin (F proxy >= 1/2
                          everywhere, or some F* proxy <= 1/2);
    inconclusive:         anything in between.

    The verdict is evidence about finite data, never a proof.
    """
    if n_max is None:
        n_max = min(len(x_orbit), len(y_orbit))
    symbolic = isinstance(x_orbit[0], SymbolSequence)
    if s_grid is None:
        s_grid = default_thresholds(symbolic)
    est = estimate_F(x_orbit, y_orbit, s_grid, n_max, tail_fraction, metric)
    cond1 = bool(np.any(est.F_proxy <= margin))
    cond2 = bool(np.all(est.Fstar_proxy >= 1.0 - margin))
    cond1_clear_fail = bool(np.all(est.F_proxy >= 0.5))
    cond2_clear_fail = bool(np.any(est.Fstar_proxy <= 0.5))
    if cond1 and cond2:
        verdict = "consistent-with-DC1"
    elif cond1_clear_fail or cond2_clear_fail:
        verdict = "inconsistent"
    else:
        verdict = "inconclusive"
    return {
        "verdict": verdict,
        "evidence_only": True,
        "n_max": n_max,
        "tail_fraction": tail_fraction,
        "margin": margin,
        "thresholds": [float(t) for t in est.thresholds],
        "F_proxy": [float(v) for v in est.F_proxy],
        "Fstar_proxy": [float(v) for v in est.Fstar_proxy],
    }


# ---------------------------------------------------------------------------
# constructed sequence pairs
# ---------------------------------------------------------------------------

def _ones_from_far_blocks(far_blocks: list, length: int) -> SymbolSequence:
    core = [0] * length
    for (a, b) in far_blocks:
        for i in range(max(a, 0), min(b, length)):
            core[i] = 1
    return SymbolSequence.from_core(core, k0=0)


def block_pair_fourpow(n_max: int = 4 ** 8) -> tuple:
    """The 4^k block pair: near on even blocks [4^k, 4^{k+1}), far on odd ones.

    x = 0^infty and y carries 1s on the odd blocks, so under the shift the
    pair is 2^0-far exactly while the window sits on a 1-block.  The running
    average of proximity at t = 1/2 oscillates between the block-boundary
    extremes 1/5 and 4/5.
    """
    far = []
    k = 1
    while 4 ** k < n_max:
        far.append((4 ** k, min(4 ** (k + 1), n_max)))
        k += 2
    x = SymbolSequence.constant(0)
    y = _ones_from_far_blocks(far, n_max)
    return x, y


def block_pair_ratio(n_max: int, ratio: int = 24, first: int = 2) -> tuple:
    """A DC1-witness pair: blocks whose lengths grow by a dominating ratio.

    Each block dwarfs the whole preceding history (ratio >= 19 makes the
    tail-window extremes pass the 0.05 margins), so the running proximity
    average at every threshold swings arbitrarily close to 0 and 1 -- the
    same mechanism as doubly-exponential block growth, at sizes where the
    brute-force oracle still runs.
    """
    blocks = []
    a, L, k = 0, first, 0
    while a < n_max:
        blocks.append((a, min(a + L, n_max), k % 2 == 1))
        a += L
        L *= ratio
        k += 1
    far = [(s, e) for (s, e, isfar) in blocks if isfar]
    x = SymbolSequence.constant(0)
    y = _ones_from_far_blocks(far, n_max)
    return x, y
