"""Window-by-window orbit classification and the coding map.

Windows are indexed by k: window k covers elapsed time [k pi, (k+1) pi] of the
process started at -beta, i.e. absolute time [k pi - beta, (k+1) pi - beta].
Memberships are always evaluated at absolute time (elapsed + start), the only
convention under which the corridor condition lines up with the slabs on
which Z is nonempty.

Each window is classified into one of

    C00  inside the rotating square U throughout,
    C11  inside W throughout,
    C01  in U at the window start, through the corridor Z on
         [k pi, k pi + beta + gamma], then inside W,
    C10  the mirror transit,

or UNCLASSIFIED -- a verdict, not an error: generic points do not follow the
saddle-chain pattern, and an itinerary simply ends there.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import flow, geometry
from .model import ModelParams, Perturbation

__all__ = [
    "WindowClass",
    "C00", "C11", "C01", "C10", "UNCLASSIFIED",
    "Itinerary",
    "classify_window",
    "count_holding",
    "code_orbit",
    "check_semiconjugacy",
    "window_span",
]

# window classes
C00 = "C00"
C11 = "C11"
C01 = "C01"
C10 = "C10"
UNCLASSIFIED = "UNCLASSIFIED"
WindowClass = str

SYMBOL_OF = {C00: 0, C10: 0, C11: 1, C01: 1}

GRID_PER_WINDOW = 512


def window_span(k: int, params: ModelParams) -> tuple:
    """Absolute time span of window k for the process anchored at -beta."""
    t0 = -params.beta
    return (t0 + k * math.pi, t0 + (k + 1) * math.pi)


def _all_in(region, ts, pts) -> bool:
    return all(region.member(float(t), complex(p)).in_closure
               for t, p in zip(ts, pts))


class _WindowData:
    """Membership samples of one window, shared by the four condition checks."""

    def __init__(self, orbit, k: int, params: ModelParams, regions: dict,
                 n_grid: int = GRID_PER_WINDOW):
        if orbit.frame.tag != "z":
            raise ValueError("classification expects a z-frame orbit")
        ta, tb = window_span(k, params)
        lo, hi = orbit.span
        if ta < lo - 1e-9 or tb > hi + 1e-9:
            raise ValueError(f"orbit does not cover window {k}")
        self.params = params
        self.regions = regions
        self.k = k
        self.ta, self.tb = ta, tb
        self.ts = np.linspace(ta, tb, n_grid)
        self.pts = orbit.point(self.ts)
        # corridor subinterval: elapsed [k pi, k pi + beta + gamma], finer grid
        self.tc = ta + params.beta + params.gamma
        self.ts_cor = np.linspace(ta, self.tc, max(64, n_grid // 4))
        self.pts_cor = orbit.point(self.ts_cor)
        mask = self.ts >= self.tc - 1e-12
        self.ts_post, self.pts_post = self.ts[mask], self.pts[mask]

    def cond_00(self) -> bool:
        return _all_in(self.regions["U"], self.ts, self.pts)

    def cond_11(self) -> bool:
        return _all_in(self.regions["W"], self.ts, self.pts)

    def _transit(self, start_region, end_region) -> bool:
        if not start_region.member(self.ta, complex(self.pts[0])).in_closure:
            return False
        Z = self.regions["Z"]
        try:
            ok = _all_in(Z, self.ts_cor, self.pts_cor)
        except geometry.QueryOutsideTimeSlab:
            return False
        if not ok:
            return False
        return _all_in(end_region, self.ts_post, self.pts_post)

    def cond_01(self) -> bool:
        return self._transit(self.regions["U"], self.regions["W"])

    def cond_10(self) -> bool:
        return self._transit(self.regions["W"], self.regions["U"])


def classify_window(orbit, k: int, params: ModelParams,
                    regions: Optional[dict] = None,
                    n_grid: int = GRID_PER_WINDOW) -> WindowClass:
    """Classify window k of a z-frame orbit into C00/C11/C01/C10/UNCLASSIFIED."""
    regions = regions or geometry.build_regions(params)
    data = _WindowData(orbit, k, params, regions, n_grid)
    if data.cond_00():
        return C00
    if data.cond_11():
        return C11
    if data.cond_01():
        return C01
    if data.cond_10():
        return C10
    return UNCLASSIFIED


def count_holding(orbit, k: int, params: ModelParams,
                  regions: Optional[dict] = None) -> int:
    """How many of the four window conditions hold (exclusivity says <= 1)."""
    regions = regions or geometry.build_regions(params)
    data = _WindowData(orbit, k, params, regions)
    return sum([data.cond_00(), data.cond_11(), data.cond_01(), data.cond_10()])


@dataclass
class Itinerary:
    """Per-window classes and the induced 0/1 symbols over [k_min, k_max]."""

    k_min: int
    classes: list
    truncated: bool = False

    @property
    def symbols(self) -> str:
        return "".join(str(SYMBOL_OF[c]) for c in self.classes)

    @property
    def k_max(self) -> int:
        return self.k_min + len(self.classes) - 1

    def symbol(self, k: int) -> Optional[int]:
        if self.k_min <= k <= self.k_max:
            return SYMBOL_OF[self.classes[k - self.k_min]]
        return None

    def to_json_dict(self) -> dict:
        return {"k_min": self.k_min, "symbols": self.symbols,
                "classes": list(self.classes), "truncated": self.truncated}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())


def code_orbit(q: complex, k_range: tuple, params: ModelParams,
               f: Optional[Perturbation] = None,
               rtol: float = flow.DEFAULT_RTOL, atol: float = flow.DEFAULT_ATOL,
               regions: Optional[dict] = None) -> Itinerary:
    """Symbols of the coding map for windows k_min..k_max of the orbit of q.

    The orbit starts at (-beta, q).  Windows are classified in ascending k;
    the first UNCLASSIFIED window (or an orbit blow-up) truncates the
    itinerary and sets the flag.
    """
    k_min, k_max = k_range
    if k_min > k_max:
        raise ValueError("empty window range")
    regions = regions or geometry.build_regions(params)
    t0 = -params.beta

    # per-window segments chained from the endpoint of the previous one, so a
    # late blow-up does not discard the windows the orbit does cover
    segments: dict = {}

    def build(direction: int, k_stop: int) -> None:
        t_cur, z_cur = t0, complex(q)
        k = 0 if direction > 0 else -1
        while (k <= k_stop) if direction > 0 else (k >= k_stop):
            t_next = t_cur + direction * math.pi
            try:
                seg = flow.integrate("z", t_cur, z_cur, t_next, params, f, rtol, atol)
            except flow.BlowUp:
                break
            segments[k] = seg
            z_cur = complex(seg.point(t_next))
            t_cur = t_next
            k += direction

    if k_max >= 0:
        build(+1, k_max)
    if k_min < 0:
        build(-1, k_min)

    classes = []
    truncated = False
    for k in range(k_min, k_max + 1):
        seg = segments.get(k)
        c = classify_window(seg, k, params, regions) if seg is not None else UNCLASSIFIED
        if c == UNCLASSIFIED:
            truncated = True
            break
        classes.append(c)
    return Itinerary(k_min, classes, truncated)


@dataclass
class SemiconjugacyReport:
    steps: int
    steps_completed: int
    windows_compared: int
    mismatches: list
    max_deviation: float

    @property
    def passed(self) -> bool:
        return self.windows_compared > 0 and not self.mismatches


def check_semiconjugacy(q: complex, n_steps: int, params: ModelParams,
                        f: Optional[Perturbation] = None,
                        k_range: Optional[tuple] = None,
                        rtol: float = flow.DEFAULT_RTOL,
                        atol: float = flow.DEFAULT_ATOL) -> SemiconjugacyReport:
    """Verify the relation code(P(q)) = shift^2(code(q)) over Poincare steps.

    For each step s the itinerary of P^s(q) at window k must equal the
    itinerary of q at window k + 2s, on all windows classified by both.
    The deviation reported is 2^{-|k|} of the innermost mismatching window.
    Iteration stops early if some Poincare image escapes the domain (at
    moderate R a shadowing point carries only a couple of windows of forward
    precision, a hard double-precision bound); the comparison then covers
    the steps actually completed.
    """
    if k_range is None:
        k_range = (-2 * n_steps - 2, 2 * n_steps + 2)
    base = code_orbit(q, k_range, params, f, rtol, atol)
    mismatches = []
    compared = 0
    max_dev = 0.0
    completed = 0
    point = complex(q)
    for s in range(1, n_steps + 1):
        try:
            point = flow.poincare(point, params, f, rtol, atol)
        except flow.BlowUp:
            break
        completed = s
        it = code_orbit(point, k_range, params, f, rtol, atol)
        for k in range(it.k_min, it.k_max + 1):
            sym = it.symbol(k)
            base_sym = base.symbol(k + 2 * s)
            if sym is None or base_sym is None:
                continue
            compared += 1
            if sym != base_sym:
                mismatches.append({"step": s, "window": k,
                                   "got": sym, "expected": base_sym})
                max_dev = max(max_dev, 2.0 ** (-abs(k)))
    return SemiconjugacyReport(n_steps, completed, compared, mismatches, max_dev)
