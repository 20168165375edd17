"""High-accuracy integration of the frame fields, dense output and events.

The integrator is scipy's DOP853 (embedded Runge-Kutta 8(5,3) with matching
dense output) driven through `solve_ivp`; complex states are carried as
(re, im) pairs.  Defaults rtol = 1e-10 and atol = 1e-12, tight enough that
boundary-event times can be polished to ~1e-10.

In certification mode orbits are confined to the disk |z| < 3 on which the
perturbation hypotheses hold; leaving it raises `BlowUp`.  Exploration mode
only guards against numerical escape.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .geometry import EPS_MEM, QueryOutsideTimeSlab, RegionSet
from .model import Frame, ModelParams, Perturbation, Q_RADIUS, get_frame

__all__ = [
    "BlowUp",
    "ToleranceNotMet",
    "NoConvergence",
    "OrbitSegment",
    "EventRecord",
    "integrate",
    "flow_points",
    "poincare",
    "detect_events",
    "find_periodic",
    "write_orbit_csv",
    "read_orbit_csv",
    "write_events_jsonl",
    "POINCARE_BASE_TIME",
]

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
ESCAPE_RADIUS = 1e6


class BlowUp(RuntimeError):
    """Orbit left the admissible domain (or the step size underflowed)."""


class ToleranceNotMet(RuntimeError):
    pass


class NoConvergence(RuntimeError):
    pass


@dataclass
class OrbitSegment:
    """A densely interpolable solution piece in a fixed frame.

    ``point(t)`` evaluates the dense interpolant; ``t0`` may exceed ``t1``
    (backward integration).  ``accuracy`` is the crude global estimate
    tol * |t1 - t0|.
    """

    frame: Frame
    t0: float
    t1: float
    ic: complex
    _interp: object
    accuracy: float
    mode: str = "exploration"

    def point(self, t):
        ts = np.asarray(t, dtype=float)
        y = self._interp(ts)
        return y[0] + 1j * y[1]

    def __call__(self, t):
        return self.point(t)

    @property
    def span(self) -> tuple:
        return (min(self.t0, self.t1), max(self.t0, self.t1))

    @classmethod
    def from_callable(cls, fn, frame, t0: float, t1: float) -> "OrbitSegment":
        """Wrap an explicit trajectory t -> complex (used for synthetic orbits)."""

        class _Wrap:
            def __call__(self, ts):
                zs = np.asarray(fn(np.asarray(ts)), dtype=complex)
                return np.stack([zs.real, zs.imag])

        frame = get_frame(frame)
        return cls(frame, t0, t1, complex(fn(t0)), _Wrap(), 0.0)


def _rhs(frame: Frame, params: ModelParams, f: Optional[Perturbation]):
    def rhs(t, y):
        n = y.shape[0] // 2
        z = y[:n] + 1j * y[n:]
        v = np.asarray(frame.field(t, z, params, f), dtype=complex)
        return np.concatenate([v.real, v.imag])

    return rhs


def _escape_event(frame: Frame, params: ModelParams):
    if params.mode == "certification":
        def ev(t, y):
            n = y.shape[0] // 2
            z = y[:n] + 1j * y[n:]
            q = frame.from_frame(t, z)
            return float(np.max(np.abs(q))) - Q_RADIUS
    else:
        def ev(t, y):
            return float(np.max(np.abs(y))) - ESCAPE_RADIUS

    ev.terminal = True
    ev.direction = 1.0
    return ev


def integrate(frame, t0: float, x0: complex, t1: float, params: ModelParams,
              f: Optional[Perturbation] = None, rtol: float = DEFAULT_RTOL,
              atol: float = DEFAULT_ATOL) -> OrbitSegment:
    """Integrate the frame field from (t0, x0) to t1 with dense output."""
    frame = get_frame(frame)
    if rtol <= 0:
        raise ValueError("rtol must be positive")
    if t0 == t1:
        return OrbitSegment.from_callable(lambda t: np.full_like(np.asarray(t, dtype=complex),
                                                                 complex(x0)),
                                          frame, t0, t1)
    y0 = np.array([complex(x0).real, complex(x0).imag])
    ev = _escape_event(frame, params)
    sol = solve_ivp(_rhs(frame, params, f), (t0, t1), y0, method="DOP853",
                    rtol=rtol, atol=atol, dense_output=True, events=ev)
    if sol.status == 1:
        t_esc = float(sol.t_events[0][0])
        raise BlowUp(f"orbit left the admissible domain at t={t_esc:.6g} "
                     f"(mode={params.mode})")
    if not sol.success:
        raise ToleranceNotMet(sol.message)
    return OrbitSegment(frame, t0, t1, complex(x0), sol.sol,
                        rtol * abs(t1 - t0), params.mode)


def flow_points(frame, t0: float, xs, t1: float, params: ModelParams,
                f: Optional[Perturbation] = None, rtol: float = DEFAULT_RTOL,
                atol: float = DEFAULT_ATOL):
    """Flow a batch of states from t0 to t1; returns the endpoint array.

    The batch is integrated as one stacked system with a shared adaptive
    step, which is both fast and bitwise-deterministic for a fixed batch.
    """
    frame = get_frame(frame)
    xs = np.atleast_1d(np.asarray(xs, dtype=complex))
    if t0 == t1:
        return xs.copy()
    y0 = np.concatenate([xs.real, xs.imag])
    sol = solve_ivp(_rhs(frame, params, f), (t0, t1), y0, method="DOP853",
                    rtol=rtol, atol=atol, events=_escape_event(frame, params))
    if sol.status == 1 or not sol.success:
        raise BlowUp("batch flow left the admissible domain")
    y = sol.y[:, -1]
    n = len(xs)
    return y[:n] + 1j * y[n:]


#: the Poincare map is the time-2pi process map anchored at -beta
def POINCARE_BASE_TIME(params: ModelParams) -> float:
    return -params.beta


def poincare(q: complex, params: ModelParams, f: Optional[Perturbation] = None,
             rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL) -> complex:
    """The process map over one period: phi_{(-beta, 2 pi)}(q)."""
    t0 = -params.beta
    orbit = integrate("z", t0, q, t0 + 2.0 * math.pi, params, f, rtol, atol)
    return complex(orbit.point(t0 + 2.0 * math.pi))


@dataclass
class EventRecord:
    """A located boundary crossing of an orbit against a region face."""

    region: str
    face: str
    t: float
    point: complex
    direction: str  # "entering" | "exiting"

    def to_json(self) -> str:
        return json.dumps({
            "region": self.region, "face": self.face, "t": self.t,
            "re": self.point.real, "im": self.point.imag,
            "direction": self.direction,
        })


def _slab_windows(region: RegionSet, lo: float, hi: float, params_beta_gamma):
    """Time subintervals of [lo, hi] where the region exists."""
    if region.time_gate is None:
        return [(lo, hi)]
    beta, gamma = params_beta_gamma
    out = []
    k0 = math.floor((lo - gamma) / math.pi)
    k1 = math.ceil((hi + beta) / math.pi)
    for k in range(k0, k1 + 1):
        a, b = k * math.pi - beta, k * math.pi + gamma
        a, b = max(a, lo), min(b, hi)
        if a < b:
            out.append((a, b))
    return out


def detect_events(orbit: OrbitSegment, regions: Sequence[RegionSet],
                  params: Optional[ModelParams] = None, n_scan: int = 4096,
                  t_tol: float = 1e-12) -> list:
    """Locate all face crossings of ``orbit`` against the given regions.

    Sign changes of each face functional are bracketed on a scan grid and
    polished with Brent's method; the crossing direction is classified from
    membership just before and after.  Tangential contacts are reported as an
    entering and an exiting record at the same time.
    """
    lo, hi = orbit.span
    records: list[EventRecord] = []
    for region in regions:
        rframe = get_frame(region.frame_tag)

        def pt_in_region_frame(t):
            q = orbit.frame.from_frame(t, orbit.point(t))
            return rframe.to_frame(t, q)

        bg = (params.beta, params.gamma) if params is not None else (0.0, 0.0)
        for (a, b) in _slab_windows(region, lo, hi, bg):
            ts = np.linspace(a, b, max(16, int(n_scan * (b - a) / max(hi - lo, 1e-300)) + 2))
            pts = [pt_in_region_frame(float(t)) for t in ts]
            for face in region.faces:
                if face.parameterize is None and not region.surface_only:
                    continue
                g = np.array([face.functional(float(t), complex(p))
                              for t, p in zip(ts, pts)])
                for i in np.nonzero(np.diff(np.signbit(g)))[0]:
                    fn = lambda t: face.functional(t, complex(pt_in_region_frame(t)))
                    tc = brentq(fn, float(ts[i]), float(ts[i + 1]), xtol=t_tol)
                    pc = complex(pt_in_region_frame(tc))
                    # attribute the crossing only if it happens on the face,
                    # i.e. every other constraint of the region holds there
                    others = [f2.functional(tc, pc) for f2 in region.faces
                              if f2.id != face.id]
                    if others and max(others) > 10 * EPS_MEM:
                        continue
                    h = max(1e-9, 1e-7 * (hi - lo))
                    try:
                        before = region.member(tc - h, complex(pt_in_region_frame(tc - h)))
                        after = region.member(tc + h, complex(pt_in_region_frame(tc + h)))
                    except QueryOutsideTimeSlab:
                        before = after = None
                    if before is None or after is None:
                        direction = "exiting"
                        records.append(EventRecord(region.tag, face.id, tc, pc, direction))
                    elif before.in_closure and after.is_outside:
                        records.append(EventRecord(region.tag, face.id, tc, pc, "exiting"))
                    elif before.is_outside and after.in_closure:
                        records.append(EventRecord(region.tag, face.id, tc, pc, "entering"))
                    else:
                        # tangential contact
                        records.append(EventRecord(region.tag, face.id, tc, pc, "entering"))
                        records.append(EventRecord(region.tag, face.id, tc, pc, "exiting"))
    records.sort(key=lambda r: r.t)
    return records


def find_periodic(near: complex, params: ModelParams, f: Optional[Perturbation] = None,
                  rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
                  residual_tol: float = 1e-9, max_iter: int = 30) -> complex:
    """Fixed point of the Poincare map by a damped Newton iteration.

    The 2x2 Jacobian of q -> poincare(q) - q comes from central differences;
    the residual must drop below ``residual_tol``.
    """
    q = complex(near)

    def g(qq: complex) -> complex:
        return poincare(qq, params, f, rtol, atol) - qq

    r = g(q)
    for _ in range(max_iter):
        if abs(r) < residual_tol:
            return q
        h = max(1e-7, 1e-6 * abs(q))
        gx = (g(q + h) - g(q - h)) / (2 * h)
        gy = (g(q + 1j * h) - g(q - 1j * h)) / (2 * h)
        J = np.array([[gx.real, gy.real], [gx.imag, gy.imag]])
        try:
            dx = np.linalg.solve(J, -np.array([r.real, r.imag]))
        except np.linalg.LinAlgError:
            raise NoConvergence("singular Jacobian in the periodic-orbit Newton")
        step = complex(dx[0], dx[1])
        lam = 1.0
        for _ in range(8):
            r_try = g(q + lam * step)
            if abs(r_try) < abs(r):
                q, r = q + lam * step, r_try
                break
            lam *= 0.5
        else:
            q, r = q + step, g(q + step)
    if abs(r) < residual_tol:
        return q
    raise NoConvergence(f"no fixed point near {near}: residual {abs(r):.3e}")


# ---------------------------------------------------------------------------
# artifact io
# ---------------------------------------------------------------------------

def write_orbit_csv(orbit: OrbitSegment, path: str, n: int = 1000,
                    config: Optional[dict] = None) -> None:
    """Sampled orbit as CSV with header t,re,im,frame (17 significant digits)."""
    ts = np.linspace(orbit.t0, orbit.t1, n)
    with open(path, "w") as fh:
        if config is not None:
            fh.write("# " + json.dumps(config, sort_keys=True) + "\n")
        fh.write("t,re,im,frame\n")
        for t in ts:
            z = complex(orbit.point(float(t)))
            fh.write(f"{t:.17g},{z.real:.17g},{z.imag:.17g},{orbit.frame.tag}\n")


def read_orbit_csv(path: str):
    """Parse the orbit CSV; returns (config or None, ts, zs, frame_tag)."""
    config = None
    ts, zs, tag = [], [], None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                config = json.loads(line[1:].strip())
                continue
            if line.startswith("t,"):
                continue
            t, re, im, tag = line.split(",")
            ts.append(float(t))
            zs.append(complex(float(re), float(im)))
    return config, np.array(ts), np.array(zs), tag


def write_events_jsonl(records: Iterable[EventRecord], path: str,
                       config: Optional[dict] = None) -> None:
    with open(path, "w") as fh:
        if config is not None:
            fh.write(json.dumps({"config": config}, sort_keys=True) + "\n")
        for r in records:
            fh.write(r.to_json() + "\n")
