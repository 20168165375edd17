"""Exit-side bisection machinery: saddle fibers, curve tracking, shooting.

The two saddles are handled through one chart each.  In chart coordinates
``u`` the expanding direction is always the real axis and the tracking box is
always {|Re u| <= 11 beta/10, |Im u| <= 2 beta^2}:

* plus chart  (saddle +1):  u = w                (w frame)
* minus chart (saddle -1):  u = -i p             (p frame; Im p -> Re u)

Fibers (local un/stable manifold graphs) come from exit-side bisection: the
orbit of a trial ordinate leaves a wedge around the relevant axis through its
upper or lower ray, and the two sides bracket the fiber.  Curve tracking
implements the isolating-box algorithm: flow a parameterized curve through a
window in substeps, prune the parameter run that stays inside the box, and
bisect the endpoint images onto the required faces.

Precision note: each window multiplies parameter sensitivity by ~ e^{2 pi R},
so a raw parameter nested over many windows dies in double precision after
about three windows even at R = 2.  The cascade therefore re-anchors the
tracked curve at every window boundary (new parameter = expanding-axis
coordinate of the flowed states) and asserts the nesting of the retained
sets through one-window backward preimages, which are contracting and hence
well conditioned.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from . import coding, flow, geometry
from .model import ModelParams, Perturbation, get_frame

__all__ = [
    "NoBracket",
    "TrackingLost",
    "CorridorMiss",
    "NoIntersection",
    "SaddleChart",
    "CHART_PLUS",
    "CHART_MINUS",
    "chart_for_symbol",
    "FiberPoint",
    "ParamCurve",
    "Box",
    "TrackedInterval",
    "unstable_fiber",
    "stable_fiber",
    "fiber_curve",
    "verify_fiber_decay",
    "track_curve",
    "cascade",
    "CascadeResult",
    "shoot",
    "ShotResult",
    "word_alignment",
]


class NoBracket(RuntimeError):
    """Both trial ordinates exit the wedge on the same side."""


class TrackingLost(RuntimeError):
    """The flowed curve no longer spans the required faces."""


class CorridorMiss(RuntimeError):
    """No curve piece completes the corridor transit in time."""


class NoIntersection(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# charts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SaddleChart:
    """Chart coordinates around one saddle with the expanding axis real."""

    saddle: int           # +1 or -1
    frame_tag: str        # "w" or "p"
    rot: complex          # u = rot * frame point

    @property
    def frame(self):
        return get_frame(self.frame_tag)

    def to_u(self, pt):
        return self.rot * np.asarray(pt, dtype=complex)

    def from_u(self, u):
        return np.asarray(u, dtype=complex) / self.rot

    def u_of_z(self, t, q):
        return self.to_u(self.frame.to_frame(t, q))

    def z_of_u(self, t, u):
        return self.frame.from_frame(t, self.from_u(u))

    def symbol(self) -> int:
        return 0 if self.saddle == 1 else 1


CHART_PLUS = SaddleChart(+1, "w", 1.0 + 0.0j)
CHART_MINUS = SaddleChart(-1, "p", -1.0j)


def chart_for_symbol(sym: int) -> SaddleChart:
    return CHART_PLUS if int(sym) == 0 else CHART_MINUS


def flow_u(chart: SaddleChart, t0: float, us, t1: float, params: ModelParams,
           f: Optional[Perturbation] = None, rtol: float = flow.DEFAULT_RTOL,
           atol: float = flow.DEFAULT_ATOL):
    """Flow chart states from t0 to t1 (batch)."""
    pts = chart.from_u(np.atleast_1d(np.asarray(us, dtype=complex)))
    out = flow.flow_points(chart.frame, t0, pts, t1, params, f, rtol, atol)
    return chart.to_u(out)


# ---------------------------------------------------------------------------
# fibers by exit-side bisection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FiberPoint:
    """One fiber sample: parameter o, graph ordinate, and the run metadata."""

    o: float
    ordinate: float
    horizon: float
    residual: float


def _default_horizon(params: ModelParams) -> float:
    # contraction ~ e^{-2 R t} makes long horizons pointless in doubles
    return min(5.0, 10.0 / params.R) * math.pi


def _wedge_side(u: complex, axis_rot: complex, beta: float) -> int:
    """0 while inside |Arg(u * axis_rot)| <= beta, else the exit side (+-1)."""
    c = u * axis_rot
    if c == 0:
        return 0
    if (c * np.exp(-1j * beta)).imag > 0:
        return +1
    if (c * np.exp(1j * beta)).imag < 0:
        return -1
    return 0


def _batch_until_cap(chart: SaddleChart, t0: float, us: np.ndarray, t1: float,
                     params: ModelParams, f: Optional[Perturbation], cap: float,
                     rtol: float, atol: float) -> tuple:
    """Batch flow that pauses whenever some orbit reaches |u| = cap.

    Returns (t_reached, states, escaped mask).  Escaped orbits must be
    classified and removed by the caller before continuing; this keeps the
    shared-step batch from chasing a quadratic blow-up.
    """
    from scipy.integrate import solve_ivp
    frame = chart.frame
    n = len(us)

    def rhs(t, y):
        x = y[:n] + 1j * y[n:]
        v = np.asarray(frame.field(t, chart.from_u(x), params, f),
                       dtype=complex) * chart.rot
        return np.concatenate([v.real, v.imag])

    def hit_cap(t, y):
        x = y[:n] + 1j * y[n:]
        return float(np.max(np.abs(x))) - cap

    hit_cap.terminal = True
    hit_cap.direction = 1.0
    pts = chart.from_u(us)
    y0 = np.concatenate([(us).real, (us).imag])
    sol = solve_ivp(rhs, (t0, t1), y0, method="DOP853", rtol=rtol, atol=atol,
                    events=hit_cap)
    if not sol.success and sol.status != 1:
        raise flow.ToleranceNotMet(sol.message)
    y = sol.y[:, -1]
    out = y[:n] + 1j * y[n:]
    t_reached = float(sol.t[-1])
    escaped = np.abs(out) >= cap * 0.999
    return t_reached, out, escaped


def _classify_exit_batch(chart: SaddleChart, t0: float, u0s: np.ndarray,
                         axis_rots: np.ndarray, params: ModelParams,
                         f: Optional[Perturbation], forward: bool,
                         horizon: float, decay_tol: float,
                         rtol: float, atol: float) -> np.ndarray:
    """Exit side (+1 / -1) per orbit, or 0 for converged/undecided."""
    n = len(u0s)
    sides = np.zeros(n, dtype=int)
    live = np.arange(n)
    us = u0s.astype(complex).copy()
    beta = params.beta
    cap = 4.0 * 1.1 * beta
    # immediate classification of points already beyond the rays
    for j in range(n):
        s = _wedge_side(us[j], axis_rots[j], beta)
        if s != 0:
            sides[j] = s
    live = live[sides[live] == 0]
    t = t0
    # geometric chunk schedule: most exits happen within the first few units
    marks = np.geomspace(0.3 / params.R, horizon, 14)
    for mark in marks:
        if len(live) == 0:
            break
        t_target = t0 + mark if forward else t0 - mark
        while (t < t_target) if forward else (t > t_target):
            t_r, u_r, escaped = _batch_until_cap(chart, t, us[live], t_target,
                                                 params, f, cap, rtol, atol)
            us[live] = u_r
            t = t_r
            if escaped.any():
                for jj, j in enumerate(live):
                    if escaped[jj]:
                        s = _wedge_side(us[j], axis_rots[j], beta)
                        sides[j] = s if s != 0 else (
                            +1 if (us[j] * axis_rots[j]).imag > 0 else -1)
                live = live[~escaped]
                if len(live) == 0:
                    break
            else:
                break
        still = []
        for j in live:
            if abs(us[j]) < decay_tol:
                sides[j] = 0  # converged onto the fiber
                continue
            s = _wedge_side(us[j], axis_rots[j], beta)
            if s != 0:
                sides[j] = s
            else:
                still.append(j)
        live = np.array(still, dtype=int)
    return sides


def _fiber_batch(chart: SaddleChart, kind: str, os_: np.ndarray, tau: float,
                 params: ModelParams, f: Optional[Perturbation],
                 horizon: Optional[float], ord_tol: float, decay_tol: float,
                 rtol: float, atol: float) -> np.ndarray:
    """Lockstep bisection of the fiber ordinate for every abscissa in os_."""
    if kind not in ("unstable", "stable"):
        raise ValueError(kind)
    horizon = _default_horizon(params) if horizon is None else horizon
    b2 = 2.0 * params.beta ** 2
    forward = (kind == "stable")

    def make_u(o, y):
        # unstable: point o + i y; stable: point y + i o (axes swapped)
        return o + 1j * y if kind == "unstable" else y + 1j * o

    def axis_rot(o):
        # wedge around +-Re axis (unstable) or +-Im axis (stable)
        s = 1.0 if o >= 0 else -1.0
        return s if kind == "unstable" else -1j * s

    rots = np.array([axis_rot(o) for o in os_], dtype=complex)

    def classify(ys):
        u0 = np.array([make_u(o, y) for o, y in zip(os_, ys)], dtype=complex)
        return _classify_exit_batch(chart, tau, u0, rots, params, f, forward,
                                    horizon, decay_tol, rtol, atol)

    lo = np.full(len(os_), -b2)
    hi = np.full(len(os_), +b2)
    s_lo = classify(lo)
    s_hi = classify(hi)
    done = np.zeros(len(os_), dtype=bool)
    out = np.zeros(len(os_))
    for j, o in enumerate(os_):
        if o == 0.0:
            out[j], done[j] = 0.0, True
        elif s_lo[j] == 0:
            out[j], done[j] = lo[j], True
        elif s_hi[j] == 0:
            out[j], done[j] = hi[j], True
        elif s_lo[j] == s_hi[j]:
            raise NoBracket(
                f"{kind} fiber at o={o:.4g}, tau={tau:.4g}: both trial ordinates "
                f"exit on side {s_lo[j]} (parameter regime violation)")
    # orient so that hi-side carries s_hi
    n_iter = max(1, int(math.ceil(math.log2(max(2 * b2 / ord_tol, 2.0)))))
    for _ in range(n_iter):
        if bool(np.all(done)):
            break
        mid = 0.5 * (lo + hi)
        s_mid = classify(mid)
        for j in range(len(os_)):
            if done[j]:
                continue
            if s_mid[j] == 0:
                out[j], done[j] = mid[j], True
            elif s_mid[j] == s_hi[j]:
                hi[j] = mid[j]
            else:
                lo[j] = mid[j]
        undone = ~done
        out[undone] = 0.5 * (lo[undone] + hi[undone])
    return out


def unstable_fiber(o: float, tau: float, params: ModelParams,
                   f: Optional[Perturbation] = None, horizon: Optional[float] = None,
                   chart: SaddleChart = CHART_PLUS, ord_tol: float = 1e-12,
                   decay_tol: float = 1e-6, rtol: float = flow.DEFAULT_RTOL,
                   atol: float = flow.DEFAULT_ATOL) -> FiberPoint:
    """Ordinate xi(o) of the local unstable fiber at time tau.

    The backward orbit of (o, xi(o)) stays in the tracking box and decays to
    the saddle; trial ordinates above/below exit the backward-time wedge
    through opposite rays, and bisection pinches the bracket to ``ord_tol``
    (for f == 0 the backward w flow is exactly the forward flow of the
    time-reversed field).
    """
    horizon = _default_horizon(params) if horizon is None else horizon
    xi = _fiber_batch(chart, "unstable", np.array([o]), tau, params, f,
                      horizon, ord_tol, decay_tol, rtol, atol)[0]
    resid = verify_fiber_decay(chart, "unstable", o, xi, tau, params, f,
                               horizon, rtol, atol)
    return FiberPoint(o, xi, horizon, resid)


def stable_fiber(o: float, tau: float, params: ModelParams,
                 f: Optional[Perturbation] = None, horizon: Optional[float] = None,
                 chart: SaddleChart = CHART_PLUS, ord_tol: float = 1e-12,
                 decay_tol: float = 1e-6, rtol: float = flow.DEFAULT_RTOL,
                 atol: float = flow.DEFAULT_ATOL) -> FiberPoint:
    """Mirror of `unstable_fiber`: abscissa on the contracting axis, forward time."""
    horizon = _default_horizon(params) if horizon is None else horizon
    xi = _fiber_batch(chart, "stable", np.array([o]), tau, params, f,
                      horizon, ord_tol, decay_tol, rtol, atol)[0]
    resid = verify_fiber_decay(chart, "stable", o, xi, tau, params, f,
                               horizon, rtol, atol)
    return FiberPoint(o, xi, horizon, resid)


def verify_fiber_decay(chart: SaddleChart, kind: str, o: float, ordinate: float,
                       tau: float, params: ModelParams,
                       f: Optional[Perturbation] = None,
                       horizon: Optional[float] = None,
                       rtol: float = flow.DEFAULT_RTOL,
                       atol: float = flow.DEFAULT_ATOL) -> float:
    """Smallest |u| reached along the fiber orbit (backward for unstable)."""
    horizon = _default_horizon(params) if horizon is None else horizon
    u0 = o + 1j * ordinate if kind == "unstable" else ordinate + 1j * o
    t, u = tau, np.array([u0], dtype=complex)
    best = abs(u0)
    n_chunks = 24
    dt = horizon / n_chunks * (1.0 if kind == "stable" else -1.0)
    for _ in range(n_chunks):
        try:
            u = flow_u(chart, t, u, t + dt, params, f, rtol, atol)
        except flow.BlowUp:
            break
        t += dt
        cur = abs(complex(u[0]))
        best = min(best, cur)
        # the bisection residual re-amplifies eventually; stop at the floor
        if cur > 10.0 * best and cur > 1e-9:
            break
    return best


# ---------------------------------------------------------------------------
# parameterized curves
# ---------------------------------------------------------------------------

class ParamCurve:
    """A parameterized curve p -> complex state, splined through knots."""

    def __init__(self, ps: np.ndarray, us: np.ndarray):
        ps = np.asarray(ps, dtype=float)
        us = np.asarray(us, dtype=complex)
        if len(ps) < 2:
            raise ValueError("need at least two knots")
        order = np.argsort(ps)
        self.ps = ps[order]
        self.us = us[order]
        if len(ps) >= 4:
            self._re = CubicSpline(self.ps, self.us.real)
            self._im = CubicSpline(self.ps, self.us.imag)
        else:
            self._re = lambda p: np.interp(p, self.ps, self.us.real)
            self._im = lambda p: np.interp(p, self.ps, self.us.imag)

    @property
    def domain(self) -> tuple:
        return (float(self.ps[0]), float(self.ps[-1]))

    def __call__(self, p):
        return np.asarray(self._re(p)) + 1j * np.asarray(self._im(p))

    @classmethod
    def from_function(cls, fn: Callable, lo: float, hi: float, n: int = 65) -> "ParamCurve":
        ps = np.linspace(lo, hi, n)
        return cls(ps, np.array([complex(fn(p)) for p in ps]))

    def derivative(self, p):
        if hasattr(self._re, "derivative"):
            return complex(self._re.derivative()(p) + 1j * self._im.derivative()(p))
        dp = 1e-7 * max(1.0, abs(self.ps[-1] - self.ps[0]))
        return (complex(self(p + dp)) - complex(self(p - dp))) / (2 * dp)

    def project(self, u: complex, n_scan: int = 257) -> tuple:
        """Parameter of the curve point nearest to u, plus the distance.

        Used by the re-anchored backward walk: projecting a state onto the
        verified curve removes the transverse error component (the one the
        backward flow amplifies).  A Newton polish on the orthogonality
        condition resolves the along-curve coordinate to machine precision,
        which is what bounds how far forward the read-out point stays on
        the shadowed orbit.
        """
        lo, hi = self.domain
        ps = np.linspace(lo, hi, n_scan)
        d = np.abs(np.asarray(self(ps)) - u)
        j = int(np.argmin(d))
        p = float(ps[j])
        h = float(ps[1] - ps[0])
        for _ in range(60):
            c = complex(self(p))
            dc = self.derivative(p)
            g = ((c - u) * dc.conjugate()).real
            gp = abs(dc) ** 2
            if gp == 0.0:
                break
            step = -g / gp
            step = max(-h, min(h, step))
            p_new = min(max(p + step, lo), hi)
            if abs(p_new - p) < 1e-16 * max(1.0, abs(p)):
                p = p_new
                break
            p = p_new
        return float(p), float(abs(complex(self(p)) - u))


def fiber_curve(chart: SaddleChart, kind: str, tau: float, params: ModelParams,
                f: Optional[Perturbation] = None, n: int = 33,
                span: Optional[float] = None, horizon: Optional[float] = None,
                ord_tol: float = 1e-12, rtol: float = flow.DEFAULT_RTOL,
                atol: float = flow.DEFAULT_ATOL) -> ParamCurve:
    """The fiber graph sampled on n abscissas and splined.

    For the unstable fiber the parameter is the expanding coordinate Re u and
    the curve is {o + i xi(o)}; for the stable fiber the parameter is Im u
    and the curve is {xi(o) + i o}.
    """
    span = 1.1 * params.beta if span is None else span
    os_ = np.linspace(-span, span, n)
    xs = _fiber_batch(chart, kind, os_, tau, params, f, horizon, ord_tol,
                      1e-6, rtol, atol)
    us = os_ + 1j * xs if kind == "unstable" else xs + 1j * os_
    return ParamCurve(os_, us)


# ---------------------------------------------------------------------------
# curve tracking through one time window
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    half_re: float
    half_im: float

    def inside(self, u, fat: float = 0.0) -> bool:
        return (abs(u.real) <= self.half_re + fat) and (abs(u.imag) <= self.half_im + fat)


@dataclass
class TrackedInterval:
    """Retained parameter interval of one tracked window."""

    mu: float
    nu: float
    orientation: int            # +1: curve(mu) lands on the low-scalar face
    window: Optional[int]
    window_class: Optional[str]
    end_curve: Optional[ParamCurve]
    residual: float             # parameter width of the final bisection brackets
    faces: tuple
    preimage: tuple             # (mu, nu) in the window's own input parameter
    diagnostics: dict = field(default_factory=dict)


def _sample_field(flow_map, t: float, u: complex, h: float = 1e-6) -> complex:
    return (complex(flow_map(t, np.array([u]), t + h)[0]) - u) / h


def _check_box_signs(flow_map, box: Box, t0: float, t1: float,
                     n_pts: int = 7, n_times: int = 5) -> bool:
    """Expanding outflow on |Re u| faces, inflow on |Im u| faces."""
    for t in np.linspace(t0, min(t1, t0 + abs(t1 - t0)), n_times):
        for s in np.linspace(-0.95, 0.95, n_pts):
            v_r = _sample_field(flow_map, t, complex(box.half_re, s * box.half_im))
            v_l = _sample_field(flow_map, t, complex(-box.half_re, s * box.half_im))
            v_t = _sample_field(flow_map, t, complex(s * box.half_re, box.half_im))
            v_b = _sample_field(flow_map, t, complex(s * box.half_re, -box.half_im))
            if not (v_r.real > 0 and v_l.real < 0 and v_t.imag < 0 and v_b.imag > 0):
                return False
    return True


def _choose_lambda_rho(flow_map, box: Box, t0: float, t1: float) -> tuple:
    """Largest fattening keeping the face signs, and the matching substep."""
    lam = None
    for frac in (0.5, 0.25, 0.1):
        fat = Box(box.half_re * (1 + frac), box.half_im)
        if _check_box_signs(flow_map, fat, t0, t1):
            lam = frac * box.half_re
            break
    if lam is None:
        raise TrackingLost("box face sign conditions fail on every fattening")
    vmax = 1e-12
    for t in np.linspace(t0, t1, 3):
        for c in (complex(box.half_re, box.half_im), complex(-box.half_re, box.half_im),
                  complex(box.half_re, 0), complex(0, box.half_im)):
            vmax = max(vmax, abs(_sample_field(flow_map, t, c)))
    rho = max(abs(t1 - t0) / 2048.0, min(lam / (2.0 * vmax), abs(t1 - t0)))
    return lam, rho


def _replay(flow_map, u0s: np.ndarray, t0: float, t1: float, rho: float,
            keep_going: Callable) -> tuple:
    """Flow a batch in substeps; per sample record the first violation.

    keep_going(t, u) -> None if fine, else a status string.  Returns
    (status array, final states, first-violation scalar array).
    """
    n = len(u0s)
    status = np.array(["in"] * n, dtype=object)
    us = u0s.astype(complex).copy()
    live = np.arange(n)
    t = t0
    while t < t1 - 1e-14 and len(live):
        t_next = min(t + rho, t1)
        us[live] = flow_map(t, us[live], t_next)
        t = t_next
        still = []
        for j in live:
            verdict = keep_going(t, complex(us[j]))
            if verdict is None:
                still.append(j)
            else:
                status[j] = verdict
        live = np.array(still, dtype=int)
    return status, us


def track_curve(curve: ParamCurve, t_start: float, t_end: float,
                params: Optional[ModelParams] = None,
                f: Optional[Perturbation] = None, *,
                chart: Optional[SaddleChart] = None,
                flow_map: Optional[Callable] = None,
                box: Box, end_scalar: Optional[Callable] = None,
                end_values: Optional[tuple] = None,
                out_to_scalar: Optional[Callable] = None,
                extra_check: Optional[Callable] = None,
                window: Optional[int] = None,
                n_samples: int = 33, par_tol: float = 1e-12,
                max_zoom: int = 12,
                rtol: float = flow.DEFAULT_RTOL,
                atol: float = flow.DEFAULT_ATOL) -> TrackedInterval:
    """One isolating-box tracking window.

    Flows the curve through [t_start, t_end] in substeps short enough that no
    sample can cross the lambda-fattened box undetected, zooms the parameter
    interval onto the run that never leaves the box, and finally bisects the
    endpoint images onto the two target values of ``end_scalar`` (default:
    the expanding coordinate on the box faces).  Samples leaving through the
    top/bottom faces contradict the face sign conditions and raise
    `TrackingLost`.
    """
    if flow_map is None:
        if chart is None or params is None:
            raise ValueError("need either flow_map or (chart, params)")
        flow_map = lambda t0, us, t1: flow_u(chart, t0, us, t1, params, f, rtol, atol)
    if end_scalar is None:
        end_scalar = lambda t, u: u.real
    if end_values is None:
        end_values = (-box.half_re, box.half_re)
    if out_to_scalar is None:
        out_to_scalar = lambda u: -math.inf if u.real < 0 else math.inf
    c_lo, c_hi = sorted(end_values)
    lam, rho = _choose_lambda_rho(flow_map, box, t_start, t_end)

    def keep_going(t, u):
        if abs(u.imag) > box.half_im + 1e-12:
            return "tb"
        if abs(u.real) > box.half_re + lam:
            return "out"
        if extra_check is not None and not extra_check(t, u):
            return "bad"
        return None

    def end_class(u_end, status):
        """Impute a scalar class at window end for exited samples."""
        if status == "tb":
            return "tb", math.nan
        if status == "out":
            # exited through an expanding face; past whichever target its side says
            s = out_to_scalar(u_end)
            return ("low", s) if s < 0 else ("high", s)
        if status == "bad":
            return "bad", math.nan
        return "in", end_scalar(t_end, u_end)

    p_lo, p_hi = curve.domain
    diag = {"lambda": lam, "rho": rho, "zooms": 0}
    run_lo = run_hi = None
    for zoom in range(max_zoom):
        ps = np.linspace(p_lo, p_hi, n_samples)
        u0 = np.asarray(curve(ps), dtype=complex)
        status, u_end = _replay(flow_map, u0, t_start, t_end, rho, keep_going)
        classes, scalars = [], []
        for j in range(len(ps)):
            cl, s = end_class(complex(u_end[j]), status[j])
            classes.append(cl)
            scalars.append(s)
        # the retained run: samples that survived with scalar inside (c_lo, c_hi)
        inside = [j for j in range(len(ps))
                  if classes[j] == "in" and c_lo < scalars[j] < c_hi]
        if not inside:
            # zoom between adjacent samples on opposite sides of the target
            # band (either parameter orientation)
            side = []
            for j in range(len(ps)):
                if classes[j] == "low" or (classes[j] == "in" and scalars[j] <= c_lo):
                    side.append(-1)
                elif classes[j] == "high" or (classes[j] == "in" and scalars[j] >= c_hi):
                    side.append(+1)
                else:
                    side.append(0)
            flips = [j for j in range(len(ps) - 1)
                     if side[j] != 0 and side[j + 1] != 0 and side[j] != side[j + 1]]
            if flips:
                j0 = min(flips, key=lambda j: abs(j - len(ps) // 2))
                if (ps[j0 + 1] - ps[j0]) < par_tol:
                    raise TrackingLost(
                        f"window {window}: retained run collapsed below tolerance")
                p_lo, p_hi = ps[j0], ps[j0 + 1]
                diag["zooms"] = zoom + 1
                continue
            raise TrackingLost(
                f"window {window}: curve image no longer spans the faces "
                f"(classes {set(classes)})")
        i0, i1 = min(inside), max(inside)
        contiguous = all(classes[j] == "in" for j in range(i0, i1 + 1))
        if not contiguous:
            inside_runs = []
            start = None
            for j in range(len(ps)):
                if j in inside and start is None:
                    start = j
                elif j not in inside and start is not None:
                    inside_runs.append((start, j - 1))
                    start = None
            if start is not None:
                inside_runs.append((start, len(ps) - 1))
            i0, i1 = max(inside_runs, key=lambda r: r[1] - r[0])
        if any(classes[j] == "tb" for j in range(max(i0 - 1, 0), min(i1 + 2, len(ps)))):
            raise TrackingLost(f"window {window}: sample left through a "
                               "contracting face next to the retained run")
        # brackets around the run
        bl = ps[i0 - 1] if i0 > 0 else ps[i0]
        bh = ps[i1 + 1] if i1 < len(ps) - 1 else ps[i1]
        wide = (ps[i1] - ps[i0]) < 0.2 * (p_hi - p_lo) and (i0 > 0 or i1 < len(ps) - 1)
        if wide and zoom < max_zoom - 1 and (bh - bl) > 4 * par_tol:
            p_lo, p_hi = bl, bh
            diag["zooms"] = zoom + 1
            continue
        run_lo, run_hi = i0, i1
        break
    if run_lo is None:
        raise TrackingLost(f"window {window}: zoom did not stabilize")

    # final exact bisections of the two face crossings
    def classify_param(p: float) -> float:
        u0 = np.array([complex(curve(p))])
        status, u_end = _replay(flow_map, u0, t_start, t_end, rho, keep_going)
        _, s = end_class(complex(u_end[0]), status[0])
        return s

    s_run = [scalars[j] for j in range(run_lo, run_hi + 1)]
    increasing = s_run[-1] >= s_run[0]

    def bisect_edge(p_in: float, p_out: float, target: float, keep_above: bool) -> tuple:
        a, b = p_in, p_out
        for _ in range(64):
            if abs(b - a) <= par_tol:
                break
            m = 0.5 * (a + b)
            s = classify_param(m)
            ok = (not math.isnan(s)) and ((s > target) if keep_above else (s < target))
            if ok:
                a = m
            else:
                b = m
        return a, abs(b - a)

    lo_target, hi_target = (c_lo, c_hi) if increasing else (c_hi, c_lo)
    p_in0, p_in1 = ps[run_lo], ps[run_hi]
    p_out0 = ps[run_lo - 1] if run_lo > 0 else ps[run_lo]
    p_out1 = ps[run_hi + 1] if run_hi < len(ps) - 1 else ps[run_hi]
    if p_out0 != p_in0:
        mu, w0 = bisect_edge(p_in0, p_out0, lo_target, keep_above=increasing)
    else:
        mu, w0 = p_in0, 0.0
    if p_out1 != p_in1:
        nu, w1 = bisect_edge(p_in1, p_out1, hi_target, keep_above=not increasing)
    else:
        nu, w1 = p_in1, 0.0
    if not mu < nu:
        raise TrackingLost(f"window {window}: empty retained interval")

    # re-anchored output curve through exactly flowed states; the new
    # parameter is the end scalar when it is monotone along the run
    ps_f = np.linspace(mu, nu, n_samples)
    u0_f = np.asarray(curve(ps_f), dtype=complex)
    status_f, u_end_f = _replay(flow_map, u0_f, t_start, t_end, rho, keep_going)
    bad = [j for j in range(1, len(ps_f) - 1) if status_f[j] != "in"]
    if bad:
        raise TrackingLost(
            f"window {window}: containment violated inside the retained interval")
    s_f = np.array([end_scalar(t_end, complex(u)) for u in u_end_f])
    ds = np.diff(s_f)
    if np.all(ds > 0) or np.all(ds < 0):
        end_curve = ParamCurve(s_f, u_end_f)
    else:
        end_curve = ParamCurve(ps_f, u_end_f)
    orientation = +1 if increasing else -1
    return TrackedInterval(
        mu=float(mu), nu=float(nu), orientation=orientation, window=window,
        window_class=None, end_curve=end_curve,
        residual=float(max(w0, w1)),
        faces=(f"scalar={lo_target:.6g}", f"scalar={hi_target:.6g}"),
        preimage=(float(mu), float(nu)), diagnostics=diag)


# ---------------------------------------------------------------------------
# the window cascade
# ---------------------------------------------------------------------------

def word_alignment(word: Sequence[int], left_tail: int = 0, right_tail: int = 0,
                   k0: Optional[int] = None) -> int:
    """Window index of word[0] such that every switch has legal parity.

    A 0->1 switch can only happen into an even window (the push from +1
    toward -1 lives near even multiples of pi), a 1->0 switch only into an
    odd one.  Words without a consistent alignment are not realizable and
    raise ValueError.
    """
    word = [int(s) for s in word]
    syms = [int(left_tail)] + word + [int(right_tail)]
    req = None
    for i in range(len(syms) - 1):
        if syms[i] != syms[i + 1]:
            want = 0 if syms[i + 1] == 1 else 1      # parity of window k0 + i
            par = (want - i) % 2
            if req is None:
                req = par
            elif req != par:
                raise ValueError(
                    f"word {''.join(map(str, word))} admits no parity-consistent "
                    "window alignment (not realizable by the transit dynamics)")
    if k0 is not None:
        if req is not None and k0 % 2 != req:
            raise ValueError(f"k0={k0} violates the parity constraint of the word")
        return int(k0)
    k = -((len(word) + 1) // 2)
    if req is not None and k % 2 != req:
        k += 1
    return k


@dataclass
class WindowRecord:
    k: int
    symbol: int
    kind: str                      # "settle" | "preswitch" | "transit"
    interval: TrackedInterval
    window_class: Optional[str]
    input_domain: tuple
    input_curve: Optional[ParamCurve] = None
    input_chart: Optional[SaddleChart] = None


@dataclass
class CascadeResult:
    word: list
    k0: int
    left_tail: int
    right_tail: int
    windows: list
    final_curve: ParamCurve
    final_time: float
    final_chart: SaddleChart
    anchor_fiber_residual: float
    diagnostics: dict = field(default_factory=dict)

    def nesting(self) -> list:
        """(input domain, retained interval) per window; retained must nest
        strictly inside the re-anchored input domain."""
        return [(w.input_domain, (w.interval.mu, w.interval.nu)) for w in self.windows]


def _band_targets(params: ModelParams) -> tuple:
    # departure progress sigma = saddle*(saddle - Re q) at the window end;
    # the joint band U cap Z puts Re q between the strip edge (sigma = 0.5)
    # and the square edge (sigma = a)
    return (0.5, params.a)


def _departure_scalar(chart: SaddleChart):
    sad = float(chart.saddle)

    def scalar(t, u):
        q = complex(chart.z_of_u(t, u))
        return sad * (sad - q.real)

    return scalar


def _departure_out_imputer(chart: SaddleChart, t_end: float):
    # which Re-u side is "toward the other saddle" at the window end
    probe = chart.u_of_z(t_end, chart.saddle - 0.1 * chart.saddle)
    sgn = 1.0 if complex(probe).real > 0 else -1.0

    def impute(u):
        return math.inf if u.real * sgn > 0 else -math.inf

    return impute


def _dense_z_batch(z0s: np.ndarray, t0: float, t1: float, params: ModelParams,
                   f: Optional[Perturbation], n_eval: int,
                   rtol: float, atol: float):
    """Dense z-frame batch flow; returns (ts, Z[t_index, sample])."""
    from scipy.integrate import solve_ivp
    z0s = np.asarray(z0s, dtype=complex)
    n = len(z0s)
    frame = get_frame("z")

    def rhs(t, y):
        z = y[:n] + 1j * y[n:]
        v = np.asarray(frame.field(t, z, params, f), dtype=complex)
        return np.concatenate([v.real, v.imag])

    sol = solve_ivp(rhs, (t0, t1), np.concatenate([z0s.real, z0s.imag]),
                    method="DOP853", rtol=rtol, atol=atol, dense_output=True)
    if not sol.success:
        raise flow.ToleranceNotMet(sol.message)
    ts = np.linspace(t0, t1, n_eval)
    Y = sol.sol(ts)
    return ts, (Y[:n].T + 1j * Y[n:].T)


def _capture_box(params: ModelParams) -> Box:
    # the corridor lands in {|Re u| <= 3 beta, |Im u| <= 11 beta/10}
    return Box(3.0 * params.beta, 1.1 * params.beta)


def _transit_window(curve: ParamCurve, chart_from: SaddleChart,
                    chart_to: SaddleChart, k: int, params: ModelParams,
                    f: Optional[Perturbation], nxt_same: bool,
                    n_samples: int, regions: dict,
                    rtol: float, atol: float) -> TrackedInterval:
    """One switching window: corridor transit then capture tracking.

    Phase 1 follows the curve through the corridor slab [k pi - b, k pi + g]:
    a sample passes if it starts in the closure of the source square and of Z,
    stays in Z on the slab, and reaches the capture box of the target chart
    within beta + gamma.  Phase 2 tracks the passing piece in the target
    chart through the rest of the window.
    """
    b, g, a = params.beta, params.gamma, params.a
    t_a = k * math.pi - b
    t_sync = k * math.pi + g
    t_b = (k + 1) * math.pi - b
    lo, hi = curve.domain
    ps = np.linspace(lo, hi, 2 * n_samples + 1)
    u0 = np.asarray(curve(ps), dtype=complex)
    z0 = np.asarray(chart_from.z_of_u(t_a, u0), dtype=complex)
    ts, Z = _dense_z_batch(z0, t_a, t_sync, params, f, 97, rtol, atol)
    src = regions["U"] if chart_from.saddle == 1 else regions["W"]
    tgt_big = Box(a, a)
    Zreg = regions["Z"]
    cap = _capture_box(params)
    passing = np.zeros(len(ps), dtype=bool)
    arrivals = np.full(len(ps), math.nan)
    for j in range(len(ps)):
        if not src.member(t_a, complex(Z[0, j])).in_closure:
            continue
        ok = True
        for i, t in enumerate(ts):
            try:
                if not Zreg.member(float(t), complex(Z[i, j])).in_closure:
                    ok = False
                    break
            except geometry.QueryOutsideTimeSlab:
                ok = False
                break
        if not ok:
            continue
        # handoff: inside the target square when the corridor slab closes
        if not tgt_big.inside(complex(chart_to.u_of_z(t_sync, complex(Z[-1, j])))):
            continue
        passing[j] = True
        for i, t in enumerate(ts):
            u = complex(chart_to.u_of_z(float(t), complex(Z[i, j])))
            if cap.inside(u):
                arrivals[j] = float(t) - t_a
                break
        # the capture-box deadline t_w <= beta + gamma is a large-R feature;
        # at moderate R the capture happens later in the window
        if params.mode == "certification" and math.isnan(arrivals[j]):
            passing[j] = False
    runs, start = [], None
    for j in range(len(ps)):
        if passing[j] and start is None:
            start = j
        elif not passing[j] and start is not None:
            runs.append((start, j - 1))
            start = None
    if start is not None:
        runs.append((start, len(ps) - 1))
    runs = [r for r in runs if r[1] - r[0] >= 2]
    if not runs:
        raise CorridorMiss(
            f"window {k}: no curve piece completes the U->Z->capture transit "
            f"(passing {int(passing.sum())}/{len(ps)})")
    r0, r1 = max(runs, key=lambda r: r[1] - r[0])
    ps_run = ps[r0:r1 + 1]
    u_sync = np.array([chart_to.u_of_z(t_sync, complex(Z[-1, j]))
                       for j in range(r0, r1 + 1)], dtype=complex)
    sub = ParamCurve(ps_run, u_sync)
    big = Box(a, a)
    if nxt_same:
        res = track_curve(sub, t_sync, t_b, params, f, chart=chart_to, box=big,
                          end_values=(-1.1 * b, 1.1 * b), window=k,
                          n_samples=n_samples, rtol=rtol, atol=atol)
    else:
        res = track_curve(sub, t_sync, t_b, params, f, chart=chart_to, box=big,
                          end_scalar=_departure_scalar(chart_to),
                          end_values=_band_targets(params),
                          out_to_scalar=_departure_out_imputer(chart_to, t_b),
                          window=k, n_samples=n_samples, rtol=rtol, atol=atol)
    arr = arrivals[r0:r1 + 1]
    if np.any(~np.isnan(arr)):
        res.diagnostics["arrival_time_range"] = [float(np.nanmin(arr)),
                                                 float(np.nanmax(arr))]
    else:
        res.diagnostics["arrival_time_range"] = None  # capture later in the window
    res.diagnostics["transit"] = True
    return res


def cascade(word: Sequence[int], params: ModelParams,
            f: Optional[Perturbation] = None, *, k0: Optional[int] = None,
            left_tail: int = 0, right_tail: int = 0, n_samples: int = 33,
            verify_classes: bool = True,
            rtol: float = flow.DEFAULT_RTOL,
            atol: float = flow.DEFAULT_ATOL) -> CascadeResult:
    """Window-by-window interval cascade realizing an admissible word.

    Starts from the unstable fiber of the left-tail saddle one window before
    the word, tracks through each window (switching charts at symbol
    changes), and ends with a curve spanning the tracking box of the
    right-tail chart.  Each window re-anchors the curve, so the per-window
    intervals are expressed in the re-anchored parameter; nesting of the
    retained sets is exposed via `CascadeResult.nesting`.
    """
    word = [int(s) for s in word]
    if any(s not in (0, 1) for s in word):
        raise ValueError("symbols must be 0 or 1")
    k0 = word_alignment(word, left_tail, right_tail, k0)
    win_syms = [int(left_tail)] + word
    if win_syms[-1] != int(right_tail):
        win_syms.append(int(right_tail))
    k_first = k0 - 1
    regions = geometry.build_regions(params)
    chart0 = chart_for_symbol(win_syms[0])
    t_first = k_first * math.pi - params.beta
    curve = fiber_curve(chart0, "unstable", t_first, params, f, n=n_samples,
                        rtol=rtol, atol=atol)
    mid_o = 0.5 * 1.1 * params.beta
    anchor_resid = unstable_fiber(mid_o, t_first, params, f, chart=chart0,
                                  rtol=rtol, atol=atol).residual
    b, a = params.beta, params.a
    K_box = Box(1.1 * b, 2 * b * b)
    big = Box(a, a)
    prev = win_syms[0]
    records = []
    for j, sym in enumerate(win_syms):
        k = k_first + j
        nxt = win_syms[j + 1] if j + 1 < len(win_syms) else int(right_tail)
        chart_cur = chart_for_symbol(sym)
        t_a = k * math.pi - params.beta
        t_b = (k + 1) * math.pi - params.beta
        input_domain = curve.domain
        if sym == prev:
            if nxt == sym:
                res = track_curve(curve, t_a, t_b, params, f, chart=chart_cur,
                                  box=K_box, end_values=(-1.1 * b, 1.1 * b),
                                  window=k, n_samples=n_samples,
                                  rtol=rtol, atol=atol)
                kind = "settle"
            else:
                res = track_curve(curve, t_a, t_b, params, f, chart=chart_cur,
                                  box=big,
                                  end_scalar=_departure_scalar(chart_cur),
                                  end_values=_band_targets(params),
                                  out_to_scalar=_departure_out_imputer(chart_cur, t_b),
                                  window=k, n_samples=n_samples,
                                  rtol=rtol, atol=atol)
                kind = "preswitch"
        else:
            res = _transit_window(curve, chart_for_symbol(prev), chart_cur, k,
                                  params, f, nxt_same=(nxt == sym),
                                  n_samples=n_samples, regions=regions,
                                  rtol=rtol, atol=atol)
            kind = "transit"
        wclass = None
        if verify_classes:
            p_mid = 0.5 * (res.mu + res.nu)
            chart_in = chart_for_symbol(prev)
            z_mid = complex(chart_in.z_of_u(t_a, complex(curve(p_mid))))
            seg = flow.integrate("z", t_a, z_mid, t_b, params, f, rtol, atol)
            wclass = coding.classify_window(seg, k, params, regions)
        res.window_class = wclass
        records.append(WindowRecord(k, sym, kind, res, wclass, input_domain,
                                    input_curve=curve,
                                    input_chart=chart_for_symbol(prev)))
        curve = res.end_curve
        prev = sym
    t_end = (k_first + len(win_syms)) * math.pi - params.beta
    return CascadeResult(word, k0, int(left_tail), int(right_tail), records,
                         curve, t_end, chart_for_symbol(prev), anchor_resid)


# ---------------------------------------------------------------------------
# shooting
# ---------------------------------------------------------------------------

def _min_abs_forward(chart: SaddleChart, u0: complex, t0: float,
                     params: ModelParams, f: Optional[Perturbation],
                     horizon: float, rtol: float, atol: float) -> float:
    t, u = t0, np.array([u0], dtype=complex)
    best = abs(u0)
    for _ in range(24):
        try:
            u = flow_u(chart, t, u, t + horizon / 24, params, f, rtol, atol)
        except flow.BlowUp:
            break
        t += horizon / 24
        cur = abs(complex(u[0]))
        best = min(best, cur)
        if cur > 10.0 * best and cur > 1e-9:
            break
    return best


@dataclass
class ShotResult:
    word: list
    k0: int
    q_x: complex
    window_classes: dict          # window index -> class (cascade + verified tails)
    intervals: list               # WindowRecord list
    residuals: dict
    final_time: float
    params_label: str

    def to_json_dict(self) -> dict:
        return {
            "word": "".join(str(s) for s in self.word),
            "k0": self.k0,
            "q_x": {"re": f"{self.q_x.real:.17g}", "im": f"{self.q_x.imag:.17g}"},
            "window_classes": {str(k): v for k, v in sorted(self.window_classes.items())},
            "intervals": [{
                "k": w.k, "symbol": w.symbol, "kind": w.kind,
                "mu": w.interval.mu, "nu": w.interval.nu,
                "orientation": w.interval.orientation,
                "residual": w.interval.residual,
                "class": w.window_class,
            } for w in self.intervals],
            "residuals": self.residuals,
            "regime": self.params_label,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=1)


def shoot(word: Sequence[int], params: ModelParams,
          f: Optional[Perturbation] = None, *, left_tail: int = 0,
          right_tail: int = 0, k0: Optional[int] = None, n_samples: int = 33,
          tail_windows: int = 3, rtol: float = flow.DEFAULT_RTOL,
          atol: float = flow.DEFAULT_ATOL) -> ShotResult:
    """Shoot the connecting orbit of a prescribed word between the tails.

    Runs the cascade for the word, intersects the final tracked curve with
    the stable fiber of the right-tail saddle (1-D root find on the cascade
    parameter), and reads the orbit back to time -beta by the contracting
    backward flow.  Tail windows beyond the word are classified from the
    matched orbit itself: backward windows follow the anchor fiber, forward
    windows the stable fiber.
    """
    casc = cascade(word, params, f, k0=k0, left_tail=left_tail,
                   right_tail=right_tail, n_samples=n_samples,
                   rtol=rtol, atol=atol)
    chart_out = casc.final_chart
    t_end = casc.final_time
    b = params.beta
    sfc = fiber_curve(chart_out, "stable", t_end, params, f, n=17,
                      span=5.0 * b * b, rtol=rtol, atol=atol)
    xi_tilde = CubicSpline(sfc.ps, sfc.us.real)
    C = casc.final_curve
    lo, hi = C.domain
    ps = np.linspace(lo, hi, 201)
    us = np.asarray(C(ps), dtype=complex)
    gs = us.real - xi_tilde(np.clip(us.imag, sfc.ps[0], sfc.ps[-1]))
    idx = np.nonzero(np.diff(np.signbit(gs)))[0]
    if len(idx) == 0:
        raise NoIntersection("final curve does not cross the stable fiber graph")
    from scipy.optimize import brentq

    def gfun(p):
        u = complex(C(p))
        return u.real - float(xi_tilde(min(max(u.imag, sfc.ps[0]), sfc.ps[-1])))

    i = idx[len(idx) // 2]
    p_star = brentq(gfun, float(ps[i]), float(ps[i + 1]), xtol=1e-14)
    u_star = complex(C(p_star))
    z_star = complex(chart_out.z_of_u(t_end, u_star))
    horizon = _default_horizon(params)
    residuals = {
        "match": abs(gfun(p_star)),
        "fiber_unstable": casc.anchor_fiber_residual,
        "fiber_stable": _min_abs_forward(chart_out, u_star, t_end, params, f,
                                         horizon, rtol, atol),
    }
    # re-anchored backward walk to -beta: hop one window at a time and
    # project onto each window's verified input curve; the projection removes
    # the transverse error component, which is what the backward flow
    # amplifies.  q_x is the state at the boundary -beta.
    u_cur, t_cur, chart_cur = u_star, t_end, chart_out
    q_x = None
    proj = []
    regions = geometry.build_regions(params)
    window_classes = {}
    for w in reversed(casc.windows):
        t_a = w.k * math.pi - b
        z_cur = complex(chart_cur.z_of_u(t_cur, complex(u_cur)))
        orb = flow.integrate("z", t_cur, z_cur, t_a, params, f, rtol, atol)
        u_a = complex(w.input_chart.u_of_z(t_a, complex(orb.point(t_a))))
        p_proj, dist = w.input_curve.project(u_a)
        p_proj = min(max(p_proj, w.interval.mu), w.interval.nu)
        u_cur = complex(w.input_curve(p_proj))
        t_cur, chart_cur = t_a, w.input_chart
        proj.append(dist)
        # classify this window from the matched orbit's own anchor state:
        # one window of amplification keeps the verdict machine-trustworthy
        z_anchor = complex(chart_cur.z_of_u(t_a, u_cur))
        seg = flow.integrate("z", t_a, z_anchor, t_a + math.pi, params, f, rtol, atol)
        window_classes[w.k] = coding.classify_window(seg, w.k, params, regions)
        if q_x is None and abs(t_a - (-b)) < 1e-9:
            q_x = complex(chart_cur.z_of_u(t_a, u_cur))
    residuals["backward_projection"] = max(proj) if proj else 0.0
    if q_x is None:
        # the word sits entirely right of -beta (k0 > 0 cannot happen by
        # alignment, but guard the degenerate empty-word case)
        q_x = complex(chart_cur.z_of_u(t_cur, u_cur))
    k_first = casc.windows[0].k
    k_last = casc.windows[-1].k
    chart_in = chart_for_symbol(casc.left_tail)
    window_classes.update(_tail_walk(
        chart_in, "unstable", u_cur, t_cur, tail_windows, params, f,
        direction=-1, regions=regions, rtol=rtol, atol=atol))
    # restart the forward walk from a freshly bisected stable-fiber point
    o_out = u_star.imag
    xi_out = _fiber_batch(chart_out, "stable", np.array([o_out]), t_end,
                          params, f, None, 1e-13, 1e-6, rtol, atol)[0]
    window_classes.update(_tail_walk(
        chart_out, "stable", xi_out + 1j * o_out, t_end, tail_windows, params,
        f, direction=+1, regions=regions, rtol=rtol, atol=atol))
    return ShotResult(list(map(int, word)), casc.k0, q_x, window_classes,
                      casc.windows, residuals, t_end, params.regime_label)


def _tail_walk(chart: SaddleChart, kind: str, u0: complex, t0: float,
               n_windows: int, params: ModelParams, f: Optional[Perturbation],
               direction: int, regions: dict, rtol: float, atol: float) -> dict:
    """Classify tail windows along a saddle fiber.

    The state is re-projected onto a freshly bisected fiber at every window
    boundary, so the walk stays on the manifold for arbitrarily many windows
    (backward with the unstable fiber, forward with the stable one).
    """
    classes = {}
    u_cur, t_cur = complex(u0), float(t0)
    b = params.beta
    for _ in range(n_windows):
        t_next = t_cur + direction * math.pi
        k = round((min(t_cur, t_next) + b) / math.pi)
        z_cur = complex(chart.z_of_u(t_cur, u_cur))
        try:
            orb = flow.integrate("z", t_cur, z_cur, t_next, params, f, rtol, atol)
            classes[k] = coding.classify_window(orb, k, params, regions)
        except flow.BlowUp:
            classes[k] = coding.UNCLASSIFIED
            break
        u_next = complex(chart.u_of_z(t_next, complex(orb.point(t_next))))
        if kind == "unstable":
            o = float(np.clip(u_next.real, -1.1 * b, 1.1 * b))
            xi = _fiber_batch(chart, "unstable", np.array([o]), t_next, params,
                              f, None, 1e-13, 1e-6, rtol, atol)[0]
            u_cur = o + 1j * xi
        else:
            o = float(np.clip(u_next.imag, -1.1 * b, 1.1 * b))
            xi = _fiber_batch(chart, "stable", np.array([o]), t_next, params,
                              f, None, 1e-13, 1e-6, rtol, atol)[0]
            u_cur = xi + 1j * o
        t_cur = t_next
    return classes
