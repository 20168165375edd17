"""Rigorous interval-arithmetic certificates for the static boundary inequalities.

Every inequality the geometric construction leans on reduces to a scalar chain
in (R, N, beta) plus an auxiliary range variable (a wedge radius theta or a
strip abscissa).  The certifier encloses each chain with outward-rounded
interval arithmetic over a parameter box, subdividing adaptively, and returns
PASS / FAIL / UNDECIDED with the enclosure of the worst-case margin.

Directed rounding is explicit: every arithmetic result is widened by one ulp
per side with `math.nextafter`; transcendental enclosures use endpoint
evaluation on ranges where the function is monotone, widened by two ulps.
The checked chains are the displayed right-hand bounds of the derivation
(time-independent), not inner products along floating trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .geometry import zeta_tilde as _zeta_tilde_float
from .model import ModelParams

__all__ = [
    "Interval",
    "ParamBox",
    "Certificate",
    "DomainError",
    "cert_gamma_exit",
    "cert_gamma_inward",
    "cert_K_faces",
    "cert_Ktilde_expansion",
    "cert_strip_leftward",
    "all_certificates",
    "zeta_tilde",
    "zeta_tilde_interval",
    "riccati_rhs",
    "riccati_equilibrium",
    "riccati_closed_form",
    "spot_check",
]

_INF = math.inf


def _dn(x: float) -> float:
    return math.nextafter(x, -_INF)


def _up(x: float) -> float:
    return math.nextafter(x, _INF)


def _dn2(x: float) -> float:
    return _dn(_dn(x))


def _up2(x: float) -> float:
    return _up(_up(x))


@dataclass(frozen=True)
class Interval:
    """Closed interval with outward-rounded arithmetic."""

    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise ValueError(f"bad interval [{self.lo}, {self.hi}]")

    # -- constructors ------------------------------------------------------

    @classmethod
    def point(cls, x: float) -> "Interval":
        return cls(float(x), float(x))

    @classmethod
    def frac(cls, num: int, den: int) -> "Interval":
        """Tight enclosure of the exact rational num/den."""
        q = num / den
        if Fraction(q) == Fraction(num, den):
            return cls(q, q)
        return cls(_dn(q), _up(q))

    @staticmethod
    def _coerce(x) -> "Interval":
        if isinstance(x, Interval):
            return x
        return Interval.point(float(x))

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        o = self._coerce(other)
        if o.lo == 0.0 and o.hi == 0.0:
            return self
        if self.lo == 0.0 and self.hi == 0.0:
            return o
        return Interval(_dn(self.lo + o.lo), _up(self.hi + o.hi))

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    @property
    def is_zero(self) -> bool:
        return self.lo == 0.0 and self.hi == 0.0

    def __mul__(self, other):
        o = self._coerce(other)
        if self.is_zero or o.is_zero:
            return Interval(0.0, 0.0)
        cands = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return Interval(_dn(min(cands)), _up(max(cands)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o.lo <= 0.0 <= o.hi:
            raise ZeroDivisionError("interval division by an interval containing 0")
        if self.is_zero:
            return Interval(0.0, 0.0)
        cands = (self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi)
        return Interval(_dn(min(cands)), _up(max(cands)))

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, k: int):
        if k != 2:
            raise NotImplementedError("only squares are needed")
        return self.sq()

    def sq(self) -> "Interval":
        if self.is_zero:
            return Interval(0.0, 0.0)
        cands = (self.lo * self.lo, self.hi * self.hi)
        lo = 0.0 if self.lo <= 0.0 <= self.hi else _dn(min(cands))
        return Interval(lo, _up(max(cands)))

    def abs(self) -> "Interval":
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return Interval(0.0, max(-self.lo, self.hi))

    # -- monotone elementary functions --------------------------------------

    def sqrt(self) -> "Interval":
        if self.lo < 0:
            raise ValueError("sqrt of an interval reaching below 0")
        return Interval(max(0.0, _dn2(math.sqrt(self.lo))), _up2(math.sqrt(self.hi)))

    def sin(self) -> "Interval":
        # increasing on [-pi/2, pi/2]; the chains only call it on narrow angles
        if self.is_zero:
            return Interval(0.0, 0.0)
        if not (-math.pi / 2 <= self.lo and self.hi <= math.pi / 2):
            raise ValueError("sin enclosure only supported on [-pi/2, pi/2]")
        return Interval(max(-1.0, _dn2(math.sin(self.lo))), min(1.0, _up2(math.sin(self.hi))))

    def cos(self) -> "Interval":
        # decreasing on [0, pi]; tolerate outward-rounding spill just below 0,
        # where the even symmetry caps the maximum at 1
        if not (-1e-9 <= self.lo and self.hi <= math.pi):
            raise ValueError("cos enclosure only supported on [0, pi]")
        hi = 1.0 if self.lo <= 0.0 else min(1.0, _up2(math.cos(self.lo)))
        return Interval(max(-1.0, _dn2(math.cos(self.hi))), hi)

    def tan(self) -> "Interval":
        if not (-math.pi / 2 < self.lo and self.hi < math.pi / 2):
            raise ValueError("tan enclosure only supported on (-pi/2, pi/2)")
        return Interval(_dn2(math.tan(self.lo)), _up2(math.tan(self.hi)))

    def exp(self) -> "Interval":
        return Interval(max(0.0, _dn2(math.exp(self.lo))), _up2(math.exp(self.hi)))

    # -- queries -------------------------------------------------------------

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def split(self) -> tuple:
        m = self.mid
        return Interval(self.lo, m), Interval(m, self.hi)


# ---------------------------------------------------------------------------
# parameter boxes and certificates
# ---------------------------------------------------------------------------

def _as_interval(v) -> Interval:
    if isinstance(v, Interval):
        return v
    if isinstance(v, (tuple, list)):
        return Interval(float(v[0]), float(v[1]))
    return Interval.point(float(v))


@dataclass(frozen=True)
class ParamBox:
    """Ranges for (R, N, a, beta); couple_RN keeps N <= R/100 inside the box."""

    R: Interval
    N: Interval = Interval.point(0.0)
    a: Interval = Interval.point(0.7)
    beta: Interval = Interval.point(0.01)
    couple_RN: bool = True

    @classmethod
    def at(cls, R=100.0, N=0.0, a=0.7, beta=0.01, couple_RN=True) -> "ParamBox":
        return cls(_as_interval(R), _as_interval(N), _as_interval(a),
                   _as_interval(beta), couple_RN)

    @classmethod
    def from_params(cls, params: ModelParams) -> "ParamBox":
        return cls.at(params.R, params.N, params.a, params.beta)

    def describe(self) -> dict:
        return {
            "R": [self.R.lo, self.R.hi], "N": [self.N.lo, self.N.hi],
            "a": [self.a.lo, self.a.hi], "beta": [self.beta.lo, self.beta.hi],
            "couple_RN": self.couple_RN,
        }


@dataclass
class Certificate:
    inequality: str
    box: dict
    verdict: str                      # "PASS" | "FAIL" | "UNDECIDED"
    margin: Optional[tuple]           # enclosure of the worst-case margin
    subdivisions: int
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def to_json_dict(self) -> dict:
        return {
            "inequality": self.inequality, "box": self.box, "verdict": self.verdict,
            "margin": list(self.margin) if self.margin else None,
            "subdivisions": self.subdivisions, "details": self.details,
        }


MAX_DEPTH_PER_AXIS = 20


def _decide(chain: Callable, axes: dict, sense: str,
            couple: Optional[Callable] = None,
            max_depth: int = MAX_DEPTH_PER_AXIS) -> tuple:
    """Subdivide ``axes`` until the chain is decided everywhere.

    sense is one of ">0", ">=0", "<0".  Returns (verdict, margin, leaves).
    The margin encloses the box-wide worst case (infimum for the > senses,
    supremum for "<0").  Any certainly-violated leaf yields FAIL at once;
    exceeding the depth cap on every splittable axis yields UNDECIDED.
    """
    stack = [(dict(axes), {k: 0 for k in axes})]
    leaves = 0
    m_lo = m_hi = None
    while stack:
        ax, depth = stack.pop()
        if couple is not None:
            ax = couple(ax)
            if ax is None:
                continue
        val = chain(**{k: v for k, v in ax.items()})
        if sense == ">0":
            ok, bad = val.lo > 0.0, val.hi <= 0.0
        elif sense == ">=0":
            ok, bad = val.lo >= 0.0, val.hi < 0.0
        elif sense == "<0":
            ok, bad = val.hi < 0.0, val.lo >= 0.0
        else:
            raise ValueError(sense)
        if ok:
            leaves += 1
            if sense == "<0":
                m_lo = val.lo if m_lo is None else max(m_lo, val.lo)
                m_hi = val.hi if m_hi is None else max(m_hi, val.hi)
            else:
                m_lo = val.lo if m_lo is None else min(m_lo, val.lo)
                m_hi = val.hi if m_hi is None else min(m_hi, val.hi)
            continue
        if bad:
            return "FAIL", (val.lo, val.hi), leaves + 1
        # undecided: split the relatively widest splittable axis
        cands = [(k, v) for k, v in ax.items()
                 if depth[k] < max_depth and v.width > 0.0]
        if not cands:
            return "UNDECIDED", (val.lo, val.hi), leaves + 1
        k, v = max(cands, key=lambda kv: kv[1].width / max(abs(kv[1].mid), 1e-300))
        left, right = v.split()
        d2 = dict(depth)
        d2[k] += 1
        stack.append(({**ax, k: left}, d2))
        stack.append(({**ax, k: right}, dict(d2)))
    if m_lo is None:
        return "PASS", None, leaves
    return "PASS", (m_lo, m_hi), leaves


def _couple_RN(box: ParamBox):
    if not box.couple_RN:
        return None

    def clip(ax):
        if "N" not in ax or "R" not in ax:
            return ax
        n_cap = ax["R"].hi / 100.0
        if ax["N"].lo > n_cap:
            return None
        if ax["N"].hi > n_cap:
            ax = {**ax, "N": Interval(ax["N"].lo, n_cap)}
        return ax

    return clip


# ---------------------------------------------------------------------------
# the scalar chains (interval arguments in, interval out)
# ---------------------------------------------------------------------------

F = Interval.frac


def chain_gamma_exit(R: Interval, beta: Interval, theta: Interval) -> Interval:
    """2 R sin(2 beta) - R theta^2 - theta/2 on the wedge rays."""
    return 2 * R * (2 * beta).sin() - R * theta.sq() - theta * F(1, 2)


def chain_gamma_inward(R: Interval, beta: Interval, x: Interval) -> Interval:
    """Inner factor of Re[a] (-2R + R Re[a](1 + tan^2 b) + sqrt(1 + tan^2 b)/2)."""
    t2 = beta.tan().sq()
    return -2 * R + R * x * (1 + t2) + F(1, 2) * (1 + t2).sqrt()


def chain_K1(R: Interval, beta: Interval) -> Interval:
    """Outflow bound on the left/right box faces:

    -R(11 b/5 - (11 b/10)^2 - 4 b^4) + 11 b/10 + 2 b^2  (< 0 required)
    """
    b = beta
    inner = F(11, 5) * b - (F(11, 10) * b).sq() - 4 * b.sq().sq()
    return -(R * inner) + F(11, 10) * b + 2 * b.sq()


def chain_K3(R: Interval, beta: Interval) -> Interval:
    """Inflow bound on the bottom/top box faces:

    R(4 b^2 - 121 b^2/100 - 4 b^4) - 11 b/5  (> 0 required)
    """
    b = beta
    inner = 4 * b.sq() - F(121, 100) * b.sq() - 4 * b.sq().sq()
    return R * inner - F(11, 5) * b


def chain_Ktilde_expansion(R: Interval, beta: Interval) -> Interval:
    """Margin of the vertical expansion rate over R:

    (2R - 1/2 - R sqrt(2) (11 sqrt(2) + 24)/10 beta) - R  (>= 0 required)
    """
    s2 = Interval.point(2.0).sqrt()
    coef = s2 * (11 * s2 + 24) * F(1, 10)
    return 2 * R - F(1, 2) - R * coef * beta - R


def chain_Ktilde_diag_inner(R: Interval, beta: Interval, theta: Interval) -> Interval:
    """Diagonal-face product with the positive factor theta removed:

    -4R + 2R (sqrt(2) theta + 24 beta/10) + 1  (< 0 required for theta > 0)
    """
    s2 = Interval.point(2.0).sqrt()
    return -4 * R + 2 * R * (s2 * theta + F(12, 5) * beta) + 1


def chain_Ktilde_diag_product(R: Interval, beta: Interval, theta: Interval) -> Interval:
    """The displayed product form -4 R theta + 2 R theta (sqrt2 theta + 2.4 b) + theta."""
    s2 = Interval.point(2.0).sqrt()
    return -4 * R * theta + 2 * R * theta * (s2 * theta + F(12, 5) * beta) + theta


def chain_strip_leftward(R: Interval, N: Interval, beta: Interval, s: Interval) -> Interval:
    """N + R(-cos b + s / cos b) with s = (Re z)^2  (< 0 required on s <= 0.98^2)."""
    c = beta.cos()
    return N + R * (-c + s / c)


def _theta_axis(beta: Interval, scale_num=11, scale_den=10, over_cos=True) -> Interval:
    top = F(scale_num, scale_den) * beta
    if over_cos:
        top = top / beta.cos()
    return Interval(0.0, top.hi)


# ---------------------------------------------------------------------------
# certificate operations
# ---------------------------------------------------------------------------

def cert_gamma_exit(box: ParamBox) -> Certificate:
    """Wedge rays are exit faces: 2R sin(2b) - R th^2 - th/2 > 0 on (0, 11b/(10 cos b)].

    The lower ray carries the mirrored statement with the same chain.  theta=0
    is included in the checked range, so a degenerate beta = 0 box FAILs (the
    strict inequality is then unattainable).
    """
    axes = {"R": box.R, "beta": box.beta,
            "theta": _theta_axis(box.beta, over_cos=True)}
    verdict, margin, leaves = _decide(chain_gamma_exit, axes, ">0")
    return Certificate("gamma_exit", box.describe(), verdict, margin, leaves,
                       details={"mirror": "lower ray identical by symmetry"})


def cert_gamma_inward(box: ParamBox) -> Certificate:
    """Interior drift toward the origin: the bracketed factor of

    Re[a] (-2R + R Re[a](1+tan^2 b) + sqrt(1+tan^2 b)/2) < 0

    is certified negative for Re[a] in [0, 11b/10]; the product is then
    negative on the open wedge (Re[a] > 0 strictly).
    """
    axes = {"R": box.R, "beta": box.beta,
            "x": _theta_axis(box.beta, over_cos=False)}
    verdict, margin, leaves = _decide(chain_gamma_inward, axes, "<0")
    return Certificate("gamma_inward", box.describe(), verdict, margin, leaves,
                       details={"factored": "positive factor Re[a] removed"})


def cert_K_faces(box: ParamBox) -> Certificate:
    """Box face signs: outflow through K1/K2 (chain < 0), inflow at K3/K4 (> 0)."""
    v1, m1, l1 = _decide(chain_K1, {"R": box.R, "beta": box.beta}, "<0")
    v3, m3, l3 = _decide(chain_K3, {"R": box.R, "beta": box.beta}, ">0")
    verdict = "FAIL" if "FAIL" in (v1, v3) else (
        "UNDECIDED" if "UNDECIDED" in (v1, v3) else "PASS")
    binding = m3 if v3 != "PASS" or v1 == "PASS" else m1
    details = {"pomK1_margin": list(m1) if m1 else None,
               "pomK3_margin": list(m3) if m3 else None}
    # report the tighter of the two as the headline margin
    if m1 is not None and m3 is not None and verdict == "PASS":
        binding = m3 if abs(m3[0]) < abs(m1[1]) else m1
    return Certificate("K_faces", box.describe(), verdict, binding, l1 + l3, details)


def cert_Ktilde_expansion(box: ParamBox) -> Certificate:
    """Vertical expansion in the bowtie plus inwardness of its diagonal faces.

    Checks 2R - 1/2 - R sqrt2 ((11 sqrt2 + 24)/10) b >= R and, for the
    diagonal face, the theta-factored product < 0 on theta in (0, 11b/10].
    """
    ve, me, le = _decide(chain_Ktilde_expansion, {"R": box.R, "beta": box.beta}, ">=0")
    axes = {"R": box.R, "beta": box.beta,
            "theta": _theta_axis(box.beta, over_cos=False)}
    vd, md, ld = _decide(chain_Ktilde_diag_inner, axes, "<0")
    verdict = "FAIL" if "FAIL" in (ve, vd) else (
        "UNDECIDED" if "UNDECIDED" in (ve, vd) else "PASS")
    theta_max = _theta_axis(box.beta, over_cos=False)
    prod = chain_Ktilde_diag_product(box.R, box.beta,
                                     Interval(theta_max.hi, theta_max.hi))
    details = {"expansion_margin": list(me) if me else None,
               "diag_inner_margin": list(md) if md else None,
               "diag_product_at_theta_max": [prod.lo, prod.hi]}
    return Certificate("Ktilde_expansion", box.describe(), verdict, me, le + ld, details)


def cert_strip_leftward(box: ParamBox) -> Certificate:
    """Leftward drift in the strip: N + R(-cos b + (Re z)^2 / cos b) < 0, |Re z| <= 0.98."""
    axes = {"R": box.R, "N": box.N, "beta": box.beta,
            "s": Interval(0.0, (Interval.point(0.98).sq()).hi)}
    verdict, margin, leaves = _decide(chain_strip_leftward, axes, "<0",
                                      couple=_couple_RN(box))
    return Certificate("strip_leftward", box.describe(), verdict, margin, leaves)


_ALL = {
    "gamma_exit": cert_gamma_exit,
    "gamma_inward": cert_gamma_inward,
    "K_faces": cert_K_faces,
    "Ktilde_expansion": cert_Ktilde_expansion,
    "strip_leftward": cert_strip_leftward,
}


def all_certificates(box: ParamBox) -> list:
    return [fn(box) for fn in _ALL.values()]


# ---------------------------------------------------------------------------
# departure width and the comparison Riccati flow
# ---------------------------------------------------------------------------

def zeta_tilde(params: ModelParams) -> float:
    """beta (1 - e^{-4Rb})(2 - b)/(2 - b + e^{-4Rb}); strictly below beta."""
    return _zeta_tilde_float(params)


def zeta_tilde_interval(R: Interval, beta: Interval) -> Interval:
    e = (-4 * R * beta).exp()
    return beta * (1 - e) * (2 - beta) / (2 - beta + e)


class DomainError(ValueError):
    """Riccati comparison queried where R cos(beta) <= N (no real equilibria)."""


def riccati_rhs(x: float, params: ModelParams) -> float:
    """N - R cos(beta) + (R / cos(beta)) x^2."""
    c = math.cos(params.beta)
    return params.N - params.R * c + params.R / c * x * x


def riccati_equilibrium(params: ModelParams) -> float:
    """x* = sqrt(cos^2 b - (N/R) cos b), the attracting equilibrium is -x*."""
    c = math.cos(params.beta)
    if params.R * c <= params.N:
        raise DomainError(f"R cos(beta) = {params.R * c} <= N = {params.N}")
    return math.sqrt(c * c - params.N / params.R * c)


def riccati_closed_form(t: float, x0: float, params: ModelParams) -> float:
    """The closed-form flow of the comparison equation, as printed:

    x* (2 / (1 - u0 exp(2 t sqrt(R^2 - N R / cos b))) - 1),
    u0 = (x0 sqrt(R) - sqrt(R cos^2 b - N cos b)) / (x0 sqrt(R) + sqrt(...)).

    Treated as a scalar flow phi(t, x0); x0 = -x* is the u0 -> inf limit.
    """
    R, N = params.R, params.N
    c = math.cos(params.beta)
    if R * c <= N:
        raise DomainError(f"R cos(beta) = {R * c} <= N = {N}")
    xs = riccati_equilibrium(params)
    root = math.sqrt(R * c * c - N * c)
    num = x0 * math.sqrt(R) - root
    den = x0 * math.sqrt(R) + root
    rate = math.sqrt(R * R - N * R / c)
    if den == 0.0:
        return -xs
    g = num / den * math.exp(2.0 * t * rate)
    if g == 1.0:
        raise DomainError("closed form escapes in finite time at this (t, x0)")
    return xs * (2.0 / (1.0 - g) - 1.0)


# ---------------------------------------------------------------------------
# soundness spot checks (vectorized float re-evaluation of the chains)
# ---------------------------------------------------------------------------

def _np_chains():
    s2 = math.sqrt(2.0)
    co = lambda b: np.cos(b)
    return {
        "gamma_exit": (lambda R, N, b, u:
                       2 * R * np.sin(2 * b) - R * (u * 1.1 * b / co(b)) ** 2
                       - (u * 1.1 * b / co(b)) / 2, ">0"),
        "gamma_inward": (lambda R, N, b, u:
                         -2 * R + R * (u * 1.1 * b) * (1 + np.tan(b) ** 2)
                         + np.sqrt(1 + np.tan(b) ** 2) / 2, "<0"),
        "K1": (lambda R, N, b, u:
               -R * (2.2 * b - (1.1 * b) ** 2 - 4 * b ** 4) + 1.1 * b + 2 * b * b, "<0"),
        "K3": (lambda R, N, b, u:
               R * (4 * b * b - 1.21 * b * b - 4 * b ** 4) - 2.2 * b, ">0"),
        "Ktilde_expansion": (lambda R, N, b, u:
                             R - 0.5 - R * s2 * ((11 * s2 + 24) / 10) * b, ">0"),
        "Ktilde_diagonal": (lambda R, N, b, u:
                            -4 * R + 2 * R * (s2 * (u * 1.1 * b) + 2.4 * b) + 1, "<0"),
        "strip_leftward": (lambda R, N, b, u:
                           N + R * (-co(b) + (0.98 * u) ** 2 / co(b)), "<0"),
    }


def spot_check(name: str, box: ParamBox, n: int = 10 ** 6, seed: int = 0) -> float:
    """Worst sampled margin of a chain over the box (random float evaluation).

    For a PASS certificate the returned value must be on the claimed side:
    positive for the ">0" chains, negative for the "<0" ones.
    """
    fn, sense = _np_chains()[name]
    rng = np.random.default_rng(seed)
    R = rng.uniform(box.R.lo, box.R.hi, n)
    b = rng.uniform(box.beta.lo, box.beta.hi, n)
    n_hi = np.minimum(box.N.hi, R / 100.0) if box.couple_RN else np.full(n, box.N.hi)
    N = rng.uniform(np.minimum(box.N.lo, n_hi), n_hi, n)
    u = rng.uniform(0.0, 1.0, n)
    vals = fn(R, N, b, u)
    return float(np.min(vals)) if sense == ">0" else float(np.max(vals))
