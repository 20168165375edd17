"""Time-dependent regions: membership, boundary faces and outward normals.

All the sets driving the coding and the shooting live here:

* ``U`` / ``W``   squares of half-side ``a`` rotating at angular speed 1/2
                  about +1 and -1 (z frame);
* ``Z``           the switching corridor, alive only for t in the slabs
                  [k pi - beta, k pi + gamma], bounded by the piecewise-linear
                  half-width profile l(x);
* ``wU`` / ``pW`` the static images of U and W in their co-rotating frames;
* ``K`` / ``L``   the small tracking boxes at the saddles (w and p frames);
* ``Gamma``       the exit wedge of the time-reversed field, plus its mirror
                  ``GammaHat``;
* ``Ktilde`` / ``Khat``  the bowtie used by the expansion estimate and its
                  exit edges (difference frame);
* ``Kzeta``, ``Ltilde``, ``LtildeUp``, ``LtildeLow``  the corridor-transit
                  bookkeeping sets.

Membership returns one of inside / boundary(face) / outside, with a tolerance
band EPS_MEM around every face; region queries are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from .model import ModelParams

__all__ = [
    "EPS_MEM",
    "QueryOutsideTimeSlab",
    "UnknownFace",
    "Membership",
    "CorridorProfile",
    "corridor_halfwidth",
    "Face",
    "RegionSet",
    "member",
    "boundary_normal",
    "build_regions",
    "box_region",
    "region_polylines",
    "zeta_tilde",
]

#: classification tolerance band around every face
EPS_MEM = 1e-9


class QueryOutsideTimeSlab(ValueError):
    """Z queried at a time where the corridor is empty."""


class UnknownFace(KeyError):
    pass


@dataclass(frozen=True)
class Membership:
    kind: str                 # "inside" | "boundary" | "outside"
    face: Optional[str] = None

    @property
    def is_inside(self) -> bool:
        return self.kind == "inside"

    @property
    def is_outside(self) -> bool:
        return self.kind == "outside"

    @property
    def in_closure(self) -> bool:
        return self.kind in ("inside", "boundary")


# ---------------------------------------------------------------------------
# corridor profile l(x)
# ---------------------------------------------------------------------------

def corridor_halfwidth(x: float) -> float:
    """Half-width l(x) of the corridor: 5/28 - (9/14) x on [-0.5, 0.2], then 0.05.

    Continuous at x = 0.2 (5/28 - 9/70 = 1/20 exactly, in rational arithmetic).
    """
    if x <= 0.2:
        return 5.0 / 28.0 - (9.0 / 14.0) * x
    return 0.05


@dataclass(frozen=True)
class CorridorProfile:
    """The piecewise-linear half-width profile on the domain [-0.5, 1]."""

    lo: float = -0.5
    hi: float = 1.0

    def __call__(self, x: float) -> float:
        if x < self.lo - 1e-12 or x > self.hi + 1e-12:
            raise ValueError(f"corridor profile queried outside [{self.lo}, {self.hi}]")
        return corridor_halfwidth(min(max(x, self.lo), self.hi))


# ---------------------------------------------------------------------------
# faces and regions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Face:
    """One boundary face: a signed functional, a parameterization and a normal.

    ``functional(t, x)`` is positive on the outside of the face's supporting
    surface and scales like the distance to it.  ``parameterize(theta, t)``
    traces the face, ``normal(theta, t)`` is the outward unit normal.
    """

    id: str
    functional: Callable[[float, complex], float]
    parameterize: Callable[[float, float], complex] = None
    normal: Callable[[float, float], complex] = None
    theta_range: tuple = (0.0, 1.0)


@dataclass(frozen=True)
class RegionSet:
    """A (possibly time-dependent) region given as {max_i functional_i <= 0}."""

    tag: str
    frame_tag: str
    faces: tuple
    # maps t to t if the region exists then, else raises QueryOutsideTimeSlab
    time_gate: Callable[[float], float] = dc_field(default=None, repr=False)
    # surface-only regions (e.g. Khat) have no interior
    surface_only: bool = False

    def face(self, face_id: str) -> Face:
        for f in self.faces:
            if f.id == face_id:
                return f
        raise UnknownFace(f"{self.tag} has no face {face_id!r}")

    def member(self, t: float, point: complex, eps: float = EPS_MEM) -> Membership:
        if self.time_gate is not None:
            self.time_gate(t)
        vals = [(f.functional(t, point), f) for f in self.faces]
        g, worst = max(vals, key=lambda vf: vf[0])
        if self.surface_only:
            # on the surface iff the defining face functional vanishes and the
            # remaining constraints hold
            on = all(v <= eps for v, f in vals if not f.id.endswith("#def")) and \
                abs(next(v for v, f in vals if f.id.endswith("#def"))) <= eps
            defface = next(f for v, f in vals if f.id.endswith("#def"))
            return Membership("boundary", defface.id[:-4]) if on else Membership("outside")
        if g > eps:
            return Membership("outside", worst.id)
        if g >= -eps:
            return Membership("boundary", worst.id)
        return Membership("inside")


def member(region: RegionSet, t: float, point: complex, eps: float = EPS_MEM) -> Membership:
    """Classify ``point`` (in the region's own frame) at time ``t``."""
    return region.member(t, point, eps)


def boundary_normal(region: RegionSet, face_id: str, theta: float, t: float) -> complex:
    """Outward unit normal of a face at parameter ``theta`` and time ``t``."""
    f = region.face(face_id)
    if f.normal is None:
        raise UnknownFace(f"face {face_id!r} of {region.tag} carries no normal")
    n = complex(f.normal(theta, t))
    return n / abs(n)


# -- helpers ---------------------------------------------------------------

def _axis_box_faces(prefix: str, re_min, re_max, im_min, im_max,
                    ids=("left", "right", "bottom", "top")) -> tuple:
    """Faces of an axis-aligned box with outward axis normals."""
    lid, rid, bid, tid = ids
    return (
        Face(lid, lambda t, x: re_min - x.real,
             lambda th, t: complex(re_min, th), lambda th, t: -1.0 + 0.0j,
             (im_min, im_max)),
        Face(rid, lambda t, x: x.real - re_max,
             lambda th, t: complex(re_max, th), lambda th, t: 1.0 + 0.0j,
             (im_min, im_max)),
        Face(bid, lambda t, x: im_min - x.imag,
             lambda th, t: complex(th, im_min), lambda th, t: -1.0j,
             (re_min, re_max)),
        Face(tid, lambda t, x: x.imag - im_max,
             lambda th, t: complex(th, im_max), lambda th, t: 1.0j,
             (re_min, re_max)),
    )


def box_region(tag: str, frame_tag: str, re_min: float, re_max: float,
               im_min: float, im_max: float, ids=("left", "right", "bottom", "top")
               ) -> RegionSet:
    """A static axis-aligned box region in the given frame."""
    return RegionSet(tag, frame_tag, _axis_box_faces(tag, re_min, re_max, im_min, im_max, ids))


def _rotating_square(tag: str, center: float, a: float) -> RegionSet:
    """Square of half-side a about ``center``, co-rotating at angular speed 1/2."""

    def u_of(t, q):
        return (q - center) * np.exp(-0.5j * t)

    def mk(face_id, fn, par, nrm):
        return Face(face_id, fn, par, nrm, (-a, a))

    rot = lambda t: np.exp(0.5j * t)
    faces = (
        mk("left", lambda t, q: -u_of(t, q).real - a,
           lambda th, t: center + rot(t) * complex(-a, th), lambda th, t: -rot(t)),
        mk("right", lambda t, q: u_of(t, q).real - a,
           lambda th, t: center + rot(t) * complex(a, th), lambda th, t: rot(t)),
        mk("bottom", lambda t, q: -u_of(t, q).imag - a,
           lambda th, t: center + rot(t) * complex(th, -a), lambda th, t: -1j * rot(t)),
        mk("top", lambda t, q: u_of(t, q).imag - a,
           lambda th, t: center + rot(t) * complex(th, a), lambda th, t: 1j * rot(t)),
    )
    return RegionSet(tag, "z", faces)


SQRT2 = math.sqrt(2.0)


def zeta_tilde(params: ModelParams) -> float:
    """The corridor-departure width beta (1 - e^{-4 R beta})(2 - beta) / (2 - beta + e^{-4 R beta}).

    Always strictly below beta.
    """
    R, b = params.R, params.beta
    e = math.exp(-4.0 * R * b)
    return b * (1.0 - e) * (2.0 - b) / (2.0 - b + e)


def _corridor_slab(beta: float, gamma: float):
    """Time gate for Z: t must lie in some [k pi - beta, k pi + gamma]."""

    def gate(t: float) -> float:
        k = round(t / math.pi)
        s = t - k * math.pi
        if s < -beta - EPS_MEM or s > gamma + EPS_MEM:
            raise QueryOutsideTimeSlab(
                f"Z is empty at t={t}: not within [k*pi - {beta}, k*pi + {gamma}]")
        return t

    return gate


def _z_region(params: ModelParams) -> RegionSet:
    beta, gamma = params.beta, params.gamma
    prof = CorridorProfile()
    scale = params.corridor_scale

    def signed_x(t, q):
        k = round(t / math.pi)
        return (-1.0) ** k * q.real

    def wall_at(t, x):
        xx = min(max(x, prof.lo), prof.hi)
        return min(scale * corridor_halfwidth(xx), 0.72)

    def wall(t, q):
        return wall_at(t, signed_x(t, q))

    faces = (
        Face("Z_left", lambda t, q: -q.real - 0.5,
             lambda th, t: complex(-0.5, th), lambda th, t: -1.0 + 0.0j, (-0.5, 0.5)),
        Face("Z_right", lambda t, q: q.real - 0.5,
             lambda th, t: complex(0.5, th), lambda th, t: 1.0 + 0.0j, (-0.5, 0.5)),
        Face("Z_lower", lambda t, q: -q.imag - wall(t, q),
             lambda th, t: complex(th, -wall_at(t, (-1.0) ** round(t / math.pi) * th)),
             lambda th, t: -1.0j, (-0.5, 0.5)),
        Face("Z_upper", lambda t, q: q.imag - wall(t, q),
             lambda th, t: complex(th, wall_at(t, (-1.0) ** round(t / math.pi) * th)),
             lambda th, t: 1.0j, (-0.5, 0.5)),
    )
    return RegionSet("Z", "z", faces, time_gate=_corridor_slab(beta, gamma))


def _gamma_wedge(tag: str, params: ModelParams, mirrored: bool = False) -> RegionSet:
    """The wedge Re[a] in (0, 11 beta/10], |Arg a| <= beta (what frame).

    The mirrored variant is the wedge reflected through the origin.  The ray
    functionals are perpendicular distances; normals follow the construction:
    i e^{i beta} on the upper ray, -i e^{-i beta} on the lower one.
    """
    b = params.beta
    rmax = 1.1 * params.beta
    tmax = rmax / math.cos(b)
    s = -1.0 if mirrored else 1.0

    def loc(x):
        # mirrored wedge: classify -a against the base wedge
        return s * x

    faces = (
        Face(f"{tag}_upper", lambda t, a: (loc(a) * np.exp(-1j * b)).imag,
             lambda th, t: s * th * np.exp(1j * b),
             lambda th, t: s * 1j * np.exp(1j * b), (0.0, tmax)),
        Face(f"{tag}_lower", lambda t, a: -(loc(a) * np.exp(1j * b)).imag,
             lambda th, t: s * th * np.exp(-1j * b),
             lambda th, t: s * -1j * np.exp(-1j * b), (0.0, tmax)),
        Face(f"{tag}_outer", lambda t, a: loc(a).real - rmax,
             lambda th, t: s * complex(rmax, th),
             lambda th, t: s * (1.0 + 0.0j), (-rmax * math.tan(b), rmax * math.tan(b))),
        Face(f"{tag}_inner", lambda t, a: -loc(a).real,
             lambda th, t: 0.0j, lambda th, t: s * (-1.0 + 0.0j), (0.0, 0.0)),
    )
    return RegionSet(tag, "what", faces)


def _ktilde(params: ModelParams) -> RegionSet:
    """Bowtie |Im z| >= |Re z|, |Im z| <= 11 beta/10 (difference frame)."""
    h = 1.1 * params.beta

    def diag_id(x) -> str:
        if x.imag >= 0:
            return "Ktilde_diag_ne" if x.real >= 0 else "Ktilde_diag_nw"
        return "Ktilde_diag_se" if x.real < 0 else "Ktilde_diag_sw"

    # one functional covers all four diagonal faces; the id is resolved by
    # quadrant when needed via member()
    faces = (
        Face("Ktilde_diag_ne", lambda t, x: (abs(x.real) - abs(x.imag)) / SQRT2,
             lambda th, t: th * (1.0 + 1.0j),
             lambda th, t: (1.0 - 1.0j) / SQRT2, (0.0, h)),
        Face("Khat_upper", lambda t, x: x.imag - h,
             lambda th, t: complex(th, h), lambda th, t: 1.0j, (-h, h)),
        Face("Khat_lower", lambda t, x: -x.imag - h,
             lambda th, t: complex(th, -h), lambda th, t: -1.0j, (-h, h)),
    )
    return RegionSet("Ktilde", "diff", faces)


def _khat(params: ModelParams) -> RegionSet:
    """Exit edges of the bowtie: |Im z| = 11 beta/10 inside |Re| <= |Im|."""
    h = 1.1 * params.beta
    faces = (
        Face("Khat#def", lambda t, x: abs(x.imag) - h,
             lambda th, t: complex(th, h), lambda th, t: 1.0j, (-h, h)),
        Face("Khat_wedge", lambda t, x: (abs(x.real) - abs(x.imag)) / SQRT2),
    )
    return RegionSet("Khat", "diff", faces, surface_only=True)


def build_regions(params: ModelParams) -> dict:
    """All named regions of the construction, keyed by tag."""
    a, b = params.a, params.beta
    zt = zeta_tilde(params)
    regions = {
        "U": _rotating_square("U", +1.0, a),
        "W": _rotating_square("W", -1.0, a),
        "Z": _z_region(params),
        "wU": box_region("wU", "w", -a, a, -a, a),
        "pW": box_region("pW", "p", -a, a, -a, a),
        "K": box_region("K", "w", -1.1 * b, 1.1 * b, -2 * b * b, 2 * b * b,
                        ids=("K1", "K2", "K3", "K4")),
        "L": box_region("L", "p", -2 * b * b, 2 * b * b, -1.1 * b, 1.1 * b,
                        ids=("L_left", "L_right", "L1", "L2")),
        "Gamma": _gamma_wedge("Gamma", params),
        "GammaHat": _gamma_wedge("GammaHat", params, mirrored=True),
        "Ktilde": _ktilde(params),
        "Khat": _khat(params),
        "Kzeta": box_region("Kzeta", "w", -b, -b + zt, -2 * b * b, 2 * b * b,
                            ids=("Kzeta_left", "Kzeta_right", "Kzeta_bottom", "Kzeta_top")),
        "Ltilde": box_region("Ltilde", "p", -1.1 * b, 1.1 * b, -3 * b, 3 * b,
                             ids=("Lt_left", "Lt_right", "Lt1", "Lt2")),
        "LtildeUp": RegionSet("LtildeUp", "p", (
            *_axis_box_faces("LtildeUp", -1.1 * b, 1.1 * b, 4 * b * b, 3 * b,
                             ids=("LtUp_left", "LtUp_right", "LtUp_floor", "LtUp_top")),)),
        "LtildeLow": RegionSet("LtildeLow", "p", (
            *_axis_box_faces("LtildeLow", -1.1 * b, 1.1 * b, -3 * b, -4 * b * b,
                             ids=("LtLow_left", "LtLow_right", "LtLow_bottom", "LtLow_ceil")),)),
    }
    return regions


def region_polylines(region: RegionSet, t: float, resolution: int = 64) -> dict:
    """Sample every face into a JSON-serializable polyline structure."""
    out = {"tag": region.tag, "frame": region.frame_tag, "t": t, "faces": []}
    for f in region.faces:
        if f.parameterize is None:
            continue
        th0, th1 = f.theta_range
        pts = []
        for th in np.linspace(th0, th1, resolution):
            z = complex(f.parameterize(float(th), t))
            pts.append([z.real, z.imag])
        out["faces"].append({"id": f.id, "points": pts})
    return out
