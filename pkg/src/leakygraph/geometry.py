"""Graph geometries, their discretisation into point sets, and coupling.

A :class:`GraphSpec` variant describes the support of the interaction.
:func:`discretize` turns it into a :class:`DiscretizedGraph`: a point set
``Y`` sampled by arc length together with the coupling normalisation
``alpha = 1 / (gamma * total_length)``.  The per-point coupling entering the
boundary condition is ``|Y| * alpha``.

Edges marked as leads (star arms, Z-line arms, near-loop legs) stand for
half-lines cut off at a finite length; spectra of such graphs carry the
essential-spectrum threshold ``-gamma**2 / 4``.
"""
import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

__all__ = [
    "GeometryError",
    "Ring",
    "Star",
    "ZLine",
    "NearLoop",
    "DiscretizedGraph",
    "discretize",
    "bottleneck",
    "calibrate_gap_angle",
    "omega_loop",
    "transform",
    "spec_to_json",
    "spec_from_json",
    "spec_to_dict",
    "spec_from_dict",
    "points_to_csv",
]

TWO_PI = 2.0 * math.pi


class GeometryError(ValueError):
    """Invalid or self-intersecting geometry, or an unusable resolution."""


def _positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise GeometryError(f"{name} must be a finite positive number, got {value!r}")


# --------------------------------------------------------------------------
# Edges.  Every graph is a list of straight segments and circular arcs,
# walked in order; ``lead`` marks cut-off half-lines.


@dataclass(frozen=True)
class _Segment:
    start: tuple
    direction: float  # angle of the unit tangent
    length: float
    lead: bool = False

    def at(self, s):
        s = np.asarray(s, dtype=float)
        return np.stack([self.start[0] + s * math.cos(self.direction),
                         self.start[1] + s * math.sin(self.direction)], axis=-1)


@dataclass(frozen=True)
class _Arc:
    center: tuple
    radius: float
    angle0: float  # polar angle of the start point seen from the center
    sweep: float  # signed; positive is counter-clockwise
    lead: bool = False

    @property
    def length(self):
        return self.radius * abs(self.sweep)

    def at(self, s):
        a = self.angle0 + math.copysign(1.0, self.sweep) * np.asarray(s, dtype=float) / self.radius
        return np.stack([self.center[0] + self.radius * np.cos(a),
                         self.center[1] + self.radius * np.sin(a)], axis=-1)


# --------------------------------------------------------------------------
# Graph shapes


@dataclass(frozen=True)
class Ring:
    """Circle of radius ``R``; the arc ``phi in (2pi - theta, 2pi)`` is removed."""

    R: float
    theta: float = 0.0

    type = "ring"

    def __post_init__(self):
        _positive("R", self.R)
        if not (0.0 <= self.theta < TWO_PI):
            raise GeometryError("theta must lie in [0, 2pi)")

    @property
    def has_leads(self):
        return False

    @property
    def closed(self):
        return self.theta == 0.0

    def edges(self):
        return [_Arc((0.0, 0.0), self.R, 0.0, TWO_PI - self.theta)]


@dataclass(frozen=True)
class Star:
    """Star with ``N = len(angles) + 1`` arms meeting at the origin.

    Arm ``j`` points at ``sum(angles[:j])``; the closing angle
    ``beta_N = 2pi - sum(angles)`` must be positive.
    """

    angles: tuple
    arm_lengths: tuple

    type = "star"

    def __post_init__(self):
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        object.__setattr__(self, "arm_lengths", tuple(float(v) for v in self.arm_lengths))
        if len(self.angles) < 1:
            raise GeometryError("a star needs at least one angle (two arms)")
        if len(self.arm_lengths) != len(self.angles) + 1:
            raise GeometryError("arm_lengths must have len(angles) + 1 entries")
        for a in self.angles:
            if not (math.isfinite(a) and a > 0):
                raise GeometryError("angles: every beta_j must be > 0")
        if TWO_PI - sum(self.angles) <= 0:
            raise GeometryError("angles: closing angle beta_N = 2pi - sum(beta_j) must be > 0")
        for v in self.arm_lengths:
            _positive("arm_lengths", v)

    @property
    def has_leads(self):
        return True

    @property
    def arm_directions(self):
        return tuple(float(v) for v in np.concatenate([[0.0], np.cumsum(self.angles)]))

    def edges(self):
        return [_Segment((0.0, 0.0), d, L, lead=True)
                for d, L in zip(self.arm_directions, self.arm_lengths)]


@dataclass(frozen=True)
class ZLine:
    """Stair: middle segment of length ``mid_length`` between two parallel arms.

    ``bend_angle`` is the angle between the middle segment and each arm;
    ``pi/2`` gives a right-angle stair and ``pi`` a straight line.
    """

    mid_length: float
    bend_angle: float
    arm_length: float

    type = "zline"

    def __post_init__(self):
        _positive("mid_length", self.mid_length)
        _positive("arm_length", self.arm_length)
        if not (0.0 < self.bend_angle <= math.pi):
            raise GeometryError("bend_angle must lie in (0, pi]")

    @property
    def has_leads(self):
        return True

    def edges(self):
        u = math.pi - self.bend_angle
        b2 = (self.mid_length * math.cos(u), self.mid_length * math.sin(u))
        return [
            _Segment((-self.arm_length, 0.0), 0.0, self.arm_length, lead=True),
            _Segment((0.0, 0.0), u, self.mid_length),
            _Segment(b2, 0.0, self.arm_length, lead=True),
        ]


@dataclass(frozen=True)
class NearLoop:
    """Almost closed loop with two legs (an Omega-like curve).

    A main arc of radius ``R`` centred at the origin spans ``2pi - gap_angle``
    with the gap facing down.  At each end an outward flare (radius ``R``,
    opposite curvature, angle ``flare_angle``) bends away, followed by a
    straight leg of length ``leg_length``.  The narrowest distance between
    the two flares is the bottleneck width, see :func:`bottleneck`.
    """

    R: float
    gap_angle: float
    flare_angle: float
    leg_length: float

    type = "nearloop"

    def __post_init__(self):
        _positive("R", self.R)
        _positive("leg_length", self.leg_length)
        if not (0.0 < self.gap_angle < math.pi):
            raise GeometryError("gap_angle must lie in (0, pi)")
        if not (0.0 <= self.flare_angle <= math.pi):
            raise GeometryError("flare_angle must lie in [0, pi]")

    @property
    def has_leads(self):
        return True

    def _right_branch(self):
        # Flare and leg on the right, both walked away from the main arc.
        R, h = self.R, 0.5 * self.gap_angle
        p1 = (R * math.sin(h), -R * math.cos(h))
        c1 = (2.0 * p1[0], 2.0 * p1[1])
        a0 = 0.5 * math.pi + h
        flare = _Arc(c1, R, a0, self.flare_angle)
        a1 = a0 + self.flare_angle
        end = (c1[0] + R * math.cos(a1), c1[1] + R * math.sin(a1))
        leg = _Segment(end, a1 + 0.5 * math.pi, self.leg_length, lead=True)
        return flare, leg

    def edges(self):
        flare, leg = self._right_branch()
        h = 0.5 * self.gap_angle
        main = _Arc((0.0, 0.0), self.R, -0.5 * math.pi + h, TWO_PI - self.gap_angle)
        mflare = _Arc((-flare.center[0], flare.center[1]), self.R,
                      math.pi - flare.angle0, -self.flare_angle)
        mleg = _Segment((-leg.start[0], leg.start[1]), math.pi - leg.direction,
                        self.leg_length, lead=True)
        # Order: right leg (walked inward), right flare, main, left flare, left leg.
        rleg = _Segment(tuple(leg.at(leg.length)), leg.direction + math.pi,
                        self.leg_length, lead=True)
        a1 = flare.angle0 + flare.sweep
        rflare = _Arc(flare.center, self.R, a1, -flare.sweep)
        if self.flare_angle == 0.0:
            return [rleg, main, mleg]
        return [rleg, rflare, main, mflare, mleg]


_SPEC_TYPES = {"ring": Ring, "star": Star, "zline": ZLine, "nearloop": NearLoop}


# --------------------------------------------------------------------------
# Bottleneck of the near-loop


def _neck_halfwidth(R, gap_angle, flare_angle):
    # Minimum x over the right flare; the curve is mirror symmetric in x.
    h = 0.5 * gap_angle
    cx = 2.0 * R * math.sin(h)
    a0 = 0.5 * math.pi + h
    a1 = a0 + flare_angle
    if a0 <= math.pi <= a1:
        return cx - R
    return cx + R * min(math.cos(a0), math.cos(a1))


def bottleneck(spec):
    """Width of the neck of a :class:`NearLoop`.

    Minimum distance between the two open ends of the loop region (the
    flares, or the arc end points when ``flare_angle == 0``).  Raises
    :class:`GeometryError` for self-intersecting parameters.
    """
    if not isinstance(spec, NearLoop):
        raise TypeError("bottleneck is defined for NearLoop only")
    half = _neck_halfwidth(spec.R, spec.gap_angle, spec.flare_angle)
    if half <= 0:
        raise GeometryError("near-loop flares intersect (bottleneck width <= 0)")
    _, leg = spec._right_branch()
    far = leg.at(leg.length)
    if far[0] <= 0:
        raise GeometryError("near-loop legs cross each other")
    # distance from the origin to the leg segment must exceed R
    p = np.asarray(leg.start)
    d = np.array([math.cos(leg.direction), math.sin(leg.direction)])
    t = np.clip(-p @ d, 0.0, leg.length)
    if np.hypot(*(p + t * d)) < spec.R:
        raise GeometryError("near-loop legs cut through the main arc")
    return 2.0 * half


def calibrate_gap_angle(R, flare_angle, target_width, xtol=1e-12):
    """Gap angle for which the near-loop neck has width ``target_width``.

    Bisection on the closed-form neck width, which is strictly increasing in
    the gap angle.
    """
    _positive("target_width", target_width)

    def f(phi):
        return 2.0 * _neck_halfwidth(R, phi, flare_angle) - target_width

    lo, hi = 1e-12, math.pi - 1e-12
    if f(lo) * f(hi) > 0:
        raise GeometryError("target width not reachable for this R and flare angle")
    return optimize.brentq(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)


def omega_loop(R, width, leg_length):
    """Omega-shaped :class:`NearLoop` with neck ``width``.

    The flares turn until the legs are horizontal, collinear and point
    outward, i.e. ``flare_angle = pi - gap_angle/2``.  Each flare then
    passes its leftmost point, so ``width = 2 (2 R sin(gap_angle/2) - R)``
    and the gap angle follows in closed form.
    """
    _positive("R", R)
    _positive("width", width)
    s = (0.5 * width + R) / (2.0 * R)
    if s >= 1.0:
        raise GeometryError("omega neck width must be below 2 R")
    phi = 2.0 * math.asin(s)
    return NearLoop(R, phi, math.pi - 0.5 * phi, leg_length)


# --------------------------------------------------------------------------
# Discretisation


@dataclass(frozen=True, eq=False)
class DiscretizedGraph:
    """Point set ``Y`` with coupling data.

    ``alpha`` is the coupling normalisation; ``threshold`` is ``-gamma**2/4``
    for graphs with cut-off leads and ``None`` otherwise.
    """

    points: np.ndarray
    alpha: float
    gamma: float = None
    total_length: float = None
    spacing: float = None
    spec: object = None
    has_leads: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 2)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if len(pts) < 1:
            raise GeometryError("a discretized graph needs at least one point")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise GeometryError("alpha must be positive (attractive coupling only)")

    @classmethod
    def from_points(cls, points, alpha, gamma=None, spacing=None):
        return cls(points=points, alpha=float(alpha), gamma=gamma, spacing=spacing)

    @property
    def size(self):
        return len(self.points)

    @property
    def point_coupling(self):
        """Per-point coupling ``|Y| * alpha``."""
        return self.size * self.alpha

    @property
    def threshold(self):
        if self.has_leads and self.gamma is not None:
            return -0.25 * self.gamma ** 2
        return None

    def with_points(self, points, alpha=None):
        return DiscretizedGraph(points=points, alpha=self.alpha if alpha is None else alpha,
                                gamma=self.gamma, total_length=self.total_length,
                                spacing=self.spacing, spec=self.spec,
                                has_leads=self.has_leads, meta=dict(self.meta))


def _edge_points(edge, n, include_start, include_end, midpoint):
    L = edge.length
    h = L / n
    if midpoint:
        s = (np.arange(n) + 0.5) * h
    else:
        s = np.arange(0 if include_start else 1, n + (1 if include_end else 0)) * h
    return edge.at(s)


def discretize(spec, gamma, count=None, spacing=None):
    """Sample ``spec`` into a point set.

    Exactly one of ``count`` and ``spacing`` is given.  ``count`` is the
    total number of points for rings, Z-lines and near-loops and the number
    of points on the first arm for stars (other arms keep that spacing).

    Rings: closed rings get ``N`` points at angles ``2 pi j / N``; open rings
    are midpoint-sampled on the supporting arc.  Stars: one point at the
    vertex, arm points at ``h, 2h, ..., L``.  Z-lines and near-loops: one
    point per junction, equidistant interior points, far lead ends included.
    """
    _positive("gamma", gamma)
    if (count is None) == (spacing is None):
        raise GeometryError("give exactly one of count and spacing")
    if count is not None and (int(count) != count or count < 1):
        raise GeometryError("count must be a positive integer")
    if spacing is not None:
        _positive("spacing", spacing)

    edges = spec.edges()
    lengths = [e.length for e in edges]
    total = float(sum(lengths))
    if total <= 0:
        raise GeometryError("zero-length support")

    if isinstance(spec, Ring):
        n = int(count) if count is not None else max(1, int(round(total / spacing)))
        if spacing is not None and spacing > total:
            raise GeometryError("spacing larger than the ring support")
        if spec.closed:
            t = TWO_PI * np.arange(n) / n
            pts = np.column_stack([spec.R * np.cos(t), spec.R * np.sin(t)])
        else:
            pts = _edge_points(edges[0], n, False, False, midpoint=True)
        h = total / n
    else:
        if count is not None:
            if isinstance(spec, Star):
                h = lengths[0] / int(count)
            else:
                h = total / int(count)
        else:
            h = float(spacing)
        if h > min(lengths) * (1 + 1e-12):
            raise GeometryError("spacing larger than the shortest edge")
        chunks = []
        if isinstance(spec, Star):
            chunks.append(np.zeros((1, 2)))
            for e in edges:
                chunks.append(_edge_points(e, max(1, int(round(e.length / h))), False, True, False))
        else:
            # walk the chain; lead edges at both ends include their far tips
            last = len(edges) - 1
            for i, e in enumerate(edges):
                n = max(1, int(round(e.length / h)))
                chunks.append(_edge_points(e, n, include_start=True,
                                           include_end=(i == last), midpoint=False))
        pts = np.vstack(chunks)

    return DiscretizedGraph(points=pts, alpha=1.0 / (gamma * total), gamma=float(gamma),
                            total_length=total, spacing=float(h), spec=spec,
                            has_leads=spec.has_leads)


def transform(graph, rotation=0.0, translation=(0.0, 0.0)):
    """Rigid motion of all points; coupling data are unchanged."""
    c, s = math.cos(rotation), math.sin(rotation)
    rot = np.array([[c, -s], [s, c]])
    pts = graph.points @ rot.T + np.asarray(translation, dtype=float)
    return graph.with_points(pts)


# --------------------------------------------------------------------------
# Serialisation


def spec_to_dict(spec):
    d = {"type": spec.type}
    for k in spec.__dataclass_fields__:
        v = getattr(spec, k)
        d[k] = list(v) if isinstance(v, tuple) else v
    return d


def spec_from_dict(d):
    d = dict(d)
    try:
        cls = _SPEC_TYPES[d.pop("type")]
    except KeyError as exc:
        raise GeometryError(f"unknown graph type {exc}") from None
    unknown = set(d) - set(cls.__dataclass_fields__)
    if unknown:
        raise GeometryError(f"unknown fields for {cls.type}: {sorted(unknown)}")
    return cls(**d)


def spec_to_json(spec):
    return json.dumps(spec_to_dict(spec), sort_keys=True)


def spec_from_json(text):
    return spec_from_dict(json.loads(text))


def points_to_csv(graph, path=None):
    """Write the point set as ``x,y`` rows; returns the text if ``path`` is None."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y"])
    for x, y in graph.points:
        w.writerow([repr(float(x)), repr(float(y))])
    text = buf.getvalue()
    if path is None:
        return text
    with open(path, "w") as fh:
        fh.write(text)
    return None
