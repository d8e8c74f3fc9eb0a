"""Benchmark boundaries: droplet, triangle, L-shape, circle and the open wedge."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .kernels import BoundaryFrame
from .quadrature import gauss_legendre

CORNER_TOL = 1e-12


@dataclass(frozen=True)
class Arc:
    """Analytic parameterized arc u -> gamma(u) on [u0, u1], traversed counterclockwise."""

    gamma: Callable[[np.ndarray], np.ndarray]
    dgamma: Callable[[np.ndarray], np.ndarray]
    d2gamma: Callable[[np.ndarray], np.ndarray]
    u0: float
    u1: float
    start_corner: int | None = None
    end_corner: int | None = None


@dataclass(frozen=True)
class Corner:
    position: tuple[float, float]
    angle: float


@dataclass(frozen=True)
class Shape:
    name: str
    arcs: tuple[Arc, ...]
    corners: tuple[Corner, ...]
    closed: bool = True
    theta: float | None = None
    interior_point: tuple[float, float] = (0.0, 0.0)
    meta: dict = field(default_factory=dict)

    def describe(self) -> str:
        """JSON descriptor {shape, theta, corners:[{x, y, angle}]}."""
        return json.dumps({
            "shape": self.name,
            "theta": self.theta,
            "corners": [{"x": c.position[0], "y": c.position[1], "angle": c.angle} for c in self.corners],
        })


def frame_at(arc: Arc, u, arc_id: int | None = None) -> BoundaryFrame:
    """Frame (position, unit tangent, outward normal, |gamma'|, curvature) at parameter u."""
    u = np.asarray(u, float)
    pos = arc.gamma(u)
    d1 = arc.dgamma(u)
    d2 = arc.d2gamma(u)
    speed = np.hypot(d1[..., 0], d1[..., 1])
    if np.any(speed == 0.0):
        raise ValueError("degenerate parameterization (zero speed)")
    tau = d1 / speed[..., None]
    normal = np.stack([tau[..., 1], -tau[..., 0]], axis=-1)
    curv = (d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]) / speed**3
    return BoundaryFrame(pos, tau, normal, speed, curv, arc_id)


def arclength(arc: Arc, ua: float, ub: float, n: int = 32) -> float:
    """Arclength between parameters ua and ub (composite Gauss rule)."""
    rule = gauss_legendre(n)
    edges = np.linspace(ua, ub, 9)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        u = 0.5 * (b - a) * (rule.nodes + 1) + a
        d = arc.dgamma(u)
        total += 0.5 * (b - a) * np.dot(rule.weights, np.hypot(d[:, 0], d[:, 1]))
    return float(total)


def parameter_at_arclength(arc: Arc, length: float) -> float:
    """Parameter u with arclength(u0, u) = length."""
    total = arclength(arc, arc.u0, arc.u1)
    if not 0.0 <= length <= total:
        raise ValueError("requested arclength outside the arc")
    return brentq(lambda u: arclength(arc, arc.u0, u) - length, arc.u0, arc.u1, xtol=1e-15, rtol=1e-15)


def boundary_polygon(shape: Shape, per_arc: int = 400) -> np.ndarray:
    pts = [arc.gamma(np.linspace(arc.u0, arc.u1, per_arc, endpoint=False)) for arc in shape.arcs]
    return np.concatenate(pts)


def winding_number(shape: Shape, point, per_arc: int = 2000) -> int:
    """Winding number of the (closed) boundary around a point."""
    poly = boundary_polygon(shape, per_arc) - np.asarray(point, float)
    ang = np.arctan2(poly[:, 1], poly[:, 0])
    d = np.diff(np.concatenate([ang, ang[:1]]))
    d = (d + np.pi) % (2 * np.pi) - np.pi
    return int(round(d.sum() / (2 * np.pi)))


def distance_to_boundary(shape: Shape, points, per_arc: int = 4000) -> np.ndarray:
    poly = boundary_polygon(shape, per_arc)
    pts = np.atleast_2d(np.asarray(points, float))
    return np.min(np.linalg.norm(pts[:, None, :] - poly[None, :, :], axis=-1), axis=1)


def corner_angle_from_tangents(incoming: np.ndarray, outgoing: np.ndarray) -> float:
    """Interior angle at a corner of a counterclockwise curve from unit one-sided tangents."""
    turn = np.arctan2(incoming[0] * outgoing[1] - incoming[1] * outgoing[0], np.dot(incoming, outgoing))
    return float(np.pi - turn)


def _segment(p, q, start_corner=None, end_corner=None) -> Arc:
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    d = q - p

    def gamma(u):
        u = np.asarray(u, float)
        return p + u[..., None] * d

    def dgamma(u):
        return np.broadcast_to(d, np.shape(u) + (2,)).copy()

    def d2gamma(u):
        return np.zeros(np.shape(u) + (2,))

    return Arc(gamma, dgamma, d2gamma, 0.0, 1.0, start_corner, end_corner)


def _polygon(name: str, vertices, interior_point) -> Shape:
    v = np.asarray(vertices, float)
    n = len(v)
    arcs = tuple(_segment(v[i], v[(i + 1) % n], i, (i + 1) % n) for i in range(n))
    corners = []
    for i in range(n):
        inc = v[i] - v[i - 1]
        out = v[(i + 1) % n] - v[i]
        ang = corner_angle_from_tangents(inc / np.linalg.norm(inc), out / np.linalg.norm(out))
        corners.append(Corner((float(v[i, 0]), float(v[i, 1])), ang))
    return Shape(name, arcs, tuple(corners), True, None, tuple(interior_point))


def make_triangle() -> Shape:
    """Equilateral triangle inscribed in the unit circle, one vertex at the top."""
    ang = np.pi / 2 + 2 * np.pi * np.arange(3) / 3
    verts = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    shape = _polygon("triangle", verts, (0.0, 0.0))
    # exact angles avoid atan2 round-off in the spectrum lookup
    corners = tuple(Corner(c.position, np.pi / 3) for c in shape.corners)
    return Shape(shape.name, shape.arcs, corners, True, np.pi / 3, (0.0, 0.0))


def make_lshape() -> Shape:
    """L-shaped hexagon with one re-entrant corner at (1, 1)."""
    verts = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]
    shape = _polygon("lshape", verts, (0.5, 0.5))
    corners = tuple(Corner(c.position, 1.5 * np.pi if c.position == (1.0, 1.0) else 0.5 * np.pi)
                    for c in shape.corners)
    return Shape(shape.name, shape.arcs, corners, True, None, (0.5, 0.5))


def make_droplet(theta: float) -> Shape:
    """Single-corner droplet r(psi) = sin(pi psi / theta), psi in [0, theta].

    The corner sits at the origin with interior angle exactly theta. For
    theta = pi the curve is the circle of diameter 1 and no corner is listed.
    """
    theta = float(theta)
    if not 0.0 < theta < 2 * np.pi:
        raise ValueError(f"droplet angle must lie in (0, 2 pi), got {theta}")
    k = np.pi / theta

    def gamma(u):
        u = np.asarray(u, float)
        r = np.sin(k * u)
        return np.stack([r * np.cos(u), r * np.sin(u)], axis=-1)

    def dgamma(u):
        u = np.asarray(u, float)
        r, dr = np.sin(k * u), k * np.cos(k * u)
        return np.stack([dr * np.cos(u) - r * np.sin(u), dr * np.sin(u) + r * np.cos(u)], axis=-1)

    def d2gamma(u):
        u = np.asarray(u, float)
        r, dr, ddr = np.sin(k * u), k * np.cos(k * u), -k * k * np.sin(k * u)
        return np.stack([(ddr - r) * np.cos(u) - 2 * dr * np.sin(u),
                         (ddr - r) * np.sin(u) + 2 * dr * np.cos(u)], axis=-1)

    smooth = abs(theta - np.pi) < CORNER_TOL
    corner_id = None if smooth else 0
    arc = Arc(gamma, dgamma, d2gamma, 0.0, theta, corner_id, corner_id)
    corners = () if smooth else (Corner((0.0, 0.0), theta),)
    probe = 0.5 * np.sin(k * theta / 2) * np.array([np.cos(theta / 2), np.sin(theta / 2)])
    return Shape("droplet", (arc,), corners, True, theta, tuple(probe))


def make_circle(radius: float = 1.0) -> Shape:
    """Circle centered at the origin (smooth baseline, no corners)."""

    def gamma(u):
        u = np.asarray(u, float)
        return radius * np.stack([np.cos(u), np.sin(u)], axis=-1)

    def dgamma(u):
        u = np.asarray(u, float)
        return radius * np.stack([-np.sin(u), np.cos(u)], axis=-1)

    def d2gamma(u):
        return -gamma(u)

    arc = Arc(gamma, dgamma, d2gamma, 0.0, 2 * np.pi)
    return Shape("circle", (arc,), (), True, None, (0.0, 0.0))


def make_wedge(theta: float) -> Shape:
    """Open wedge of two unit edges: B = (cos theta, sin theta) -> O -> A = (1, 0).

    Parameterized by t in [-1, 0] on OB, gamma(t) = -t (cos theta, sin theta),
    and t in [0, 1] on OA, gamma(t) = (t, 0).
    """
    theta = float(theta)
    if not 0.0 < theta < 2 * np.pi:
        raise ValueError(f"wedge angle must lie in (0, 2 pi), got {theta}")
    e = np.array([np.cos(theta), np.sin(theta)])
    ob = Arc(lambda t: -np.asarray(t, float)[..., None] * e,
             lambda t: np.broadcast_to(-e, np.shape(t) + (2,)).copy(),
             lambda t: np.zeros(np.shape(t) + (2,)), -1.0, 0.0, None, 0)
    oa = _segment((0.0, 0.0), (1.0, 0.0), 0, None)
    return Shape("wedge", (ob, oa), (Corner((0.0, 0.0), theta),), False, theta,
                 tuple(0.5 * np.array([np.cos(theta / 2), np.sin(theta / 2)])))


def make_shape(name: str, theta: float | None = None) -> Shape:
    if name == "droplet":
        return make_droplet(np.pi / 2 if theta is None else theta)
    if name == "triangle":
        return make_triangle()
    if name == "lshape":
        return make_lshape()
    if name == "circle":
        return make_circle()
    raise ValueError(f"unknown shape {name!r}")


def polygon_area(shape: Shape, per_arc: int = 4000) -> float:
    poly = boundary_polygon(shape, per_arc)
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def centroid(shape: Shape, per_arc: int = 4000) -> np.ndarray:
    poly = boundary_polygon(shape, per_arc)
    x, y = poly[:, 0], poly[:, 1]
    cross = x * np.roll(y, -1) - np.roll(x, -1) * y
    area = 0.5 * cross.sum()
    cx = np.sum((x + np.roll(x, -1)) * cross) / (6 * area)
    cy = np.sum((y + np.roll(y, -1)) * cross) / (6 * area)
    return np.array([cx, cy])
