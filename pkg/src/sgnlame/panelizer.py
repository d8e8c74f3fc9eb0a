"""Panel meshes: corner-graded meshes driven by the Legendre-tail indicator, and uniform meshes."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .geometry import Shape, arclength, frame_at, parameter_at_arclength
from .quadrature import gauss_legendre, singular_power_coeffs, singular_power_coeffs_exact

MAX_DEPTH = 40


@dataclass(frozen=True)
class Panel:
    """Parameter interval [u0, u1] of one arc.

    For corner-owned panels, ``s0 < s1`` is the arclength interval measured
    from the owning corner and ``scale`` the arclength of the owning half-arc.
    """

    arc: int
    u0: float
    u1: float
    depth: int = 0
    owner: int | None = None
    s0: float = 0.0
    s1: float = 0.0
    scale: float = 1.0
    flagged: bool = False


@dataclass
class NodeTable:
    """Gauss nodes of a mesh in canonical order with their geometric data."""

    position: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    speed: np.ndarray
    curvature: np.ndarray
    u: np.ndarray
    local: np.ndarray
    weight: np.ndarray
    panel: np.ndarray


@dataclass
class Mesh:
    shape: Shape
    panels: list[Panel]
    p: int
    eps_pan: float | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def n_nodes(self) -> int:
        return self.p * len(self.panels)

    @property
    def dofs(self) -> int:
        return 2 * self.n_nodes

    @cached_property
    def nodes(self) -> NodeTable:
        rule = gauss_legendre(self.p)
        parts = []
        for k, pan in enumerate(self.panels):
            half = 0.5 * (pan.u1 - pan.u0)
            u = pan.u0 + half * (rule.nodes + 1.0)
            fr = frame_at(self.shape.arcs[pan.arc], u, pan.arc)
            parts.append((fr, u, half, k))
        cat = np.concatenate
        return NodeTable(
            position=cat([f.position for f, *_ in parts]),
            tangent=cat([f.tangent for f, *_ in parts]),
            normal=cat([f.normal for f, *_ in parts]),
            speed=cat([f.jacobian for f, *_ in parts]),
            curvature=cat([f.curvature for f, *_ in parts]),
            u=cat([u for _, u, _, _ in parts]),
            local=np.tile(rule.nodes, len(parts)),
            weight=cat([rule.weights * f.jacobian * h for f, _, h, _ in parts]),
            panel=np.repeat(np.arange(len(parts)), self.p),
        )

    def panel_length(self, k: int) -> float:
        pan = self.panels[k]
        return arclength(self.shape.arcs[pan.arc], pan.u0, pan.u1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["arc_id", "t0", "t1", "depth", "owner_corner", "flagged"])
        for pan in self.panels:
            w.writerow([pan.arc, repr(pan.u0), repr(pan.u1), pan.depth,
                        "" if pan.owner is None else pan.owner, int(pan.flagged)])
        return buf.getvalue()


def indicator(panel: Panel, exponents, p: int) -> float:
    """Legendre-tail indicator: max over exponents of the l2 norm of coefficients p..2p-1."""
    best = 0.0
    for z in exponents:
        z = complex(z)
        if abs(z - round(z.real)) < 1e-12 and round(z.real) >= 0:
            continue  # integer powers are polynomials of degree < p or resolved exactly
        if panel.s0 == 0.0:
            a = singular_power_coeffs_exact(panel.s1, z, panel.scale, 2 * p)
        else:
            a = singular_power_coeffs(panel.s0, panel.s1, z, panel.scale, 2 * p)
        best = max(best, float(np.sqrt(np.sum(np.abs(a[p:]) ** 2))))
    return best


def _half_arcs(shape: Shape):
    """Yield (arc id, u_lo, u_hi, owner corner, corner side) pieces covering every arc."""
    for i, arc in enumerate(shape.arcs):
        a, b = arc.start_corner, arc.end_corner
        if a is not None and b is not None:
            total = arclength(arc, arc.u0, arc.u1)
            um = parameter_at_arclength(arc, 0.5 * total)
            yield i, arc.u0, um, a, "start"
            yield i, um, arc.u1, b, "end"
        elif a is not None:
            yield i, arc.u0, arc.u1, a, "start"
        elif b is not None:
            yield i, arc.u0, arc.u1, b, "end"
        else:
            yield i, arc.u0, arc.u1, None, None


def _corner_distance(arc, side, u0, u1):
    if side == "start":
        return arclength(arc, arc.u0, u0) if u0 > arc.u0 else 0.0, arclength(arc, arc.u0, u1)
    s0 = arclength(arc, u1, arc.u1) if u1 < arc.u1 else 0.0
    return s0, arclength(arc, u0, arc.u1)


def refine(shape: Shape, spectra, p: int = 16, eps_pan: float = 1e-9, max_depth: int = MAX_DEPTH,
           base_panels: int = 4, free_panels: int = 8) -> Mesh:
    """Corner-graded mesh: bisect corner-owned panels until the indicator accepts them.

    ``spectra`` maps corner id to an iterable of exponents (a CornerSpectrum
    or a plain list). Each half-arc starts as ``base_panels`` equal parameter
    panels; arcs without corners get ``free_panels`` panels.
    """
    if eps_pan <= 0:
        raise ValueError("eps_pan must be positive")
    panels: list[Panel] = []
    warnings: list[str] = []
    for arc_id, lo, hi, owner, side in _half_arcs(shape):
        arc = shape.arcs[arc_id]
        if owner is None:
            edges = np.linspace(lo, hi, free_panels + 1)
            panels += [Panel(arc_id, float(a), float(b)) for a, b in zip(edges[:-1], edges[1:])]
            continue
        exps = [complex(z) for z in _exponents(spectra, owner) if 0 < complex(z).real < p]
        scale = arclength(arc, lo, hi)
        edges = np.linspace(lo, hi, base_panels + 1)
        ctx = (arc_id, arc, side, owner, exps, p, eps_pan, max_depth, scale, warnings)
        for a, b in zip(edges[:-1], edges[1:]):
            panels += _bisect(ctx, float(a), float(b), 0)
    return Mesh(shape, panels, p, eps_pan, warnings)


def _exponents(spectra, corner):
    spec = spectra[corner] if not hasattr(spectra, "exponents") else spectra
    return spec.exponents if hasattr(spec, "exponents") else spec


def _bisect(ctx, u0, u1, depth):
    arc_id, arc, side, owner, exps, p, eps, max_depth, scale, warnings = ctx
    s0, s1 = _corner_distance(arc, side, u0, u1)
    pan = Panel(arc_id, u0, u1, depth, owner, s0, s1, scale)
    eta = indicator(pan, exps, p) if exps else 0.0
    if eta <= eps:
        return [pan]
    if depth >= max_depth:
        warnings.append(f"panel [{u0}, {u1}] of arc {arc_id} hit max depth with indicator {eta:.3e}")
        return [replace(pan, flagged=True)]
    um = 0.5 * (u0 + u1)
    return _bisect(ctx, u0, um, depth + 1) + _bisect(ctx, um, u1, depth + 1)


def uniform_mesh(shape: Shape, panels_per_arc: int | None = None, p: int = 16,
                 total_panels: int | None = None) -> Mesh:
    """Equispaced-parameter panels without refinement.

    Either a count per arc, or a total count distributed over the arcs in
    proportion to arclength (largest remainder, at least one per arc).
    """
    n_arcs = len(shape.arcs)
    if total_panels is not None:
        lengths = np.array([arclength(a, a.u0, a.u1) for a in shape.arcs])
        share = total_panels * lengths / lengths.sum()
        counts = np.maximum(np.floor(share).astype(int), 1)
        for i in np.argsort(-(share - np.floor(share)), kind="stable"):
            if counts.sum() >= total_panels:
                break
            counts[i] += 1
    else:
        if panels_per_arc is None or panels_per_arc < 1:
            raise ValueError("panels_per_arc must be at least 1")
        counts = np.full(n_arcs, panels_per_arc)
    panels = []
    for i, (arc, n) in enumerate(zip(shape.arcs, counts)):
        edges = np.linspace(arc.u0, arc.u1, int(n) + 1)
        panels += [Panel(i, float(a), float(b)) for a, b in zip(edges[:-1], edges[1:])]
    return Mesh(shape, panels, p)
