"""Nyström discretization of the interior Dirichlet double-layer equation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack, lu_factor, lu_solve

from .geometry import Shape, centroid, distance_to_boundary, frame_at, winding_number
from .kernels import BoundaryFrame, ElasticParams, double_layer_kernel, kelvin, split_kernel
from .panelizer import Mesh
from .quadrature import cauchy_moments, gauss_legendre, legendre_vandermonde, projection_matrix

NEAR_FACTOR = 0.1
FAR_RATIO = 5.0
CLOSE_RATIO = 1.0


@dataclass(frozen=True)
class SourceSet:
    locations: np.ndarray
    strengths: np.ndarray

    def field(self, points, params: ElasticParams) -> np.ndarray:
        """Displacement sum_s G(x, y_s) q_s at points of shape (n, 2)."""
        pts = np.atleast_2d(np.asarray(points, float))
        G = kelvin(pts[:, None, :], self.locations[None, :, :], params)
        return np.einsum("nsij,sj->ni", G, self.strengths)


@dataclass
class DenseSystem:
    matrix: np.ndarray
    rhs: np.ndarray | None
    mesh: Mesh


@dataclass
class Solution:
    density: np.ndarray
    residual: float
    cond_est: float
    pivot_growth: float

    @property
    def nodal(self) -> np.ndarray:
        return self.density.reshape(-1, 2)


def _interleave(blocks: np.ndarray) -> np.ndarray:
    """(n, m, 2, 2) kernel blocks -> (2n, 2m) matrix with (phi1, phi2) per node."""
    n, m = blocks.shape[:2]
    return blocks.transpose(0, 2, 1, 3).reshape(2 * n, 2 * m)


def _is_periodic(shape: Shape, arc_id: int) -> bool:
    arc = shape.arcs[arc_id]
    return shape.closed and len(shape.arcs) == 1 and arc.start_corner is None and arc.end_corner is None


def _near_pairs(mesh: Mesh, near_factor: float):
    """(source panel, target panel) pairs handled by the split product rule."""
    shape = mesh.shape
    by_arc: dict[int, list[int]] = {}
    for k, pan in enumerate(mesh.panels):
        by_arc.setdefault(pan.arc, []).append(k)
    pairs = []
    for arc_id, ids in by_arc.items():
        arc = shape.arcs[arc_id]
        ends = {k: arc.gamma(np.array([mesh.panels[k].u0, mesh.panels[k].u1])) for k in ids}
        lengths = {k: mesh.panel_length(k) for k in ids}
        periodic = _is_periodic(shape, arc_id)
        period = arc.u1 - arc.u0
        for k in ids:
            pk = mesh.panels[k]
            for q in ids:
                pq = mesh.panels[q]
                if q == k:
                    pairs.append((k, q))
                    continue
                adjacent = pk.u1 == pq.u0 or pk.u0 == pq.u1
                if periodic:
                    adjacent = adjacent or abs(abs(pk.u1 - pq.u0) - period) < 1e-14 \
                        or abs(abs(pk.u0 - pq.u1) - period) < 1e-14
                gap = np.min(np.linalg.norm(ends[k][:, None, :] - ends[q][None, :, :], axis=-1))
                if adjacent or gap <= near_factor * max(lengths[k], lengths[q]):
                    pairs.append((k, q))
    return pairs


def assemble(mesh: Mesh, params: ElasticParams, near_factor: float = NEAR_FACTOR,
             chunk: int = 512) -> DenseSystem:
    """Assemble the 2N x 2N matrix of -1/2 I + K on the mesh nodes."""
    nt = mesh.nodes
    n = len(nt.u)
    A = np.empty((2 * n, 2 * n))
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        x = nt.position[lo:hi, None, :]
        r = x - nt.position[None, :, :]
        coincide = np.all(r == 0.0, axis=-1)
        y = np.where(coincide[..., None], nt.position[None, :, :] + 1.0, nt.position[None, :, :])
        D = double_layer_kernel(x, y, nt.normal[None, :, :], params)
        D = D * nt.weight[None, :, None, None]
        A[2 * lo:2 * hi] = _interleave(D)

    p = mesh.p
    rule = gauss_legendre(p)
    Q = projection_matrix(p)
    near = _near_pairs(mesh, near_factor)
    for src, tgt in near:
        _near_block(mesh, params, src, tgt, A, rule, Q)
    for src, tgt in _close_pairs(mesh):
        _close_block(mesh, params, src, tgt, A, rule, Q)
    A[np.arange(2 * n), np.arange(2 * n)] -= 0.5
    return DenseSystem(A, None, mesh)


def _near_block(mesh, params, src, tgt, A, rule, Q):
    p = mesh.p
    nt = mesh.nodes
    shape = mesh.shape
    ps = mesh.panels[src]
    arc = shape.arcs[ps.arc]
    half = 0.5 * (ps.u1 - ps.u0)
    mid = 0.5 * (ps.u1 + ps.u0)
    cols = slice(src * p, (src + 1) * p)
    rows = range(tgt * p, (tgt + 1) * p)
    s = rule.nodes
    jac_y = nt.speed[cols] * half
    fy = BoundaryFrame(nt.position[cols], nt.tangent[cols], nt.normal[cols], jac_y, nt.curvature[cols], ps.arc)
    du = nt.u[list(rows)] - mid
    if _is_periodic(shape, ps.arc):
        period = arc.u1 - arc.u0
        du = (du + 0.5 * period) % period - 0.5 * period
    t_all = du / half
    if src == tgt:
        t_all = s.copy()
    for row, t in zip(rows, t_all):
        fx = BoundaryFrame(nt.position[row], nt.tangent[row], nt.normal[row], nt.speed[row] * half,
                           nt.curvature[row], ps.arc)
        D1, D2 = split_kernel(fx, fy, t, s, params)
        W = cauchy_moments(t, p).values @ Q
        blk = D1 * (jac_y * W)[:, None, None] + D2 * (jac_y * rule.weights)[:, None, None]
        A[2 * row:2 * row + 2, 2 * cols.start:2 * cols.stop] = _interleave(blk[None])


def _param_adjacent(mesh: Mesh, k: int, q: int) -> bool:
    pk, pq = mesh.panels[k], mesh.panels[q]
    if k == q:
        return True
    if pk.arc != pq.arc:
        return False
    if pk.u1 == pq.u0 or pk.u0 == pq.u1:
        return True
    if _is_periodic(mesh.shape, pk.arc):
        period = mesh.shape.arcs[pk.arc].u1 - mesh.shape.arcs[pk.arc].u0
        return abs(abs(pk.u1 - pq.u0) - period) < 1e-14 or abs(abs(pk.u0 - pq.u1) - period) < 1e-14
    return False


def _close_pairs(mesh: Mesh, ratio: float = CLOSE_RATIO):
    """(source, target) pairs whose nodes come within ``ratio`` source lengths but are not split-rule pairs.

    These are mostly panels meeting at a corner from the two sides, where the
    target node next to the corner sees a nearly singular kernel on every
    grading level.
    """
    nt = mesh.nodes
    p = mesh.p
    pos = nt.position.reshape(len(mesh.panels), p, 2)
    pairs = []
    for src in range(len(mesh.panels)):
        d = np.linalg.norm(nt.position[:, None, :] - pos[src][None], axis=-1).min(axis=1)
        dmin = d.reshape(len(mesh.panels), p).min(axis=1)
        for tgt in np.nonzero(dmin < ratio * mesh.panel_length(src))[0]:
            if not _param_adjacent(mesh, src, int(tgt)):
                pairs.append((src, int(tgt)))
    return pairs


def _close_block(mesh, params, src, tgt, A, rule, Q, ratio: float = CLOSE_RATIO, max_level: int = 40):
    """Source panel integrated against the Legendre interpolant of its density, bisected per target."""
    p = mesh.p
    nt = mesh.nodes
    pan = mesh.panels[src]
    arc = mesh.shape.arcs[pan.arc]
    half = 0.5 * (pan.u1 - pan.u0)
    mid = 0.5 * (pan.u1 + pan.u0)
    cols = slice(2 * src * p, 2 * (src + 1) * p)
    for row in range(tgt * p, (tgt + 1) * p):
        x = nt.position[row]
        pieces, done = [(-1.0, 1.0)], []
        for _ in range(max_level):
            if not pieces:
                break
            nxt = []
            for a, b in pieces:
                loc = a + 0.5 * (b - a) * (rule.nodes + 1.0)
                fr = frame_at(arc, mid + half * loc)
                length = 0.5 * (b - a) * half * np.sum(fr.jacobian * rule.weights)
                dist = np.min(np.linalg.norm(fr.position - x, axis=-1))
                if length > ratio * dist:
                    c = 0.5 * (a + b)
                    nxt += [(a, c), (c, b)]
                else:
                    done.append((a, b, loc, fr))
            pieces = nxt
        if pieces:
            raise ValueError(f"target node {row} too close to panel {src} for close quadrature")
        loc = np.concatenate([d[2] for d in done])
        w = np.concatenate([0.5 * (d[1] - d[0]) * rule.weights * d[3].jacobian * half for d in done])
        y = np.concatenate([d[3].position for d in done])
        nrm = np.concatenate([d[3].normal for d in done])
        interp = legendre_vandermonde(loc, p) @ Q
        D = double_layer_kernel(x[None], y, nrm, params) * w[:, None, None]
        blk = np.einsum("qab,qj->ajb", D, interp).reshape(2, 2 * p)
        A[2 * row:2 * row + 2, cols] = blk


def solve_dense(system: DenseSystem, rhs=None) -> Solution:
    """LU solve with partial pivoting; records residual, pivot growth and a 1-norm condition estimate."""
    A = system.matrix
    f = system.rhs if rhs is None else np.asarray(rhs, float)
    if f is None:
        raise ValueError("no right-hand side")
    lu, piv = lu_factor(A, check_finite=True)
    scale = np.max(np.abs(A))
    if scale == 0.0 or np.min(np.abs(np.diag(lu))) < 1e-14 * scale:
        raise np.linalg.LinAlgError("numerically singular Nyström matrix; check for exceptional angles or flagged panels")
    phi = lu_solve((lu, piv), f)
    fnorm = np.linalg.norm(f)
    res = np.linalg.norm(A @ phi - f) / fnorm if fnorm > 0 else 0.0
    anorm = np.linalg.norm(A, 1)
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    cond = 1.0 / rcond if rcond > 0 else np.inf
    growth = float(np.max(np.abs(np.triu(lu))) / scale)
    return Solution(phi, float(res), float(cond), growth)


def synth_dirichlet_data(sources: SourceSet, mesh: Mesh, params: ElasticParams) -> np.ndarray:
    """Boundary values of the exterior-source Kelvin field, interleaved per node."""
    validate_sources(sources, mesh.shape)
    return sources.field(mesh.nodes.position, params).ravel()


def validate_sources(sources: SourceSet, shape: Shape, clearance: float = 0.5):
    loc = np.atleast_2d(sources.locations)
    for y in loc:
        if shape.closed and winding_number(shape, y) != 0:
            raise ValueError(f"source {tuple(y)} lies inside the domain")
    if np.any(distance_to_boundary(shape, loc) < clearance):
        raise ValueError(f"sources must lie at least {clearance} outside the boundary")


def default_sources(shape: Shape, clearance: float = 0.5) -> SourceSet:
    """Three exterior sources around the shape, pushed out until they clear the boundary."""
    offsets = np.array([[3.0, 1.5], [-2.5, 2.0], [0.5, -3.0]])
    strengths = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    c = centroid(shape)
    scale = 1.0
    while True:
        loc = c + scale * offsets
        if np.all(distance_to_boundary(shape, loc) >= clearance) and all(
                winding_number(shape, y) == 0 for y in loc):
            return SourceSet(loc, strengths)
        scale *= 1.25


def default_targets(shape: Shape, count: int = 5) -> np.ndarray:
    """Interior points at 0.3 to 0.6 of the centroid's boundary distance, spread in angle."""
    c = centroid(shape)
    rin = float(distance_to_boundary(shape, c)[0])
    frac = np.linspace(0.3, 0.6, count)
    ang = 2 * np.pi * np.arange(count) / count + 0.3
    return c + (frac * rin)[:, None] * np.stack([np.cos(ang), np.sin(ang)], axis=1)


def eval_interior(solution: Solution, mesh: Mesh, targets, params: ElasticParams,
                  far_ratio: float = FAR_RATIO, max_split: int = 12) -> np.ndarray:
    """Double-layer potential at interior targets by Gauss quadrature.

    Panels closer than ``far_ratio`` panel lengths to a target are evaluated
    on dyadic sub-panels carrying the Legendre interpolant of the density, so
    every quadrature panel is in the far regime.
    """
    tg = np.atleast_2d(np.asarray(targets, float))
    p = mesh.p
    rule = gauss_legendre(p)
    Q = projection_matrix(p)
    phi = solution.nodal.reshape(len(mesh.panels), p, 2)
    out = np.zeros((len(tg), 2))
    for k, pan in enumerate(mesh.panels):
        arc = mesh.shape.arcs[pan.arc]
        sl = slice(k * p, (k + 1) * p)
        pts = mesh.nodes.position[sl]
        length = mesh.panel_length(k)
        dist = np.min(np.linalg.norm(tg[:, None, :] - pts[None], axis=-1), axis=1)
        # node sampling underestimates nothing at this ratio: nodes are within length/2p of the panel
        ratio = far_ratio * length / np.maximum(dist - length / p, 1e-300)
        level = int(np.max(np.ceil(np.log2(np.maximum(ratio, 1.0)))))
        if level > max_split:
            raise ValueError(f"target within {dist.min():.2e} of panel {k}: close evaluation is not supported")
        if level == 0:
            y, nrm, w, dens = pts, mesh.nodes.normal[sl], mesh.nodes.weight[sl], phi[k]
        else:
            m = 2 ** level
            edges = np.linspace(-1.0, 1.0, m + 1)
            loc = (0.5 * (edges[1:] - edges[:-1])[:, None] * (rule.nodes + 1.0) + edges[:-1, None]).ravel()
            wl = (0.5 * (edges[1:] - edges[:-1])[:, None] * rule.weights).ravel()
            coef = Q @ phi[k]
            dens = legendre_vandermonde(loc, p) @ coef
            half = 0.5 * (pan.u1 - pan.u0)
            fr = frame_at(arc, pan.u0 + half * (loc + 1.0))
            y, nrm, w = fr.position, fr.normal, wl * fr.jacobian * half
        D = double_layer_kernel(tg[:, None, :], y[None], nrm[None], params)
        out += np.einsum("tnij,nj,n->ti", D, dens, w)
    return out


def relative_error(numeric, exact) -> float:
    num = np.asarray(numeric, float)
    ex = np.asarray(exact, float)
    if num.shape != ex.shape:
        raise ValueError("numeric and exact arrays differ in shape")
    den = np.sum(ex * ex)
    if den == 0.0:
        raise ZeroDivisionError("exact field is identically zero")
    return float(np.sqrt(np.sum((num - ex) ** 2) / den))
