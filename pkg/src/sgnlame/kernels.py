"""Kelvin matrix, traction (double-layer) kernel and its Cauchy splitting.

All functions broadcast over leading axes: points are arrays of shape
(..., 2) and kernels are returned with shape (..., 2, 2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ROT = np.array([[0.0, 1.0], [-1.0, 0.0]])
EYE = np.eye(2)


@dataclass(frozen=True)
class ElasticParams:
    """Lamé constants (plane strain) and the derived kernel constants.

    ``c1_shift`` is a debug hook that perturbs c1 only; it exists so the
    verification battery can prove it detects a wrong constant.
    """

    lam: float = 1.0
    mu: float = 2.0
    c1_shift: float = field(default=0.0, repr=False)

    def __post_init__(self):
        if not self.mu > 0 or not self.lam + self.mu > 0:
            raise ValueError(f"need mu > 0 and lambda + mu > 0, got lambda={self.lam}, mu={self.mu}")

    @property
    def c1(self) -> float:
        return self.mu / (2.0 * (self.lam + 2.0 * self.mu)) + self.c1_shift

    @property
    def c2(self) -> float:
        return (self.lam + self.mu) / (self.lam + 2.0 * self.mu)

    @property
    def c(self) -> float:
        return (self.lam + 3.0 * self.mu) / (self.lam + self.mu)

    @property
    def k0(self) -> float:
        return self.mu / (2.0 * (self.lam + 2.0 * self.mu))


@dataclass(frozen=True)
class BoundaryFrame:
    """Point on a boundary arc with unit tangent, outward normal, speed and curvature.

    Fields may hold arrays with matching leading shapes. ``arc`` identifies
    the smooth arc the frame lies on (None when unknown).
    """

    position: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    jacobian: np.ndarray
    curvature: np.ndarray
    arc: int | None = None


def _outer(r):
    return r[..., :, None] * r[..., None, :]


def kelvin(x, y, params: ElasticParams) -> np.ndarray:
    """Kelvin fundamental solution G(x, y) of the plane-strain Lamé system."""
    r = np.asarray(x, float) - np.asarray(y, float)
    r2 = np.sum(r * r, axis=-1)
    if np.any(r2 == 0.0):
        raise ValueError("Kelvin matrix evaluated at coincident points")
    lam, mu = params.lam, params.mu
    a = -(lam + 3 * mu) / (lam + 2 * mu) * 0.5 * np.log(r2)
    b = (lam + mu) / (lam + 2 * mu) / r2
    return (a[..., None, None] * EYE + b[..., None, None] * _outer(r)) / (4 * np.pi * mu)


def traction_kernel(x, frame_y: BoundaryFrame, params: ElasticParams) -> np.ndarray:
    """Double-layer kernel D(x, y) with y and n(y) taken from a boundary frame."""
    return double_layer_kernel(x, frame_y.position, frame_y.normal, params)


def double_layer_kernel(x, y, normal_y, params: ElasticParams) -> np.ndarray:
    """Double-layer kernel D(x, y) for a source point y with outward normal n(y)."""
    r = np.asarray(x, float) - np.asarray(y, float)
    n = np.asarray(normal_y, float)
    tau = np.stack([-n[..., 1], n[..., 0]], axis=-1)
    r2 = np.sum(r * r, axis=-1)
    if np.any(r2 == 0.0):
        raise ValueError("traction kernel evaluated at coincident points")
    nr = np.sum(n * r, axis=-1)
    tr = np.sum(tau * r, axis=-1)
    a = 2 * params.c1 / (2 * np.pi * r2)
    out = (a * nr)[..., None, None] * EYE + (a * tr)[..., None, None] * ROT
    out = out + (params.c2 * nr / (np.pi * r2 * r2))[..., None, None] * _outer(r)
    return out


def split_kernel(frame_x: BoundaryFrame, frame_y: BoundaryFrame, t, s, params: ElasticParams):
    """Return (D1, D2) with D = D1/(t - s) + D2 on one smooth arc.

    ``t`` and ``s`` are local coordinates of x and y in a common
    parameterization, and the frame jacobians refer to that coordinate.
    Where t == s the closed-form diagonal limits are returned.
    """
    if frame_x.arc is not None and frame_y.arc is not None and frame_x.arc != frame_y.arc:
        raise ValueError(f"kernel splitting across arcs {frame_x.arc} and {frame_y.arc}")
    t = np.asarray(t, float)
    s = np.asarray(s, float)
    x = np.asarray(frame_x.position, float)
    y = np.asarray(frame_y.position, float)
    tx = np.asarray(frame_x.tangent, float)
    ty = np.asarray(frame_y.tangent, float)
    ny = np.asarray(frame_y.normal, float)
    shape = np.broadcast_shapes(t.shape, s.shape, x.shape[:-1], y.shape[:-1])
    h = np.broadcast_to(t - s, shape)
    diag = h == 0.0

    r = np.broadcast_to(x - y, shape + (2,))
    r2 = np.sum(r * r, axis=-1)
    safe = np.where(diag, 1.0, r2)
    two_c1 = 2 * params.c1
    tx_b = np.broadcast_to(tx, shape + (2,))
    d1 = two_c1 * h * np.sum(tx_b * r, axis=-1) / (2 * np.pi * safe)
    dtr = np.sum((ty - tx) * r, axis=-1)
    nr = np.sum(ny * r, axis=-1)
    d2_rot = two_c1 * dtr / (2 * np.pi * safe)
    d2_eye = two_c1 * nr / (2 * np.pi * safe)
    d2_out = params.c2 * nr / (np.pi * safe * safe)
    D1 = d1[..., None, None] * ROT
    D2 = d2_rot[..., None, None] * ROT + d2_eye[..., None, None] * EYE + d2_out[..., None, None] * _outer(r)

    if np.any(diag):
        jac = np.broadcast_to(np.asarray(frame_x.jacobian, float), shape)
        kap = np.broadcast_to(np.asarray(frame_x.curvature, float), shape)
        D1 = np.where(diag[..., None, None], (params.c1 / (np.pi * jac))[..., None, None] * ROT, D1)
        lim = -(kap / (2 * np.pi))[..., None, None] * (params.c1 * EYE + params.c2 * _outer(tx_b))
        D2 = np.where(diag[..., None, None], lim, D2)
    return D1, D2
