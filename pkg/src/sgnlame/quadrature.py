"""Gauss-Legendre rules, Legendre projections and Cauchy moments on [-1, 1].

Legendre polynomials use the classical normalization P_j(1) = 1 and the
projection factor (2j+1)/2 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import loggamma, rgamma

MAX_DEGREE = 64


@dataclass(frozen=True)
class GaussRule:
    p: int
    nodes: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class CauchyMoments:
    """C_j(t) = p.v. int_{-1}^{1} P_j(s)/(t-s) ds and the flat moments I_j."""

    t: float
    values: np.ndarray
    flank: np.ndarray


def _legendre_and_derivative(p: int, x: np.ndarray):
    p0 = np.ones_like(x)
    p1 = x.copy()
    if p == 0:
        return p0, np.zeros_like(x)
    for j in range(2, p + 1):
        p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
    dp = p * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


@lru_cache(maxsize=None)
def _rule(p: int) -> GaussRule:
    i = np.arange(1, p + 1)
    x = np.cos(np.pi * (i - 0.25) / (p + 0.5))
    for _ in range(100):
        val, der = _legendre_and_derivative(p, x)
        dx = val / der
        x = x - dx
        if np.max(np.abs(dx)) < 1e-16:
            break
    _, der = _legendre_and_derivative(p, x)
    w = 2.0 / ((1.0 - x * x) * der * der)
    order = np.argsort(x)
    x, w = x[order], w[order]
    # symmetrize to remove rounding asymmetry
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    x.setflags(write=False)
    w.setflags(write=False)
    return GaussRule(p, x, w)


def gauss_legendre(p: int) -> GaussRule:
    """Return the p-point Gauss-Legendre rule on [-1, 1] (cached)."""
    if not 1 <= int(p) <= 4 * MAX_DEGREE:
        raise ValueError(f"Gauss-Legendre degree must lie in [1, {4 * MAX_DEGREE}], got {p}")
    return _rule(int(p))


def legendre_vandermonde(x, m: int) -> np.ndarray:
    """Matrix V[i, j] = P_j(x_i) for j < m."""
    x = np.asarray(x)
    V = np.empty(x.shape + (m,), dtype=np.result_type(x, float))
    V[..., 0] = 1.0
    if m > 1:
        V[..., 1] = x
    for j in range(2, m):
        V[..., j] = ((2 * j - 1) * x * V[..., j - 1] - (j - 1) * V[..., j - 2]) / j
    return V


@lru_cache(maxsize=None)
def projection_matrix(p: int) -> np.ndarray:
    """Matrix Q with coefficients a = Q @ samples at the p Gauss nodes."""
    rule = gauss_legendre(p)
    V = legendre_vandermonde(rule.nodes, p)
    Q = ((2 * np.arange(p) + 1) / 2)[:, None] * (V * rule.weights[:, None]).T
    Q.setflags(write=False)
    return Q


def legendre_project(samples) -> np.ndarray:
    """Legendre coefficients of the degree p-1 interpolant of Gauss-node samples.

    ``samples`` has the node index first; trailing axes are carried along.
    """
    f = np.asarray(samples)
    p = f.shape[0]
    return np.tensordot(projection_matrix(p), f, axes=(1, 0))


def cauchy_moments(t: float, p: int) -> CauchyMoments:
    """Principal-value moments C_0..C_{p-1} at a real target t.

    Inside the interval the forward three-term recurrence is used. Outside,
    C_j = 2 Q_j(t) is the minimal solution of the same recurrence; it is
    obtained by Miller's backward recurrence normalized by C_0, unless the
    forward growth over p steps is harmless (|t| barely above 1).
    """
    t = float(t)
    if abs(abs(t) - 1.0) < 1e-8:
        raise ValueError(f"Cauchy moments requested at t={t!r}, too close to a panel endpoint")
    c = np.empty(p)
    c0 = np.log(abs((t + 1.0) / (t - 1.0)))
    flank = np.zeros(p)
    flank[0] = 2.0
    at = abs(t)
    growth = at + np.sqrt(max(at * at - 1.0, 0.0))
    if at < 1.0 or 2 * p * np.log(growth) < np.log(1e3):
        c[0] = c0
        if p > 1:
            c[1] = t * c0 - 2.0
        for j in range(2, p):
            c[j] = ((2 * j - 1) * t * c[j - 1] - (j - 1) * c[j - 2]) / j
        return CauchyMoments(t, c, flank)

    # Miller: start far enough that the dominant solution has died out
    start = p + int(np.ceil(40.0 / np.log(growth))) + 10
    q_next, q = 0.0, 1e-300
    tail = np.empty(start + 1)
    tail[start] = q
    for j in range(start, 0, -1):
        q_prev = ((2 * j + 1) * t * q - (j + 1) * q_next) / j
        q_next, q = q, q_prev
        tail[j - 1] = q
        if abs(q) > 1e250:
            tail[j - 1:] *= 1e-250
            q *= 1e-250
            q_next *= 1e-250
    c[:] = tail[:p] * (c0 / tail[0])
    return CauchyMoments(t, c, flank)


def _graded_offsets(n: int, levels: int):
    """Composite Gauss rule for y = x + 1 on [0, 2], dyadically graded toward 0."""
    rule = gauss_legendre(n)
    edges = np.concatenate(([0.0], 2.0 * 0.5 ** np.arange(levels + 1)[::-1]))
    a, b = edges[:-1], edges[1:]
    y = 0.5 * (b - a)[:, None] * (rule.nodes + 1.0)[None, :] + a[:, None]
    w = 0.5 * (b - a)[:, None] * rule.weights[None, :]
    return y.ravel(), w.ravel()


def singular_power_coeffs(a: float, b: float, z: complex, L: float, m: int) -> np.ndarray:
    """First m Legendre coefficients of (t/L)^z on the interval [a, b].

    Panels touching the corner (a = 0) use a composite rule graded
    geometrically toward t = 0; other panels are split geometrically in
    t/a when the singularity is close. The quadrature is refined until two
    successive results agree to 1e-13 relative to the coefficient scale.
    """
    if not 0.0 <= a < b:
        raise ValueError(f"invalid interval [{a}, {b}]")
    z = complex(z)
    if z.real <= 0.0:
        raise ValueError("singular power requires Re z > 0")
    half = 0.5 * (b - a)
    scale = (2 * np.arange(m) + 1) / 2
    n = max(4 * m, 64)

    def compute(level):
        if a == 0.0:
            levels = int(np.ceil(60.0 / (z.real + 1.0))) + 8 * level
            y, w = _graded_offsets(max(2 * m, 32), levels)
            f = np.exp(z * np.log(half * y / L))
            return scale * ((w * f) @ legendre_vandermonde(y - 1.0, m))
        else:
            pieces = 2 ** level
            ratio = b / a
            if ratio < 3.0 and level == 0:
                rule = gauss_legendre(n)
                x, w = rule.nodes, rule.weights
            else:
                edges = a * ratio ** np.linspace(0.0, 1.0, pieces + 1)
                rule = gauss_legendre(2 * m + 16)
                lo, hi = edges[:-1, None], edges[1:, None]
                tt = 0.5 * (hi - lo) * (rule.nodes + 1.0) + lo
                x = ((tt - a) / half - 1.0).ravel()
                w = (rule.weights * 0.5 * (hi - lo) / half).ravel()
        t = a + half * (x + 1.0)
        f = np.exp(z * np.log(t / L))
        return scale * ((w * f) @ legendre_vandermonde(x, m))

    prev = compute(0)
    for level in range(1, 12):
        cur = compute(level)
        ref = max(np.max(np.abs(cur)), 1e-300)
        if np.max(np.abs(cur - prev)) <= 1e-13 * ref:
            return cur
        prev = cur
    raise ArithmeticError(f"Legendre coefficients of t^{z} on [{a}, {b}] did not converge")


def singular_power_coeffs_exact(b: float, z: complex, L: float, m: int) -> np.ndarray:
    """Closed-form Legendre coefficients of (t/L)^z on [0, b].

    Uses int_{-1}^{1} (1+x)^z P_j(x) dx = 2^{z+1} Gamma(z+1)^2 / (Gamma(z+j+2) Gamma(z+1-j)).
    """
    z = complex(z)
    j = np.arange(m)
    logs = (z + 1) * np.log(2.0) + 2 * loggamma(z + 1) - loggamma(z + j + 2)
    vals = np.exp(logs) * rgamma(z + 1 - j)
    return (2 * j + 1) / 2 * np.exp(z * np.log(b / (2.0 * L))) * vals
