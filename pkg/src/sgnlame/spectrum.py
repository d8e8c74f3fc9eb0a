"""Corner exponents of the Lamé double-layer operator on a wedge.

The characteristic function factors into four branches

    H1 = z sin(theta) - sin((2 pi - theta) z)
    H2 = z sin(theta) + sin((2 pi - theta) z)
    H3 = z sin(theta) + c sin(theta z)
    H4 = z sin(theta) - c sin(theta z)

with c = (lambda + 3 mu)/(lambda + mu). Roots are located with the argument
principle on rectangles, isolated by quadrisection and polished by Newton.
"""

from __future__ import annotations

import csv
import enum
import io
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .kernels import ElasticParams

INTEGER_TOL = 1e-8
DEDUP_TOL = 1e-8


class BranchId(enum.Enum):
    H1 = 1
    H2 = 2
    H3 = 3
    H4 = 4


def _coeffs(branch: BranchId, theta: float, params: ElasticParams):
    """Return (sign, amplitude, frequency) so that H = z sin(theta) + sign*amp*sin(freq z)."""
    if branch is BranchId.H1:
        return -1.0, 1.0, 2 * np.pi - theta
    if branch is BranchId.H2:
        return 1.0, 1.0, 2 * np.pi - theta
    if branch is BranchId.H3:
        return 1.0, params.c, theta
    return -1.0, params.c, theta


def branch_residual(branch: BranchId, z, theta, params: ElasticParams):
    sgn, amp, w = _coeffs(branch, theta, params)
    return z * np.sin(theta) + sgn * amp * np.sin(w * z)


def branch_derivative(branch: BranchId, z, theta, params: ElasticParams):
    sgn, amp, w = _coeffs(branch, theta, params)
    return np.sin(theta) + sgn * amp * w * np.cos(w * z)


def branch_theta_derivative(branch: BranchId, z, theta, params: ElasticParams):
    sgn, amp, w = _coeffs(branch, theta, params)
    dw = -1.0 if branch in (BranchId.H1, BranchId.H2) else 1.0
    return z * np.cos(theta) + sgn * amp * dw * z * np.cos(w * z)


def characteristic(z, theta, params: ElasticParams):
    """(z^2 sin^2 - sin^2((2pi-theta) z)) (z^2 sin^2 - c^2 sin^2(theta z))."""
    s = np.sin(theta)
    return (z * z * s * s - np.sin((2 * np.pi - theta) * z) ** 2) * (
        z * z * s * s - params.c ** 2 * np.sin(theta * z) ** 2)


# ---------------------------------------------------------------- root finding


class RootFindingError(RuntimeError):
    pass


class _BoundaryHit(Exception):
    pass


def _magnitude(branch, theta, params):
    """Size of the two terms of a branch, the natural scale for 'f is zero here'."""
    _, amp, w = _coeffs(branch, theta, params)
    return lambda z: np.abs(z * np.sin(theta)) + amp * np.cosh(w * np.imag(z))


def _residual_tol(z):
    return 1e-12 * (1.0 + abs(z))


def _edge_winding(f, za, zb, freq, scale):
    """Total change of arg f along the segment za -> zb."""
    n = int(np.clip(np.ceil(abs(zb - za) * max(freq, 1.0) * 4.0), 16, 4096))
    u = np.linspace(0.0, 1.0, n + 1)
    zs = za + (zb - za) * u
    vals = f(zs)
    for _ in range(30):
        if np.any(np.abs(vals) <= 1e-12 * scale(zs)):
            raise _BoundaryHit
        d = np.angle(vals[1:] / vals[:-1])
        bad = np.abs(d) > np.pi / 6
        if not np.any(bad):
            return float(np.sum(d))
        u = np.sort(np.concatenate([u, 0.5 * (u[:-1][bad] + u[1:][bad])]))
        zs = za + (zb - za) * u
        vals = f(zs)
    raise _BoundaryHit


def _box_count(f, box, freq, scale):
    x0, x1, y0, y1 = box
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
    total = 0.0
    for a, b in zip(corners, corners[1:] + corners[:1]):
        total += _edge_winding(f, a, b, freq, scale)
    w = total / (2 * np.pi)
    k = int(round(w))
    if abs(w - k) > 0.05 or k < 0:
        raise _BoundaryHit
    return k


def _newton(f, df, z, mult=1, maxit=60):
    fz = f(z)
    for _ in range(maxit):
        d = df(z)
        if d == 0:
            break
        step = mult * fz / d
        lam = 1.0
        while lam > 1e-6:
            zn = z - lam * step
            fn = f(zn)
            if abs(fn) < abs(fz) or abs(fz) < _residual_tol(z):
                break
            lam *= 0.5
        z, fz = zn, fn
        if abs(lam * step) < 1e-15 * (1 + abs(z)):
            break
    return z, abs(fz)


def _inside(z, box, pad=0.0):
    x0, x1, y0, y1 = box
    return x0 - pad <= z.real <= x1 + pad and y0 - pad <= z.imag <= y1 + pad


def _nudged(box, k):
    x0, x1, y0, y1 = box
    e = 1e-7 * (1 + max(abs(x0), abs(x1), abs(y0), abs(y1))) * (1 + 3.7 * k)
    return (x0 + e * 0.61, x1 + e * 0.37, y0 - e * 0.53, y1 + e * 0.71)


def find_roots_in_box(branch: BranchId, theta: float, params: ElasticParams, box, max_roots: int = 500,
                      max_depth: int = 30):
    """All roots of one branch in box = (re_lo, re_hi, im_lo, im_hi), with multiplicity.

    Returns a list of (root, multiplicity) sorted by (Re, Im). The box edges
    are shifted by tiny amounts when a root sits on them. Boxes are
    quadrisected until they hold at most two roots, which are then found by
    Newton's method with deflation.
    """
    f = lambda z: branch_residual(branch, z, theta, params)
    df = lambda z: branch_derivative(branch, z, theta, params)
    freq = max(2 * np.pi - theta, theta, 1.0)
    scale = _magnitude(branch, theta, params)
    count = lambda b: _box_count(f, b, freq, scale)

    box = tuple(map(float, box))
    for k in range(12):
        try:
            n = count(box)
            break
        except _BoundaryHit:
            box = _nudged(box, k)
    else:
        raise RootFindingError(f"cannot place a root-free contour around box {box}")
    if n > max_roots:
        raise RootFindingError(f"{n} roots in box exceeds max_roots={max_roots}")

    found: list[tuple[complex, int]] = []

    def search(b, n, depth):
        if n == 0:
            return
        if n <= 2:
            leaf = _leaf_roots(f, df, b, n)
            if leaf is not None:
                found.extend(leaf)
                return
        if depth >= max_depth:
            raise RootFindingError(f"root isolation failed in sub-box {b} (count {n})")
        x0, x1, y0, y1 = b
        for shift in (0.5037, 0.4613, 0.5521, 0.4119, 0.5873, 0.3571):
            xm = x0 + shift * (x1 - x0)
            ym = y0 + (1 - shift) * (y1 - y0)
            kids = [(x0, xm, y0, ym), (xm, x1, y0, ym), (x0, xm, ym, y1), (xm, x1, ym, y1)]
            try:
                counts = [count(kb) for kb in kids]
            except _BoundaryHit:
                continue
            if sum(counts) == n:
                break
        else:
            raise RootFindingError(f"cannot split box {b} holding {n} roots")
        for kb, c in zip(kids, counts):
            search(kb, c, depth + 1)

    search(box, n, 0)
    polished = []
    for z, m in found:
        z, _ = _newton(f, df, z, m)
        if abs(z.imag) < 1e-13 * (1 + abs(z)):
            z = complex(z.real, 0.0)
        polished.append((z, m))
    polished.sort(key=lambda zm: (round(zm[0].real, 12), zm[0].imag))
    return polished


def _leaf_roots(f, df, b, n):
    """Roots in a box holding one or two of them, or None when Newton misses."""
    x0, x1, y0, y1 = b
    size = max(x1 - x0, y1 - y0)
    pad = 1e-9 * (1 + size)
    ok = lambda z, r: r <= 10 * _residual_tol(z) and _inside(z, b, pad)
    center = complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
    z1, r1 = _newton(f, df, center)
    if not ok(z1, r1):
        return None
    if n == 1:
        return [(z1, 1)]
    g = lambda z: f(z) / (z - z1)
    dg = lambda z: (df(z) - f(z) / (z - z1)) / (z - z1)
    starts = [z1.conjugate(), center + 0.25 * size, center - 0.25j * size, center - 0.25 * size,
              center + 0.25j * size, center]
    for start in starts:
        if abs(start - z1) < 1e-12 * (1 + size):
            continue
        z2, _ = _newton(g, dg, start)
        if abs(z2 - z1) > 1e-7 * (1 + abs(z1)) and ok(z2, abs(f(z2))):
            return [(z1, 1), (z2, 1)]
    zd, rd = _newton(f, df, z1, 2)
    # a genuine double root also zeroes the derivative; otherwise let the caller split the box
    if ok(zd, rd) and abs(df(zd)) <= 1e-6 * (1 + abs(zd)):
        return [(zd, 2)]
    return None


# ---------------------------------------------------------------- spectrum


@dataclass(frozen=True)
class SpectrumRoot:
    branches: tuple[BranchId, ...]
    z: complex
    residual: float


@dataclass(frozen=True)
class CornerSpectrum:
    theta: float
    params: ElasticParams
    roots: tuple[SpectrumRoot, ...]
    dominant: int | None

    @property
    def exponents(self) -> list[complex]:
        return [r.z for r in self.roots]

    @property
    def dominant_root(self) -> SpectrumRoot | None:
        return None if self.dominant is None else self.roots[self.dominant]

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(["branch", "re_z", "im_z", "residual", "dominant_flag"])
        for i, r in enumerate(self.roots):
            w.writerow(["+".join(b.name for b in r.branches), repr(r.z.real), repr(r.z.imag),
                        f"{r.residual:.3e}", int(i == self.dominant)])
        return buf.getvalue()


def is_integer(z, tol: float = INTEGER_TOL) -> bool:
    z = complex(z)
    return abs(z - round(z.real)) < tol


def dominant_index(zs) -> int | None:
    if not zs:
        return None
    return min(range(len(zs)), key=lambda i: (complex(zs[i]).real, abs(complex(zs[i]).imag)))


def corner_spectrum(theta: float, params: ElasticParams | None = None, re_max: float = 16.0,
                    im_max: float = 8.0) -> CornerSpectrum:
    """Merged non-integer roots of H1..H4 with 0 < Re z <= re_max and |Im z| <= im_max."""
    params = params or ElasticParams()
    theta = float(theta)
    if not 0.0 < theta < 2 * np.pi:
        raise ValueError(f"opening angle must lie in (0, 2 pi), got {theta}")
    if re_max <= 0:
        raise ValueError("re_max must be positive")
    lo = min(1e-3, 0.25 * re_max)
    raw = []
    for br in BranchId:
        for z, _ in find_roots_in_box(br, theta, params, (lo, re_max, -im_max, im_max)):
            if 0 < z.real <= re_max and abs(z.imag) <= im_max and not is_integer(z):
                raw.append((br, z))
    raw.sort(key=lambda bz: (bz[1].real, bz[1].imag, bz[0].value))
    merged: list[list] = []
    for br, z in raw:
        for item in merged:
            if abs(item[1] - z) < DEDUP_TOL:
                item[0].append(br)
                break
        else:
            merged.append([[br], z])
    roots = tuple(
        SpectrumRoot(tuple(brs), z, float(max(abs(branch_residual(b, z, theta, params)) for b in brs)))
        for brs, z in merged)
    dom = dominant_index([r.z for r in roots])
    return CornerSpectrum(theta, params, roots, dom)


def smallest_root_per_branch(theta: float, params: ElasticParams | None = None, re_max: float = 8.0,
                             im_max: float = 4.0, include_integers: bool = True) -> dict:
    """Root with smallest positive real part on each branch (ties: smaller |Im|, then Im > 0)."""
    params = params or ElasticParams()
    lo = min(1e-3, 0.25 * re_max)
    out = {}
    for br in BranchId:
        zs = [z for z, _ in find_roots_in_box(br, theta, params, (lo, re_max, -im_max, im_max))
              if z.real > 0 and (include_integers or not is_integer(z))]
        out[br] = min(zs, key=lambda z: (round(z.real, 10), abs(z.imag), -z.imag)) if zs else None
    return out


# ---------------------------------------------------------------- continuation


@dataclass(frozen=True)
class BranchTrack:
    thetas: np.ndarray
    roots: np.ndarray
    flagged: bool
    message: str = ""


def track_branch(anchor_n: int, branch: BranchId, theta_path, params: ElasticParams | None = None,
                 offset: float = 1e-6, min_step: float = 1e-9) -> BranchTrack:
    """Continue the root anchored at z(pi) = anchor_n along a path of opening angles.

    The path is followed slightly off the real axis (above it for odd
    anchors, below for even ones) so that real branch points are passed on
    the analytic side; every reported root is re-polished at the real angle.
    """
    params = params or ElasticParams()
    path = np.asarray(theta_path, float)
    if len(path) == 0 or abs(path[0] - np.pi) > 1e-14:
        raise ValueError("continuation path must start at theta = pi")
    side = 1.0 if anchor_n % 2 else -1.0
    eps = side * offset
    f = lambda z, th: branch_residual(branch, z, th, params)
    fz = lambda z, th: branch_derivative(branch, z, th, params)
    ft = lambda z, th: branch_theta_derivative(branch, z, th, params)

    def correct(z, th):
        for _ in range(50):
            d = fz(z, th)
            if d == 0:
                return None
            step = f(z, th) / d
            z = z - step
            if abs(step) < 1e-15 * (1 + abs(z)):
                return z
        return z if abs(f(z, th)) < 1e-11 * (1 + abs(z)) else None

    z = complex(anchor_n)
    th_c = complex(np.pi, eps)
    z = correct(z, th_c) or z
    out = [complex(anchor_n)]
    flagged, msg = False, ""
    for target in path[1:]:
        goal = complex(target, eps)
        h = goal - th_c
        while th_c != goal:
            step = h if abs(h) <= abs(goal - th_c) else goal - th_c
            zp = z - ft(z, th_c) / fz(z, th_c) * step
            zn = correct(zp, th_c + step)
            if zn is None or abs(zn - zp) > 0.1 * (1 + abs(z)):
                h = step / 2
                if abs(h) < min_step:
                    flagged, msg = True, f"continuation stalled near theta={th_c.real:.6f}"
                    break
                continue
            z, th_c = zn, th_c + step
            h = step * 1.5
        if flagged:
            break
        zr = correct(z, float(target))
        if zr is None:
            flagged, msg = True, f"no real-angle root near theta={target:.6f}"
            break
        scale = abs(fz(zr, float(target))) / (1 + abs(params.c) * max(target, 2 * np.pi - target))
        if scale < 1e-6:
            flagged, msg = True, f"branch point proximity at theta={target:.6f}"
            warnings.warn(msg)
        out.append(zr)
    return BranchTrack(path[:len(out)], np.array(out), flagged, msg)


# ---------------------------------------------------------------- tan x = x and sinc level curves


def lambda_root(j: int) -> float:
    """j-th real root of tan x = x (lambda_0 = 0, odd in j)."""
    j = int(j)
    if j == 0:
        return 0.0
    k = abs(j)
    g = lambda x: np.sin(x) - x * np.cos(x)
    x = brentq(g, k * np.pi + np.pi / 4, k * np.pi + np.pi / 2, xtol=1e-15, rtol=1e-15)
    return float(np.sign(j) * x)


def sinc_curve_point(j: int, y: float) -> complex:
    """Point omega_j(y) = x + i y on the level curve tan x / x = tanh y / y through lambda_j."""
    j = int(j)
    y = float(y)
    if j == 0:
        return complex(0.0, y)
    lam = lambda_root(j)
    if y == 0.0:
        return complex(lam, 0.0)
    k = abs(j)
    target = np.tanh(abs(y)) / abs(y)
    g = lambda x: (np.sin(x) - target * x * np.cos(x))
    # sin x - r x cos x changes sign between k pi and lambda_k for 0 < r < 1
    x = brentq(g, k * np.pi, abs(lam), xtol=1e-15, rtol=1e-15)
    return complex(np.sign(j) * x, y)


def weight_line_clearance(spectrum, s_minus_nu: float) -> float:
    """Distance from s - nu to the set {Re z} united with the integers."""
    zs = spectrum.exponents if hasattr(spectrum, "exponents") else list(spectrum)
    d_int = abs(s_minus_nu - round(s_minus_nu))
    d_re = min((abs(s_minus_nu - complex(z).real) for z in zs), default=np.inf)
    return float(min(d_int, d_re))
