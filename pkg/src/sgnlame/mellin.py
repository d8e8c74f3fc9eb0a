"""Mellin symbol of the Lamé double layer on a wedge.

A power density t^z p on the two unit edges of a wedge produces

    h(t) = A(z, theta) p t^z + sum_k F(k, z, theta) p t^k,

and the closed-form Mellin integrals I0, I1, I2 are the scalar building
blocks of A and F. Matrices use the unknown ordering (p1, p2) on the edge
OA (the ray at angle 0) followed by (p3, p4) on OB (the ray at angle theta).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .kernels import ElasticParams

SERIES_CAP = 2000
SERIES_RTOL = 1e-16
RESONANCE_TOL = 1e-6


class ResonanceError(ValueError):
    """Closed form evaluated at an integer exponent, where it has a pole."""


@dataclass(frozen=True)
class MellinIntegralValue:
    which: str
    z: complex
    theta: float | None
    t: float
    value: complex
    truncation_terms: int


# ---------------------------------------------------------------- scalar helpers


def _sinc(x):
    x = np.asarray(x, complex)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    return np.where(small, 1 - x * x / 6 + x ** 4 / 120, np.sin(safe) / safe)


def sin_ratio(z, theta):
    """sin((pi - theta) z) / sin(theta), continuous through theta = pi."""
    e = np.pi - theta
    return complex(z * _sinc(e * z) / _sinc(e))


def chebyshev_u(n: int, x: float) -> float:
    """U_n(x), so that sin((n+1) theta)/sin(theta) = U_n(cos theta)."""
    if n < 0:
        return 0.0
    u0, u1 = 1.0, 2 * x
    if n == 0:
        return u0
    for _ in range(n - 1):
        u0, u1 = u1, 2 * x * u1 - u0
    return u1


def gegenbauer2(n: int, x: float) -> float:
    """Gegenbauer polynomial C_n^(2)(x)."""
    if n < 0:
        return 0.0
    c0, c1 = 1.0, 4 * x
    if n == 0:
        return c0
    for m in range(2, n + 1):
        c0, c1 = c1, (2 * x * (m + 1) * c1 - (m + 2) * c0) / m
    return c1


def stokes_lead(z, theta) -> complex:
    """Coefficient a(z, theta) of t^(z-3) in I2."""
    z = complex(z)
    e = np.pi - theta
    if abs(e) * (1 + abs(z)) < 0.5:
        # the numerator vanishes to third order in e; expand it
        acc = 0j
        for n in range(1, 40):
            term = (-1) ** n * e ** (2 * n - 2) / math.factorial(2 * n + 1) * (
                (z - 2) * z ** (2 * n + 1) - z * (z - 2) ** (2 * n + 1))
            acc += term
            if abs(term) < 1e-18 * abs(acc):
                break
        return complex(-acc / (4 * np.sin(np.pi * z) * complex(_sinc(e)) ** 3))
    s = np.sin(theta)
    num = z * np.sin(2 * theta) * np.cos(e * z) + 2 * np.sin(e * z) * (1 - z * s * s)
    return complex(num / (4 * np.sin(np.pi * z) * s ** 3))


def stokes_series_coeff(k: int, z, theta) -> complex:
    """Coefficient of t^k (k >= 0) in I2: C_k^(2)(cos theta) / (pi (z - k - 3))."""
    return complex(gegenbauer2(k, np.cos(theta)) / (np.pi * (complex(z) - k - 3)))


def _check_z(z, allow_t0=False):
    z = complex(z)
    if z.real <= -1:
        raise ValueError(f"need Re z > -1, got {z}")
    return z


def _nonneg_integer(z) -> int | None:
    m = round(z.real)
    if m >= 0 and abs(z - m) < 1e-12:
        return m
    return None


def _integer_limit(fn, m: int, radius: float = 0.1, points: int = 24):
    """Value at the removable singularity z = m by averaging over a small circle."""
    phis = 2 * np.pi * (np.arange(points) + 0.5) / points
    vals = [fn(m + radius * np.exp(1j * ph)) for ph in phis]
    terms = max(v.truncation_terms for v in vals)
    return complex(np.mean([v.value for v in vals])), terms


def _series(term, start, t, envelope):
    """Sum term(k) for k >= start; returns (sum, terms used).

    ``envelope(k)`` bounds |term(k)| and grows at most polynomially times
    t^k, so once ten envelopes over (1 - t) fall below the relative cutoff
    the neglected tail is too.
    """
    acc = 0j
    for n, k in enumerate(range(start, start + SERIES_CAP)):
        acc += term(k)
        if t == 0.0 and k > start:
            return acc, n + 1
        if k > start and 10.0 * envelope(k + 1) / (1.0 - abs(t)) <= SERIES_RTOL * abs(acc):
            return acc, n + 1
    return acc, SERIES_CAP


def _power(t, w):
    if t == 0.0:
        if w.real > 0:
            return 0j
        if w == 0:
            return 1 + 0j
        raise ValueError("t = 0 with Re(exponent) <= 0 is singular")
    return complex(t ** w)


# ---------------------------------------------------------------- Mellin integrals


def _dispatch(which, fn, z, theta, t, on_integer):
    m = _nonneg_integer(z)
    if m is None:
        return fn(z)
    if on_integer == "error":
        raise ResonanceError(f"{which} has a removable pole at integer z = {m}; pass on_integer='limit'")
    val, terms = _integer_limit(fn, m)
    return MellinIntegralValue(which, complex(m), theta, t, val, terms)


def mellin_I0(z, t: float, on_integer: str = "error") -> MellinIntegralValue:
    """(1/pi) p.v. int_0^1 s^z/(s - t) ds = -cot(pi z) t^z + (1/pi) sum_k t^k/(z - k)."""
    z = _check_z(z)
    if not 0.0 <= t < 1.0:
        raise ValueError("need 0 <= t < 1")

    def fn(z):
        lead = -np.cos(np.pi * z) / np.sin(np.pi * z) * _power(t, z)
        s, n = _series(lambda k: _power(t, k) / (z - k) if k else 1 / z, 0, t,
                       lambda k: abs(t) ** k / abs(z - k))
        return MellinIntegralValue("I0", z, None, t, complex(lead + s / np.pi), n)

    return _dispatch("I0", fn, z, None, t, on_integer)


def mellin_I1(z, theta: float, t: float, on_integer: str = "error") -> MellinIntegralValue:
    """(1/pi) int_0^1 s^z/(s^2 + t^2 - 2 s t cos theta) ds in closed form."""
    z = _check_z(z)
    if not 0.0 < theta < 2 * np.pi:
        raise ValueError("theta must lie in (0, 2 pi)")
    if not 0.0 <= t < 1.0:
        raise ValueError("need 0 <= t < 1")
    x = np.cos(theta)

    def fn(z):
        lead = sin_ratio(z, theta) / np.sin(np.pi * z) * _power(t, z - 1)
        s, n = _series(lambda k: chebyshev_u(k - 1, x) * _power(t, k - 1) / (z - k), 1, t,
                       lambda k: k * abs(t) ** (k - 1) / abs(z - k))
        return MellinIntegralValue("I1", z, theta, t, complex(lead + s / np.pi), n)

    return _dispatch("I1", fn, z, theta, t, on_integer)


def mellin_I2(z, theta: float, t: float, on_integer: str = "error") -> MellinIntegralValue:
    """(1/pi) int_0^1 s^z/(s^2 + t^2 - 2 s t cos theta)^2 ds = a t^(z-3) + sum_{k>=0} F_k t^k."""
    z = _check_z(z)
    if not 0.0 < theta < 2 * np.pi:
        raise ValueError("theta must lie in (0, 2 pi)")
    if not 0.0 < t < 1.0:
        raise ValueError("need 0 < t < 1")

    def fn(z):
        lead = stokes_lead(z, theta) * _power(t, z - 3)
        s, n = _series(lambda k: stokes_series_coeff(k, z, theta) * _power(t, k), 0, t,
                       lambda k: (k + 1) * (k + 2) * (k + 3) / 6 * abs(t) ** k / (np.pi * abs(z - k - 3)))
        return MellinIntegralValue("I2", z, theta, t, complex(lead + s), n)

    return _dispatch("I2", fn, z, theta, t, on_integer)


# ---------------------------------------------------------------- A(z, theta)


def _require_noninteger(z):
    z = complex(z)
    if abs(z - round(z.real)) < 1e-12:
        raise ResonanceError(f"A(z, theta) has a pole at integer z = {z}")
    return z


def assemble_A(z, theta: float, params: ElasticParams | None = None) -> np.ndarray:
    """The 4x4 symbol A(z, theta), column by column."""
    params = params or ElasticParams()
    z = _require_noninteger(z)
    if not 0.0 < theta < 2 * np.pi:
        raise ValueError("theta must lie in (0, 2 pi)")
    c1, c2 = params.c1, params.c2
    pz = np.pi * z
    csc = 1 / np.sin(pz)
    cot = np.cos(pz) * csc
    sn, cs = np.sin(z * (np.pi - theta)), np.cos(z * (np.pi - theta))
    st = np.sin(theta)
    s_m2 = np.sin(pz - (z - 2) * theta)
    s_p2 = np.sin(pz - (z + 2) * theta)
    s_m1 = np.sin(pz - (z - 1) * theta)
    s_p1 = np.sin(pz - (z + 1) * theta)
    A = np.empty((4, 4), complex)
    A[:, 0] = [-0.5, -c1 * cot,
               -c1 * csc * sn + 0.25 * c2 * csc * (-(z + 2) * sn + z * s_m2),
               -c1 * cs * csc + 0.5 * c2 * z * csc * st * s_m1]
    A[:, 1] = [c1 * cot, -0.5,
               c1 * cs * csc + 0.5 * c2 * z * csc * st * s_m1,
               -c1 * csc * sn + 0.25 * c2 * csc * ((z - 2) * sn - z * s_m2)]
    A[:, 2] = [-c1 * csc * sn + 0.25 * c2 * csc * ((z - 2) * sn - z * s_p2),
               c1 * cs * csc - 0.5 * c2 * z * csc * st * s_p1,
               -0.5, c1 * cot]
    A[:, 3] = [-c1 * cs * csc - 0.5 * c2 * z * csc * st * s_p1,
               -c1 * csc * sn + 0.25 * c2 * csc * (-(z + 2) * sn + z * s_p2),
               -c1 * cot, -0.5]
    return A


def det_A(z, theta: float, params: ElasticParams | None = None, normalized: bool = False) -> complex:
    """det A(z, theta); with ``normalized`` every column is scaled to unit 2-norm first."""
    A = assemble_A(z, theta, params)
    if normalized:
        A = A / np.linalg.norm(A, axis=0)
    return complex(np.linalg.det(A))


def _phase_fix(v):
    i = int(np.argmax(np.abs(v) - 1e-12 * np.arange(len(v))))
    return v * (abs(v[i]) / v[i])


def kernel_vector(z, theta: float, params: ElasticParams | None = None, return_all: bool = False):
    """Unit null vector of A(z, theta) with its largest entry made real and positive.

    If the two smallest singular values are not separated (ratio above 0.1)
    a warning is issued; with ``return_all`` both candidate vectors are
    returned as columns of a 4x2 array.
    """
    A = assemble_A(z, theta, params)
    _, sv, vh = np.linalg.svd(A)
    v = vh.conj().T
    multiple = sv[-1] > 0 and sv[-2] > 0 and sv[-1] / sv[-2] > 0.1 or sv[-2] < 1e-8 * sv[0]
    if multiple:
        warnings.warn(f"null space of A({z}, {theta}) may be more than one-dimensional "
                      f"(singular values {sv[-2]:.2e}, {sv[-1]:.2e})")
    if return_all:
        return np.stack([_phase_fix(v[:, -1]), _phase_fix(v[:, -2])], axis=1)
    return _phase_fix(v[:, -1])


# ---------------------------------------------------------------- F(k, z, theta)


def assemble_F(k: int, z, theta: float, params: ElasticParams | None = None) -> np.ndarray:
    """Taylor block F(k, z, theta): the coefficient matrix of t^k.

    After the exponent shifts in the wedge integrals every entry carries the
    common factor 1/(pi (z - k)); the angular parts are cos(k theta),
    sin(k theta) and Gegenbauer values C_j^(2)(cos theta), j = k-3..k-1.
    """
    params = params or ElasticParams()
    k = int(k)
    if k < 0:
        raise ValueError("k must be nonnegative")
    z = complex(z)
    if abs(z - k) < 1e-12:
        raise ResonanceError(f"F({k}, z) has a pole at z = {k}")
    c1, c2 = params.c1, params.c2
    s, c = np.sin(theta), np.cos(theta)
    g1, g2, g3 = (gegenbauer2(k - j, c) for j in (1, 2, 3))
    i0 = 1.0
    i3 = -np.sin(k * theta)
    i4 = np.cos(k * theta)
    i11 = -s * g3 + 2 * s * c * g2 - s * c * c * g1
    i12 = s * s * g2 - c * s * s * g1
    i22 = -s ** 3 * g1
    j11 = -s * c * c * g3 + 2 * s * c * g2 - s * g1
    j12 = -c * s * s * g3 + s * s * g2
    j22 = -s ** 3 * g3
    F = np.array([
        [0.0, -c1 * i0, c1 * i3 + c2 * i11, c1 * i4 + c2 * i12],
        [c1 * i0, 0.0, -c1 * i4 + c2 * i12, c1 * i3 + c2 * i22],
        [c1 * i3 + c2 * j11, -c1 * i4 + c2 * j12, 0.0, c1 * i0],
        [c1 * i4 + c2 * j12, c1 * i3 + c2 * j22, -c1 * i0, 0.0],
    ], complex)
    return F / (np.pi * (z - k))


# ---------------------------------------------------------------- mapping matrix B


class ExceptionalAngleError(np.linalg.LinAlgError):
    """B(theta) is singular or too ill-conditioned to invert."""


# Integer exponents are excluded from B, and with them the outputs they would
# reach: the two corner values must agree (k = 0) and one k = 1 combination
# is fixed.
def structural_corank(N: int) -> int:
    """Dimension of the left null space of B(theta) away from exceptional angles."""
    return 2 if N == 1 else 3


@dataclass(frozen=True)
class MappingMatrixB:
    theta: float
    N: int
    exponents: np.ndarray
    kernel_vectors: np.ndarray
    matrix: np.ndarray
    cond: float
    corank: int = 0
    reduced_cond: float = 1.0

    def block(self, k: int, n: int) -> np.ndarray:
        """4x4 block for Taylor row k (0-based) and exponent group n (1-based)."""
        return self.matrix[4 * k:4 * k + 4, 4 * (n - 1):4 * n]

    @property
    def exceptional(self) -> bool:
        return self.corank > structural_corank(self.N) or not self.reduced_cond <= 1e12


def grouped_exponents(theta: float, N: int, spectrum=None, params: ElasticParams | None = None):
    """Exponents z_{n,j}, n = 1..N, j = 1..4: the n-th non-integer root of branch H_j.

    Roots of each branch are ordered by real part, and a conjugate pair as
    (Im > 0, Im < 0). Returns an array of shape (N, 4). Without a given
    spectrum the search box grows until every branch has N roots.
    """
    from .spectrum import BranchId, corner_spectrum

    params = params or ElasticParams()
    re_max = max(16.0, 4.0 * N)
    for _ in range(4):
        spec = spectrum if spectrum is not None else corner_spectrum(theta, params, re_max=re_max, im_max=8.0)
        out = np.empty((N, 4), complex)
        short = None
        for j, br in enumerate(BranchId):
            zs = [r.z for r in spec.roots if br in r.branches and abs(r.z - round(r.z.real)) >= RESONANCE_TOL]
            zs.sort(key=lambda z: (round(z.real, 9), -z.imag))
            if len(zs) < N:
                short = f"branch {br.name} has only {len(zs)} non-integer roots in the spectrum box"
                break
            out[:, j] = zs[:N]
        if short is None:
            return out
        if spectrum is not None:
            break
        re_max *= 2
    raise ValueError(short)


def mapping_B(theta: float, N: int, spectrum=None, params: ElasticParams | None = None,
              exponents=None) -> MappingMatrixB:
    """The 4N x 4N density-to-Taylor matrix with blocks [F(k, z_nj) p^nj]_j.

    ``cond`` is the plain 2-norm condition number, infinite in exact
    arithmetic because of the structural corank; ``reduced_cond`` is
    sigma_max over the smallest singular value kept after dropping
    ``structural_corank(N)`` of them.
    """
    params = params or ElasticParams()
    Z = grouped_exponents(theta, N, spectrum, params) if exponents is None else np.asarray(exponents, complex)
    Z = Z.reshape(N, 4)
    if np.any(np.abs(Z - np.round(Z.real)) < RESONANCE_TOL):
        raise ResonanceError("integer exponents need the resonant treatment, not the generic mapping")
    flat = Z.ravel()
    vecs = np.array([kernel_vector(z, theta, params) for z in flat])
    B = np.empty((4 * N, 4 * N), complex)
    for k in range(N):
        for col, (z, p) in enumerate(zip(flat, vecs)):
            B[4 * k:4 * k + 4, col] = assemble_F(k, z, theta, params) @ p
    sv = np.linalg.svd(B, compute_uv=False)
    corank = int(np.sum(sv <= 1e-13 * sv[0]))
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    keep = 4 * N - structural_corank(N)
    reduced = float(sv[0] / sv[keep - 1]) if sv[keep - 1] > 0 else np.inf
    out = MappingMatrixB(theta, N, flat, vecs, B, cond, corank, reduced)
    if out.exceptional:
        warnings.warn(f"B({theta}) has corank {corank} and reduced condition number {reduced:.2e}: "
                      "exceptional angle?")
    return out


def solve_corner_coefficients(B: MappingMatrixB, beta) -> np.ndarray:
    """Minimum-norm alpha with B alpha = beta, checked to relative residual 1e-10.

    B has a structural left null space, so only Taylor data in its range
    are reachable; anything else is rejected rather than fitted in the
    least-squares sense. The returned alpha is unique up to the null space
    of B.
    """
    beta = np.asarray(beta, complex)
    if B.exceptional:
        raise ExceptionalAngleError(f"B is singular beyond its structural corank at theta = {B.theta} "
                                    f"(corank {B.corank}, reduced cond {B.reduced_cond:.2e})")
    U, sv, Vh = np.linalg.svd(B.matrix)
    keep = 4 * B.N - structural_corank(B.N)
    coef = U[:, :keep].conj().T @ beta
    alpha = Vh[:keep].conj().T @ (coef / sv[:keep])
    nb = np.linalg.norm(beta)
    if nb > 0 and np.linalg.norm(B.matrix @ alpha - beta) > 1e-10 * nb:
        raise ValueError("beta is outside the range of B: the corner Taylor data are incompatible")
    return alpha


def wedge_h_series(alpha, exponents, vectors, theta: float, params: ElasticParams | None, t_values):
    """h(t) = sum_i alpha_i [A(z_i) p_i t^z_i + sum_k F(k, z_i) p_i t^k] at each t in (0, 1)."""
    params = params or ElasticParams()
    alpha = np.asarray(alpha, complex)
    zs = np.asarray(exponents, complex).ravel()
    P = np.asarray(vectors, complex).reshape(len(zs), 4)
    ts = np.atleast_1d(np.asarray(t_values, float))
    if np.any((ts <= 0) | (ts >= 1)):
        raise ValueError("t values must lie in (0, 1)")
    out = np.zeros((len(ts), 4), complex)
    if not np.any(alpha):
        return out
    for a, z, p in zip(alpha, zs, P):
        if a == 0:
            continue
        out += a * np.outer(ts ** z, assemble_A(z, theta, params) @ p)
        tmax = ts.max()
        acc = np.zeros_like(out)
        # entries of F(k) are at most (c1 + 4 c2 C_k^(2)(1)) / (pi |z - k|)
        envelope = lambda k: (abs(params.c1) + 4 * params.c2 * (k + 1) * (k + 2) * (k + 3) / 6) \
            * tmax ** k / (np.pi * abs(z - k))
        for k in range(SERIES_CAP):
            acc += np.outer(ts ** k, assemble_F(k, z, theta, params) @ p)
            if k > 0 and 40.0 * envelope(k + 1) / (1 - tmax) <= SERIES_RTOL * np.max(np.abs(acc)):
                break
        out += a * acc
    return out


# ---------------------------------------------------------------- straight-line limit theta = pi


def A_straight(z, params: ElasticParams | None = None) -> np.ndarray:
    """A(z, pi): only -1/2 and +-c1 cot(pi z), +-c1 csc(pi z) survive."""
    params = params or ElasticParams()
    z = _require_noninteger(z)
    c1 = params.c1
    cot = np.cos(np.pi * z) / np.sin(np.pi * z)
    csc = 1 / np.sin(np.pi * z)
    return np.array([[-0.5, c1 * cot, 0, -c1 * csc],
                     [-c1 * cot, -0.5, c1 * csc, 0],
                     [0, c1 * csc, -0.5, -c1 * cot],
                     [-c1 * csc, 0, c1 * cot, -0.5]], complex)


def principal_part(m: int, params: ElasticParams | None = None) -> np.ndarray:
    """S_m with A(z, pi) = S_m / (pi (z - m)) - I/2 + O(z - m)."""
    params = params or ElasticParams()
    c1, sm = params.c1, (-1) ** m
    return np.array([[0, c1, 0, -c1 * sm],
                     [-c1, 0, c1 * sm, 0],
                     [0, c1 * sm, 0, -c1],
                     [-c1 * sm, 0, c1, 0]], float)


def straight_kernel_basis(m: int) -> np.ndarray:
    """Columns p+ = (1, 0, s_m, 0) and p- = (0, 1, 0, s_m), s_m = (-1)^m, spanning ker S_m."""
    sm = (-1) ** m
    return np.array([[1, 0], [0, 1], [sm, 0], [0, sm]], float)


def straight_taylor_matrix(k: int) -> np.ndarray:
    """M(k) with F(k, z, pi) = c1/(pi (k - z)) M(k)."""
    sk = (-1) ** k
    return np.array([[0, 1, 0, -sk], [-1, 0, sk, 0], [0, sk, 0, -1], [-sk, 0, 1, 0]], float)


def parity_map() -> np.ndarray:
    """Orthogonal P4 separating even and odd combinations of the two edges."""
    return np.array([[1, 0, 1, 0], [0, 1, 0, 1], [1, 0, -1, 0], [0, 1, 0, -1]], float) / np.sqrt(2)


def parity_reduced_taylor(k: int) -> np.ndarray:
    """Closed form of P4^T M(k) P4 as tabulated for the parity reduction."""
    e, o = 1 + (-1) ** k, (-1) ** k - 1
    return np.array([[0, 0, 0, e], [0, 0, -e, 0], [0, -o, 0, 0], [o, 0, 0, 0]], float)


def straight_B_block(k: int, m: int, C, S=None, params: ElasticParams | None = None) -> np.ndarray:
    """Block B_{k,n}(pi) for resonance index m: off-resonant c1/(pi(k-m)) M(k) C, resonant -c1/pi M(m) S."""
    params = params or ElasticParams()
    c1 = params.c1
    if k != m:
        return c1 / (np.pi * (k - m)) * straight_taylor_matrix(k) @ np.asarray(C)
    if S is None:
        raise ValueError("resonant block needs the slope matrix S")
    return -c1 / np.pi * straight_taylor_matrix(m) @ np.asarray(S)
