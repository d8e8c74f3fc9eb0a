"""Brute-force references for the closed forms.

Nothing here calls the closed-form Mellin integrals, the tabulated A and F
blocks or the kernel module: integrals are done by adaptive Gauss-Kronrod
(7/15) quadrature and the traction kernel is rewritten from lambda and mu.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import eval_legendre

from .kernels import ElasticParams

EVAL_CAP = 400_000
DYADIC = tuple(2.0 ** -j for j in range(1, 48))


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleResult:
    value: complex | np.ndarray
    error_estimate: float
    evaluations: int


def adaptive_integral(f, a: float, b: float, tol: float = 1e-13, points=()) -> OracleResult:
    """Adaptive GK7/15 quadrature of a (vector, complex) integrand on [a, b].

    A run that stops on rounding error is accepted when its estimate is
    within 1e3 of the request; the estimate is returned either way.
    """
    pts = sorted(p for p in set(points) if a < p < b)
    val, err, info = quad_vec(f, a, b, epsabs=tol, epsrel=tol, quadrature="gk15", points=pts or None,
                              limit=20_000, full_output=True)
    scale = max(float(np.max(np.abs(val))), 1.0)
    # status 2: the estimate is dominated by floating-point rounding in the rule itself
    rounding_ok = info.status == 2 and err <= 1e3 * tol * scale
    if info.neval > EVAL_CAP or not (info.success or rounding_ok):
        raise OracleError(f"quadrature did not reach tol={tol:.1e} (estimate {err:.2e}, best {val})")
    return OracleResult(val, float(err), int(info.neval))


def _graded_points(t, *extra):
    return [p for p in DYADIC] + [x for x in (t, 0.5 * t, 2 * t, *extra) if 0 < x < 1]


# ---------------------------------------------------------------- Mellin integrals


def pv_cauchy(z, t: float, tol: float = 1e-13) -> OracleResult:
    """(1/pi) p.v. int_0^1 s^z/(s - t) ds via subtraction of t^z."""
    z = complex(z)
    if z.real <= -1:
        raise ValueError("need Re z > -1")
    if not 0 < t < 1:
        raise ValueError("need 0 < t < 1")
    tz = t ** z

    def g(s):
        s = np.atleast_1d(s)
        h = np.where(s == t, 1.0, s - t)
        # s^z - t^z = t^z expm1(z log(s/t)) keeps accuracy next to s = t
        near = np.abs(h) < 0.5 * t
        log_ratio = np.where(near, np.log1p(np.where(near, h / t, 0.0)), np.log(np.where(near, 1.0, s / t)))
        q = t ** z * np.expm1(z * log_ratio) / h
        return np.where(s == t, z * t ** (z - 1), q)

    if z.real < 0:
        # s = u^2 turns the s^z endpoint singularity into the integrable u^(2z+1)
        res = adaptive_integral(lambda u: 2 * u * g(u * u), 0.0, 1.0, tol, np.sqrt(_graded_points(t)))
    else:
        res = adaptive_integral(g, 0.0, 1.0, tol, _graded_points(t))
    val = (complex(np.squeeze(res.value)) + tz * np.log((1 - t) / t)) / np.pi
    return OracleResult(val, res.error_estimate / np.pi, res.evaluations)


def quad_I1_I2(which: str, z, theta: float, t: float, tol: float = 1e-13) -> OracleResult:
    """(1/pi) int_0^1 s^z / (s^2 + t^2 - 2 s t cos theta)^m ds, m = 1 (I1) or 2 (I2)."""
    m = {"I1": 1, "I2": 2}[which]
    z = complex(z)
    if not 0 < theta < 2 * np.pi:
        raise ValueError("theta must lie in (0, 2 pi)")
    c = np.cos(theta)
    if t == 0.0:
        if (z - 2 * m).real <= -1:
            raise ValueError("integral diverges at t = 0")
        return OracleResult(1 / (np.pi * (z - 2 * m + 1)), 0.0, 0)

    def f(s):
        s = np.atleast_1d(s)
        return s ** z / (s * s + t * t - 2 * s * t * c) ** m

    pts = _graded_points(t, abs(c) * t)
    if z.real < 0:
        res = adaptive_integral(lambda u: 2 * u * f(u * u), 0.0, 1.0, tol, np.sqrt(pts))
    else:
        res = adaptive_integral(f, 0.0, 1.0, tol, pts)
    return OracleResult(complex(np.squeeze(res.value)) / np.pi, res.error_estimate / np.pi, res.evaluations)


def pv_legendre(n: int, t: float, tol: float = 1e-12) -> OracleResult:
    """p.v. int_{-1}^{1} P_j(s)/(t - s) ds for j = 0..n-1; a regular integral when |t| > 1."""
    j = np.arange(n)
    if abs(abs(t) - 1.0) < 1e-8:
        raise ValueError("t too close to an endpoint")
    if abs(t) > 1:
        f = lambda s: eval_legendre(j, s) / (t - s)
        res = adaptive_integral(f, -1.0, 1.0, tol)
        return OracleResult(res.value, res.error_estimate, res.evaluations)
    pt = eval_legendre(j, t)

    def g(s):
        return (eval_legendre(j, s) - pt) / (t - s)

    res = adaptive_integral(g, -1.0, 1.0, tol, (t,))
    val = res.value + pt * np.log((1 + t) / (1 - t))
    return OracleResult(val, res.error_estimate, res.evaluations)


# ---------------------------------------------------------------- wedge


def _traction(x, y, n, lam, mu):
    """Traction double-layer kernel rebuilt from lambda and mu, shape (..., 2, 2)."""
    r = x - y
    r2 = np.sum(r * r, axis=-1)
    tau = np.stack([-n[..., 1], n[..., 0]], axis=-1)
    nr = np.sum(n * r, axis=-1)
    tr = np.sum(tau * r, axis=-1)
    k1 = mu / (lam + 2 * mu)
    k2 = (lam + mu) / (lam + 2 * mu)
    out = np.zeros(r.shape[:-1] + (2, 2))
    a = k1 / (2 * np.pi * r2)
    out[..., 0, 0] = a * nr
    out[..., 1, 1] = a * nr
    out[..., 0, 1] = a * tr
    out[..., 1, 0] = -a * tr
    out += (k2 * nr / (np.pi * r2 * r2))[..., None, None] * r[..., :, None] * r[..., None, :]
    return out


def wedge_direct_h(alpha, exponents, vectors, theta: float, params: ElasticParams, t: float,
                   tol: float = 1e-13) -> np.ndarray:
    """(-1/2 I + D) applied to a sum of power densities on the unit wedge, by quadrature.

    The density is sum_i alpha_i t^z_i (p_i1, p_i2) on the edge along (1, 0)
    and sum_i alpha_i t^z_i (p_i3, p_i4) on the edge along (cos theta,
    sin theta), t being the distance to the corner. Returns
    (h1(t), h2(t), h1(-t), h2(-t)): components at distance t on each edge.
    """
    alpha = np.asarray(alpha, complex)
    zs = np.asarray(exponents, complex)
    P = np.asarray(vectors, complex).reshape(len(zs), 4)
    if not len(alpha) == len(zs):
        raise ValueError("alpha and exponents differ in length")
    if not 0 < t < 1:
        raise ValueError("need 0 < t < 1")
    if np.all(alpha == 0):
        return np.zeros(4, complex)
    lam, mu = params.lam, params.mu
    e_a = np.array([1.0, 0.0])
    e_b = np.array([np.cos(theta), np.sin(theta)])
    # outward normals for the traversal B -> O -> A
    n_a = np.array([0.0, -1.0])
    n_b = np.array([-np.sin(theta), np.cos(theta)])
    coef_a = (alpha[:, None] * P[:, :2])
    coef_b = (alpha[:, None] * P[:, 2:])

    def dens(s, coef):
        s = np.atleast_1d(s)
        return (s[:, None] ** zs[None, :]) @ coef  # (n, 2)

    out = []
    for x, e_self, n_self, c_self, e_other, n_other, c_other in (
            (t * e_a, e_a, n_a, coef_a, e_b, n_b, coef_b),
            (t * e_b, e_b, n_b, coef_b, e_a, n_a, coef_a)):

        def cross(s):
            s = np.atleast_1d(s)
            K = _traction(x[None], s[:, None] * e_other[None], np.broadcast_to(n_other, (len(s), 2)), lam, mu)
            return np.einsum("nij,nj->ni", K, dens(s, c_other)).ravel()

        s_ref = 0.5 * t
        # straight edge: (t - s) D(x, y(s)) does not depend on s
        Kt = _traction(x, s_ref * e_self, n_self, lam, mu) * (t - s_ref)
        phi_t = dens(t, c_self)[0]

        def same(s):
            s = np.atleast_1d(s)
            diff = dens(s, c_self) - phi_t[None]
            return (diff / (t - s)[:, None] @ Kt.T).ravel()

        pts = _graded_points(t, t * abs(np.cos(theta)))
        v_cross = adaptive_integral(cross, 0.0, 1.0, tol, pts).value
        v_same = adaptive_integral(same, 0.0, 1.0, tol, pts).value
        pv = Kt @ phi_t * np.log(t / (1 - t))
        out.append(-0.5 * phi_t + v_cross + v_same + pv)
    return np.concatenate(out)


def taylor_coefficients(fn, n_coef: int, radius: float = 0.4, degree: int = 30) -> np.ndarray:
    """Leading Taylor coefficients at 0 of a function analytic on [0, radius], by Chebyshev fit.

    ``fn`` may return a vector; the result has shape (n_coef,) + its shape.
    """
    k = np.arange(degree + 1)
    ts = 0.5 * radius * (np.cos(np.pi * (k + 0.5) / (degree + 1)) + 1)
    vals = np.array([np.asarray(fn(t), complex) for t in ts])
    flat = vals.reshape(len(ts), -1)
    out = np.zeros((n_coef, flat.shape[1]), complex)
    for j in range(flat.shape[1]):
        for unit, comp in ((1.0, flat[:, j].real), (1j, flat[:, j].imag)):
            ch = np.polynomial.chebyshev.Chebyshev.fit(ts, comp, degree, domain=[0, radius])
            c = ch.convert(kind=np.polynomial.Polynomial, domain=[0, radius], window=[0, radius]).coef
            m = min(n_coef, len(c))
            out[:m, j] += unit * c[:m]
    return out.reshape((n_coef,) + vals.shape[1:])


# ---------------------------------------------------------------- kernel diagonal


def extrapolated_diagonal(split, t: float, h: float = 1e-2, levels: int = 3):
    """Richardson limit s -> t of split(t, s) from symmetric offsets h, h/2, h/4.

    ``split(t, s)`` returns a tuple of arrays (the off-diagonal D1, D2).
    """
    rows = []
    for j in range(levels):
        hj = h / 2 ** j
        a, b = split(t, t + hj), split(t, t - hj)
        rows.append([0.5 * (np.asarray(u) + np.asarray(v)) for u, v in zip(a, b)])
    # symmetric averages have even error expansions: eliminate h^2, h^4, ...
    for level in range(1, levels):
        f = 4.0 ** level
        rows = [[(f * x1 - x0) / (f - 1) for x0, x1 in zip(r0, r1)] for r0, r1 in zip(rows[:-1], rows[1:])]
    return rows[0]


# ---------------------------------------------------------------- reference solve


def reference_solution(shape, params: ElasticParams, sources, depth: int = 30, targets=None, p: int = 16,
                       base_panels: int = 4):
    """Interior field on a mesh graded geometrically (ratio 1/2, ``depth`` levels) into every corner."""
    from .panelizer import Mesh, Panel, _half_arcs
    from .solver import assemble, default_targets, eval_interior, solve_dense, synth_dirichlet_data

    if depth > 48:
        raise ValueError("depth must be at most 48")
    panels = []
    for arc_id, lo, hi, owner, side in _half_arcs(shape):
        edges = list(np.linspace(lo, hi, base_panels + 1))
        if owner is not None:
            first = (edges[0], edges[1]) if side == "start" else (edges[-1], edges[-2])
            a, b = first
            grade = [a + (b - a) * 2.0 ** -j for j in range(depth, 0, -1)]
            edges = sorted(set(edges) | set(grade))
        panels += [Panel(arc_id, float(u0), float(u1), 0, owner) for u0, u1 in zip(edges[:-1], edges[1:])]
    mesh = Mesh(shape, panels, p)
    if mesh.dofs > 20000:
        raise ValueError(f"reference mesh has {mesh.dofs} DoFs, above the 20000 cap")
    system = assemble(mesh, params)
    sol = solve_dense(system, synth_dirichlet_data(sources, mesh, params))
    tg = default_targets(shape) if targets is None else np.atleast_2d(targets)
    return eval_interior(sol, mesh, tg, params)


# ---------------------------------------------------------------- battery


@dataclass(frozen=True)
class BatteryRow:
    item: str
    expected_source: str
    value: float
    reference: float
    abs_err: float
    passed: bool


def battery_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["item", "expected_source", "value", "reference", "abs_err", "pass"])
    for r in rows:
        w.writerow([r.item, r.expected_source, repr(r.value), repr(r.reference), f"{r.abs_err:.3e}", int(r.passed)])
    return buf.getvalue()


BATTERY_SEED = 20240611
MELLIN_Z = (0.5445, 1.3 + 0.4j, 2.8381 + 0.447j)
MELLIN_Z_I0 = (-0.5, 0.5445, 0.3 + 0.7j)
MELLIN_THETA = (np.pi / 4, 3 * np.pi / 4, 3 * np.pi / 2)
MELLIN_T = (0.1, 0.4, 0.8)
TABLE_THETAS = tuple(k * np.pi / 4 for k in (1, 2, 3, 5, 6, 7))
MOMENT_T = (0.05, 0.3, 0.7, 0.95, 1.05, 1.5, 2.0, 3.0)


def _row(item, source, value, reference, tol, relative=False):
    value = complex(value)
    reference = complex(reference)
    err = abs(value - reference)
    bound = tol * max(1.0, abs(reference)) if relative else tol
    as_real = lambda v: v.real if v.imag == 0 else abs(v)
    return BatteryRow(item, source, float(as_real(value)), float(as_real(reference)), float(err), bool(err <= bound))


def _mellin_items(params):
    from . import mellin

    jobs = []
    for z in MELLIN_Z_I0:
        for t in MELLIN_T:
            jobs.append((f"I0(z={z},t={t})", lambda z=z, t=t: _row(
                f"mellin_I0 z={z} t={t}", "oracle pv_cauchy", mellin.mellin_I0(z, t).value,
                pv_cauchy(z, t).value, 1e-9, relative=True)))
    for which, fn, tol in (("I1", mellin.mellin_I1, 1e-9), ("I2", mellin.mellin_I2, 1e-8)):
        for z in MELLIN_Z:
            for th in MELLIN_THETA:
                for t in MELLIN_T:
                    jobs.append((f"{which}(z={z},theta={th:.6f},t={t})", lambda which=which, fn=fn, tol=tol, z=z, th=th, t=t: _row(
                        f"mellin_{which} z={z} theta={th:.6f} t={t}", f"oracle quad_I1_I2({which})",
                        fn(z, th, t).value, quad_I1_I2(which, z, th, t).value, tol, relative=True)))
    return jobs


def _symbol_items(params):
    """det A and kernel vectors at computed branch roots; sensitive to c1 and c2."""
    from functools import lru_cache

    from . import mellin
    from .spectrum import corner_spectrum

    roots = lru_cache(maxsize=None)(lambda th: corner_spectrum(th, params, re_max=8, im_max=4).exponents)

    def det_check(th):
        zs = roots(th)
        worst = max(abs(mellin.det_A(z, th, params, normalized=True)) for z in zs)
        return _row(f"det_A at {len(zs)} roots theta={th:.6f} (column-normalized, worst)",
                    "branch roots of the characteristic equation", worst, 0.0, 1e-8)

    def kernel_check(th):
        zs = roots(th)
        worst = 0.0
        for z in zs:
            A = mellin.assemble_A(z, th, params)
            p = mellin.kernel_vector(z, th, params)
            worst = max(worst, np.linalg.norm(A @ p) / np.linalg.norm(A, 2))
        return _row(f"kernel_vector at {len(zs)} roots theta={th:.6f} (worst)", "||A p|| / ||A||",
                    worst, 0.0, 1e-8)

    return [(f"{name} {th}", lambda th=th, fn=fn: fn(th))
            for th in TABLE_THETAS for name, fn in (("det_A", det_check), ("kernel_vector", kernel_check))]


def _moment_items():
    from .quadrature import cauchy_moments

    def check(t):
        ref = pv_legendre(32, t).value
        val = cauchy_moments(t, 32).values
        err = np.abs(val - ref)
        j = int(np.argmax(err))
        return _row(f"cauchy_moments t={t} (worst j={j})", "oracle pv_legendre", val[j], ref[j], 1e-10)

    return [(f"moments {t}", lambda t=t: check(t)) for sgn in (1, -1) for t in [sgn * x for x in MOMENT_T]]


def forward_check(theta: float, params: ElasticParams, N: int = 2, seed: int = BATTERY_SEED,
                  radius: float = 0.4, degree: int = 30) -> float:
    """Relative mismatch between B alpha and Taylor coefficients of the direct wedge evaluation."""
    import warnings

    from . import mellin

    rng = np.random.default_rng(seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        B = mellin.mapping_B(theta, N, params=params)
    alpha = rng.standard_normal(4 * N) + 1j * rng.standard_normal(4 * N)
    beta = B.matrix @ alpha
    coef = taylor_coefficients(
        lambda t: wedge_direct_h(alpha, B.exponents, B.kernel_vectors, theta, params, t), N, radius, degree)
    return float(np.linalg.norm(coef.ravel() - beta) / np.linalg.norm(beta))


def _forward_items(params, seed):
    return [(f"forward {th}", lambda th=th: _row(
        f"forward_check theta={th:.6f} N=2", "oracle wedge_direct_h Taylor fit",
        forward_check(th, params, seed=seed), 0.0, 1e-6)) for th in (np.pi / 2, 2 * np.pi / 3)]


def _kernel_items(params, seed):
    from .geometry import frame_at, make_droplet
    from .kernels import split_kernel

    arc = make_droplet(np.pi / 2).arcs[0]
    frame = lambda u: frame_at(arc, np.asarray(u, float), 0)

    def reconstruction():
        rng = np.random.default_rng(seed)
        lo, hi = arc.u0 + 0.05 * (arc.u1 - arc.u0), arc.u1 - 0.05 * (arc.u1 - arc.u0)
        worst = 0.0
        for _ in range(20):
            t, s = rng.uniform(lo, hi, 2)
            D1, D2 = split_kernel(frame(t), frame(s), t, s, params)
            fy = frame(s)
            D = _traction(frame(t).position, fy.position, fy.normal, params.lam, params.mu)
            worst = max(worst, np.max(np.abs(D1 / (t - s) + D2 - D)) / np.max(np.abs(D)))
        return _row("kernel reconstruction D1/(t-s)+D2 = D (20 random pairs)", "oracle _traction", worst, 0.0,
                    1e-12)

    def diagonal():
        split = lambda t, s: split_kernel(frame(t), frame(s), t, s, params)
        worst = 0.0
        for frac in (0.2, 0.5, 0.8):
            t = arc.u0 + frac * (arc.u1 - arc.u0)
            exact = split(t, t)
            extra = extrapolated_diagonal(split, t)
            worst = max(worst, max(np.max(np.abs(a - b)) for a, b in zip(exact, extra)))
        return _row("diagonal limits vs Richardson extrapolation", "oracle extrapolated_diagonal", worst, 0.0,
                    1e-10)

    return [("kernel reconstruction", reconstruction), ("kernel diagonal", diagonal)]


def _spectrum_items(params):
    from .spectrum import corner_spectrum, lambda_root, sinc_curve_point

    def conjugates():
        worst = 0.0
        for th in TABLE_THETAS:
            zs = corner_spectrum(th, params, re_max=12, im_max=6).exponents
            for z in zs:
                if abs(z.imag) > 1e-12:
                    worst = max(worst, min(abs(np.conj(z) - w) for w in zs))
        return _row("conjugate-pair root symmetry (exponent table angles)", "closure under conjugation", worst, 0.0, 1e-10)

    def bounds():
        ok = True
        for j in range(-10, 11):
            if j == 0:
                continue
            lam = lambda_root(j)
            k = abs(j)
            ok &= k * np.pi + np.pi / 4 < abs(lam) < k * np.pi + np.pi / 2 and np.sign(lam) == np.sign(j)
            ok &= abs(np.tan(lam) - lam) <= 1e-9 * abs(lam)
        return BatteryRow("lambda_j bracket |j| pi + pi/4 < |lambda_j| < |j| pi + pi/2, |j| <= 10",
                          "tan x = x", float(ok), 1.0, 0.0 if ok else 1.0, bool(ok))

    def monotone():
        ok = True
        ys = np.linspace(0.0, 6.0, 61)
        for j in (1, 2, 3):
            vals = []
            for y in ys:
                w = sinc_curve_point(j, y)
                vals.append(np.sin(w) / w)
            vals = np.array(vals)
            ok &= bool(np.all(np.abs(vals.imag) <= 1e-10 * np.abs(vals)))
            ok &= bool(np.all(np.sign(vals.real) == (-1) ** j))
            ok &= bool(np.all(np.diff(np.abs(vals)) > 0))
        return BatteryRow("sinc level curves: |sinc| increasing in |y|, sign (-1)^j, j = 1..3",
                          "tan x / x = tanh y / y", float(ok), 1.0, 0.0 if ok else 1.0, bool(ok))

    return [("conjugates", conjugates), ("bounds", bounds), ("monotone", monotone)]


def _pipeline_items(params, seed):
    from . import mellin
    from .geometry import make_droplet
    from .panelizer import indicator, refine
    from .solver import assemble, solve_dense
    from .spectrum import corner_spectrum

    def accept_rule():
        shape = make_droplet(np.pi / 2)
        spectra = {0: corner_spectrum(shape.corners[0].angle, params)}
        eps = 1e-9
        mesh = refine(shape, spectra, eps_pan=eps, base_panels=4)
        worst = max(indicator(pan, spectra[pan.owner].exponents, mesh.p) for pan in mesh.panels
                    if pan.owner is not None and not pan.flagged)
        return _row(f"accept rule: max indicator over accepted panels <= {eps}", "indicator re-evaluation",
                    worst, 0.0, eps)

    def manufactured():
        from .geometry import make_triangle

        shape = make_triangle()
        spectra = {i: corner_spectrum(c.angle, params) for i, c in enumerate(shape.corners)}
        mesh = refine(shape, spectra, eps_pan=1e-6, base_panels=4)
        system = assemble(mesh, params)
        phi = np.random.default_rng(seed).standard_normal(mesh.dofs)
        sol = solve_dense(system, system.matrix @ phi)
        err = np.linalg.norm(sol.density - phi) / np.linalg.norm(phi)
        return _row(f"manufactured round trip phi -> A phi -> phi ({mesh.dofs} DoFs)", "exact density",
                    err, 0.0, 1e-12)

    def corner_round_trip():
        import warnings

        rng = np.random.default_rng(seed)
        worst = 0.0
        for th in (np.pi / 2, 2 * np.pi / 3):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                B = mellin.mapping_B(th, 2, params=params)
            alpha = rng.standard_normal(8) + 1j * rng.standard_normal(8)
            beta = B.matrix @ alpha
            rec = mellin.solve_corner_coefficients(B, beta)
            worst = max(worst, np.linalg.norm(B.matrix @ rec - beta) / np.linalg.norm(beta))
        return _row("corner coefficients: B alpha_rec reproduces B alpha", "B alpha", worst, 0.0, 1e-10)

    return [("accept", accept_rule), ("manufactured", manufactured), ("corner round trip", corner_round_trip)]


def battery_manifest(params: ElasticParams | None = None, seed: int = BATTERY_SEED):
    """(name, thunk) pairs; each thunk returns one BatteryRow."""
    params = params or ElasticParams()
    return (_mellin_items(params) + _symbol_items(params) + _moment_items() + _forward_items(params, seed)
            + _kernel_items(params, seed) + _spectrum_items(params) + _pipeline_items(params, seed))


def run_battery(params: ElasticParams | None = None, workers: int = 4,
                seed: int = BATTERY_SEED) -> list[BatteryRow]:
    """Run every battery item; one row per item, in manifest order whatever the scheduling.

    An item that raises is reported as a failing row instead of aborting the run.
    """
    from concurrent.futures import ThreadPoolExecutor

    def run(item):
        name, thunk = item
        try:
            return thunk()
        except Exception as exc:  # noqa: BLE001 - any failure is a failed item
            return BatteryRow(f"{name} raised {type(exc).__name__}: {exc}", "exception", float("nan"),
                              float("nan"), float("inf"), False)

    manifest = battery_manifest(params, seed)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(run, manifest))
