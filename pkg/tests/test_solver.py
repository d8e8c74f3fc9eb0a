import numpy as np
import pytest

from sgnlame.geometry import make_circle, make_droplet
from sgnlame.kernels import ElasticParams
from sgnlame.panelizer import refine, uniform_mesh
from sgnlame.solver import (SourceSet, assemble, default_sources, default_targets, eval_interior, relative_error,
                            solve_dense, synth_dirichlet_data)
from sgnlame.spectrum import corner_spectrum

P = ElasticParams()


def lame_residual(field, x, h=1e-3):
    """mu lap u + (lam + mu) grad div u by fourth-order central differences."""
    def d(f, axis):
        e = np.zeros(2)
        e[axis] = h
        return lambda y: (-f(y + 2 * e) + 8 * f(y + e) - 8 * f(y - e) + f(y - 2 * e)) / (12 * h)

    lap = sum(d(d(field, a), a)(x) for a in (0, 1))
    div = lambda y: d(lambda z: field(z)[0], 0)(y) + d(lambda z: field(z)[1], 1)(y)
    grad_div = np.array([d(div, 0)(x), d(div, 1)(x)])
    return P.mu * lap + (P.lam + P.mu) * grad_div


def circle_case(panels):
    mesh = uniform_mesh(make_circle(), panels_per_arc=panels, p=16)
    src = default_sources(mesh.shape)
    system = assemble(mesh, P)
    sol = solve_dense(system, synth_dirichlet_data(src, mesh, P))
    tg = default_targets(mesh.shape)
    return sol, relative_error(eval_interior(sol, mesh, tg, P), src.field(tg, P))


def test_exact_field_solves_lame():
    src = default_sources(make_droplet(np.pi / 2))
    f = lambda y: src.field(y, P)[0]
    for x in default_targets(make_droplet(np.pi / 2)):
        assert np.max(np.abs(lame_residual(f, x))) <= 1e-6


def test_zero_strengths_give_zero_rhs():
    mesh = uniform_mesh(make_circle(), panels_per_arc=4)
    src = default_sources(mesh.shape)
    zero = SourceSet(src.locations, np.zeros_like(src.strengths))
    assert np.all(synth_dirichlet_data(zero, mesh, P) == 0.0)
    f = synth_dirichlet_data(src, mesh, P)
    assert f.shape == (mesh.dofs,)
    assert np.allclose(f.reshape(-1, 2), src.field(mesh.nodes.position, P), rtol=0, atol=0)


def test_interior_or_close_sources_rejected():
    mesh = uniform_mesh(make_circle(), panels_per_arc=4)
    with pytest.raises(ValueError):
        synth_dirichlet_data(SourceSet(np.array([[0.1, 0.0]]), np.array([[1.0, 0.0]])), mesh, P)
    with pytest.raises(ValueError):
        synth_dirichlet_data(SourceSet(np.array([[1.2, 0.0]]), np.array([[1.0, 0.0]])), mesh, P)


@pytest.mark.parametrize("panels", [8, 16])
def test_circle_reaches_machine_accuracy(panels):
    sol, err = circle_case(panels)
    assert err <= 1e-12
    assert sol.residual <= 1e-12


def test_circle_converges_spectrally():
    errs = [circle_case(n)[1] for n in (1, 2, 4)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] / errs[0] < 0.1 and errs[2] / errs[1] < 0.1


def test_manufactured_density_round_trip():
    mesh = uniform_mesh(make_circle(), panels_per_arc=8)
    system = assemble(mesh, P)
    rng = np.random.default_rng(7)
    phi = rng.standard_normal(mesh.dofs)
    sol = solve_dense(system, system.matrix @ phi)
    assert np.linalg.norm(sol.density - phi) <= 1e-12 * np.linalg.norm(phi) * sol.cond_est


def test_homogeneous_problem_has_zero_solution():
    mesh = uniform_mesh(make_circle(), panels_per_arc=4)
    system = assemble(mesh, P)
    sol = solve_dense(system, np.zeros(mesh.dofs))
    assert np.all(sol.density == 0.0) and sol.residual == 0.0
    assert np.all(eval_interior(sol, mesh, default_targets(mesh.shape), P) == 0.0)
    with pytest.raises(ValueError):
        solve_dense(system)


def test_singular_matrix_raises():
    mesh = uniform_mesh(make_circle(), panels_per_arc=1, p=4)
    system = assemble(mesh, P)
    system.matrix[1] = system.matrix[0]
    with pytest.raises(np.linalg.LinAlgError):
        solve_dense(system, np.ones(mesh.dofs))


def test_close_target_rejected():
    mesh = uniform_mesh(make_circle(), panels_per_arc=4)
    sol = solve_dense(assemble(mesh, P), synth_dirichlet_data(default_sources(mesh.shape), mesh, P))
    with pytest.raises(ValueError):
        eval_interior(sol, mesh, [[1 - 1e-9, 0.0]], P)


def test_relative_error_examples():
    assert relative_error([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert relative_error([0.0, 0.0], [3.0, 4.0]) == 1.0
    assert relative_error([1.0, 0.0], [0.0, 1.0]) == pytest.approx(np.sqrt(2))
    with pytest.raises(ValueError):
        relative_error([1.0], [1.0, 2.0])
    with pytest.raises(ZeroDivisionError):
        relative_error([1.0], [0.0])


def test_droplet_graded_solve():
    shape = make_droplet(np.pi / 2)
    mesh = refine(shape, {0: corner_spectrum(np.pi / 2)}, p=16, eps_pan=1e-9)
    src = default_sources(shape)
    sol = solve_dense(assemble(mesh, P), synth_dirichlet_data(src, mesh, P))
    tg = default_targets(shape)
    assert sol.residual <= 1e-12
    assert relative_error(eval_interior(sol, mesh, tg, P), src.field(tg, P)) <= 1e-11
