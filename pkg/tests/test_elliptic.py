import numpy as np
import pytest

from fluidspan.elliptic import recover_velocity_detailed, recover_velocity_iie, solve_q
from fluidspan.errors import VacuumError
from fluidspan.fields import (
    Grid,
    ScalarField,
    VectorField,
    biot_savart,
    curl,
    divergence,
    grad_u_inf_norm,
    gradient,
    lp_norm,
)


@pytest.fixture(scope="module")
def grid():
    return Grid(64)


def omega_default(grid):
    return ScalarField.from_function(grid, lambda x, y: np.sin(x) * np.sin(y))


def test_homogeneous_density_gives_zero_q(grid):
    rho = ScalarField(grid, np.ones((grid.nx, grid.ny)))
    q, report = solve_q(rho, omega_default(grid))
    assert q.max_abs() == 0.0
    assert report.iterations == 1
    assert report.residual == 0.0


def test_manufactured_solution(grid):
    # oracle built before the solver: pick q*, generate the forcing with the
    # same discrete operator, solve, compare.
    q_star = ScalarField.from_function(grid, lambda x, y: np.sin(x + y))
    mu = 1.0 + 0.05 * np.sin(grid.X)
    rho = ScalarField(grid, 1.0 / mu)

    gq = gradient(q_star)
    f = divergence(VectorField(
        ScalarField(grid, mu * gq.u.values),
        ScalarField(grid, mu * gq.v.values),
    ))

    # Reuse the CG branch directly on the manufactured right-hand side by
    # rephrasing: div(mu grad q) = f  <=>  the solver's equation with b = f.
    # solve_q builds its own b from omega, so manufacture omega such that
    # -div((mu-1) K omega) = f is not available in closed form; instead verify
    # the operator identity through the full velocity recovery below and test
    # the raw solve through a matching omega-free harness.
    from fluidspan.elliptic import _div_coeff_grad

    lhs = _div_coeff_grad(mu, q_star)
    rel = lp_norm(lhs.values - f.values, 2, grid.cell_area) / lp_norm(f.values, 2, grid.cell_area)
    assert rel < 1e-13


def test_manufactured_solution_via_cg(grid):
    # Solve div(rho^-1 grad q) = f with manufactured q*.
    from fluidspan.elliptic import solve_div_form

    q_star = ScalarField.from_function(grid, lambda x, y: np.sin(x + y))
    mu = 1.0 + 0.05 * np.sin(grid.X)
    rho = ScalarField(grid, 1.0 / mu)
    gq = gradient(q_star)
    f = divergence(VectorField(
        ScalarField(grid, mu * gq.u.values),
        ScalarField(grid, mu * gq.v.values),
    ))
    q = solve_div_form(rho, f, tol=1e-12, max_iter=200)
    err = lp_norm(q.values - q_star.values, 2, grid.cell_area)
    assert err / lp_norm(q_star.values, 2, grid.cell_area) <= 1e-8


def test_perturbative_solve_properties(grid):
    omega = omega_default(grid)
    mu = 1.0 + 0.05 * np.sin(grid.Y)  # delta = 0.05, theta = sin y
    rho = ScalarField(grid, 1.0 / mu)
    q, report = solve_q(rho, omega, tol=1e-10)
    assert report.residual <= 1e-10
    assert report.method == "fixed_point"
    assert 0.0 < report.contraction_estimate < 0.5  # O(delta) contraction


def test_vacuum_rejected(grid):
    rho = ScalarField(grid, 0.5 + 0.5 * np.cos(grid.X))  # touches zero
    with pytest.raises(VacuumError):
        solve_q(rho, omega_default(grid))


def test_velocity_reduces_to_biot_savart_for_unit_density(grid):
    omega = omega_default(grid)
    rho = ScalarField(grid, np.ones((grid.nx, grid.ny)))
    u = recover_velocity_iie(rho, omega)
    ub = biot_savart(omega)
    assert np.max(np.abs(u.u.values - ub.u.values)) == 0.0
    assert np.max(np.abs(u.v.values - ub.v.values)) == 0.0


def test_velocity_self_consistency(grid):
    omega = omega_default(grid)
    mu = 1.0 + 0.1 * np.cos(grid.X)  # delta = 0.1, theta = cos x
    rho = ScalarField(grid, 1.0 / mu)
    u = recover_velocity_iie(rho, omega, tol=1e-11)

    # curl(rho u) = omega
    rho_u = VectorField(
        ScalarField(grid, rho.values * u.u.values),
        ScalarField(grid, rho.values * u.v.values),
    )
    w = curl(rho_u)
    rel = lp_norm(w.values - omega.values, 2, grid.cell_area) / lp_norm(
        omega.values, 2, grid.cell_area
    )
    assert rel <= 1e-8

    # div u = 0 to solver tolerance
    assert divergence(u).max_abs() <= 1e-9 * max(grad_u_inf_norm(u), 1.0)

    # momentum mean vanishes
    mom_x = np.mean(rho_u.u.values)
    mom_y = np.mean(rho_u.v.values)
    assert abs(mom_x) <= 1e-10
    assert abs(mom_y) <= 1e-10


def test_methods_agree(grid):
    omega = omega_default(grid)
    mu = 1.0 + 0.2 * np.sin(grid.X) * np.cos(grid.Y)
    rho = ScalarField(grid, 1.0 / mu)
    tol = 1e-11
    q_fp, _ = solve_q(rho, omega, tol=tol, method="fixed_point")
    q_cg, rep = solve_q(rho, omega, tol=tol, method="preconditioned_cg")
    assert rep.method == "preconditioned_cg"
    diff = lp_norm(q_fp.values - q_cg.values, 2, grid.cell_area)
    assert diff <= 10 * tol


def test_refinement_invariance():
    coarse = Grid(64)
    fine = Grid(128)
    tol = 1e-10

    def setup(g):
        omega = ScalarField.from_function(g, lambda x, y: np.sin(x) * np.sin(y))
        mu = 1.0 + 0.05 * np.sin(g.Y)
        rho = ScalarField(g, 1.0 / mu)
        return recover_velocity_iie(rho, omega, tol=tol)

    u_c = setup(coarse)
    u_f = setup(fine)
    diff = np.max(np.abs(u_c.u.values - u_f.u.values[::2, ::2]))
    diff = max(diff, np.max(np.abs(u_c.v.values - u_f.v.values[::2, ::2])))
    assert diff <= 10 * tol


def test_warm_start_is_consistent(grid):
    omega = omega_default(grid)
    mu = 1.0 + 0.05 * np.sin(grid.Y)
    rho = ScalarField(grid, 1.0 / mu)
    u1, q1, _ = recover_velocity_detailed(rho, omega, tol=1e-11)
    u2, q2, rep2 = recover_velocity_detailed(rho, omega, tol=1e-11, q0=q1)
    assert rep2.iterations <= 3
    assert np.max(np.abs(u1.u.values - u2.u.values)) <= 1e-9
