import numpy as np
import pytest

from fluidspan.fields import Grid, ScalarField, biot_savart, lp_norm
from fluidspan.lagrangian import (
    AnalyticVelocity,
    DuhamelHistory,
    FrozenFieldVelocity,
    StageVelocity,
    StretchingSeries,
    advect_flow_map,
    back_to_label,
    back_to_label_residual,
    check_transport_lemma,
    check_w1p_bounds,
    compute_memory,
    compute_stretching,
    duhamel_vorticity,
    identity_ensemble,
    jacobian_norms,
    record,
)
from fluidspan.models import (
    FluidState,
    ModelKind,
    eigenstate_vorticity,
    initial_state,
    step_detailed,
)

GOLDEN = (1 + np.sqrt(5)) / 2


def shear_provider():
    # steady shear u = (sin y, 0); closed-form map X = (a1 + t sin a2, a2)
    return AnalyticVelocity(
        u_fn=lambda t, x, y: (np.sin(y), np.zeros_like(x)),
        grad_fn=lambda t, x, y: (np.zeros_like(x), np.cos(y),
                                 np.zeros_like(x), np.zeros_like(x)),
    )


def test_zero_velocity_leaves_ensemble_fixed():
    ens = identity_ensemble(16)
    prov = AnalyticVelocity(
        u_fn=lambda t, x, y: (np.zeros_like(x), np.zeros_like(y)),
        grad_fn=lambda t, x, y: tuple(np.zeros_like(x) for _ in range(4)),
    )
    out = advect_flow_map(ens, prov, 0.1)
    assert np.array_equal(out.x, ens.x)
    assert np.array_equal(out.jac, ens.jac)
    assert out.t == pytest.approx(0.1)


def test_shear_flow_closed_form():
    ens = identity_ensemble(32)
    prov = shear_provider()
    dt = 0.05
    for _ in range(20):
        ens = advect_flow_map(ens, prov, dt)
    a1 = ens.labels[..., 0]
    a2 = ens.labels[..., 1]
    assert np.max(np.abs(ens.x[..., 0] - (a1 + 1.0 * np.sin(a2)))) < 1e-6
    assert np.max(np.abs(ens.x[..., 1] - a2)) < 1e-12
    # Jacobian [[1, t cos a2], [0, 1]]
    assert np.max(np.abs(ens.jac[..., 0, 1] - np.cos(a2))) < 1e-6
    assert np.max(np.abs(ens.jac[..., 0, 0] - 1.0)) < 1e-9
    fwd, inv, detj = jacobian_norms(ens)
    assert detj < 1e-9
    # operator norm of [[1,1],[0,1]] is the golden ratio
    assert fwd == pytest.approx(GOLDEN, abs=1e-6)


def test_area_preservation_for_solver_velocity():
    grid = Grid(64)
    omega = ScalarField.from_function(
        grid, lambda x, y: np.sin(x) * np.sin(y) + 0.7 * np.cos(2 * x + y))
    prov = FrozenFieldVelocity(biot_savart(omega))
    ens = identity_ensemble(32)
    dt = 0.02
    for _ in range(50):
        ens = advect_flow_map(ens, prov, dt)
    _, _, detj = jacobian_norms(ens)
    assert detj <= 1e-4


def test_interpolation_accuracy():
    grid = Grid(64)
    f = ScalarField.from_function(grid, lambda x, y: np.sin(x) * np.cos(2 * y))
    from fluidspan.lagrangian import PeriodicInterpolator

    interp = PeriodicInterpolator(f)
    rng = np.random.default_rng(0)
    pts = rng.uniform(0, 2 * np.pi, size=(500, 2))
    exact = np.sin(pts[:, 0]) * np.cos(2 * pts[:, 1])
    assert np.max(np.abs(interp(pts) - exact)) < 5e-5  # O(dx^4)


def test_back_to_label_consistency():
    ens = identity_ensemble(64)
    prov = shear_provider()
    for _ in range(20):
        ens = advect_flow_map(ens, prov, 0.05)
    grid = Grid(64)
    labels = back_to_label(ens, grid)
    # closed-form inverse: A(x) = (x1 - sin(x2), x2)
    exact1 = np.mod(grid.X - np.sin(grid.Y), 2 * np.pi)
    err1 = np.abs(labels[..., 0] - exact1)
    err1 = np.minimum(err1, 2 * np.pi - err1)
    assert np.max(err1) < 1e-5
    assert back_to_label_residual(ens, grid, labels) <= 2 * grid.dx


def test_stretching_series_zero_velocity():
    grid = Grid(32)
    state = FluidState(ModelKind.BOUSSINESQ, 0.0,
                       omega=ScalarField.zeros(grid),
                       rho=ScalarField(grid, np.ones((grid.nx, grid.ny))))
    series = StretchingSeries(kind=ModelKind.BOUSSINESQ)
    ens = identity_ensemble(16)
    for t in (0.0, 0.5, 1.0):
        state = FluidState(ModelKind.BOUSSINESQ, t, omega=state.omega, rho=state.rho)
        ens = FlowEnsAt(ens, t)
        record(series, state, ens)
    assert np.allclose(series.M(), 1.0)
    assert np.allclose(series.N(), 1.0)
    assert np.allclose(series.m_measured, 1.0)
    # Y = 2t, Z = t for the trivial run
    assert series.y == pytest.approx([0.0, 1.0, 2.0])
    assert series.z == pytest.approx([0.0, 0.5, 1.0])


def FlowEnsAt(ens, t):
    from dataclasses import replace

    return replace(ens, t=t)


def test_stretching_shear_chord_arc():
    # M_measured at t=1 is the golden ratio, M = e; chord-arc holds with room
    ens = identity_ensemble(32)
    prov = shear_provider()
    grid = Grid(32)
    series = StretchingSeries(kind=ModelKind.EULER)
    omega = ScalarField.from_function(grid, lambda x, y: np.cos(y))  # u = (sin y, 0)
    dt = 0.05
    state = FluidState(ModelKind.EULER, 0.0, omega=omega)
    record(series, state, ens)
    for k in range(20):
        ens = advect_flow_map(ens, prov, dt)
        state = FluidState(ModelKind.EULER, ens.t, omega=omega)
        record(series, state, ens)
    assert series.m_measured[-1] == pytest.approx(GOLDEN, abs=1e-6)
    assert series.M()[-1] == pytest.approx(np.e, rel=1e-10)
    assert series.m_measured[-1] <= series.M()[-1] * (1 + 1e-3)


def test_euler_eigenstate_exponential_m():
    # steady state: integrand constant, so log M is exactly linear in t
    grid = Grid(64)
    state = FluidState(ModelKind.EULER, 0.0, omega=eigenstate_vorticity(grid))
    series = StretchingSeries(kind=ModelKind.EULER)
    record(series, state)
    g0 = series.grad_u_inf[0]
    for k in range(10):
        state = FluidState(ModelKind.EULER, 0.05 * (k + 1), omega=state.omega)
        record(series, state)
    slopes = np.diff(np.log(series.M())) / np.diff(series.times())
    assert np.max(np.abs(slopes - g0)) < 1e-6


def test_memory_iie_zero_velocity():
    grid = Grid(32)
    rho = ScalarField(grid, np.ones((grid.nx, grid.ny)))
    series = StretchingSeries(kind=ModelKind.IIE)
    for t in (0.0, 0.4, 0.8):
        state = FluidState(ModelKind.IIE, t, omega=ScalarField.zeros(grid), rho=rho)
        record(series, state)
    assert series.q == pytest.approx([0.0, 0.0, 0.0])


def test_memory_matches_constant_coefficient_integral():
    # Euler eigenstate relabeled as Boussinesq with constant density:
    # Y(t) = int (e^{a tau} + e^{b tau}) with a, b the constant integrands.
    grid = Grid(64)
    omega = eigenstate_vorticity(grid)
    rho = ScalarField(grid, np.ones((grid.nx, grid.ny)))
    series = StretchingSeries(kind=ModelKind.BOUSSINESQ)
    dt = 0.01
    for k in range(101):
        state = FluidState(ModelKind.BOUSSINESQ, k * dt, omega=omega, rho=rho)
        record(series, state)
    a = series.grad_u_inf[0]
    b = series.grad_u_w1p[0]
    t_end = series.t[-1]
    exact = (np.exp(a * t_end) - 1) / a + (np.exp(b * t_end) - 1) / b
    assert series.y[-1] == pytest.approx(exact, rel=1e-4)


def test_duhamel_t0_recovers_initial_vorticity():
    grid = Grid(64)
    state = initial_state(ModelKind.BOUSSINESQ, grid, delta=0.1)
    ens = identity_ensemble(64)
    hist = DuhamelHistory(state, ens)
    rec = duhamel_vorticity(ens, hist, grid)
    err = lp_norm(rec.values - state.omega.values, 2, grid.cell_area)
    assert err / lp_norm(state.omega.values, 2, grid.cell_area) < 1e-6


def test_duhamel_pure_transport_oracle():
    # constant density: reconstruction reduces to omega0 o A; compare with
    # the Eulerian solver field (interpolation-limited agreement)
    grid = Grid(64)
    state = initial_state(ModelKind.BOUSSINESQ, grid, delta=0.0)
    ens = identity_ensemble(64)
    hist = DuhamelHistory(state, ens)
    dt = 0.02
    for _ in range(25):
        new_state, stages = step_detailed(state, dt)
        ens = advect_flow_map(ens, StageVelocity(stages), dt)
        state = new_state
        hist.update(state, ens)
    rec = duhamel_vorticity(ens, hist, grid)
    rel = lp_norm(rec.values - state.omega.values, 2, grid.cell_area)
    rel /= lp_norm(state.omega.values, 2, grid.cell_area)
    assert rel <= 1e-3


def test_transport_lemma_identity_map():
    grid = Grid(64)
    rho0 = ScalarField.from_function(grid, lambda x, y: 1 + 0.3 * np.sin(x) * np.cos(y))
    ens = identity_ensemble(64)
    report = check_transport_lemma(ens, rho0, p=4)
    for r, entry in report.items():
        assert abs(entry["margin"]) <= 1e-6 * max(entry["rhs"], 1.0)

    const = ScalarField(grid, np.full((grid.nx, grid.ny), 2.0))
    rep2 = check_transport_lemma(ens, const, p=4)
    for entry in rep2.values():
        assert entry["lhs"] <= 1e-12


def test_transport_lemma_along_run():
    grid = Grid(64)
    state = initial_state(ModelKind.BOUSSINESQ, grid, delta=0.1)
    rho0 = state.rho
    ens = identity_ensemble(48)
    dt = 0.02
    for _ in range(25):
        state, stages = step_detailed(state, dt)
        ens = advect_flow_map(ens, StageVelocity(stages), dt)
    report = check_transport_lemma(ens, rho0, p=4)
    for entry in report.values():
        assert entry["margin"] >= -1e-6 * max(entry["rhs"], 1.0)


def test_w1p_bound_margins_nonnegative_with_fit():
    grid = Grid(64)
    state = initial_state(ModelKind.BOUSSINESQ, grid, delta=0.1)
    series = StretchingSeries(kind=ModelKind.BOUSSINESQ)
    record(series, state)
    dt = 0.02
    for _ in range(25):
        state = step_detailed(state, dt)[0]
        record(series, state)
    margins = check_w1p_bounds(series, delta=0.1, c_fit=50.0)
    assert np.all(margins["omega"] >= 0)
    assert np.all(margins["rho"] >= 0)
