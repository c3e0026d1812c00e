"""Right-hand sides and time integration for the four evolution systems.

All models share the energy-vorticity skeleton

    d_t omega + u . grad omega = {dE/drho, rho},
    d_t rho   + u . grad rho   = 0,
    curl(dE/du) = omega,

with the energy functional selecting the model:

* Euler           dE/drho absent, u = K omega (standard Biot-Savart);
* Boussinesq      dE/drho = -x2, whose bracket reduces to d_x rho;
* ideal MHD       dE/drho = -Lap(rho); carrier (omega, rho) with
                  J = Lap(rho), B = grad^perp rho derived spectrally, plus a
                  second integrator in Elsasser variables xi = omega + J,
                  eta = omega - J used for cross-validation;
* inhomogeneous   dE/drho = |u|^2 / 2 and u recovered by the modified
  Euler (IIE)     Biot-Savart law (elliptic module).

Quadratic terms are dealiased with the grid's 2/3 rule.  Time stepping is
classical RK4 with a CFL-limited step; nothing is renormalized, so every
conservation statement is a measured output.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .elliptic import recover_velocity_detailed
from .errors import (
    InstabilityError,
    InvalidFieldError,
    ParameterError,
    VacuumError,
)
from .fields import (
    ScalarField,
    VectorField,
    advection,
    biot_savart,
    dealias,
    invert_laplacian,
    laplacian,
    lp_norm,
    perp_gradient,
    poisson_bracket,
    same_grid,
    sobolev_norm,
    spectral_derivative,
)


class ModelKind(enum.Enum):
    EULER = "euler"
    BOUSSINESQ = "boussinesq"
    MHD_VORTICITY_CURRENT = "mhd"
    MHD_ELSASSER = "mhd_elsasser"
    IIE = "iie"

    @classmethod
    def parse(cls, name):
        name = name.strip().lower()
        for kind in cls:
            if kind.value == name:
                return kind
        raise ParameterError(f"unknown model '{name}'; expected one of "
                             + ", ".join(k.value for k in cls))


MHD_KINDS = (ModelKind.MHD_VORTICITY_CURRENT, ModelKind.MHD_ELSASSER)


@dataclass
class FluidState:
    """Model-tagged field bundle at a single time.

    Confined to one integration thread; ``aux`` carries per-run caches
    (recovered velocity, elliptic warm start) and is shared across the
    states produced by a stepping sequence.
    """

    kind: ModelKind
    t: float
    omega: ScalarField | None = None
    rho: ScalarField | None = None
    xi: ScalarField | None = None
    eta: ScalarField | None = None
    mass_mean: float = 1.0  # mean of rho, fixed by the initial data
    elliptic_tol: float = 1e-10
    aux: dict = field(default_factory=dict)

    @property
    def grid(self):
        f = self.omega if self.omega is not None else self.xi
        return f.grid

    def vorticity(self):
        if self.kind is ModelKind.MHD_ELSASSER:
            return 0.5 * (self.xi + self.eta)
        return self.omega

    def current(self):
        if self.kind is ModelKind.MHD_ELSASSER:
            return 0.5 * (self.xi - self.eta)
        if self.rho is None:
            return None
        return laplacian(self.rho)

    def density(self):
        if self.kind is ModelKind.MHD_ELSASSER:
            return invert_laplacian(self.current(), mean_tol=np.inf) + self.mass_mean
        return self.rho

    def magnetic_field(self):
        if self.kind not in MHD_KINDS:
            return None
        return perp_gradient(self.density())

    def velocity(self):
        """Recovered velocity, cached until the state changes."""
        cached = self.aux.get("u_cache")
        if cached is not None and cached[0] is self:
            return cached[1]
        if self.kind is ModelKind.IIE:
            u, q, report = recover_velocity_detailed(
                self.rho, self.omega, tol=self.elliptic_tol,
                q0=self.aux.get("q_prev"),
            )
            self.aux["q_prev"] = q
            self.aux["elliptic_report"] = report
        else:
            u = biot_savart(self.vorticity())
        self.aux["u_cache"] = (self, u)
        return u


@dataclass
class Tendency:
    domega: ScalarField | None = None
    drho: ScalarField | None = None
    dxi: ScalarField | None = None
    deta: ScalarField | None = None
    u: VectorField | None = None  # stage velocity, reused by flow-map advection


def q_operator(omega, current):
    """Zeroth-order bilinear coupling of the MHD vorticity-current system.

    Derived from the commutator of the Laplacian with transport:
    Q(omega, J) = -2 sum_{jk} d_j u_k d_j d_k phi with u = K omega and
    phi = Lap^{-1} J, which makes the (omega, J) system identical to the
    (omega, rho) one.  Vanishes when either argument is zero.
    """
    same_grid(omega, current)
    grid = omega.grid
    psi = invert_laplacian(omega, mean_tol=np.inf)
    phi = invert_laplacian(current, mean_tol=np.inf)
    psi_xx = spectral_derivative(psi, (2, 0)).values
    psi_yy = spectral_derivative(psi, (0, 2)).values
    psi_xy = spectral_derivative(psi, (1, 1)).values
    phi_xx = spectral_derivative(phi, (2, 0)).values
    phi_yy = spectral_derivative(phi, (0, 2)).values
    phi_xy = spectral_derivative(phi, (1, 1)).values
    vals = -2.0 * (psi_xy * (phi_yy - phi_xx) + phi_xy * (psi_xx - psi_yy))
    return dealias(ScalarField(grid, vals))


def elsasser_transform(omega, current):
    """Forward map (omega, J) -> (xi, eta) = (omega + J, omega - J)."""
    same_grid(omega, current)
    return omega + current, omega - current


def elsasser_inverse(xi, eta):
    same_grid(xi, eta)
    return 0.5 * (xi + eta), 0.5 * (xi - eta)


def rhs(state):
    """Model tendency at the state's time; all quadratic terms dealiased."""
    kind = state.kind
    u = state.velocity()

    if kind is ModelKind.EULER:
        tend = Tendency(domega=-advection(u, state.omega), u=u)

    elif kind is ModelKind.BOUSSINESQ:
        # {dE/drho, rho} with dE/drho = -x2 reduces to the periodic d_x rho.
        forcing = spectral_derivative(state.rho, (1, 0))
        tend = Tendency(
            domega=-advection(u, state.omega) + forcing,
            drho=-advection(u, state.rho),
            u=u,
        )

    elif kind is ModelKind.MHD_VORTICITY_CURRENT:
        current = laplacian(state.rho)
        tend = Tendency(
            domega=-advection(u, state.omega) + poisson_bracket(state.rho, current),
            drho=-advection(u, state.rho),
            u=u,
        )

    elif kind is ModelKind.MHD_ELSASSER:
        omega, current = elsasser_inverse(state.xi, state.eta)
        b = state.magnetic_field()
        coupling = q_operator(omega, current)
        tend = Tendency(
            dxi=-advection(u - b, state.xi) + coupling,
            deta=-advection(u + b, state.eta) - coupling,
            u=u,
        )

    elif kind is ModelKind.IIE:
        kin = dealias(ScalarField(
            state.grid, 0.5 * (u.u.values**2 + u.v.values**2)))
        tend = Tendency(
            domega=-advection(u, state.omega) + poisson_bracket(kin, state.rho),
            drho=-advection(u, state.rho),
            u=u,
        )
    else:
        raise ParameterError(f"unhandled model {kind}")

    for name in ("domega", "drho", "dxi", "deta"):
        f = getattr(tend, name)
        if f is not None and not f.is_finite():
            raise InstabilityError(f"non-finite tendency in {name} at t = {state.t}")
    return tend


def mhd_vorticity_current_tendencies(omega, rho):
    """Explicit (omega, J) tendencies of the symmetric MHD form.

    Returns (domega, dJ) with dJ = -u.grad J + {rho, omega} + Q(omega, J);
    exposed so the derived-J route Lap(drho) can be cross-checked against it.
    """
    u = biot_savart(omega)
    current = laplacian(rho)
    domega = -advection(u, omega) + poisson_bracket(rho, current)
    dj = -advection(u, current) + poisson_bracket(rho, omega) + q_operator(omega, current)
    return domega, dj


def _apply(state, tend, coeff, new_t):
    """state + coeff * tendency at time new_t (shares the aux cache)."""
    def bump(f, df):
        if f is None:
            return None
        return ScalarField(f.grid, f.values + coeff * df.values)

    return FluidState(
        kind=state.kind,
        t=new_t,
        omega=bump(state.omega, tend.domega) if state.omega is not None else None,
        rho=bump(state.rho, tend.drho) if state.rho is not None and tend.drho is not None
        else state.rho,
        xi=bump(state.xi, tend.dxi) if state.xi is not None else None,
        eta=bump(state.eta, tend.deta) if state.eta is not None else None,
        mass_mean=state.mass_mean,
        elliptic_tol=state.elliptic_tol,
        aux=state.aux,
    )


def cfl_limit(state, cfl_number=0.5, eps=1e-12):
    """Largest stable step: cfl * dx / wave speed.

    The MHD wave speed is bounded by ||u||_inf + ||B||_inf (both Elsasser
    characteristics).  A quiescent state returns a huge but finite value;
    callers cap it with dt_max.
    """
    g = state.grid
    dx = min(g.dx, g.dy)
    speed = state.velocity().max_abs()
    if state.kind in MHD_KINDS:
        speed += state.magnetic_field().max_abs()
    return cfl_number * dx / max(speed, eps)


def step_detailed(state, dt, check_cfl=True, cfl_number=0.5):
    """One classical RK4 step; returns (new_state, stage (time, velocity) list)."""
    if check_cfl and dt > cfl_limit(state, cfl_number) * (1.0 + 1e-9):
        raise ParameterError(
            f"dt = {dt:.3e} exceeds the CFL limit {cfl_limit(state, cfl_number):.3e}"
        )
    t = state.t
    stages = []

    def stage_rhs(s, idx):
        try:
            tend = rhs(s)
        except (InstabilityError, InvalidFieldError) as exc:
            raise InstabilityError(f"RK4 stage {idx}: {exc}") from exc
        stages.append((s.t, tend.u))
        return tend

    k1 = stage_rhs(state, 1)
    k2 = stage_rhs(_apply(state, k1, 0.5 * dt, t + 0.5 * dt), 2)
    k3 = stage_rhs(_apply(state, k2, 0.5 * dt, t + 0.5 * dt), 3)
    k4 = stage_rhs(_apply(state, k3, dt, t + dt), 4)

    def combine(f, d1, d2, d3, d4):
        if f is None:
            return None
        vals = f.values + (dt / 6.0) * (
            d1.values + 2.0 * d2.values + 2.0 * d3.values + d4.values
        )
        if not np.all(np.isfinite(vals)):
            raise InstabilityError(f"non-finite state after RK4 step at t = {t}")
        return ScalarField(f.grid, vals)

    new = FluidState(
        kind=state.kind,
        t=t + dt,
        omega=combine(state.omega, *(k.domega for k in (k1, k2, k3, k4)))
        if state.omega is not None else None,
        rho=combine(state.rho, *(k.drho for k in (k1, k2, k3, k4)))
        if state.rho is not None and k1.drho is not None else state.rho,
        xi=combine(state.xi, *(k.dxi for k in (k1, k2, k3, k4)))
        if state.xi is not None else None,
        eta=combine(state.eta, *(k.deta for k in (k1, k2, k3, k4)))
        if state.eta is not None else None,
        mass_mean=state.mass_mean,
        elliptic_tol=state.elliptic_tol,
        aux=state.aux,
    )
    return new, stages


def step(state, dt, check_cfl=True, cfl_number=0.5):
    """Advance the state by one RK4 step of size dt."""
    new, _ = step_detailed(state, dt, check_cfl=check_cfl, cfl_number=cfl_number)
    return new


def conserved_quantities(state, p=4):
    """Energies, mass, momentum and vorticity norms of a state.

    Quantities that do not apply to the model are reported as None and end
    up as empty CSV fields.
    """
    g = state.grid
    area = g.cell_area
    u = state.velocity()
    speed2 = u.u.values**2 + u.v.values**2
    e_kin = 0.5 * float(np.sum(speed2)) * area
    omega = state.vorticity()

    out = {
        "E_kinetic": e_kin,
        "E_model": e_kin,
        "mass": None,
        "momentum_x": None,
        "momentum_y": None,
        "cross_helicity": None,
        "omega_p": lp_norm(omega.values, p, area),
        "omega_inf": omega.max_abs(),
        "rho_p": None,
    }

    rho = state.density()
    if rho is not None and state.kind is not ModelKind.EULER:
        out["mass"] = float(np.sum(rho.values)) * area
        out["rho_p"] = lp_norm(rho.values, p, area)

    if state.kind is ModelKind.BOUSSINESQ:
        out["E_model"] = e_kin - float(np.sum(rho.values * g.Y)) * area
    elif state.kind in MHD_KINDS:
        b = state.magnetic_field()
        out["E_model"] = e_kin + 0.5 * float(
            np.sum(b.u.values**2 + b.v.values**2)) * area
        out["cross_helicity"] = float(
            np.sum(u.u.values * b.u.values + u.v.values * b.v.values)) * area
    elif state.kind is ModelKind.IIE:
        out["E_model"] = 0.5 * float(np.sum(rho.values * speed2)) * area
        out["momentum_x"] = float(np.sum(rho.values * u.u.values)) * area
        out["momentum_y"] = float(np.sum(rho.values * u.v.values)) * area
    return out


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------

DELTA_NORMS = ("rho_minus_1_W2p", "inv_rho_minus_1_W2p", "rho_minus_1_W3p")


def default_vorticity(grid):
    """Fixed smooth mean-zero profile used by the close-to-Euler runs."""
    return ScalarField.from_function(
        grid, lambda x, y: np.sin(x) * np.sin(y) + 0.7 * np.cos(2 * x + y))


def eigenstate_vorticity(grid):
    """Laplacian eigenfunction sin(x) sin(y): a steady Euler state."""
    return ScalarField.from_function(grid, lambda x, y: np.sin(x) * np.sin(y))


PROFILES = {
    "default": lambda x, y: np.sin(x) * np.cos(y),
    "helical": lambda x, y: np.sin(x) * np.cos(y) + 0.4 * np.sin(x) * np.sin(y),
}


def perturbation_profile(grid, name, k, p):
    """Unit-norm perturbation: theta / ||theta||_{k,p}."""
    try:
        fn = PROFILES[name]
    except KeyError:
        raise ParameterError(f"unknown seed profile '{name}'") from None
    theta = ScalarField.from_function(grid, fn)
    return (1.0 / sobolev_norm(theta, k, p)) * theta


def initial_state(kind, grid, delta=0.0, delta_norm="rho_minus_1_W2p", p=4,
                  seed_profile="default", omega0=None, elliptic_tol=1e-10):
    """Close-to-Euler initial data: fixed omega0, density within delta of 1.

    delta_norm picks the norm in which the perturbation has size exactly
    delta: ||rho0 - 1||_{2,p} (Boussinesq/IIE), ||rho0^{-1} - 1||_{2,p}
    (IIE parametrization), or ||rho0 - 1||_{3,p} (MHD).
    """
    if delta < 0:
        raise ParameterError("delta must be nonnegative")
    if delta_norm not in DELTA_NORMS:
        raise ParameterError(f"unknown delta_norm '{delta_norm}'")
    kind = ModelKind.parse(kind) if isinstance(kind, str) else kind
    omega = omega0 if omega0 is not None else default_vorticity(grid)

    if kind is ModelKind.EULER:
        return FluidState(kind=kind, t=0.0, omega=omega, elliptic_tol=elliptic_tol)

    k = 3 if delta_norm == "rho_minus_1_W3p" else 2
    theta = perturbation_profile(grid, seed_profile, k, p)
    if delta_norm == "inv_rho_minus_1_W2p":
        rho_vals = 1.0 / (1.0 + delta * theta.values)
    else:
        rho_vals = 1.0 + delta * theta.values
    if np.min(rho_vals) <= 0:
        raise VacuumError(f"delta = {delta} drives the density to zero")
    rho = ScalarField(grid, rho_vals)

    if kind is ModelKind.MHD_ELSASSER:
        current = laplacian(rho)
        xi, eta = elsasser_transform(omega, current)
        return FluidState(kind=kind, t=0.0, xi=xi, eta=eta,
                          mass_mean=rho.mean, elliptic_tol=elliptic_tol)
    return FluidState(kind=kind, t=0.0, omega=omega, rho=rho,
                      mass_mean=rho.mean, elliptic_tol=elliptic_tol)


def w4p_norm(f, p=4):
    """Full W^{4,p} norm (the MHD well-posedness class of the potential)."""
    total = 0.0
    for order in range(5):
        for a in range(order, -1, -1):
            alpha = (a, order - a)
            df = f if alpha == (0, 0) else spectral_derivative(f, alpha)
            total += lp_norm(df.values, p, f.grid.cell_area)
    return total


def to_elsasser(state):
    """Re-tag an (omega, rho) MHD state as its Elsasser twin."""
    if state.kind is not ModelKind.MHD_VORTICITY_CURRENT:
        raise ParameterError("expected an MHD vorticity-current state")
    xi, eta = elsasser_transform(state.omega, laplacian(state.rho))
    return FluidState(kind=ModelKind.MHD_ELSASSER, t=state.t, xi=xi, eta=eta,
                      mass_mean=state.rho.mean, elliptic_tol=state.elliptic_tol)


def from_elsasser(state):
    """Project an Elsasser state back onto the (omega, rho) carrier."""
    if state.kind is not ModelKind.MHD_ELSASSER:
        raise ParameterError("expected an Elsasser state")
    omega, current = elsasser_inverse(state.xi, state.eta)
    rho = invert_laplacian(current, mean_tol=np.inf) + state.mass_mean
    return FluidState(kind=ModelKind.MHD_VORTICITY_CURRENT, t=state.t,
                      omega=omega, rho=rho, mass_mean=state.mass_mean,
                      elliptic_tol=state.elliptic_tol)
