"""Fourier-spectral scalar/vector fields on the periodic square [0, 2pi)^2.

Fields carry physical samples on a uniform nx x ny grid together with an
on-demand rfft2 mirror.  All operators (derivatives, inverse Laplacian,
Biot-Savart, Poisson bracket) act in spectral space and are exact for
band-limited data.  Quadratic products are formed pointwise in physical
space; callers dealias them with :func:`dealias` (2/3 rule by default).

Fields are immutable after construction: every operation returns a new
field, so they are safe to share across threads.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import (
    GridMismatchError,
    InvalidFieldError,
    ParameterError,
    SolvabilityError,
)

TWO_PI = 2.0 * np.pi

# Fault-injection hook used by the verification suite: when set to "fft",
# forward transforms are corrupted slightly so conservation checks must fail.
_FAULT_ENV = "FLUIDSPAN_FAULT"


def _rfft2(values):
    hat = np.fft.rfft2(values)
    if os.environ.get(_FAULT_ENV, "") == "fft":
        hat = hat.copy()
        hat[1, 1] *= 1.001
    return hat


class Grid:
    """Uniform periodic grid on the 2pi x 2pi torus.

    Parameters
    ----------
    nx, ny : int
        Grid points per axis; must be even and >= 8.
    dealias_fraction : float
        Fraction of the Nyquist range kept by :func:`dealias` (default 2/3).
    """

    def __init__(self, nx, ny=None, dealias_fraction=2.0 / 3.0):
        if ny is None:
            ny = nx
        if nx < 8 or ny < 8 or nx % 2 or ny % 2:
            raise ParameterError(f"grid must be even and >= 8, got {nx} x {ny}")
        if not 0.0 < dealias_fraction <= 1.0:
            raise ParameterError(f"dealias_fraction must lie in (0, 1], got {dealias_fraction}")
        self.nx = int(nx)
        self.ny = int(ny)
        self.lx = TWO_PI
        self.ly = TWO_PI
        self.dealias_fraction = float(dealias_fraction)
        self.dx = self.lx / self.nx
        self.dy = self.ly / self.ny
        self.cell_area = self.dx * self.dy

        self.x = self.dx * np.arange(self.nx)
        self.y = self.dy * np.arange(self.ny)
        self.X, self.Y = np.meshgrid(self.x, self.y, indexing="ij")

        kx = np.fft.fftfreq(self.nx, d=1.0 / self.nx)
        ky = np.fft.rfftfreq(self.ny, d=1.0 / self.ny)
        self.KX, self.KY = np.meshgrid(kx, ky, indexing="ij")
        self.K2 = self.KX**2 + self.KY**2
        self._k2_safe = self.K2.copy()
        self._k2_safe[0, 0] = 1.0

        # Odd-order derivative multipliers zero the Nyquist mode, which has
        # no well-defined sign on an even grid.
        kx_d = kx.copy()
        kx_d[self.nx // 2] = 0.0
        ky_d = ky.copy()
        ky_d[-1] = 0.0
        self.KXd, self.KYd = np.meshgrid(kx_d, ky_d, indexing="ij")

        cut_x = self.dealias_fraction * (self.nx / 2)
        cut_y = self.dealias_fraction * (self.ny / 2)
        self.dealias_keep = (np.abs(self.KX) <= cut_x) & (np.abs(self.KY) <= cut_y)

    def __eq__(self, other):
        return (
            isinstance(other, Grid)
            and self.nx == other.nx
            and self.ny == other.ny
            and self.dealias_fraction == other.dealias_fraction
        )

    def __hash__(self):
        return hash((self.nx, self.ny, self.dealias_fraction))

    def __repr__(self):
        return f"Grid({self.nx}x{self.ny}, dealias={self.dealias_fraction:.4f})"


class ScalarField:
    """Periodic scalar with dual physical/spectral representation."""

    __slots__ = ("grid", "values", "_hat")

    def __init__(self, grid, values, _hat=None):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (grid.nx, grid.ny):
            raise GridMismatchError(
                f"values of shape {values.shape} on grid {grid.nx}x{grid.ny}"
            )
        self.grid = grid
        # Freeze a view so the field is immutable without touching the
        # caller's array.
        self.values = values.view()
        self.values.setflags(write=False)
        self._hat = _hat

    @classmethod
    def from_function(cls, grid, fn):
        return cls(grid, fn(grid.X, grid.Y))

    @classmethod
    def from_hat(cls, grid, hat):
        values = np.fft.irfft2(hat, s=(grid.nx, grid.ny))
        return cls(grid, values, _hat=hat)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((grid.nx, grid.ny)))

    @property
    def hat(self):
        if self._hat is None:
            self._hat = _rfft2(self.values)
        return self._hat

    @property
    def mean(self):
        return float(self.hat[0, 0].real) / (self.grid.nx * self.grid.ny)

    def max_abs(self):
        return float(np.max(np.abs(self.values)))

    def is_finite(self):
        return bool(np.all(np.isfinite(self.values)))

    # Pointwise arithmetic; products of near-Nyquist content alias and
    # should be followed by dealias().
    def __add__(self, other):
        return ScalarField(self.grid, self.values + _coerce(self, other))

    def __radd__(self, other):
        return self.__add__(other)

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - _coerce(self, other))

    def __rsub__(self, other):
        return ScalarField(self.grid, _coerce(self, other) - self.values)

    def __mul__(self, other):
        return ScalarField(self.grid, self.values * _coerce(self, other))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def __repr__(self):
        return f"ScalarField({self.grid!r}, max|f|={self.max_abs():.3e})"


class VectorField:
    """Pair of scalar components on a shared grid."""

    __slots__ = ("grid", "u", "v")

    def __init__(self, u, v):
        if u.grid != v.grid:
            raise GridMismatchError("vector components live on different grids")
        self.grid = u.grid
        self.u = u
        self.v = v

    @classmethod
    def zeros(cls, grid):
        return cls(ScalarField.zeros(grid), ScalarField.zeros(grid))

    def max_abs(self):
        return float(np.sqrt(np.max(self.u.values**2 + self.v.values**2)))

    def __add__(self, other):
        return VectorField(self.u + other.u, self.v + other.v)

    def __sub__(self, other):
        return VectorField(self.u - other.u, self.v - other.v)

    def __mul__(self, scalar):
        return VectorField(self.u * scalar, self.v * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return VectorField(-self.u, -self.v)


def _coerce(field, other):
    if isinstance(other, ScalarField):
        if other.grid != field.grid:
            raise GridMismatchError("fields live on different grids")
        return other.values
    return other


def same_grid(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatchError("fields live on different grids")
    return g


# ---------------------------------------------------------------------------
# spectral operators
# ---------------------------------------------------------------------------

def spectral_derivative(f, alpha):
    """Return the partial derivative d^alpha f for a multi-index alpha.

    alpha = (a, b) with a + b <= 4 differentiates a times in x and b times
    in y by multiplying spectral coefficients with (i kx)^a (i ky)^b.
    """
    a, b = int(alpha[0]), int(alpha[1])
    if a < 0 or b < 0 or a + b > 4:
        raise ParameterError(f"multi-index {alpha} outside |alpha| <= 4")
    if not f.is_finite():
        raise InvalidFieldError("cannot differentiate a non-finite field")
    if a == 0 and b == 0:
        return f
    g = f.grid
    kx = g.KXd if a % 2 else g.KX
    ky = g.KYd if b % 2 else g.KY
    mult = (1j * kx) ** a * (1j * ky) ** b
    return ScalarField.from_hat(g, mult * f.hat)


def gradient(f):
    return VectorField(spectral_derivative(f, (1, 0)), spectral_derivative(f, (0, 1)))


def perp_gradient(f):
    """Return grad^perp f = (-df/dy, df/dx)."""
    return VectorField(-spectral_derivative(f, (0, 1)), spectral_derivative(f, (1, 0)))


def divergence(w):
    return spectral_derivative(w.u, (1, 0)) + spectral_derivative(w.v, (0, 1))


def curl(w):
    """Scalar curl of a 2D vector field: dv/dx - du/dy."""
    return spectral_derivative(w.v, (1, 0)) - spectral_derivative(w.u, (0, 1))


def laplacian(f):
    return ScalarField.from_hat(f.grid, -f.grid.K2 * f.hat)


def invert_laplacian(f, mean_tol=1e-10):
    """Solve Laplace(g) = f for the unique mean-zero g.

    The torus Laplacian is only invertible on mean-zero data; a right-hand
    side whose mean exceeds mean_tol * max|f| raises SolvabilityError.
    """
    scale = f.max_abs()
    m = f.mean
    if abs(m) > mean_tol * max(scale, 1e-300):
        raise SolvabilityError(
            f"inverse Laplacian needs a mean-zero field; offending mean = {m:.3e}"
        )
    g = f.grid
    hat = -f.hat / g._k2_safe
    hat[0, 0] = 0.0
    return ScalarField.from_hat(g, hat)


def biot_savart(omega, mean_tol=1e-10):
    """Velocity u = grad^perp Laplace^{-1} omega; div-free with curl u = omega."""
    psi = invert_laplacian(omega, mean_tol=mean_tol)
    return perp_gradient(psi)


def dealias(f):
    """Zero every mode beyond the grid's dealias cutoff (idempotent)."""
    hat = f.hat * f.grid.dealias_keep
    return ScalarField.from_hat(f.grid, hat)


def dealias_vector(w):
    return VectorField(dealias(w.u), dealias(w.v))


def poisson_bracket(f, g):
    """Poisson bracket {f, g} = grad^perp f . grad g, dealiased.

    Antisymmetric to round-off; {f, c} = 0 for constant c.
    """
    same_grid(f, g)
    fx = spectral_derivative(f, (1, 0)).values
    fy = spectral_derivative(f, (0, 1)).values
    gx = spectral_derivative(g, (1, 0)).values
    gy = spectral_derivative(g, (0, 1)).values
    raw = ScalarField(f.grid, fx * gy - fy * gx)
    return dealias(raw)


def advection(w, f):
    """Transport term u . grad f, dealiased."""
    same_grid(w.u, f)
    fx = spectral_derivative(f, (1, 0)).values
    fy = spectral_derivative(f, (0, 1)).values
    return dealias(ScalarField(f.grid, w.u.values * fx + w.v.values * fy))


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def lp_norm(values, p, cell_area):
    """L^p norm by uniform-grid quadrature; p = inf is the grid supremum."""
    if np.isinf(p):
        return float(np.max(np.abs(values)))
    return float((np.sum(np.abs(values) ** p) * cell_area) ** (1.0 / p))


def _multi_indices(k):
    out = []
    for order in range(k + 1):
        for a in range(order, -1, -1):
            out.append((a, order - a))
    return out


def sobolev_norm(f, k, p):
    """W^{k,p} norm: sum over |alpha| <= k of ||d^alpha f||_p.

    Requires p > 2 (or p = inf), matching the standing assumption of every
    estimate this norm feeds.
    """
    if not (p > 2):
        raise ParameterError(f"Sobolev norms are only defined here for p > 2, got p = {p}")
    if k < 0 or k > 3:
        raise ParameterError(f"k must lie in 0..3, got {k}")
    area = f.grid.cell_area
    total = 0.0
    for alpha in _multi_indices(k):
        df = f if alpha == (0, 0) else spectral_derivative(f, alpha)
        total += lp_norm(df.values, p, area)
    return total


def vector_sobolev_norm(w, k, p):
    """W^{k,p} norm of a vector field with pointwise Euclidean magnitude."""
    if not (p > 2):
        raise ParameterError(f"Sobolev norms are only defined here for p > 2, got p = {p}")
    area = w.grid.cell_area
    total = 0.0
    for alpha in _multi_indices(k):
        if alpha == (0, 0):
            du, dv = w.u.values, w.v.values
        else:
            du = spectral_derivative(w.u, alpha).values
            dv = spectral_derivative(w.v, alpha).values
        total += lp_norm(np.sqrt(du**2 + dv**2), p, area)
    return total


def operator_norm_2x2(a11, a12, a21, a22):
    """Pointwise spectral (largest singular value) norm of a 2x2 matrix field."""
    s = a11**2 + a12**2 + a21**2 + a22**2
    d = a11 * a22 - a12 * a21
    disc = np.maximum(s**2 - 4.0 * d**2, 0.0)
    return np.sqrt(0.5 * (s + np.sqrt(disc)))


def velocity_gradient(w):
    """Components of grad u as arrays: (du1/dx, du1/dy, du2/dx, du2/dy)."""
    return (
        spectral_derivative(w.u, (1, 0)).values,
        spectral_derivative(w.u, (0, 1)).values,
        spectral_derivative(w.v, (1, 0)).values,
        spectral_derivative(w.v, (0, 1)).values,
    )


def grad_u_inf_norm(w):
    """Grid supremum of the pointwise operator norm of grad u."""
    a, b, c, d = velocity_gradient(w)
    return float(np.max(operator_norm_2x2(a, b, c, d)))


def grad_u_w1p_norm(w, p):
    """W^{1,p} norm of grad u: ||grad u||_p plus both derivative layers.

    Pointwise matrix magnitude is the 2x2 operator norm, matching the
    convention used for the flow-map Jacobian.
    """
    if not (p > 2):
        raise ParameterError(f"p > 2 required, got {p}")
    area = w.grid.cell_area
    a, b, c, d = velocity_gradient(w)
    total = lp_norm(operator_norm_2x2(a, b, c, d), p, area)
    for alpha in ((1, 0), (0, 1)):
        comps = [
            spectral_derivative(spectral_derivative(w.u, (1, 0)), alpha).values,
            spectral_derivative(spectral_derivative(w.u, (0, 1)), alpha).values,
            spectral_derivative(spectral_derivative(w.v, (1, 0)), alpha).values,
            spectral_derivative(spectral_derivative(w.v, (0, 1)), alpha).values,
        ]
        total += lp_norm(operator_norm_2x2(*comps), p, area)
    return total


def kato_ratio(w, omega, p):
    """Ratio ||grad u||_inf / [(1 + log(2 + ||omega||_{1,p})) ||omega||_inf].

    Finite for every smooth field; the verification suite records its
    supremum over all exercised fields.
    """
    num = grad_u_inf_norm(w)
    om_inf = omega.max_abs()
    om_w1p = sobolev_norm(omega, 1, p)
    denom = (1.0 + np.log(2.0 + om_w1p)) * om_inf
    if denom == 0.0:
        return 0.0 if num == 0.0 else np.inf
    return num / denom


def tail_enstrophy_fraction(omega, band=0.125):
    """Fraction of enstrophy carried by the top ``band`` of wavenumbers.

    Uses the max(|kx|, |ky|) annulus against the Nyquist range; a fraction
    above ~1e-6 flags resolution loss.
    """
    g = omega.grid
    hat = omega.hat
    # rfft2 stores half the ky plane; weight interior ky modes twice.
    w = np.full(hat.shape, 2.0)
    w[:, 0] = 1.0
    if g.ny % 2 == 0:
        w[:, -1] = 1.0
    power = w * np.abs(hat) ** 2
    kmax = min(g.nx, g.ny) / 2
    ring = np.maximum(np.abs(g.KX), np.abs(g.KY)) > (1.0 - band) * kmax
    total = float(np.sum(power))
    if total == 0.0:
        return 0.0
    return float(np.sum(power[ring])) / total
