"""Horizontal operators: Fourier in the periodic x direction, SBP in y.

Fields are real arrays of shape ``(Nx, Ny)`` with axis 0 along x (periodic,
no duplicated endpoint) and axis 1 along y (walls included).  Fourier
coefficients come from ``numpy.fft.rfft`` along axis 0.

The y derivative is the classical second-order summation-by-parts operator:
central differences in the interior, one-sided first-order closures at the
walls, and the trapezoidal norm ``H = dy*diag(1/2, 1, ..., 1, 1/2)``, so that
``H D + (H D)^T = diag(-1, 0, ..., 0, 1)``.
"""

from __future__ import annotations

from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .config import ChannelConfig, Discretization
from .errors import CompatibilityError, ConfigError


class XSpectral:
    """Real-to-complex Fourier transform over the periodic x grid."""

    def __init__(self, Nx: int, L1: float):
        self.Nx = Nx
        self.L1 = L1
        m = np.arange(Nx // 2 + 1)
        #: physical wavenumbers of the rfft coefficients
        self.k = 2.0 * np.pi * m / L1
        # Nyquist coefficient has no resolvable derivative; zeroing it keeps
        # ddx real and exactly skew-symmetric.
        self.k_deriv = self.k.copy()
        self.k_deriv[-1] = 0.0

    @property
    def wavenumbers(self) -> np.ndarray:
        """All wavenumbers ``2*pi*m/L1`` for ``m = -Nx/2 .. Nx/2-1``."""
        m = np.arange(-self.Nx // 2, self.Nx // 2)
        return 2.0 * np.pi * m / self.L1

    def forward(self, field: np.ndarray) -> np.ndarray:
        return np.fft.rfft(field, axis=0)

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        return np.fft.irfft(coeffs, n=self.Nx, axis=0)

    def _shape(self, ndim: int) -> tuple[int, ...]:
        return (-1,) + (1,) * (ndim - 1)

    def ddx(self, field: np.ndarray) -> np.ndarray:
        """Spectral x derivative of a field of shape ``(Nx, ...)``."""
        hat = self.forward(field)
        hat *= 1j * self.k_deriv.reshape(self._shape(hat.ndim))
        return self.inverse(hat)

    def ddx_many(self, fields: np.ndarray) -> np.ndarray:
        """x derivative of a stack of fields with shape ``(m, Nx, Ny)``."""
        hat = np.fft.rfft(fields, axis=1)
        hat *= 1j * self.k_deriv[None, :, None]
        return np.fft.irfft(hat, n=self.Nx, axis=1)

    def phase(self, speed: float, t: float) -> np.ndarray:
        """Per-coefficient factor ``exp(-i k speed t)`` of exact advection."""
        return np.exp(-1j * self.k_deriv * speed * t)


class YOperator:
    """SBP first derivative and trapezoidal quadrature on the y grid."""

    def __init__(self, Ny: int, L2: float):
        self.Ny = Ny
        self.L2 = L2
        self.dy = L2 / (Ny - 1)
        w = np.full(Ny, self.dy)
        w[0] = w[-1] = 0.5 * self.dy
        #: diagonal of the quadrature (norm) matrix H
        self.weights = w

    @cached_property
    def D(self) -> np.ndarray:
        """Dense derivative matrix (for verification work)."""
        Ny, dy = self.Ny, self.dy
        D = np.zeros((Ny, Ny))
        j = np.arange(1, Ny - 1)
        D[j, j - 1] = -0.5 / dy
        D[j, j + 1] = 0.5 / dy
        D[0, :2] = [-1.0 / dy, 1.0 / dy]
        D[-1, -2:] = [-1.0 / dy, 1.0 / dy]
        return D

    @property
    def H(self) -> np.ndarray:
        return np.diag(self.weights)

    @property
    def boundary_selector(self) -> np.ndarray:
        B = np.zeros((self.Ny, self.Ny))
        B[0, 0], B[-1, -1] = -1.0, 1.0
        return B

    def apply(self, field: np.ndarray) -> np.ndarray:
        """Apply D along the last axis."""
        if field.ndim == 2 and field.dtype == np.float64:
            return kernels.sbp_diff_y(field, self.dy)
        if np.iscomplexobj(field):
            return self.apply(field.real) + 1j * self.apply(field.imag)
        return kernels._pykernels.sbp_diff_y(np.asarray(field, dtype=float), self.dy)

    @cached_property
    def _gram_eig(self) -> tuple[np.ndarray, np.ndarray]:
        # generalized eigenpairs of (D^T H D)_int v = mu H_int v
        D, w = self.D, self.weights
        K = (D.T * w) @ D
        Kint = K[1:-1, 1:-1]
        s = 1.0 / np.sqrt(w[1:-1])
        mu, Q = np.linalg.eigh(s[:, None] * Kint * s[None, :])
        return mu, Q


class ChannelGrid:
    """Grid plus the operators shared by every mode.

    Built once from a :class:`ChannelConfig` and :class:`Discretization` and
    treated as immutable afterwards.
    """

    def __init__(self, cfg: ChannelConfig, disc: Discretization):
        self.cfg = cfg
        self.disc = disc
        self.dx, self.dy = disc.spacing(cfg)
        self.x = np.arange(disc.Nx) * self.dx
        self.y = np.arange(disc.Ny) * self.dy
        self.xs = XSpectral(disc.Nx, cfg.L1)
        self.yop = YOperator(disc.Ny, cfg.L2)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.disc.Nx, self.disc.Ny)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    @property
    def cell_weights(self) -> np.ndarray:
        """Quadrature weights ``dx * H_j`` on the 2D grid."""
        return self.dx * self.yop.weights[None, :]


def ddx(field: np.ndarray, grid: ChannelGrid) -> np.ndarray:
    return grid.xs.ddx(field)


def ddy(field: np.ndarray, grid: ChannelGrid) -> np.ndarray:
    return grid.yop.apply(field)


def advect_x_exact(field: np.ndarray, speed: float, t: float, grid: ChannelGrid,
                   source: Callable[[float], np.ndarray] | Sequence[np.ndarray] | None = None,
                   ) -> np.ndarray:
    """Advance ``theta_t + speed*theta_x = source`` over a duration ``t``.

    The homogeneous part is exact per Fourier coefficient.  A source is
    integrated with Simpson's rule on ``(0, t/2, t)`` (the RK4 nodes); it may
    be a callable of the elapsed time or a sequence of the three samples.
    """
    xs = grid.xs
    hat = xs.forward(field)
    shape = (-1,) + (1,) * (hat.ndim - 1)
    full = xs.phase(speed, t).reshape(shape)
    out = hat * full
    if source is not None:
        if callable(source):
            g0, g1, g2 = source(0.0), source(0.5 * t), source(t)
        else:
            g0, g1, g2 = source
        half = xs.phase(speed, 0.5 * t).reshape(shape)
        out += (t / 6.0) * (full * xs.forward(g0) + 4.0 * half * xs.forward(g1) + xs.forward(g2))
    return xs.inverse(out)


def _tridiag_laplacian(k2: np.ndarray, n: int, dy: float):
    inv = 1.0 / dy**2
    lower = np.full((k2.size, n), inv, dtype=complex)
    upper = lower.copy()
    diag = (-2.0 * inv - k2)[:, None] * np.ones(n)
    return lower, diag.astype(complex), upper


def poisson_dirichlet(rhs: np.ndarray, grid: ChannelGrid, stencil: str = "compact") -> np.ndarray:
    """Solve ``Lap s = rhs`` with ``s = 0`` on both walls, per x wavenumber.

    ``stencil="compact"`` uses the three-point Laplacian in y and the exact
    ``-k**2`` in x.  ``stencil="sbp"`` uses the Laplacian that is consistent
    with the discrete curl and divergence built from ``ddx`` and the SBP
    ``D`` (interior rows of ``D @ D``), assembled as the symmetric positive
    form ``k**2 H + D^T H D``; it is the operator for which
    streamfunction-to-velocity-to-vorticity is an exact round trip.
    Wall rows of ``rhs`` are ignored.
    """
    xs, yop = grid.xs, grid.yop
    hat = xs.forward(rhs)
    out = np.zeros_like(hat)
    if stencil == "compact":
        n = yop.Ny - 2
        lower, diag, upper = _tridiag_laplacian(xs.k**2, n, yop.dy)
        out[:, 1:-1] = kernels.solve_tridiag(lower, diag, upper, hat[:, 1:-1])
    elif stencil == "sbp":
        mu, Q = yop._gram_eig
        root = np.sqrt(yop.weights[1:-1])
        proj = (hat[:, 1:-1] * root) @ Q
        proj /= xs.k_deriv[:, None] ** 2 + mu[None, :]
        out[:, 1:-1] = -(proj @ Q.T) / root
    else:
        raise ConfigError(f"unknown stencil {stencil!r}")
    return xs.inverse(out)


def poisson_neumann(rhs: np.ndarray, flux_lo, flux_hi, grid: ChannelGrid,
                    tol: float = 1e-8) -> np.ndarray:
    """Solve ``Lap phi = rhs`` with ``phi_y = flux`` at the walls.

    The y operator is the three-point stencil closed with the prescribed
    fluxes in SBP form, ``H^{-1}(-M phi + e_hi flux_hi - e_lo flux_lo)``, so
    the discrete solvability condition ``sum(H rhs) dx = sum(flux_hi -
    flux_lo) dx`` is exact.  The gauge is fixed by a zero mean.

    Raises
    ------
    CompatibilityError
        If the x-mean solvability condition fails by more than ``tol``
        (relative to the data scale).
    """
    xs, yop = grid.xs, grid.yop
    Nx, Ny = grid.shape
    dy, w = yop.dy, yop.weights
    flo = np.broadcast_to(np.asarray(flux_lo, dtype=float), (Nx,))
    fhi = np.broadcast_to(np.asarray(flux_hi, dtype=float), (Nx,))

    lhs_total = float(np.sum(rhs * w[None, :]) * grid.dx)
    flux_total = float(np.sum(fhi - flo) * grid.dx)
    scale = max(1.0, float(np.sum(np.abs(rhs) * w[None, :]) * grid.dx),
                float(np.sum(np.abs(fhi) + np.abs(flo)) * grid.dx))
    defect = abs(lhs_total - flux_total)
    if defect > tol * scale:
        raise CompatibilityError("Neumann data incompatible with the source", defect)

    # -(M + k^2 H) phi = H rhs - e_hi fhi + e_lo flo
    hat = xs.forward(rhs) * w[None, :]
    hat[:, -1] -= xs.forward(fhi)
    hat[:, 0] += xs.forward(flo)
    k2 = xs.k**2
    off = np.full((k2.size, Ny), 1.0 / dy, dtype=complex)
    diag = -(2.0 / dy + k2[:, None] * w[None, :]).astype(complex)
    diag[:, 0] += 1.0 / dy
    diag[:, -1] += 1.0 / dy
    # k = 0 is singular; pin phi_0 = 0 and drop that (redundant) equation
    diag[0, 0] = 1.0
    upper = off.copy()
    upper[0, 0] = 0.0
    hat[0, 0] = 0.0
    phi_hat = kernels.solve_tridiag(off, diag, upper, hat)
    mean = np.sum(phi_hat[0].real * w) / yop.L2
    phi_hat[0] -= mean
    phi_hat[0] = phi_hat[0].real
    return xs.inverse(phi_hat)


def inner_product(U: Sequence[np.ndarray], V: Sequence[np.ndarray], grid: ChannelGrid,
                  nbuoy: float | None = None) -> float:
    """Energy inner product ``sum (u u' + v v' + psi psi'/N^2) dx H``.

    Two-component states (the barotropic mode) have no temperature term.
    """
    if len(U) != len(V):
        raise ValueError("states have different numbers of components")
    wts = grid.cell_weights
    total = 0.0
    for i, (a, b) in enumerate(zip(U, V)):
        if a.shape != grid.shape or b.shape != grid.shape:
            raise ValueError(f"component {i} shape mismatch: {a.shape} vs {b.shape}")
        term = float(np.sum(a * b * wts))
        if i == 2:
            nb = grid.cfg.Nbuoy if nbuoy is None else nbuoy
            term /= nb**2
        total += term
    return total
