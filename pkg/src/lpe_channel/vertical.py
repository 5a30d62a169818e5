"""Vertical normal modes and the physical <-> modal transforms.

Horizontal velocity and pressure expand in ``U_n(z)`` (``1/sqrt(L3)`` for
``n = 0``, ``sqrt(2/L3) cos(n pi z/L3)`` otherwise); vertical velocity and
temperature expand in ``W_n(z) = sqrt(2/L3) sin(n pi z/L3)``.  Projections
use the composite trapezoid rule on uniform nodes spanning ``[-L3, 0]``,
which integrates products of these functions exactly below the aliasing
limit ``n + m < 2 (Nz - 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .state import BarotropicState, ModalStack, ModeState, PhysicalState


@dataclass(frozen=True)
class VerticalBasis:
    L3: float
    M: int
    Nz: int

    def __post_init__(self):
        if self.Nz < 4 * self.M:
            raise ConfigError(f"need at least 4*M = {4 * self.M} quadrature nodes, got {self.Nz}")

    @property
    def lam(self) -> np.ndarray:
        """``lambda_n = n pi / L3`` for ``n = 1..M``."""
        return np.arange(1, self.M + 1) * np.pi / self.L3

    @property
    def z(self) -> np.ndarray:
        return np.linspace(-self.L3, 0.0, self.Nz)

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.Nz, self.L3 / (self.Nz - 1))
        w[0] = w[-1] = 0.5 * w[1]
        return w

    def _check(self, n: int, z, lowest: int) -> np.ndarray:
        if not lowest <= n <= self.M:
            raise DomainError(f"mode index {n} outside [{lowest}, {self.M}]")
        z = np.asarray(z, dtype=float)
        tol = 1e-12 * self.L3
        if np.any(z < -self.L3 - tol) or np.any(z > tol):
            raise DomainError(f"z outside [-{self.L3}, 0]")
        return z

    def U(self, n: int, z) -> np.ndarray:
        z = self._check(n, z, 0)
        if n == 0:
            return np.full_like(z, 1.0 / np.sqrt(self.L3))
        return np.sqrt(2.0 / self.L3) * np.cos(n * np.pi * z / self.L3)

    def W(self, n: int, z) -> np.ndarray:
        z = self._check(n, z, 1)
        out = np.sqrt(2.0 / self.L3) * np.sin(n * np.pi * z / self.L3)
        # sin(-n pi) is ~1e-16 in floating point; the top/bottom conditions are exact
        return np.where((z == 0.0) | (z == -self.L3), 0.0, out)

    def U_table(self) -> np.ndarray:
        """``U_n(z_q)`` for ``n = 0..M`` as an ``(M+1, Nz)`` array."""
        return np.stack([self.U(n, self.z) for n in range(self.M + 1)])

    def W_table(self) -> np.ndarray:
        """``W_n(z_q)`` for ``n = 1..M`` as an ``(M, Nz)`` array."""
        return np.stack([self.W(n, self.z) for n in range(1, self.M + 1)])

    def gram(self) -> tuple[np.ndarray, np.ndarray]:
        """Discrete Gram matrices of the two families under the quadrature."""
        w = self.weights
        Ut, Wt = self.U_table(), self.W_table()
        return (Ut * w) @ Ut.T, (Wt * w) @ Wt.T


def basis_U(n: int, z, basis: VerticalBasis):
    return basis.U(n, z)


def basis_W(n: int, z, basis: VerticalBasis):
    return basis.W(n, z)


def _project(field: np.ndarray, table: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.einsum("xyq,nq->nxy", field, table * w)


def analyze(phys: PhysicalState, basis: VerticalBasis) -> tuple[ModalStack, float]:
    """Project physical fields onto the retained modes.

    Returns the stack and the truncation residual: the root-mean-square (over
    the horizontal grid, quadrature-weighted in z) of what the retained modes
    fail to represent in ``(u, v, psi)``.
    """
    if phys.u.shape[-1] != basis.Nz:
        raise ConfigError(f"field has {phys.u.shape[-1]} z samples, basis expects {basis.Nz}")
    w = basis.weights
    Ut, Wt = basis.U_table(), basis.W_table()
    un = _project(phys.u, Ut, w)
    vn = _project(phys.v, Ut, w)
    pn = _project(phys.psi, Wt, w)
    bt = BarotropicState(un[0], vn[0])
    modes = [ModeState(n, un[n], vn[n], pn[n - 1]) for n in range(1, basis.M + 1)]

    ru = phys.u - np.einsum("nxy,nq->xyq", un, Ut)
    rv = phys.v - np.einsum("nxy,nq->xyq", vn, Ut)
    rp = phys.psi - np.einsum("nxy,nq->xyq", pn, Wt)
    resid = np.sqrt(np.mean(np.sum((ru**2 + rv**2 + rp**2) * w, axis=-1)))
    return ModalStack(bt, modes), float(resid)


def modal_bc_residual(phys: PhysicalState, basis: VerticalBasis, n: int, nbuoy: float) -> float:
    """Largest violation of the depth-integrated wall conditions for mode ``n``.

    At ``y = 0`` the residual is ``int v U_n dz - (1/N) int psi W_n dz`` and at
    ``y = L2`` it is ``int v U_n dz + (1/N) int psi W_n dz``.
    """
    w = basis.weights
    Un = basis.U(n, basis.z) * w
    Wn = basis.W(n, basis.z) * w
    lo = phys.v[:, 0, :] @ Un - (phys.psi[:, 0, :] @ Wn) / nbuoy
    hi = phys.v[:, -1, :] @ Un + (phys.psi[:, -1, :] @ Wn) / nbuoy
    return float(max(np.max(np.abs(lo)), np.max(np.abs(hi))))
