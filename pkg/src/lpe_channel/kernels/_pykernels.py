"""Pure numpy implementations of the hot kernels.

These mirror ``_ckernels.pyx`` one for one and are used when the compiled
extension is unavailable or ``LPE_KERNELS=python`` is set.
"""

from __future__ import annotations

import numpy as np


def sbp_diff_y(f: np.ndarray, dy: float, out: np.ndarray | None = None) -> np.ndarray:
    """Second-order SBP first derivative along the last axis."""
    if out is None:
        out = np.empty_like(f)
    out[..., 1:-1] = (f[..., 2:] - f[..., :-2]) * (0.5 / dy)
    out[..., 0] = (f[..., 1] - f[..., 0]) / dy
    out[..., -1] = (f[..., -1] - f[..., -2]) / dy
    return out


def mode_tendency(u, v, psi, ux, vx, psix, fu, fv, fpsi,
                  adv, f, inv_lam, n2_over_lam, dy, du, dv, dpsi):
    """Fused right-hand side of one baroclinic mode.

    ``fu``/``fv``/``fpsi`` may be None for the unforced case.  ``adv`` is the
    advection speed (zero when x-advection is handled by an integrating
    factor).
    """
    vy = sbp_diff_y(v, dy)
    psiy = sbp_diff_y(psi, dy)
    np.multiply(f, v, out=du)
    du += inv_lam * psix
    np.multiply(-f, u, out=dv)
    dv += inv_lam * psiy
    np.add(ux, vy, out=dpsi)
    dpsi *= n2_over_lam
    if adv != 0.0:
        du -= adv * ux
        dv -= adv * vx
        dpsi -= adv * psix
    if fu is not None:
        du += fu
        dv += fv
        dpsi += fpsi
    return du, dv, dpsi


def inject_characteristic(v: np.ndarray, psi: np.ndarray, nbuoy: float, swapped: bool) -> None:
    """Overwrite the wall rows of (v, psi) in place with the projected values."""
    inv_n = 1.0 / nbuoy
    v0, p0 = v[:, 0].copy(), psi[:, 0].copy()
    v1, p1 = v[:, -1].copy(), psi[:, -1].copy()
    if not swapped:
        zeta = v0 + p0 * inv_n
        v[:, 0] = 0.5 * zeta
        psi[:, 0] = 0.5 * nbuoy * zeta
        chi = v1 - p1 * inv_n
        v[:, -1] = 0.5 * chi
        psi[:, -1] = -0.5 * nbuoy * chi
    else:
        chi = v0 - p0 * inv_n
        v[:, 0] = 0.5 * chi
        psi[:, 0] = -0.5 * nbuoy * chi
        zeta = v1 + p1 * inv_n
        v[:, -1] = 0.5 * zeta
        psi[:, -1] = 0.5 * nbuoy * zeta


def solve_tridiag(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray,
                  rhs: np.ndarray) -> np.ndarray:
    """Batched Thomas algorithm over the last axis (complex128).

    ``lower[..., 0]`` and ``upper[..., -1]`` are ignored.
    """
    n = diag.shape[-1]
    cp = np.empty(np.broadcast(diag, rhs).shape, dtype=np.complex128)
    dp = np.empty_like(cp)
    cp[..., 0] = upper[..., 0] / diag[..., 0]
    dp[..., 0] = rhs[..., 0] / diag[..., 0]
    for i in range(1, n):
        denom = diag[..., i] - lower[..., i] * cp[..., i - 1]
        if i < n - 1:
            cp[..., i] = upper[..., i] / denom
        dp[..., i] = (rhs[..., i] - lower[..., i] * dp[..., i - 1]) / denom
    x = np.empty_like(dp)
    x[..., -1] = dp[..., -1]
    for i in range(n - 2, -1, -1):
        x[..., i] = dp[..., i] - cp[..., i] * x[..., i + 1]
    return x
