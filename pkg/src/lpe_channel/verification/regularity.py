"""Discrete sup-in-time norms of the derivatives in the regularity list.

z derivatives are modal: on mode ``n`` a z derivative multiplies by
``lambda_n`` (it maps the ``U_n`` family to the ``W_n`` family and back),
so ``|U_zz| = lambda_n^2 |U|`` and so on.  Time derivatives come from
second-order differences of the stored series.
"""

from __future__ import annotations

import numpy as np

from ..horizontal import ddx, ddy, inner_product
from .energy import Trajectory

NORMS = ("U_x", "U_xt", "U_xx", "U_yy", "U_zz", "U_tz", "U_xxz", "U_txz", "U_xzz")


def _norm(fields, grid) -> float:
    return float(np.sqrt(inner_product(tuple(fields), tuple(fields), grid)))


def regularity_probe(traj: Trajectory) -> dict[str, np.ndarray]:
    """Time series of each monitored norm summed over the baroclinic modes.

    Returns ``{name: array over output times}`` plus ``"t"``.  Squared
    norms add across modes, matching the orthogonality of the vertical basis.
    """
    grid = traj.grid
    t = np.array(traj.times)
    nt = len(t)
    acc = {k: np.zeros(nt) for k in NORMS}
    for n in range(1, traj.M + 1):
        lam = grid.cfg.lam(n)
        U = np.array([np.stack(s.modes[n - 1].components()) for s in traj.stacks])
        Ux = np.array([[ddx(a, grid) for a in u] for u in U])
        Uxx = np.array([[ddx(a, grid) for a in u] for u in Ux])
        Uyy = np.array([[ddy(ddy(a, grid), grid) for a in u] for u in U])
        if nt >= 3:
            Ut = np.gradient(U, t, axis=0, edge_order=2)
            Uxt = np.gradient(Ux, t, axis=0, edge_order=2)
        else:
            Ut = np.zeros_like(U)
            Uxt = np.zeros_like(U)
        for i in range(nt):
            nx, nxx = _norm(Ux[i], grid), _norm(Uxx[i], grid)
            nu, nt_ = _norm(U[i], grid), _norm(Ut[i], grid)
            nxt = _norm(Uxt[i], grid)
            vals = {"U_x": nx, "U_xt": nxt, "U_xx": nxx, "U_yy": _norm(Uyy[i], grid),
                    "U_zz": lam**2 * nu, "U_tz": lam * nt_, "U_xxz": lam * nxx,
                    "U_txz": lam * nxt, "U_xzz": lam**2 * nx}
            for k, v in vals.items():
                acc[k][i] += v**2
    out = {k: np.sqrt(v) for k, v in acc.items()}
    out["t"] = t
    return out


def growth_factors(norms: dict[str, np.ndarray]) -> dict[str, float]:
    """``max_t norm / norm(0)`` for each monitored quantity (0 when it starts at 0)."""
    out = {}
    for k in NORMS:
        series = norms[k]
        out[k] = float(series.max() / series[0]) if series[0] > 0 else (0.0 if series.max() == 0 else np.inf)
    return out
