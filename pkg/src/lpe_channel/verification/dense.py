"""Dense per-(mode, wavenumber) operators and the checks built on them.

A single x harmonic ``U(y) exp(i k x)`` of mode ``n`` reduces the semi-
discrete system to ``U' = -P A U`` with a ``3 Ny x 3 Ny`` complex matrix
``A``, the wall projector ``P`` and energy weight ``W = diag(H, H, H/N^2)``.
These small matrices make exact statements checkable: the energy identity,
the adjoint structure, positivity on the wall-condition subspaces and a
matrix-exponential reference solution for the time stepper.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ..config import ChannelConfig, Discretization
from ..errors import ConfigError
from ..horizontal import ChannelGrid, YOperator
from ..mode_n import STANDARD, SWAPPED, ModeOperatorContext, tendency_n
from ..state import ModeState

MAX_DENSE = 3000


@dataclass
class DenseOperator:
    n: int
    m: int                      # signed wavenumber index, k = 2 pi m / L1
    k: float
    lam: float
    matrix: np.ndarray
    weight: np.ndarray          # diagonal of W
    projectors: dict[str, np.ndarray]
    D: np.ndarray
    cfg: ChannelConfig
    consistency: float = float("nan")
    meta: dict = field(default_factory=dict)

    @property
    def Ny(self) -> int:
        return self.D.shape[0]

    def bc_projector(self, variant: str = STANDARD) -> np.ndarray:
        return self.projectors[variant]

    def inner(self, U: np.ndarray, V: np.ndarray) -> complex:
        """Weighted inner product ``V^H W U``."""
        return np.vdot(V, self.weight * U)

    def weighted_adjoint(self) -> np.ndarray:
        """``W^{-1} A^H W``, the adjoint of ``A`` in the energy inner product."""
        w = self.weight
        return (self.matrix.conj().T * w[None, :]) / w[:, None]

    def basis(self, variant: str = STANDARD) -> np.ndarray:
        """Columns spanning the range of the wall projector, orthonormal in ``W``."""
        s = np.sqrt(self.weight)
        Pt = (s[:, None] * self.projectors[variant]) / s[None, :]
        vals, vecs = np.linalg.eigh(0.5 * (Pt + Pt.conj().T))
        return vecs[:, vals > 0.5] / s[:, None]

    def boundary_pairing(self, U: np.ndarray, V: np.ndarray) -> complex:
        """Analytic value of ``<A U, V> + <U, A V>``: boundary terms of the y coupling.

        Integration by parts leaves ``-(1/lam) [v conj(psi') + psi conj(v')]``
        evaluated between the walls (the ``W`` weight cancels ``N^2``).
        """
        Ny = self.Ny
        v, p = U[Ny:2 * Ny], U[2 * Ny:]
        vs, ps = V[Ny:2 * Ny], V[2 * Ny:]
        form = v * np.conj(ps) + p * np.conj(vs)
        return -(form[-1] - form[0]) / self.lam


def wall_projector(Ny: int, nbuoy: float, variant: str) -> np.ndarray:
    """Matrix form of characteristic injection on the ``(u, v, psi)`` stack."""
    N = nbuoy
    P = np.eye(3 * Ny)
    v, p = Ny, 2 * Ny
    keep_lo = +1.0 if variant == STANDARD else -1.0  # standard keeps zeta at y=0
    for j, sign in ((0, keep_lo), (Ny - 1, -keep_lo)):
        # keep the characteristic v + sign*psi/N, zero the other
        P[v + j, v + j] = 0.5
        P[v + j, p + j] = 0.5 * sign / N
        P[p + j, v + j] = 0.5 * sign * N
        P[p + j, p + j] = 0.5
    return P


def assemble_dense(n: int, m: int, cfg: ChannelConfig, disc: Discretization,
                   couplings: bool = True, check: bool = True) -> DenseOperator:
    """Dense operator of mode ``n`` at wavenumber index ``m``.

    ``couplings=False`` drops every term proportional to ``1/lambda`` and the
    Coriolis terms, leaving pure advection (the large-``n`` limit).
    """
    Ny = disc.Ny
    if 3 * Ny > MAX_DENSE:
        raise ConfigError(f"3*Ny = {3 * Ny} exceeds the dense limit {MAX_DENSE}")
    if abs(m) > disc.Nx // 2:
        raise ConfigError(f"|m| must not exceed Nx/2 = {disc.Nx // 2}")
    yop = YOperator(Ny, cfg.L2)
    D = yop.D
    lam = cfg.lam(n)
    k = 2.0 * np.pi * m / cfg.L1
    # the Nyquist harmonic has no resolved x derivative (as in ddx)
    kd = 0.0 if abs(m) == disc.Nx // 2 else k
    N, f, U0 = cfg.Nbuoy, cfg.f, cfg.U0bar
    I = np.eye(Ny)
    c = 1.0 if couplings else 0.0
    ik = 1j * kd
    A = np.block([
        [ik * U0 * I, -c * f * I, -c * (ik / lam) * I],
        [c * f * I, ik * U0 * I, -c * D / lam],
        [-c * (N**2 / lam) * ik * I, -c * (N**2 / lam) * D, ik * U0 * I],
    ]).astype(complex)
    w = np.concatenate([yop.weights, yop.weights, yop.weights / N**2])
    proj = {v: wall_projector(Ny, N, v) for v in (STANDARD, SWAPPED)}
    op = DenseOperator(n, m, k, lam, A, w, proj, D, cfg)
    if check and couplings and kd == k:
        op.consistency = tendency_consistency(op, disc)
    return op


def harmonic_state(op: DenseOperator, U: np.ndarray, grid: ChannelGrid) -> ModeState:
    """Real field ``Re(U(y) exp(i k x))`` of the dense coefficient vector ``U``."""
    Ny = op.Ny
    phase = np.exp(1j * op.k * grid.x)[:, None]
    comps = [np.real(U[i * Ny:(i + 1) * Ny][None, :] * phase) for i in range(3)]
    return ModeState(op.n, *comps)


def harmonic_coeffs(op: DenseOperator, state: ModeState, grid: ChannelGrid) -> np.ndarray:
    """Inverse of :func:`harmonic_state` (picks the ``m`` Fourier coefficient)."""
    Nx = grid.disc.Nx
    out = []
    for a in state.components():
        hat = np.fft.fft(a, axis=0) / Nx
        if op.m == 0:
            out.append(hat[0].real.astype(complex))
        else:
            out.append(2.0 * hat[op.m % Nx])
    return np.concatenate(out)


def tendency_consistency(op: DenseOperator, disc: Discretization, seed: int = 7) -> float:
    """Relative mismatch between ``-A U`` and the grid tendency on one harmonic."""
    grid = ChannelGrid(op.cfg, disc)
    rng = np.random.default_rng(seed)
    U = rng.standard_normal(3 * op.Ny) + (1j * rng.standard_normal(3 * op.Ny) if op.m else 0)
    state = harmonic_state(op, U, grid)
    tend = tendency_n(state, None, 0.0, ModeOperatorContext.build(op.n, grid))
    got = harmonic_coeffs(op, tend, grid)
    want = -op.matrix @ U
    return float(np.linalg.norm(got - want) / np.linalg.norm(want))


# -- adjoint structure -------------------------------------------------------

@dataclass
class AdjointReport:
    n: int
    m: int
    coriolis_skew: float
    advection_skew: float
    pairing_defect: float          # |<AU,V> + <U,AV> - boundary formula|, relative
    subspace_pairing: float        # |<AU,V> - <U,A*V>| for U standard, V adjoint
    strong_boundary_gap: float     # max |W^-1 A^H W + A| (boundary rows only)
    strong_interior_gap: float


def _block_parts(op: DenseOperator):
    Ny = op.Ny
    A = op.matrix
    adv = np.zeros_like(A)
    cor = np.zeros_like(A)
    for i in range(3):
        adv[i * Ny:(i + 1) * Ny, i * Ny:(i + 1) * Ny] = A[i * Ny:(i + 1) * Ny, i * Ny:(i + 1) * Ny]
    f = op.cfg.f
    I = np.eye(Ny)
    cor[:Ny, Ny:2 * Ny] = -f * I
    cor[Ny:2 * Ny, :Ny] = f * I
    return adv, cor


def _skew_defect(op: DenseOperator, B: np.ndarray, rng) -> float:
    worst = 0.0
    for _ in range(5):
        U = rng.standard_normal(3 * op.Ny) + 1j * rng.standard_normal(3 * op.Ny)
        V = rng.standard_normal(3 * op.Ny) + 1j * rng.standard_normal(3 * op.Ny)
        lhs = op.inner(B @ U, V) + op.inner(U, B @ V)
        scale = abs(op.inner(U, U)) ** 0.5 * abs(op.inner(V, V)) ** 0.5 * max(np.abs(B).max(), 1e-300)
        worst = max(worst, abs(lhs) / scale)
    return float(worst)


def adjoint_check(op: DenseOperator, seed: int = 0, trials: int = 20) -> AdjointReport:
    """Algebraic adjoint identities of one dense operator.

    The formal adjoint operator is the negative of the forward one (all of
    its parts are first-order or skew), so ``-A`` is its discretization and
    ``<A U, V> - <U, (-A) V>`` must equal the boundary pairing.
    """
    rng = np.random.default_rng(seed)
    adv, cor = _block_parts(op)
    A = op.matrix
    pair_def = 0.0
    sub_pair = 0.0
    Qs, Qa = op.basis(STANDARD), op.basis(SWAPPED)
    for _ in range(trials):
        U = rng.standard_normal(3 * op.Ny) + 1j * rng.standard_normal(3 * op.Ny)
        V = rng.standard_normal(3 * op.Ny) + 1j * rng.standard_normal(3 * op.Ny)
        lhs = op.inner(A @ U, V) + op.inner(U, A @ V)
        rhs = op.boundary_pairing(U, V)
        scale = np.linalg.norm(A, 2) * abs(op.inner(U, U)) ** 0.5 * abs(op.inner(V, V)) ** 0.5
        pair_def = max(pair_def, abs(lhs - rhs) / scale)
        Us = Qs @ (rng.standard_normal(Qs.shape[1]) + 1j * rng.standard_normal(Qs.shape[1]))
        Va = Qa @ (rng.standard_normal(Qa.shape[1]) + 1j * rng.standard_normal(Qa.shape[1]))
        val = op.inner(A @ Us, Va) - op.inner(Us, -A @ Va)
        scale = np.linalg.norm(A, 2) * abs(op.inner(Us, Us)) ** 0.5 * abs(op.inner(Va, Va)) ** 0.5
        sub_pair = max(sub_pair, abs(val) / scale)
    gap = op.weighted_adjoint() + A
    Ny = op.Ny
    rows = np.zeros(3 * Ny, bool)
    rows[[0, Ny - 1, Ny, 2 * Ny - 1, 2 * Ny, 3 * Ny - 1]] = True
    return AdjointReport(op.n, op.m, _skew_defect(op, cor, rng), _skew_defect(op, adv, rng),
                         float(pair_def), float(sub_pair),
                         float(np.abs(gap[rows]).max()), float(np.abs(gap[~rows]).max()))


# -- positivity ----------------------------------------------------------------

@dataclass
class PositivityReport:
    n: int
    m: int
    variant: str
    adjoint: bool
    min_eig: float
    scale: float
    violation: float               # max(0, -min_eig)/scale

    @property
    def ok(self) -> bool:
        return self.violation <= 1e-12


def symmetric_part_on_subspace(op: DenseOperator, variant: str, adjoint: bool = False) -> np.ndarray:
    """``Q^H (W A + A^H W)/2 Q`` on a ``W``-orthonormal basis ``Q`` of the subspace.

    For the adjoint the operator is the discretized formal adjoint ``-A``
    and the subspace is the adjoint one (the swapped injection).
    """
    A = -op.matrix if adjoint else op.matrix
    Q = op.basis(variant)
    WA = op.weight[:, None] * A
    S = 0.5 * (WA + WA.conj().T)
    return Q.conj().T @ S @ Q


def positivity_check(op: DenseOperator, variant: str = STANDARD, adjoint: bool = False) -> PositivityReport:
    S = symmetric_part_on_subspace(op, variant, adjoint)
    eig = np.linalg.eigvalsh(0.5 * (S + S.conj().T))
    scale = float(np.abs(eig).max()) or 1.0
    return PositivityReport(op.n, op.m, variant, adjoint, float(eig.min()), scale,
                            max(0.0, -float(eig.min())) / scale)


# -- reference evolution ---------------------------------------------------------

def oracle_evolve(op: DenseOperator, U0: np.ndarray, T: float, variant: str = STANDARD) -> np.ndarray:
    """``expm(-T P A P) U0`` by scaling and squaring (scipy).

    ``U0`` is first projected onto the wall-condition subspace; the
    projected operator maps that subspace into itself, so the result is the
    exact solution of ``U' = -P A U`` there.
    """
    P = op.bc_projector(variant)
    if T == 0:
        return P @ U0
    return sla.expm(-T * (P @ op.matrix @ P)) @ (P @ U0)


def growth_spectrum(op: DenseOperator, variant: str = STANDARD) -> np.ndarray:
    """Eigenvalues of ``-A`` restricted to the wall-condition subspace.

    With ``Q`` a ``W``-orthonormal basis of that subspace the restriction is
    ``Q^H W (-A) Q``; real parts are the modal growth rates.
    """
    Q = op.basis(variant)
    G = Q.conj().T @ (op.weight[:, None] * (-op.matrix @ Q))
    return np.linalg.eigvals(G)


def energy_norm(op: DenseOperator, U: np.ndarray) -> float:
    return float(np.sqrt(abs(op.inner(U, U))))


# -- grid sweeps -------------------------------------------------------------------

def observed_orders(h, err, floor: float = 0.0) -> list[float]:
    """Orders ``log(e_i/e_{i+1}) / log(h_i/h_{i+1})``; ``inf`` once both errors sit at ``floor``."""
    out = []
    for (h0, e0), (h1, e1) in zip(zip(h, err), zip(h[1:], err[1:])):
        if e0 <= floor and e1 <= floor:
            out.append(float("inf"))
        elif e1 <= 0:
            out.append(float("inf"))
        else:
            out.append(float(np.log(e0 / e1) / np.log(h0 / h1)))
    return out


def _profiles(cfg: ChannelConfig, variant: str):
    """Smooth ``(u, v, psi)`` in y satisfying the given wall conditions, with y derivatives."""
    from ..verification.mms import blend_pair  # local import avoids a cycle
    from ..expr import Var, diff, parse_field_expression as P

    a = P("cos(2*y + 0.3) + 0.5")
    c = P("1 + sin(3*y) - y^2")
    u = P("exp(-y) * cos(y)")
    v, psi = blend_pair(a, c, cfg, variant)
    exprs = (u, v, psi)
    return exprs, tuple(diff(e, "y") for e in exprs)


def _continuous_pairing(op: DenseOperator, U, dU, V, quad_pts: int = 48) -> complex:
    cfg = op.cfg
    xg, wg = np.polynomial.legendre.leggauss(quad_pts)
    y = 0.5 * cfg.L2 * (xg + 1.0)
    wq = 0.5 * cfg.L2 * wg
    ev = [np.asarray(e(0.0, y, 0.0)) * np.ones_like(y) for e in U]
    dev = [np.asarray(e(0.0, y, 0.0)) * np.ones_like(y) for e in dU]
    vv = [np.asarray(e(0.0, y, 0.0)) * np.ones_like(y) for e in V]
    ik, lam, f, N, U0 = 1j * op.k, op.lam, cfg.f, cfg.Nbuoy, cfg.U0bar
    au = ik * U0 * ev[0] - f * ev[1] - ik / lam * ev[2]
    av = f * ev[0] + ik * U0 * ev[1] - dev[2] / lam
    ap = -(N**2 / lam) * (ik * ev[0] + dev[1]) + ik * U0 * ev[2]
    return complex(np.sum(wq * (au * vv[0] + av * vv[1] + ap * vv[2] / N**2)))


def pairing_sweep(n: int, m: int, cfg: ChannelConfig, Ny_list, Nx: int = 8) -> dict:
    """Defect ``|<A_h U_h, V_h> - (A U, V)|`` for smooth U (standard) and V (adjoint) under dy-halving."""
    U, dU = _profiles(cfg, STANDARD)
    V, _ = _profiles(cfg, SWAPPED)
    dys, defects = [], []
    exact = None
    for Ny in Ny_list:
        disc = Discretization(Nx=Nx, Ny=Ny, M=max(n, 1))
        op = assemble_dense(n, m, cfg, disc, check=False)
        if exact is None:
            exact = _continuous_pairing(op, U, dU, V)
        y = np.linspace(0.0, cfg.L2, Ny)
        Uh = np.concatenate([np.asarray(e(0.0, y, 0.0)) * np.ones(Ny) for e in U]).astype(complex)
        Vh = np.concatenate([np.asarray(e(0.0, y, 0.0)) * np.ones(Ny) for e in V]).astype(complex)
        defects.append(abs(op.inner(op.matrix @ Uh, Vh) - exact))
        dys.append(cfg.L2 / (Ny - 1))
    return {"dy": dys, "defect": defects, "exact": exact,
            "orders": observed_orders(dys, defects, floor=1e-13 * max(1.0, abs(exact)))}


def positivity_sweep(n: int, m: int, cfg: ChannelConfig, Ny_list, variant: str = STANDARD,
                     adjoint: bool = False, Nx: int = 8) -> dict:
    """Positivity violation on the chosen subspace under dy-halving.

    Returns the violations, the observed orders (``inf`` when the violation
    is at roundoff on consecutive grids) and ``C = max violation/dy``.
    """
    dys, viol = [], []
    for Ny in Ny_list:
        op = assemble_dense(n, m, cfg, Discretization(Nx=Nx, Ny=Ny, M=max(n, 1)), check=False)
        rep = positivity_check(op, variant, adjoint)
        dys.append(cfg.L2 / (Ny - 1))
        viol.append(rep.violation)
    floor = 1e-12
    return {"dy": dys, "violation": viol, "orders": observed_orders(dys, viol, floor),
            "C": max(v / h for v, h in zip(viol, dys)), "floor": floor}
