"""Acceptance criteria for the modal channel solver.

Each test prints one ``PASS``/``FAIL`` line; the lines are also collected and
repeated in the pytest terminal summary.  Run on its own with::

    pytest tests/test_acceptance.py -v
    python tests/test_acceptance.py
"""

import time

import pytest

from lpe_channel import ChannelConfig, Discretization
from lpe_channel.verification import suites

RESULTS: list[str] = []


def report(number: int, title: str, checks, limit_s: float | None = None) -> bool:
    checks = checks if isinstance(checks, list) else [checks]
    seconds = max(c.seconds for c in checks)
    ok = all(c.passed for c in checks) and (limit_s is None or seconds < limit_s)
    parts = "; ".join(f"{c.name}={c.value:.3g} (limit {c.threshold:.3g})" for c in checks)
    timing = f"{seconds:.2f}s" + ("" if limit_s is None else f" (< {limit_s:g}s)")
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d} {title}: {parts}; {timing}"
    RESULTS.append(line)
    print(line)
    return ok


def test_criterion_01_vertical_basis():
    assert report(1, "vertical basis", suites.check_vertical_basis(M=8), limit_s=1.0)


def test_criterion_02_flux_identity():
    assert report(2, "boundary-flux identity", suites.check_flux_identity(samples=100))


def test_criterion_03_barotropic_energy():
    c = suites.check_barotropic_conservation(ChannelConfig(f=1.0), Ny=65, T=1.0, dt=1e-3)
    assert report(3, "mode-0 energy conservation", c, limit_s=30.0)


def test_criterion_04_contraction():
    c = suites.check_contraction(ChannelConfig(f=0.5), Discretization(Nx=16, Ny=33, M=4), T=1.0)
    assert report(4, "mode-n contraction / swapped growth", c)


def test_criterion_05_oracle():
    c = suites.check_oracle(ChannelConfig(f=0.6), Ny=33, dt=1e-3, T=0.5,
                            modes=(1, 2, 3), ms=(0, 1, -1, 2, -2))
    assert report(5, "oracle equivalence", c, limit_s=60.0)


def test_criterion_06_adjoint():
    assert report(6, "adjoint structure", suites.check_adjoint())


def test_criterion_07_mms():
    t0 = time.perf_counter()
    checks = suites.check_mms(ChannelConfig(f=0.5), Ny=33, Nx=8, T=0.5)
    assert time.perf_counter() - t0 < 300
    assert report(7, "MMS convergence", checks, limit_s=300.0)


def test_criterion_08_modal_decoupling():
    c = suites.check_modal_decoupling(ChannelConfig(f=0.7), Discretization(Nx=16, Ny=33, M=4), T=1.0)
    assert report(8, "modal decoupling", c)


def test_criterion_09_regularity():
    assert report(9, "regularity diagnostics", suites.check_regularity(T=1.0))


def test_criterion_10_stationary_mode0():
    assert report(10, "stationary mode-0 solve", suites.check_stationary_A0())


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
