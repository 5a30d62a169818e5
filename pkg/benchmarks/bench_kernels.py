"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--Nx 64] [--Ny 129] [--repeat 50]

Also times one full stack step under each backend (``LPE_KERNELS``), run in
a subprocess so the backend choice at import is honoured.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from lpe_channel.kernels import _pykernels

try:
    from lpe_channel.kernels import _ckernels
except ImportError:
    _ckernels = None

STEP_SNIPPET = """
import timeit
import numpy as np
from lpe_channel import BACKEND, ChannelConfig, ChannelGrid, Discretization, ModalStack, Stepper
from lpe_channel.verification.suites import random_bc_state
cfg = ChannelConfig(f=0.5)
disc = Discretization(Nx={Nx}, Ny={Ny}, M=4)
grid = ChannelGrid(cfg, disc)
rng = np.random.default_rng(0)
stack = ModalStack.zeros(4, grid.shape)
stack.modes = [random_bc_state(n, grid, rng) for n in range(1, 5)]
st = Stepper(grid)
st.step(stack, 1e-4)
print(BACKEND, min(timeit.repeat(lambda: st.step(stack, 1e-4), number=5, repeat=3)) / 5)
"""


def kernel_cases(Nx: int, Ny: int):
    rng = np.random.default_rng(1)
    a = [rng.standard_normal((Nx, Ny)) for _ in range(9)]
    outs = [np.empty((Nx, Ny)) for _ in range(3)]
    dy = 1.0 / (Ny - 1)
    # one system per x wavenumber, as in the Poisson solves
    lo = rng.uniform(0.1, 0.4, (Nx, Ny))
    hi = rng.uniform(0.1, 0.4, (Nx, Ny))
    diag = np.full((Nx, Ny), 2.0)
    rhs = rng.standard_normal((Nx, Ny)) + 0j

    def cases(mod):
        return {
            "sbp_diff_y": lambda: mod.sbp_diff_y(a[0], dy),
            "mode_tendency": lambda: mod.mode_tendency(*a, 1.0, 0.5, 0.3, 0.3, dy, *outs),
            "inject_characteristic": lambda: mod.inject_characteristic(a[1], a[2], 1.0, False),
            "solve_tridiag": lambda: mod.solve_tridiag(lo, diag, hi, rhs),
        }
    return cases


def main() -> None:
    p = argparse.ArgumentParser()
    p.add_argument("--Nx", type=int, default=64)
    p.add_argument("--Ny", type=int, default=129)
    p.add_argument("--repeat", type=int, default=50)
    args = p.parse_args()
    cases = kernel_cases(args.Nx, args.Ny)
    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    print(f"kernels on a {args.Nx} x {args.Ny} grid (best of 5, mean per call)")
    results = {}
    for name, mod in backends:
        for key, fn in cases(mod).items():
            results[(name, key)] = min(timeit.repeat(fn, number=args.repeat, repeat=5)) / args.repeat
    for key in cases(_pykernels):
        py = results[("python", key)]
        line = f"  {key:24s} python {py * 1e6:9.1f} us"
        if _ckernels:
            cy = results[("cython", key)]
            line += f"   cython {cy * 1e6:9.1f} us   speedup {py / cy:5.2f}x"
        print(line)
    print("full stack step (M=4)")
    for backend in ("python", "cython"):
        env = dict(os.environ, LPE_KERNELS=backend)
        out = subprocess.run([sys.executable, "-c", STEP_SNIPPET.format(Nx=args.Nx, Ny=args.Ny)],
                             env=env, capture_output=True, text=True, check=True).stdout.split()
        print(f"  requested {backend:7s} active {out[0]:7s} {float(out[1]) * 1e3:8.2f} ms/step")


if __name__ == "__main__":
    main()
