"""Run configuration files, field snapshots and energy tables.

Configuration is TOML.  Sections::

    [channel]      L1 L2 L3 U0bar f Nbuoy
    [grid]         Nx Ny M Nz_quad dt Tend
    [integrator]   scheme cfl_number dt_override
    [output]       energy_every snapshot_times
    [run]          bc
    [initial]      u v psi          (every mode n >= 1; may use the variable n)
    [initial.modeK] u v psi         (mode K only; mode0 takes u v)
    [forcing], [forcing.modeK]      same layout as [initial]
    [convergence]  n Ny Nx T dt_space dt_time
    [spectrum]     modes wavenumbers

Snapshots are binary: ``b"LPE1"``, three little-endian u64 ``(Nx, Ny, M)``,
a u64 field count, then per field a 16-byte NUL-padded ASCII name followed by
the row-major little-endian float64 payload of shape ``(Nx, Ny)``.
"""

from __future__ import annotations

import os
import struct
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

from .config import ChannelConfig, Discretization
from .errors import ConfigError
from .expr import Expr, ExprError, compile_field, parse_field_expression
from .horizontal import ChannelGrid
from .mode_n import BC_VARIANTS, STANDARD
from .state import ForcingSpec, InitialCondition, ModalStack
from .timestep import IntegratorConfig

MAGIC = b"LPE1"
NAME_BYTES = 16
ENERGY_HEADER = "t,mode,E,flux,power,residual"

_SECTIONS = {
    "channel": {"L1", "L2", "L3", "U0bar", "f", "Nbuoy"},
    "grid": {"Nx", "Ny", "M", "Nz_quad", "dt", "Tend"},
    "integrator": {"scheme", "cfl_number", "dt_override"},
    "output": {"energy_every", "snapshot_times"},
    "run": {"bc"},
    "convergence": {"n", "Ny", "Nx", "T", "dt_space", "dt_time"},
    "spectrum": {"modes", "wavenumbers"},
}
_FIELD_KEYS = ("u", "v", "psi")


def fmt(x: float) -> str:
    """Lossless float text (17 significant digits)."""
    return f"{float(x):.17g}"


@dataclass
class RunConfig:
    channel: ChannelConfig
    disc: Discretization
    integ: IntegratorConfig = field(default_factory=IntegratorConfig)
    initial: dict[int | str, dict[str, Expr]] = field(default_factory=dict)
    forcing: dict[int | str, dict[str, Expr]] = field(default_factory=dict)
    energy_every: int = 2
    snapshot_times: list[float] = field(default_factory=list)
    bc_variant: str = STANDARD
    convergence: dict = field(default_factory=dict)
    spectrum: dict = field(default_factory=dict)

    def _mode_exprs(self, table: dict, n: int) -> dict[str, Expr]:
        merged = {} if n == 0 else dict(table.get("all", {}))
        merged.update(table.get(n, {}))
        return merged

    def initial_condition(self, grid: ChannelGrid) -> InitialCondition:
        X, Y = grid.mesh()
        fields = {}
        for n in range(self.disc.M + 1):
            exprs = self._mode_exprs(self.initial, n)
            if not exprs:
                continue
            keys = _FIELD_KEYS[:2] if n == 0 else _FIELD_KEYS
            comps = []
            for key in keys:
                e = exprs.get(key)
                comps.append(np.zeros(grid.shape) if e is None
                             else np.array(compile_field(e, n)(X, Y, 0.0), dtype=float))
            fields[n] = tuple(comps)
        return InitialCondition(fields)

    def forcing_spec(self) -> ForcingSpec:
        modes = {}
        for n in range(self.disc.M + 1):
            exprs = self._mode_exprs(self.forcing, n)
            if exprs:
                keys = _FIELD_KEYS[:2] if n == 0 else _FIELD_KEYS
                modes[n] = tuple(compile_field(exprs[k], n) if k in exprs else None for k in keys)
        return ForcingSpec(modes)

    def validate_fields(self, grid: ChannelGrid) -> None:
        """Evaluate every expression on the grid; raise ConfigError on non-finite output."""
        X, Y = grid.mesh()
        for label, table in (("initial", self.initial), ("forcing", self.forcing)):
            for n in range(self.disc.M + 1):
                for key, e in self._mode_exprs(table, n).items():
                    val = compile_field(e, n)(X, Y, 0.0)
                    if not np.all(np.isfinite(val)):
                        raise ConfigError(f"{label} mode {n} field {key!r} is not finite on the grid")

    def with_overrides(self, M: int | None = None, dt: float | None = None,
                       bc: str | None = None) -> "RunConfig":
        from dataclasses import replace

        disc = self.disc
        if M is not None:
            nz = disc.Nz_quad if disc.Nz_quad >= 4 * M else None
            disc = replace(disc, M=M, Nz_quad=nz)
        if dt is not None:
            disc = replace(disc, dt=dt)
        out = replace(self, disc=disc)
        if bc is not None:
            if bc not in BC_VARIANTS:
                raise ConfigError(f"unknown bc variant {bc!r}")
            out.bc_variant = bc
        return out


def _check_keys(section: str, table: dict, allowed: set[str]) -> None:
    extra = set(table) - allowed
    if extra:
        raise ConfigError(f"unknown keys in [{section}]: {', '.join(sorted(extra))}")


def _parse_field_table(section: str, table: dict) -> dict[int | str, dict[str, Expr]]:
    out: dict[int | str, dict[str, Expr]] = {}
    generic = {}
    for key, value in table.items():
        if key.startswith("mode") and isinstance(value, dict):
            try:
                n = int(key[4:])
            except ValueError:
                raise ConfigError(f"bad subsection [{section}.{key}]") from None
            allowed = _FIELD_KEYS[:2] if n == 0 else _FIELD_KEYS
            _check_keys(f"{section}.{key}", value, set(allowed))
            out[n] = {k: _parse_expr(f"{section}.{key}.{k}", v) for k, v in value.items()}
        elif key in _FIELD_KEYS:
            generic[key] = _parse_expr(f"{section}.{key}", value)
        else:
            raise ConfigError(f"unknown key {key!r} in [{section}]")
    if generic:
        out["all"] = generic
    return out


def _parse_expr(where: str, value) -> Expr:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = repr(float(value))
    if not isinstance(value, str):
        raise ConfigError(f"{where}: expected an expression string")
    try:
        return parse_field_expression(value)
    except ExprError as err:
        raise ConfigError(f"{where}: {err}") from err


def parse_config(data: dict) -> RunConfig:
    known = set(_SECTIONS) | {"initial", "forcing"}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown sections: {', '.join(sorted(extra))}")
    for name, allowed in _SECTIONS.items():
        if name in data:
            if not isinstance(data[name], dict):
                raise ConfigError(f"[{name}] must be a table")
            _check_keys(name, data[name], allowed)
    try:
        channel = ChannelConfig(**{k: float(v) for k, v in data.get("channel", {}).items()})
        g = dict(data.get("grid", {}))
        for k in ("Nx", "Ny", "M", "Nz_quad"):
            if k in g:
                g[k] = int(g[k])
        disc = Discretization(**g)
        integ = IntegratorConfig(**data.get("integrator", {}))
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err)) from err
    out = data.get("output", {})
    every = int(out.get("energy_every", 2))
    if every < 1:
        raise ConfigError("energy_every must be >= 1")
    bc = data.get("run", {}).get("bc", STANDARD)
    if bc not in BC_VARIANTS:
        raise ConfigError(f"unknown bc variant {bc!r}")
    return RunConfig(channel, disc, integ,
                     _parse_field_table("initial", data.get("initial", {})),
                     _parse_field_table("forcing", data.get("forcing", {})),
                     every, [float(t) for t in out.get("snapshot_times", [])], bc,
                     dict(data.get("convergence", {})), dict(data.get("spectrum", {})))


def load_config(path: str | os.PathLike) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"{path}: {err}") from err
    return parse_config(data)


# -- snapshots ---------------------------------------------------------------

def stack_fields(stack: ModalStack) -> list[tuple[str, np.ndarray]]:
    out = [("u0", stack.barotropic.u0), ("v0", stack.barotropic.v0)]
    for m in stack.modes:
        out += [(f"u{m.n}", m.u), (f"v{m.n}", m.v), (f"psi{m.n}", m.psi)]
    return out


def write_snapshot(path: str | os.PathLike, fields: list[tuple[str, np.ndarray]], M: int) -> None:
    """Write fields of one shape ``(Nx, Ny)``; the file appears atomically."""
    if not fields:
        raise ValueError("no fields to write")
    Nx, Ny = fields[0][1].shape
    parts = [MAGIC, struct.pack("<QQQ", Nx, Ny, M), struct.pack("<Q", len(fields))]
    for name, arr in fields:
        raw = name.encode("ascii")
        if len(raw) > NAME_BYTES:
            raise ValueError(f"field name {name!r} longer than {NAME_BYTES} bytes")
        if arr.shape != (Nx, Ny):
            raise ValueError(f"field {name!r} has shape {arr.shape}, expected {(Nx, Ny)}")
        parts.append(raw.ljust(NAME_BYTES, b"\0"))
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes(order="C"))
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(b"".join(parts))
    os.replace(tmp, path)


def read_snapshot(path: str | os.PathLike) -> tuple[tuple[int, int, int], dict[str, np.ndarray]]:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: not a snapshot file")
    Nx, Ny, M = struct.unpack_from("<QQQ", data, 4)
    (count,) = struct.unpack_from("<Q", data, 28)
    pos = 36
    size = Nx * Ny * 8
    fields = {}
    for _ in range(count):
        name = data[pos:pos + NAME_BYTES].rstrip(b"\0").decode("ascii")
        pos += NAME_BYTES
        fields[name] = np.frombuffer(data, dtype="<f8", count=Nx * Ny, offset=pos).reshape(Nx, Ny).copy()
        pos += size
    if pos != len(data):
        raise ValueError(f"{path}: {len(data) - pos} trailing bytes")
    return (Nx, Ny, M), fields


# -- energy table --------------------------------------------------------------

class EnergyCSVWriter:
    """Streams ``t,mode,E,flux,power,residual`` rows.

    The residual needs ``dE/dt`` from neighbouring samples, so each time
    level is written once the next one has arrived (the last on
    :meth:`close`).  Differences match ``numpy.gradient`` with second-order
    edges.  Each row is written with a single call and flushed.
    """

    def __init__(self, path: str | os.PathLike):
        self.fh = open(path, "w", newline="")
        self._line(ENERGY_HEADER)
        self.buf: list[tuple[float, np.ndarray, np.ndarray, np.ndarray]] = []
        self.emitted = 0

    def _line(self, text: str) -> None:
        self.fh.write(text + "\n")
        self.fh.flush()

    def _emit(self, k: int, dE: np.ndarray) -> None:
        t, E, flux, power = self.buf[k]
        res = dE + flux - power
        for n in range(E.size):
            self._line(",".join([fmt(t), str(n), fmt(E[n]), fmt(flux[n]), fmt(power[n]), fmt(res[n])]))
        self.emitted = k + 1

    def _deriv(self, lo: int, idx: int) -> np.ndarray:
        window = self.buf[lo:lo + 3]
        ts = np.array([w[0] for w in window])
        Es = np.array([w[1] for w in window])
        return np.gradient(Es, ts, axis=0, edge_order=2)[idx]

    def add(self, t: float, E, flux, power) -> None:
        self.buf.append((float(t), np.asarray(E, float), np.asarray(flux, float), np.asarray(power, float)))
        n = len(self.buf)
        if n == 3:
            self._emit(0, self._deriv(0, 0))
        if n >= 3:
            self._emit(n - 2, self._deriv(n - 3, 1))

    def close(self) -> None:
        n = len(self.buf)
        if n and self.emitted < n:
            if n >= 3:
                self._emit(n - 1, self._deriv(n - 3, 2))
            else:
                for k in range(self.emitted, n):
                    if n == 2:
                        dE = (self.buf[1][1] - self.buf[0][1]) / (self.buf[1][0] - self.buf[0][0])
                    else:
                        dE = np.zeros_like(self.buf[0][1])
                    self._emit(k, dE)
        self.fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_energy_csv(path: str | os.PathLike) -> np.ndarray:
    """Energy table as a structured array."""
    return np.genfromtxt(path, delimiter=",", names=True, dtype=None, encoding="ascii")


def write_table(path: str | os.PathLike, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) if isinstance(v, float) else str(v) for v in row) + "\n")
            fh.flush()
