import json
import struct
import textwrap

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lpe_channel.cli import (EXIT_CFL, EXIT_CONFIG, EXIT_IO, EXIT_NAN, EXIT_OK, EXIT_USAGE,
                             EXIT_VERIFY, main)
from lpe_channel.errors import ConfigError
from lpe_channel.io import (ENERGY_HEADER, EnergyCSVWriter, load_config, parse_config,
                            read_energy_csv, read_snapshot, write_snapshot)
from lpe_channel.verification.energy import budget_residual

BASE = """
[channel]
f = 0.5
[grid]
Nx = 8
Ny = 17
M = 3
dt = 0.001
Tend = 0.04
"""


def write_cfg(tmp_path, extra="", base=BASE, name="run.toml"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(base) + textwrap.dedent(extra))
    return p


def run(tmp_path, cmd, cfg, *flags, out="out"):
    return main([cmd, "--config", str(cfg), "--out", str(tmp_path / out), *flags])


def energy_table(path):
    tab = read_energy_csv(path)
    times = np.unique(tab["t"])
    modes = np.unique(tab["mode"])
    E = np.array([[tab["E"][(tab["t"] == t) & (tab["mode"] == n)][0] for n in modes] for t in times])
    return times, E


# -- configuration --------------------------------------------------------------

def test_config_sections(tmp_path):
    rc = load_config(write_cfg(tmp_path, """
        [integrator]
        scheme = "rk4"
        [output]
        energy_every = 4
        snapshot_times = [0.0, 0.02]
        [run]
        bc = "swapped"
        [initial]
        u = "sin(2*pi()*x)/n"
        [initial.mode2]
        psi = "y"
        [forcing.mode0]
        u = "1"
    """))
    assert rc.disc.M == 3 and rc.channel.f == 0.5 and rc.integ.scheme == "rk4"
    assert rc.energy_every == 4 and rc.snapshot_times == [0.0, 0.02] and rc.bc_variant == "swapped"
    # the generic table applies to n >= 1 and a mode table overrides per key
    assert set(rc._mode_exprs(rc.initial, 2)) == {"u", "psi"}
    assert rc._mode_exprs(rc.initial, 0) == {}
    assert not rc.forcing_spec().is_zero(0)


@pytest.mark.parametrize("extra", [
    "[grid2]\nx = 1\n",
    "[output]\ncadence = 2\n",
    "[initial]\nw = \"x\"\n",
    "[initial.mode0]\npsi = \"x\"\n",
    "[initial]\nu = \"sin(\"\n",
    "[initial]\nu = \"q\"\n",
    "[run]\nbc = \"periodic\"\n",
    "[output]\nenergy_every = 0\n",
])
def test_config_errors(tmp_path, extra):
    with pytest.raises(ConfigError):
        load_config(write_cfg(tmp_path, extra))


def test_config_bad_values_and_syntax(tmp_path):
    with pytest.raises(ConfigError):
        parse_config({"grid": {"Nx": 7}})
    with pytest.raises(ConfigError):
        parse_config({"integrator": {"scheme": "euler"}})
    p = tmp_path / "bad.toml"
    p.write_text("[grid\nNx = 8")
    with pytest.raises(ConfigError):
        load_config(p)


def test_non_finite_expression_rejected_before_stepping(tmp_path):
    cfg = write_cfg(tmp_path, '[initial]\nu = "1/x"\n')
    assert run(tmp_path, "simulate", cfg) == EXIT_CONFIG
    assert not (tmp_path / "out" / "energy.csv").exists()


# -- snapshots --------------------------------------------------------------------

def test_snapshot_layout(tmp_path):
    a = np.arange(6, dtype=float).reshape(2, 3)
    p = tmp_path / "s.lpe"
    write_snapshot(p, [("u0", a), ("psi1", -a)], M=1)
    raw = p.read_bytes()
    assert raw[:4] == b"LPE1"
    assert struct.unpack("<QQQQ", raw[4:36]) == (2, 3, 1, 2)
    assert raw[36:52] == b"u0" + b"\0" * 14
    assert np.array_equal(np.frombuffer(raw[52:100], "<f8"), np.arange(6.0))
    assert raw[100:116] == b"psi1" + b"\0" * 12
    assert len(raw) == 116 + 48


@given(nx=st.integers(1, 6), ny=st.integers(1, 6), k=st.integers(1, 4), seed=st.integers(0, 2**31))
def test_snapshot_round_trip(tmp_path_factory, nx, ny, k, seed):
    rng = np.random.default_rng(seed)
    fields = [(f"f{i}", rng.standard_normal((nx, ny))) for i in range(k)]
    p = tmp_path_factory.mktemp("snap") / "x.lpe"
    write_snapshot(p, fields, M=7)
    head, back = read_snapshot(p)
    assert head == (nx, ny, 7)
    for name, arr in fields:
        assert np.array_equal(back[name], arr)


def test_snapshot_rejects_long_names(tmp_path):
    with pytest.raises(ValueError):
        write_snapshot(tmp_path / "x.lpe", [("a" * 17, np.zeros((2, 2)))], M=1)


# -- energy table -----------------------------------------------------------------

def test_energy_writer_matches_batch_residual(tmp_path):
    rng = np.random.default_rng(0)
    t = np.linspace(0, 1, 9)
    E, flux, power = (rng.standard_normal((9, 3)) for _ in range(3))
    p = tmp_path / "e.csv"
    with EnergyCSVWriter(p) as w:
        for i in range(9):
            w.add(t[i], E[i], flux[i], power[i])
    lines = p.read_text().splitlines()
    assert lines[0] == ENERGY_HEADER and len(lines) == 1 + 27
    tab = read_energy_csv(p)
    expect = budget_residual(t, E, flux, power)
    np.testing.assert_array_equal(tab["residual"].reshape(9, 3), expect)
    np.testing.assert_array_equal(tab["E"].reshape(9, 3), E)  # 17 digits round-trip


def test_energy_writer_short_series(tmp_path):
    p = tmp_path / "e.csv"
    with EnergyCSVWriter(p) as w:
        w.add(0.0, [1.0], [0.0], [0.0])
        w.add(0.5, [2.0], [0.0], [0.0])
    tab = read_energy_csv(p)
    np.testing.assert_allclose(tab["residual"], [2.0, 2.0])


def test_rows_are_flushed_as_written(tmp_path):
    p = tmp_path / "e.csv"
    w = EnergyCSVWriter(p)
    for i in range(4):
        w.add(0.1 * i, [1.0, 2.0], [0.0, 0.0], [0.0, 0.0])
    text = p.read_text()  # without closing
    assert text.endswith("\n") and len(text.splitlines()) == 1 + 2 * 3
    w.close()


# -- command line -------------------------------------------------------------------

def test_zero_run_gives_zero_outputs(tmp_path):
    cfg = write_cfg(tmp_path, "[output]\nsnapshot_times = [0.04]\n")
    assert run(tmp_path, "simulate", cfg) == EXIT_OK
    tab = read_energy_csv(tmp_path / "out" / "energy.csv")
    for col in ("E", "flux", "power", "residual"):
        assert np.all(tab[col] == 0.0)
    _, fields = read_snapshot(tmp_path / "out" / "snapshot_00000040.lpe")
    assert sorted(fields) == sorted(["u0", "v0"] + [f"{c}{n}" for n in (1, 2, 3) for c in ("u", "v", "psi")])
    assert all(np.all(a == 0) for a in fields.values())


def test_single_mode_stays_single(tmp_path):
    cfg = write_cfg(tmp_path, """
        [initial.mode2]
        u = "cos(2*pi()*x)*sin(pi()*y)"
        v = "sin(2*pi()*x)*y*(1-y)"
        psi = "0.3*cos(4*pi()*x)*cos(pi()*y)"
    """)
    assert run(tmp_path, "simulate", cfg) == EXIT_OK
    _, E = energy_table(tmp_path / "out" / "energy.csv")
    assert E[0, 2] > 0
    assert np.abs(E[:, [0, 1, 3]]).max() <= 1e-12 * E[0, 2]


def test_outputs_are_byte_identical(tmp_path):
    cfg = write_cfg(tmp_path, """
        [output]
        snapshot_times = [0.02]
        [initial]
        u = "cos(2*pi()*x)/n"
        v = "sin(2*pi()*x)*sin(pi()*y)"
        [forcing]
        psi = "sin(t)*cos(pi()*y)"
    """)
    assert run(tmp_path, "simulate", cfg, out="a") == EXIT_OK
    assert run(tmp_path, "simulate", cfg, out="b") == EXIT_OK
    for name in ("energy.csv", "snapshot_00000020.lpe"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_demo_illposed_trends(tmp_path, capsys):
    cfg = write_cfg(tmp_path, """
        [initial]
        u = "cos(2*pi()*x)*sin(pi()*y)/n"
        v = "sin(2*pi()*x)*cos(pi()*y)/n"
        psi = "0.5*cos(2*pi()*x)/n"
    """)
    assert run(tmp_path, "demo-illposed", cfg) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["standard"]["non_increasing"] and summary["swapped"]["non_decreasing"]
    assert summary["standard"]["E_end"] < summary["standard"]["E_start"]
    assert summary["swapped"]["E_end"] > summary["swapped"]["E_start"]


def test_cfl_violation_exit(tmp_path):
    cfg = write_cfg(tmp_path)
    assert run(tmp_path, "simulate", cfg, "--dt", "0.2") == EXIT_CFL


def test_nan_exit(tmp_path):
    cfg = write_cfg(tmp_path, """
        [initial]
        u = "sin(2*pi()*x)"
    """, base="[grid]\nNx = 8\nNy = 17\nM = 1\ndt = 0.5\nTend = 500.0\n")
    assert run(tmp_path, "simulate", cfg, "--override-cfl") == EXIT_NAN
    # every row already on disk is complete
    lines = (tmp_path / "out" / "energy.csv").read_text().splitlines()
    assert all(len(line.split(",")) == 6 for line in lines)


def test_io_error_exit(tmp_path):
    cfg = write_cfg(tmp_path)
    (tmp_path / "blocker").write_text("")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "blocker")]) == EXIT_IO
    assert main(["simulate", "--config", str(tmp_path / "missing.toml")]) == EXIT_IO


def test_usage_errors(tmp_path):
    assert main(["simulate"]) == EXIT_USAGE
    assert main(["verify", "bogus", "--config", str(write_cfg(tmp_path))]) == EXIT_USAGE
    assert main(["frobnicate"]) == EXIT_USAGE


def test_overrides(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    assert run(tmp_path, "simulate", cfg, "--modes", "2", "--bc", "swapped", "--dt", "0.002") == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["bc"] == "swapped" and summary["steps"] == 20 and len(summary["final_energy"]) == 3


def test_verify_exit_codes(tmp_path, monkeypatch, capsys):
    cfg = write_cfg(tmp_path)
    assert run(tmp_path, "verify", cfg, "transforms") == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] and report["suite"] == "transforms"
    assert (tmp_path / "out" / "verify_transforms.json").exists()

    from lpe_channel.verification import suites

    def failing(suite, cfg=None):
        return suites.VerifyReport(suite, [suites.Check("forced", False, 1.0, 0.0)])

    monkeypatch.setattr(suites, "run_verify", failing)
    assert run(tmp_path, "verify", cfg, "mms") == EXIT_VERIFY


def test_spectrum(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "[spectrum]\nmodes = [1]\nwavenumbers = [0, 1]\n")
    assert run(tmp_path, "spectrum", cfg) == EXIT_OK
    rates = json.loads(capsys.readouterr().out)["max_growth_rate"]
    assert float(rates["standard"]) < 1e-12 < float(rates["swapped"])
    assert (tmp_path / "out" / "spectrum.csv").read_text().startswith("bc,mode,m,re,im\n")
