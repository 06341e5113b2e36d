"""Smoke test for the pyfkpp extension module.

Build and install first, e.g.

    pip install maturin
    maturin develop -m crates/python/Cargo.toml --release

then run ``python python/smoke_test.py``.
"""

import math
import os
import tempfile

import pyfkpp

CONFIG = """
name = "smoke"

[grid]
dim = 1
n = 2048
length = 16384.0

[model]
alpha = 1.0

[datum]
kind = "gaussian"
amplitude = 0.5
width = 16.0

[time]
t_end = 10.0

[output]
snapshot_cadence = 0.25
levels = [0.5]
"""


def check_operator():
    grid = pyfkpp.Grid(1, 64, 2 * math.pi)
    op = pyfkpp.SpectralOperator(grid, 1.5)
    u = [math.cos(3 * x) for x in grid.axis()]
    lu = op.frac_laplacian(u)
    err = max(abs(a - 3**1.5 * b) for a, b in zip(lu, u))
    assert err < 1e-12, err


def check_kernel():
    value, abs_err = pyfkpp.kernel_value(1.0, 1, 2.0)
    assert abs(value - 1 / (5 * math.pi)) < 1e-9, value
    assert abs_err < 1e-8
    profile = pyfkpp.kernel_profile(1.0, 2, r_max=100.0, samples=40)
    assert abs(profile["tail_exponent"] - 3.0) < 0.05, profile["tail_exponent"]


def check_simulation():
    grid = pyfkpp.Grid(1, 256, 256.0)
    u0 = [0.5 * math.exp(-((x / 8) ** 2)) for x in grid.axis()]
    sim = pyfkpp.Simulation(grid, 1.0, u0)
    sim.advance_to(2.0)
    assert abs(sim.time - 2.0) < 1e-9
    assert sim.spreading_rate == 0.5
    assert -1e-8 <= sim.min() and sim.max() <= 1 + 1e-8
    assert sim.max() > 0.5


def check_pipeline():
    with tempfile.TemporaryDirectory() as root:
        path = os.path.join(root, "smoke.toml")
        with open(path, "w") as f:
            f.write(CONFIG)
        manifest = pyfkpp.run_config(path, output_root=root)
        assert manifest["complete"], manifest
        run_dir = os.path.join(root, "smoke")
        analysis = pyfkpp.analyze(run_dir)
        assert analysis["dim"] == 1
        verdicts = pyfkpp.report(run_dir)
        ids = {c["id"] for c in verdicts["criteria"]}
        assert "spreading_rate" in ids, ids
        header, values = pyfkpp.read_snapshot(os.path.join(run_dir, "snapshots", "snap_00000.bin"))
        assert header["n"] == 2048 and len(values) == 2048
        try:
            pyfkpp.analyze(os.path.join(root, "missing"))
        except FileNotFoundError as e:
            assert "no snapshots found" in str(e)
        else:
            raise AssertionError("expected FileNotFoundError")


if __name__ == "__main__":
    for check in (check_operator, check_kernel, check_simulation, check_pipeline):
        check()
        print(f"ok  {check.__name__}")
