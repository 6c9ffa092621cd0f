"""Smoke test for the hydrolim Python bindings.

Build and install first:
    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/hydrolim-*.whl
"""

import math
import os
import tempfile

import hydrolim_py as h

TINY = """
[numerics]
nx = 16
ny = 32
dt = 2.5e-4
T = 0.01

[analysis]
report_every = 10
lift_nodes = 32
"""


def main():
    assert "[numerics]" in h.default_config()

    xs, ys = h.grid_nodes(16, 32)
    assert len(xs) == 16 and len(ys) == 32
    assert ys[0] == 0.0 and ys[-1] == 1.0

    with tempfile.TemporaryDirectory() as tmp:
        u0, v0, report = h.gen_data(os.path.join(tmp, "data"), TINY)
        assert len(u0) == 16 and len(u0[0]) == 32
        assert '"passed":true' in report
        back, t = h.load_snapshot(os.path.join(tmp, "data", "u0.hlim"))
        assert t == 0.0
        assert max(abs(a - b) for ra, rb in zip(u0, back) for a, b in zip(ra, rb)) < 1e-12

        rows = h.run(os.path.join(tmp, "run"), TINY, threads=1)
        assert [r[0] for r in rows] == [0.2, 0.1, 0.05]
        assert all(math.isfinite(v) and v > 0 for r in rows for v in r[1:])
        for name in ("summary.json", "monitor.csv", "eps_0.1/report.json"):
            assert os.path.isfile(os.path.join(tmp, "run", name)), name

        try:
            h.run(os.path.join(tmp, "bad"), "[sweep]\nepsilons = [0.1, 0.2]\n")
        except ValueError:
            pass
        else:
            raise AssertionError("increasing sweep accepted")

    eps = [0.2, 0.1, 0.05]
    l2_slope, linf_slope, passed = h.fit_rate(eps, [e * e for e in eps], [e * e for e in eps])
    assert abs(l2_slope - 2.0) < 1e-12 and abs(linf_slope - 2.0) < 1e-12 and passed

    ok, checks = h.verify("quick", 20240531)
    assert ok and checks
    print(f"smoke test passed ({len(checks)} verification checks)")


if __name__ == "__main__":
    main()
