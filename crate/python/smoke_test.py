"""Smoke test for the alphamod Python bindings: run with `python3 python/smoke_test.py` or pytest."""

import json
import math
import os
import tempfile

import alphamod_py as am


def test_bapu_partition():
    for alpha in (-0.5, 0.0, 0.5):
        b = am.Bapu(alpha, d=1, n=1024, band=4.0)
        assert len(b) > 0
        assert b.partition_error() < 1e-10
        meta = json.loads(b.metadata())
        assert meta["N"] == 1024 and meta["alpha"] == alpha


def test_windows_sum_to_function():
    f = am.GridFunction.gaussian(512, sigma=1.0)
    b = am.Bapu(0.5, d=1, n=512, band=512 * math.pi / f.length)
    parts = b.decompose(f)
    total = [sum(z) for z in zip(*(p.samples() for p in parts))]
    err = max(abs(a - c) for a, c in zip(total, f.samples()))
    assert err < 1e-10


def test_propagation_and_io():
    f = am.GridFunction.gaussian(256, sigma=1.0)
    g = f.propagate(2.0, 0.3)
    assert abs(g.lp_norm(2.0) - f.lp_norm(2.0)) < 1e-10 * f.lp_norm(2.0)
    back = g.propagate(2.0, -0.3)
    assert max(abs(a - b) for a, b in zip(back.samples(), f.samples())) < 1e-12
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "g.bin")
        g.save(path)
        h = am.GridFunction.load(path)
        assert h.samples() == g.samples()


def test_regions_and_pairs():
    assert abs(am.sufficient_threshold(1, 0.5, 6.0, math.inf) - 1 / 8) < 1e-12
    assert abs(am.necessity_threshold(1, 4.0, 1.0, 1.0) - 1.0) < 1e-12
    assert json.loads(am.verdict(1, 0.5, 6.0, math.inf))["label"] == "A"
    assert am.region_raster(1, 1.5, 11).count("\n") == 1 + 121
    assert am.strichartz_pair(6.0) == (3.0, 12.0)
    try:
        am.region_raster(1, 1.0, 11)
    except ValueError as e:
        assert "wave case" in str(e)
    else:
        raise AssertionError("beta=1 should be rejected")


def test_nls4_and_acceptance():
    u0 = am.GridFunction.gaussian(256, sigma=1.0)
    last, csv = am.solve_nls4(u0, 1e-3, 0.02)
    assert csv.splitlines()[0] == "t,M_u,E_u,M_v,E_v,E_tilde_v,monitored_quantity"
    assert abs(last.lp_norm(2.0) - u0.lp_norm(2.0)) < 1e-8
    report = json.loads(am.run_acceptance([2, 3, 4]))
    assert report["pass"], report


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            fn()
            print("ok", name)
