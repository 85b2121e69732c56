import csv
import io
import json
import math

import numpy as np
import pytest

from flatpng import harness as hs
from flatpng import kernels as kn
from flatpng.cli import main


def small(**kw):
    base = dict(T=12.0, samples=30, seed=5)
    base.update(kw)
    return hs.ExperimentConfig(**base)


def test_config_validation():
    for bad in (dict(T=0.0), dict(samples=0), dict(xi_step=0.0), dict(xi_min=1.0, xi_max=0.0), dict(mode="plot"), dict(threads=0)):
        with pytest.raises(hs.UsageError):
            small(**bad)


def test_xi_grid_includes_end():
    g = small(xi_min=-1.0, xi_max=1.0, xi_step=0.5).xi_grid()
    assert list(g) == [-1.0, -0.5, 0.0, 0.5, 1.0]


def test_single_sample_reproducible():
    a = hs.run_simulation(small(samples=1, seed=99)).top
    b = hs.run_simulation(small(samples=1, seed=99)).top
    assert a.shape == (1,) and a[0] == b[0]


def test_worker_count_independence():
    a = hs.run_simulation(small(samples=24))
    b = hs.run_simulation(small(samples=24, threads=2))
    assert all(np.array_equal(x, y) for x, y in zip(a.heights, b.heights))


def test_stats_scalings():
    st = hs.run_simulation(small())
    T = 12.0
    for h, top, edge in zip(st.heights, st.top, st.edge):
        assert top == pytest.approx((h[0] - 2 * T) / T ** (1 / 3))
        assert edge[0] == pytest.approx(top * 2 ** (2 / 3))
        assert np.all(np.diff(edge) < 0)
    F = st.ecdf(np.linspace(-5, 5, 41))
    assert np.all(np.diff(F) >= 0) and F[-1] == 1.0


def test_ks_on_exact_sample_is_small():
    # a sample drawn from F1 itself, rounded onto a fine lattice
    st = hs.EmpiricalEdgeStats(1.0, 0, -10.0, [])
    assert st.samples == 0
    s = np.linspace(-6, 5, 400)
    F = np.array([kn.f1_cdf(v) for v in s])
    u = np.random.default_rng(0).random(4000)
    draws = np.interp(u, F, s) / 2 ** (2 / 3)
    T = 1e6  # lattice spacing 2^(2/3)/T^(1/3) = 0.016
    h = np.round(2 * T + draws * T ** (1 / 3))
    fake = hs.EmpiricalEdgeStats(T, 0, -10.0, [np.array([v]) for v in h])
    assert fake.ks_f1() < 0.03
    assert fake.ks_f1(midpoint=True) < 0.03


def test_csv_round_trip_through_compare(tmp_path):
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--t", "12", "--samples", "20", "--seed", "3", "--out", str(out)]) == 0
    meta = json.loads((tmp_path / "sim.csv.json").read_text())
    assert meta["seed"] == 3 and meta["config"]["samples"] == 20 and "git_revision" in meta and "wall_time_s" in meta
    st = hs.load_simulation(out, 12.0)
    direct = hs.run_simulation(small(samples=20, seed=3))
    assert all(np.array_equal(a, b) for a, b in zip(st.heights, direct.heights))


def test_simulate_output_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["simulate", "--t", "10", "--samples", "15", "--seed", "8", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    ma, mb = (json.loads((tmp_path / f"{n}.csv.json").read_text()) for n in "ab")
    for m in (ma, mb):
        m.pop("wall_time_s")
        m["config"].pop("out")
    assert ma == mb


def test_kernel_table_format(tmp_path):
    out = tmp_path / "k.csv"
    assert main(["kernel-table", "--t", "50", "--xi-min", "-1", "--xi-max", "0", "--xi-step", "1", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == ["xi1", "xi2", "block", "value", "T_tilde", "route"]
    assert len(rows) == 2 * 4 * 4
    goe = {(r["xi1"], r["xi2"], r["block"]): float(r["value"]) for r in rows if r["route"] == "goe"}
    assert goe[("-1.0", "0.0", "12")] == pytest.approx(kn.goe_kernel(-1.0, 0.0)[0, 1], abs=1e-12)
    assert {r["T_tilde"] for r in rows} == {"inf", "100.0"}


def test_f1_table_both_routes():
    buf = io.StringIO()
    assert hs.run(small(mode="f1-table", xi_min=-1.0, xi_max=1.0, xi_step=1.0), stream=buf) == 0
    rows = list(csv.DictReader(io.StringIO(buf.getvalue())))
    assert [r["route"] for r in rows[:2]] == ["nystrom", "series"]
    assert float(rows[0]["F1"]) == pytest.approx(float(rows[1]["F1"]), abs=1e-6)
    assert float(rows[2]["s"]) == 0.0


def test_usage_errors_exit_2(tmp_path, capsys):
    assert main(["simulate", "--samples", "0"]) == 2
    assert main(["nonsense"]) == 2
    assert main(["compare", "--input", str(tmp_path / "none.csv")]) == 2
    assert "does not exist" in capsys.readouterr().err


def test_rho2_grid_matches_pfaffian():
    K = kn.goe_matrix_kernel()
    x, y = np.array([-1.3, 0.2]), np.array([-2.0, 0.7])
    R = hs.rho2_grid(x, y)
    for i, a in enumerate(x):
        for j, b in enumerate(y):
            assert R[i, j] == pytest.approx(kn.rho_n(K, [a, b]), rel=1e-12)


def test_predictions_basic():
    zero = hs.TestFunction("z", "zero", -4.0, 2.0)
    ind = hs.TestFunction("i", "indicator", -2.0, 0.0)
    assert hs.predict_m1(zero) == 0.0 and hs.predict_m2(zero, ind) == 0.0
    from scipy import integrate

    ref = integrate.quad(lambda v: float(kn.rho1_goe(v)[0]), -2.0, 0.0)[0]
    assert hs.predict_m1(ind) == pytest.approx(ref, rel=1e-8)
    bump = hs.TestFunction("b", "bump", -1.0, 0.0)
    assert bump(np.array([-1.0, -0.5, 0.0])).tolist() == [0.0, 1.0, 0.0]


def test_compare_zero_function_both_sides_zero():
    st = hs.run_simulation(small(samples=10))
    rows = hs.compare(st, family=(hs.TestFunction("zero", "zero", -4.0, 2.0),), pairs=())
    assert rows[0].empirical == 0.0 and rows[0].prediction == 0.0 and rows[0].agrees


def test_moment_growth_detects_trend():
    flat = {(1, 1): (2.0, 0.1)}
    rising = {50: {(1, 1): (1.0, 0.1)}, 100: {(1, 1): (2.0, 0.1)}, 200: {(1, 1): (3.0, 0.1)}}
    assert hs.moment_growth({50: flat, 200: flat})[(1, 1)] == 0.0
    assert hs.moment_growth(rising)[(1, 1)] > 3.0


def test_selftest_passes_and_reports(capsys):
    res = hs.selftest()
    assert all(r.passed for r in res)
    out = capsys.readouterr().out
    assert all(name in out for name in hs.SUITES)


def test_selftest_detects_corrupted_bessel_table(capsys):
    res = hs.selftest(inject="bessel-table")
    failed = {r.name for r in res if not r.passed}
    assert "kernels" in failed
    assert "FAIL" in capsys.readouterr().out
    # the fault is removed afterwards
    assert all(r.passed for r in hs.selftest())
    assert main(["selftest", "--inject", "bessel-table"]) == 1


def test_unknown_fault():
    with pytest.raises(hs.UsageError):
        hs.selftest(inject="gremlins")


def test_git_revision_is_string():
    rev = hs.git_revision()
    assert isinstance(rev, str) and rev


def test_moment_of_constant():
    st = hs.EmpiricalEdgeStats(1.0, 0, -10.0, [])
    m, se = st.moment(np.full(10, 2.0), m=3)
    assert m == 8.0 and se == 0.0
    assert math.isnan(st.moment(np.array([1.0]))[1])
