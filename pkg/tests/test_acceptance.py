"""One test per acceptance criterion; each prints a PASS/FAIL line with its measurements."""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from flatpng import harness as hs
from flatpng import kernels as kn
from flatpng import png_sim as ps
from flatpng import skewlinalg as sl
from flatpng import specfun as sf
from flatpng.config import EDGE_BOUND_C, TOL

XI_GRID = np.arange(-6.0, 6.01, 0.5)


def report(n: int, ok: bool, detail: str):
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def mc():
    """Monte-Carlo samples shared by criteria 9 and 10."""
    plan = {50.0: 10_000, 100.0: 10_000, 200.0: 2_500}
    out = {}
    for T, n in plan.items():
        t0 = time.perf_counter()
        st = hs.run_simulation(hs.ExperimentConfig(T=T, samples=n, seed=20240601))
        out[T] = (st, time.perf_counter() - t0)
    return out


def test_criterion_01_pfaffian():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst_det = 0.0
    for k in range(500):
        n = 2 * (1 + k % 12)
        a = rng.uniform(-1, 1, (n, n))
        A = np.triu(a, 1) - np.triu(a, 1).T
        pf, det = sl.pfaffian(A), np.linalg.det(A)
        worst_det = max(worst_det, abs(pf * pf - det) / abs(det))
    worst_brute = 0.0
    for n in (2, 4, 6, 8):
        for _ in range(25):
            a = rng.uniform(-1, 1, (n, n))
            A = np.triu(a, 1) - np.triu(a, 1).T
            ref = sl.pfaffian_bruteforce(A)
            worst_brute = max(worst_brute, abs(sl.pfaffian(A) - ref) / max(1.0, abs(ref)))
    dt = time.perf_counter() - t0
    ok = worst_det <= 1e-9 and worst_brute <= 1e-11 and dt <= 5.0
    report(1, ok, f"max|Pf^2-det|/det={worst_det:.1e} (<=1e-9), pairing-sum dev={worst_brute:.1e} (<=1e-11), {dt:.1f}s (<=5s)")


def test_criterion_02_bessel_identities():
    t0 = time.perf_counter()
    worst = max(max(abs(r) for r in sf.bessel_identity_residuals(z)) for z in (0.0, 2.0, 8.0, 80.0))
    landau = all(
        sf.landau_bound_check(n, x) for x in (1.0, 2.0, 8.0, 10.0, 80.0, 100.0, 1000.0) for n in range(-200, 201, 3)
    )
    dt = time.perf_counter() - t0
    ok = worst <= 1e-11 and landau and dt <= 10.0
    report(2, ok, f"max identity residual={worst:.1e} (<=1e-11), Landau bound on grid: {landau}, {dt:.1f}s (<=10s)")


def test_criterion_03_bessel_to_airy():
    t0 = time.perf_counter()
    bad = []
    for xi in (-4, -2, 0, 2, 4):
        g = [sf.bessel_airy_limit_gap(T, xi) for T in (100, 400, 1600)]
        if not (g[0] > g[1] > g[2]):
            bad.append((xi, [f"{v:.1e}" for v in g]))
    g0 = sf.bessel_airy_limit_gap(1600, 0)
    dt = time.perf_counter() - t0
    ok = not bad and g0 <= 5e-3 and dt <= 30.0
    report(3, ok, f"gap(1600, 0)={g0:.1e} (<=5e-3), non-monotone at {bad}, {dt:.1f}s (<=30s)")


def test_criterion_04_dual_route_kernel():
    t0 = time.perf_counter()
    worst, worst_ab = 0.0, 0.0
    for T in (2.0, 4.0, 8.0):
        rng = np.random.default_rng(100 + int(T))
        xs = rng.integers(0, int(4 * T) + 1, 20)
        ys = rng.integers(0, int(4 * T) + 1, 20)
        state = kn.MatrixRouteState(T)
        M = state.blocks(xs, ys)
        B = kn.FinitePngKernel(T).blocks(xs, ys)
        worst = max(worst, float(np.abs(np.diagonal(M - B, axis1=0, axis2=1)).max()))
        worst_ab = max(worst_ab, state.ab_residual())
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and worst_ab <= 1e-9 and dt <= 60.0
    report(4, ok, f"max route deviation={worst:.1e} (<=1e-8), max |AB-1|={worst_ab:.1e} (<=1e-9), {dt:.1f}s (<=60s)")


def test_criterion_05_edge_convergence():
    t0 = time.perf_counter()
    K = kn.goe_matrix_kernel()
    goe = K.blocks(XI_GRID, XI_GRID)
    devs, env = [], []
    for T in (50.0, 200.0, 800.0):
        G, _ = kn.edge_blocks(XI_GRID, XI_GRID, T)
        devs.append(np.abs(G - goe).max(axis=(0, 1)).ravel())
        env.append(max(kn.edge_bound_ratios(XI_GRID, XI_GRID, T).values()))
    devs = np.array(devs)
    mono = bool(np.all(devs[1] < devs[0]) and np.all(devs[2] < devs[1]))
    env_ok = max(env) <= EDGE_BOUND_C
    dt = time.perf_counter() - t0
    ok = mono and env_ok and dt <= 120.0
    table = "; ".join(f"G{k}: " + " > ".join(f"{v:.3f}" for v in devs[:, i]) for i, k in enumerate(("11", "12", "21", "22")))
    report(5, ok, f"strictly decreasing: {mono} [{table}], envelope max ratio={max(env):.2f} (C={EDGE_BOUND_C}), {dt:.1f}s (<=120s)")


def test_criterion_06_rsk_greene():
    t0 = time.perf_counter()
    mismatches, checked, i = 0, 0, 0
    while checked < 200:
        c = ps.sample_poisson("triangle", 2.0, 2.0, seed=606, index=i)
        i += 1
        if len(c) > 8:
            continue
        seq = ps._light_cone_sequence(c).tolist()
        lam = ps.rsk_shape(c).shape
        a = ps.greene_bruteforce(seq)
        full = (list(lam) + [0] * len(seq))[: len(seq)]
        mismatches += list(np.cumsum(full)) != a
        checked += 1
    example = ps.rsk_shape_of_sequence([2, 4, 5, 1, 6, 3])
    dual = ps.rsk_shape_of_sequence([3, 6, 1, 5, 4, 2])
    dt = time.perf_counter() - t0
    ok = mismatches == 0 and example == (4, 2) and dual == (2, 2, 1, 1) and dt <= 30.0
    report(6, ok, f"Greene mismatches={mismatches}/{checked}, example shape={example}, dual={dual}, {dt:.1f}s (<=30s)")


def test_criterion_07_symmetrization():
    t0 = time.perf_counter()
    bad_double = bad_height = bad_pair = 0
    for T in (2.0, 5.0):
        for i in range(1000):
            c = ps.sample_poisson("triangle", 2.0, T, seed=707, index=i)
            lam = ps.rsk_shape(c)
            s = ps.symmetrize(c)
            sym = ps.rsk_shape(s)
            bad_double += sym.shape != tuple(2 * v for v in lam.shape)
            bad_height += any(2 * lam.height(j) != sym.height(j) + j for j in range(0, -len(lam.shape) - 1, -1))
            bad_pair += not all(v % 2 == 0 for v in sym.shape)
    dt = time.perf_counter() - t0
    ok = bad_double == bad_height == bad_pair == 0 and dt <= 30.0
    report(7, ok, f"2000 configs: doubling failures={bad_double}, height-relation failures={bad_height}, odd displacements={bad_pair}, {dt:.1f}s (<=30s)")


def test_criterion_08_f1_consistency():
    t0 = time.perf_counter()
    s = list(range(-4, 5))
    ny = [kn.f1_cdf(v) for v in s]
    se = [kn.f1_cdf(v, route="series") for v in s]
    dbl = [kn.f1_cdf(v, m=120) for v in s]
    route = max(abs(a - b) for a, b in zip(ny, se))
    res = max(abs(a - b) for a, b in zip(ny, dbl))
    mono = bool(np.all(np.diff(ny) > 0))
    top = kn.f1_cdf(10.0)
    dt = time.perf_counter() - t0
    ok = route <= 1e-6 and mono and abs(top - 1) <= 1e-8 and res <= 1e-7 and dt <= 60.0
    report(8, ok, f"route gap={route:.1e} (<=1e-6), monotone={mono}, |F1(10)-1|={abs(top - 1):.1e}, doubling={res:.1e} (<=1e-7), {dt:.1f}s (<=60s)")


def test_criterion_09_tracy_widom_at_t100(mc):
    st, dt = mc[100.0]
    t0 = time.perf_counter()
    ks = st.ks_f1()
    ks_mid = st.ks_f1(midpoint=True)
    count = st.eta(hs.TestFunction("ind", "indicator", -2.0, 0.0))
    mean, se = st.moment(count)
    pred = hs.predict_m1(hs.TestFunction("ind", "indicator", -2.0, 0.0))
    z = (mean - pred) / se
    mean_top = float(np.mean(st.top * 2 ** (2 / 3)))
    dt += time.perf_counter() - t0
    ok = ks <= TOL.ks_max and abs(z) <= TOL.n_sigma and dt <= 600.0
    report(
        9,
        ok,
        f"T=100, {st.samples} samples: KS={ks:.4f} (<=0.03; continuity-corrected {ks_mid:.4f}), "
        f"E eta(1[-2,0])={mean:.4f}+-{se:.4f} vs {pred:.4f} (z={z:+.1f}, |z|<=3), mean xi0*2^(2/3)={mean_top:.4f}, {dt:.0f}s (<=600s)",
    )


def test_criterion_10_moment_stability(mc):
    t0 = time.perf_counter()
    per_T = {T: hs.count_moments(st) for T, (st, _) in mc.items()}
    growth = hs.moment_growth(per_T)
    worst_key = max(growth, key=growth.get)
    finite = all(math.isfinite(m) for d in per_T.values() for m, _ in d.values())
    dt = sum(v for _, v in mc.values()) + time.perf_counter() - t0
    ok = finite and growth[worst_key] <= TOL.n_sigma and dt <= 600.0
    M, m = worst_key
    trail = " -> ".join(f"{per_T[T][worst_key][0]:.3f}+-{per_T[T][worst_key][1]:.3f}" for T in sorted(per_T))
    report(
        10,
        ok,
        f"max growth {growth[worst_key]:+.1f} sigma at M={M}, m={m} (T=50,100,200: {trail}); all finite={finite}, {dt:.0f}s (<=600s)",
    )
