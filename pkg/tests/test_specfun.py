import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flatpng import specfun as sf
from flatpng.config import BESSEL_ENVELOPE_C, BESSEL_ENVELOPE_T0, TOL

# mpmath at 30 digits, frozen
J7_7 = 0.233583569505696084397503285821
J5_73 = 0.313706170897309077459548321902
J2000_2100 = 0.0174357690584347102212708023411
AI_0 = 0.355028053887817239260063186004
AIP_0 = -0.258819403792806798405183560189

# calibration over T in {100, 400, 1600}: max gap(T, 2) * T^(2/3) = 0.306
GAP_C = 0.35


def mp_besselj(n, z):
    with mp.workdps(30):
        return float(mp.besselj(n, z, maxprec=100000, maxterms=10**7))


def maclaurin_airy(x, terms=80):
    """Ai from the two Maclaurin series f, g with Ai = c1 f - c2 g."""
    with mp.workdps(40):
        x = mp.mpf(x)
        c1 = 1 / (mp.power(3, mp.mpf(2) / 3) * mp.gamma(mp.mpf(2) / 3))
        c2 = 1 / (mp.power(3, mp.mpf(1) / 3) * mp.gamma(mp.mpf(1) / 3))
        f = g = mp.mpf(0)
        tf, tg = mp.mpf(1), x
        for k in range(terms):
            f += tf
            g += tg
            tf *= x**3 / ((3 * k + 2) * (3 * k + 3))
            tg *= x**3 / ((3 * k + 3) * (3 * k + 4))
        return float(c1 * f - c2 * g)


def test_trivial_values():
    assert sf.bessel_j(0, 0) == 1.0
    assert sf.bessel_j(3, 0) == 0.0


def test_reflection_example():
    assert sf.bessel_j(-5, 7.3) == -sf.bessel_j(5, 7.3)
    assert sf.bessel_j(5, 7.3) == pytest.approx(J5_73, rel=TOL.bessel_rel)


def test_seven_seven_two_methods():
    miller = sf.bessel_j_sequence(7, 7.0)[7]
    series = sf.bessel_j_series(7, 7.0)
    assert miller == pytest.approx(J7_7, rel=TOL.bessel_rel)
    assert series == pytest.approx(J7_7, rel=TOL.bessel_rel)
    assert sf.bessel_j(7, 7) == pytest.approx(miller, rel=1e-14)


def test_negative_argument_rejected():
    with pytest.raises(ValueError):
        sf.bessel_j(2, -1.0)
    with pytest.raises(ValueError):
        sf.bessel_j(2.5, 1.0)
    with pytest.raises(ValueError):
        sf.bessel_j(TOL.bessel_max_order + 1, 1.0)


@pytest.mark.parametrize(
    "n,z",
    [(0, 0.3), (1, 2.0), (12, 3.5), (30, 31.0), (100, 80.0), (250, 300.0),
     (1000, 1000.0), (1500, 1400.0), (3, 5000.0), (4000, 4100.0)],
)
def test_against_mpmath(n, z):
    ref = mp_besselj(n, z)
    # relative error measured against the local envelope, so that points
    # close to a zero of J are not held to an impossible relative bound
    scale = max(abs(ref), 0.1 * min(1.0, z ** (-1.0 / 3.0)) if n < z + 3 * z ** (1 / 3) else abs(ref))
    assert abs(sf.bessel_j(n, z) - ref) <= TOL.bessel_rel * scale


def test_large_order_turning_point():
    assert sf.bessel_j(2000, 2100.0) == pytest.approx(J2000_2100, rel=TOL.bessel_rel)


@pytest.mark.parametrize("n,z", [(50, 1.0), (200, 10.0), (10_000, 100.0), (10**6, 1e3)])
def test_exponentially_small_regime(n, z):
    ref = mp_besselj(n, z) if n <= 10_000 else 0.0
    assert abs(sf.bessel_j(n, z) - ref) <= TOL.bessel_abs_small


def test_sequence_is_cached_and_readonly():
    a = sf.bessel_j_sequence(100, 50.0)
    assert a is sf.bessel_j_sequence(100, 50.0)
    with pytest.raises(ValueError):
        a[0] = 1.0


def test_uniform_expansion_tracks_recurrence():
    for n in (200, 1000, 5000):
        for z in (n - 2 * n ** (1 / 3), float(n), n + 3 * n ** (1 / 3)):
            env = n ** (-1.0 / 3.0)
            err = abs(sf.bessel_j_uniform(n, z) - sf.bessel_j(n, z))
            assert err <= env * n ** (-2.0 / 3.0)


@given(st.integers(min_value=1, max_value=400), st.floats(min_value=0.0, max_value=500.0))
@settings(max_examples=200, deadline=None)
def test_reflection_property(n, z):
    assert abs(sf.bessel_j(-n, z) - (-1) ** n * sf.bessel_j(n, z)) <= TOL.bessel_reflection


def test_bessel_i_against_mpmath():
    seq = sf.bessel_i_sequence(30, 16.0)
    for k in (0, 1, 7, 30):
        ref = float(mp.besseli(k, 16))
        assert seq[k] == pytest.approx(ref, rel=1e-12)


# ----------------------------------------------------------------- Airy


def test_airy_zero_against_maclaurin():
    assert abs(sf.airy(0.0) - maclaurin_airy(0.0)) <= TOL.airy_abs
    assert sf.airy(0.0) == pytest.approx(AI_0, abs=1e-15)
    assert sf.airy_prime(0.0) == pytest.approx(AIP_0, abs=1e-15)


@pytest.mark.parametrize("x", [-6.0, -3.3, -1.0, 0.7, 2.5, 6.0])
def test_airy_maclaurin_window(x):
    assert abs(sf.airy(x) - maclaurin_airy(x, terms=120)) <= TOL.airy_abs


def test_airy_grid_against_mpmath():
    xs = np.linspace(-15.0, 40.0, 221)
    ai, aip, _ = sf.airy_all(xs)
    with mp.workdps(30):
        ref = np.array([float(mp.airyai(x)) for x in xs])
        refp = np.array([float(mp.airyai(x, 1)) for x in xs])
    assert np.max(np.abs(ai - ref)) <= TOL.airy_abs
    assert np.max(np.abs(aip - refp)) <= TOL.airy_abs


def test_airy_integral_against_quadrature():
    with mp.workdps(25):
        for x in (-12.0, -2.0, 0.0, 1.5, 5.0):
            ref = float(mp.quad(mp.airyai, [x, max(x, 0) + 5, mp.inf]))
            assert sf.airy_integral(x) == pytest.approx(ref, abs=1e-13)


def test_airy_normalization_by_quadrature():
    x, w = np.polynomial.legendre.leggauss(40)
    total = 0.0
    for a in np.arange(-60.0, 40.0, 1.0):
        total += 0.5 * np.dot(w, sf.airy(a + 0.5 * (x + 1.0)))
    # the left tail of Ai is only conditionally integrable; its contribution
    # beyond -60 is added from the integration-by-parts expansion
    y = 60.0
    g, gp = sf.airy(-y), -sf.airy_prime(-y)
    left_tail = gp / y + g / y**2 - 2.0 * (gp / y**4 + 4.0 * g / y**5)
    assert abs(left_tail) > 0.01
    assert abs(total + left_tail - 1.0) <= TOL.airy_normalization


def test_airy_monotone_decay():
    xs = np.linspace(2.0, 40.0, 2000)
    ai = sf.airy(xs)
    assert np.all(np.diff(ai) < 0) and np.all(ai > 0)


def test_airy_deterministic_and_scalar():
    assert sf.airy(1.234) - sf.airy(1.234) == 0.0
    assert isinstance(sf.airy(0.5), float)
    assert sf.airy(np.array([0.5])).shape == (1,)


def test_airy_asymptotic_regions_continuous():
    for edge in (-200.0, 25.0):
        xs = np.array([edge - 1e-3, edge + 1e-3])
        ai = sf.airy(xs)
        with mp.workdps(30):
            ref = np.array([float(mp.airyai(x)) for x in xs])
        assert np.max(np.abs(ai - ref)) < 1e-12


# ----------------------------------------------------------- relations


def test_gap_shrinks_at_center():
    assert sf.bessel_airy_limit_gap(1600, 0) < sf.bessel_airy_limit_gap(100, 0)


def test_gap_order_zero_boundary():
    T = 27.0
    xi = -2 * T ** (2 / 3)
    gap = sf.bessel_airy_limit_gap(T, xi)
    assert math.isfinite(gap)
    assert gap == pytest.approx(abs(T ** (1 / 3) * sf.bessel_j(0, 2 * T) - sf.airy(xi)))


def test_gap_calibrated_bound():
    assert sf.bessel_airy_limit_gap(400, 2) <= GAP_C * 400 ** (-2 / 3)


def test_gap_lattice_aligned_is_monotone():
    # the same comparison at the lattice point actually used removes the
    # fractional-part jitter and decreases cleanly
    for xi in (-4, -2, 0, 2, 4):
        gaps = []
        for T in (100, 400, 1600):
            n = math.floor(2 * T + xi * T ** (1 / 3) + 1e-12)
            x_n = (n - 2 * T) / T ** (1 / 3)
            gaps.append(abs(T ** (1 / 3) * sf.bessel_j(n, 2 * T) - sf.airy(x_n)))
        assert gaps[0] > gaps[1] > gaps[2]


def test_landau_examples():
    assert sf.landau_bound_check(0, 1.0)
    assert sf.landau_bound_check(5, 5.0)
    with pytest.raises(ValueError):
        sf.landau_bound_check(1, 0.0)


def test_landau_grid():
    for x in (1.0, 10.0, 100.0, 1000.0):
        J = sf.bessel_j_sequence(200, x)
        assert np.all(np.abs(J) <= TOL.landau_c * x ** (-1 / 3))
        assert all(sf.landau_bound_check(n, x) for n in range(-200, 201, 7))


@pytest.mark.parametrize("z,K", [(0.0, 50), (2.0, 60), (8.0, 200), (80.0, None)])
def test_identity_residuals(z, K):
    res = sf.bessel_identity_residuals(z, K)
    assert len(res) == 6
    assert max(abs(r) for r in res) <= TOL.identity_residual
    if z == 0.0:
        assert all(r == 0.0 for r in res)


def test_identity_cutoff_too_small():
    with pytest.raises(sf.CutoffTooSmall):
        sf.bessel_identity_residuals(80.0, 60)


def test_identities_hold_for_mpmath_values():
    # the recurrence normalization enforces the sum of squares; check that
    # the mpmath values satisfy the alternating and cross-sum identities too
    with mp.workdps(30):
        z = 8
        J = [mp.besselj(k, z) for k in range(80)]
        r2 = J[0] + 2 * sum(J[2::2]) - 1
        assert abs(float(r2)) < 1e-25
    ours = sf.bessel_j_sequence(79, 8.0)
    assert np.max(np.abs(ours - np.array([float(v) for v in J]))) < 1e-15


def test_tail_estimate_dominates_true_tail():
    z = 40.0
    J = sf.bessel_j_sequence(200, z)
    for K in (60, 80, 100):
        true_tail = np.abs(J[K + 1:]).sum()
        assert true_tail <= sf.bessel_tail_estimate(J, z, K) * (1 + 1e-12)
    assert sf.bessel_tail_estimate(J, z, 30) == math.inf


@pytest.mark.parametrize("T", [BESSEL_ENVELOPE_T0, 200.0, 800.0])
def test_decay_envelopes(T):
    c = T ** (1 / 3)
    J = sf.bessel_j_sequence(int(2 * T + 12 * c) + 5, 2 * T)
    for N in np.arange(-10.0, 10.01, 0.25):
        n = math.floor(2 * T + N * c)
        diff = abs(T ** (2 / 3) * (J[n + 1] - J[n]))
        if N >= 0:
            assert abs(c * J[n]) <= BESSEL_ENVELOPE_C * math.exp(-N / 2)
            assert diff <= BESSEL_ENVELOPE_C * math.exp(-N / 2)
        else:
            assert diff <= BESSEL_ENVELOPE_C * (1 + abs(N))
