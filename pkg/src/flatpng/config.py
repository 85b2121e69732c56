"""Numerical tolerances and method thresholds, collected in one record.

Every module and every test reads its error budgets from ``TOL`` so that a
change of budget happens in exactly one place.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # special functions
    bessel_rel: float = 1e-12
    bessel_abs_small: float = 1e-13
    bessel_reflection: float = 1e-14
    bessel_max_order: int = 1_000_000
    airy_abs: float = 1e-12
    airy_normalization: float = 1e-8
    identity_residual: float = 1e-11
    identity_tail: float = 1e-14
    landau_c: float = 0.785

    # skew-symmetric linear algebra
    antisymmetry: float = 1e-12
    pfaffian_det_rel: float = 1e-9
    pfaffian_bruteforce_rel: float = 1e-11
    congruence_rel: float = 1e-9

    # Fredholm determinants
    fredholm_dual: float = 1e-6
    fredholm_resolution: float = 1e-7
    fredholm_tail: float = 1e-10
    separable_kernel: float = 1e-8

    # finite-time kernel
    kernel_dual_route: float = 1e-8
    kernel_tail: float = 1e-12
    inverse_check: float = 1e-9
    window_boundary: float = 1e-10
    toeplitz_closeness: float = 1e-8

    # GOE kernel
    goe_cutoff: float = 1e-12
    goe_resolution: float = 1e-9
    sign_identity: float = 1e-6

    # Monte Carlo
    ks_max: float = 0.03
    n_sigma: float = 3.0
    mean_band: float = 0.15


TOL = Tolerances()

# Method switch-overs for Bessel J_n(z). The ascending series is used when
# z*z/4 <= SERIES_RATIO*(n+1): every term is then smaller than its
# predecessor, so there is no cancellation and ~25 terms give full precision.
SERIES_RATIO = 0.25
# Miller recurrence start: max(n, z) + MILLER_PAD + MILLER_CUBE*z**(1/3).
# At that order J is below 1e-30 relative to the normalization sum.
MILLER_PAD = 40
MILLER_CUBE = 15.0

# Airy evaluation: local Taylor expansions around anchors spaced AIRY_STEP
# apart on [AIRY_LEFT, AIRY_RIGHT]; asymptotic series outside.
AIRY_STEP = 0.25
AIRY_DEGREE = 40
AIRY_LEFT = -200.0
AIRY_RIGHT = 25.0

# Decay envelope |T^(1/3) J_[2T+N T^(1/3)](2T)| <= C e^(-N/2), and the
# matching discrete-derivative bounds, checked for T >= T0 with one C.
# Calibrated maximum over T in {50, 200, 800}: 0.40.
BESSEL_ENVELOPE_C = 0.5
BESSEL_ENVELOPE_T0 = 50.0

# Finite kernel: Bessel sums cut at order 2T~ + CUBE*T~^(1/3) + PAD.
KERNEL_CUTOFF_CUBE = 40.0
KERNEL_CUTOFF_PAD = 20

# GOE kernel quadrature: nodes per unit length of lambda, and the Airy
# argument every lambda rule must reach (Ai(20) ~ 1e-27).
GOE_NODES_PER_UNIT = 20
GOE_REACH = 20.0

# Damping used by the sign-identity quadrature.
SIGN_DAMPING = 0.005

# One constant for all seven edge-kernel envelope bounds on [-6, 6]^2.
# Calibrated maximum over T~ in {50, 200, 800}: 6.60, set by the (2, 2)
# residual block whose parity part does not decay.
EDGE_BOUND_C = 8.0
