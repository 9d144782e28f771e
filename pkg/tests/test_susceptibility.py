import math

import numpy as np
import pytest

from atom_loc.errors import DegenerateDenominator, DegenerateParameters, UnsupportedGeometry
from atom_loc.model import DecayConfig, DriveConfig, MediumPrefactor, ProbePoint, collective_phase
from atom_loc.steady_state import chi_numeric
from atom_loc.susceptibility import (
    chi_closed_form,
    chi_closed_form_grid,
    chi_metastable,
    effective_phase,
    effective_rabi,
    metastable_bracket,
    roots_r,
    transparency_detunings,
    y_denominator,
)

pytestmark = pytest.mark.unit

METASTABLE = DecayConfig(gamma2=0.0)


def _random_drive(rng, phi=None):
    omega1, omega2, omega3 = rng.uniform(0.0, 40.0, size=3)
    return DriveConfig(
        omega1=float(omega1),
        omega2=float(omega2),
        omega3=float(omega3),
        phi=float(rng.uniform(0.0, 2 * math.pi)) if phi is None else phi,
    )


@pytest.mark.parametrize("gamma2", [0.0, 0.5, 2.0])
def test_two_level_reduction(gamma2):
    decay = DecayConfig(gamma2=gamma2)
    for delta in np.linspace(-10.0, 10.0, 100):
        expected = (2 * delta + 1j) / (4 * delta**2 + 1.0)
        chi = chi_closed_form(DriveConfig(), decay, ProbePoint(float(delta), 0.3)).value
        assert abs(chi - expected) <= 1e-12
        numeric = chi_numeric(DriveConfig(), decay, ProbePoint(float(delta), 0.3)).value
        assert abs(numeric - expected) <= 1e-12


def test_prefactor_scales_linearly():
    drive = DriveConfig(omega1=3.0, omega2=1.0, omega3=1.0, phi=math.pi / 2)
    point = ProbePoint(1.4, 0.7)
    base = chi_closed_form(drive, METASTABLE, point).value
    scaled = chi_closed_form(drive, METASTABLE, point, MediumPrefactor(scale=2.5)).value
    assert scaled == pytest.approx(2.5 * base, rel=1e-15)


def test_y_denominator_matches_closed_form():
    drive = DriveConfig(omega1=30.0, omega2=20.0, omega3=20.0, phi=0.0)
    decay = DecayConfig(gamma2=0.5)
    point = ProbePoint(7.5, -0.4)
    y = y_denominator(drive, decay, point)
    numerator = drive.omega2**2 - 4 * point.delta**2 + 2j * decay.gamma2 * point.delta
    assert chi_closed_form(drive, decay, point).value == pytest.approx(numerator / y, rel=1e-13)


def test_zero_denominator_raises():
    with pytest.raises(DegenerateDenominator):
        chi_closed_form(DriveConfig(), METASTABLE, ProbePoint(0.0, 1.0))


def test_grid_marks_zero_denominator_as_nan():
    values = chi_closed_form_grid(DriveConfig(), METASTABLE, 0.0, [0.0, 1.0])
    assert np.isnan(values.real).all() and np.isnan(values.imag).all()


def test_unbalanced_angles_rejected():
    drive = DriveConfig(omega1=1.0, omega2=1.0, omega3=1.0, theta2=math.pi / 3)
    with pytest.raises(UnsupportedGeometry):
        chi_closed_form(drive, METASTABLE, ProbePoint(1.0, 0.2))


def test_grid_matches_pointwise():
    drive = DriveConfig(omega1=20.0, omega2=1.0, omega3=1.0, phi=math.pi / 2)
    x = np.linspace(-math.pi, math.pi, 33)
    grid = chi_closed_form_grid(drive, METASTABLE, 5.0, x)
    for xi, value in zip(x, grid):
        assert value == pytest.approx(chi_closed_form(drive, METASTABLE, ProbePoint(5.0, float(xi))).value, rel=1e-13, abs=1e-15)


def test_transparency_points():
    rng = np.random.default_rng(7)
    for _ in range(100):
        drive = _random_drive(rng)
        drive = DriveConfig(
            omega1=drive.omega1, omega2=float(rng.uniform(1.0, 40.0)), omega3=drive.omega3, phi=drive.phi
        )
        x = float(rng.uniform(-math.pi, math.pi))
        for delta in transparency_detunings(drive):
            assert abs(chi_closed_form(drive, METASTABLE, ProbePoint(delta, x)).value) <= 1e-14


def test_transparency_detunings():
    assert transparency_detunings(DriveConfig(omega2=20.0)) == (-10.0, 10.0)


def test_metastable_absorption_bounded_and_consistent():
    rng = np.random.default_rng(11)
    for _ in range(200):
        drive = _random_drive(rng)
        point = ProbePoint(float(rng.uniform(-50, 50)), float(rng.uniform(-math.pi, math.pi)))
        chi = chi_closed_form(drive, METASTABLE, point)
        assert abs(chi.value) <= 1.0 + 1e-12
        assert chi_metastable(drive, 1.0, point) == pytest.approx(chi.chi_im, rel=1e-10, abs=1e-14)


@pytest.mark.slow
def test_metastable_consistency_on_random_grid():
    rng = np.random.default_rng(31)
    for _ in range(10_000):
        drive = _random_drive(rng)
        point = ProbePoint(float(rng.uniform(-50, 50)), float(rng.uniform(-math.pi, math.pi)))
        expected = chi_metastable(drive, 1.0, point)
        assert abs(chi_closed_form(drive, METASTABLE, point).chi_im - expected) <= 1e-12 * abs(expected)


@pytest.mark.slow
def test_absorption_nonnegative_on_random_grid():
    rng = np.random.default_rng(37)
    for _ in range(100):
        drive = _random_drive(rng)
        decay = DecayConfig(gamma2=float(rng.uniform(0.0, 2.0)))
        delta = rng.uniform(-50, 50, size=100)
        x = rng.uniform(-math.pi, math.pi, size=100)
        absorption = chi_closed_form_grid(drive, decay, delta, x).imag
        assert absorption.min() >= -1e-12


def test_uniform_absorption_at_zero_detuning():
    drive = DriveConfig(omega1=30.0, omega2=20.0, omega3=20.0, phi=math.pi / 2)
    values = chi_closed_form_grid(drive, METASTABLE, 0.0, np.linspace(-math.pi, math.pi, 2048, endpoint=False))
    assert np.ptp(values.imag) <= 1e-12
    assert values.imag == pytest.approx(np.ones(2048), abs=1e-12)


def test_phase_mirror_symmetry():
    rng = np.random.default_rng(3)
    x = np.linspace(-math.pi, math.pi, 512)
    for _ in range(20):
        drive = _random_drive(rng, phi=0.0)
        decay = DecayConfig(gamma2=float(rng.choice([0.0, 0.5, 2.0])))
        delta = float(rng.uniform(-50, 50))
        at_zero = chi_closed_form_grid(drive, decay, delta, x)
        at_pi = chi_closed_form_grid(drive.with_phase(math.pi), decay, delta, -x)
        np.testing.assert_allclose(at_zero, at_pi, rtol=1e-12, atol=1e-12)


def test_detuning_sign_symmetry():
    rng = np.random.default_rng(5)
    x = np.linspace(-math.pi, math.pi, 512)
    for _ in range(20):
        drive = _random_drive(rng)
        decay = DecayConfig(gamma2=float(rng.choice([0.0, 0.5, 2.0])))
        delta = float(rng.uniform(-50, 50))
        forward = chi_closed_form_grid(drive, decay, delta, x).imag
        backward = chi_closed_form_grid(drive, decay, -delta, -x).imag
        np.testing.assert_allclose(forward, backward, rtol=1e-12, atol=1e-12)


def test_half_pi_profiles_are_even():
    rng = np.random.default_rng(9)
    x = np.linspace(-math.pi, math.pi, 512)
    for _ in range(20):
        drive = _random_drive(rng, phi=math.pi / 2)
        delta = float(rng.uniform(-50, 50))
        left = chi_closed_form_grid(drive, METASTABLE, delta, x)
        right = chi_closed_form_grid(drive, METASTABLE, delta, -x)
        np.testing.assert_allclose(left, right, rtol=1e-12, atol=1e-12)


def test_general_angles_match_effective_phase():
    rng = np.random.default_rng(13)
    for _ in range(200):
        base = _random_drive(rng)
        drive = DriveConfig(
            omega1=base.omega1,
            omega2=base.omega2,
            omega3=base.omega3,
            phi=base.phi,
            theta2=float(rng.uniform(0.0, math.pi)),
            theta3=float(rng.uniform(0.0, math.pi)),
        )
        decay = DecayConfig(gamma2=float(rng.choice([0.0, 0.5, 2.0])))
        point = ProbePoint(float(rng.uniform(-50, 50)), float(rng.uniform(-math.pi, math.pi)))
        numeric = chi_numeric(drive, decay, point).value
        substituted = drive.balanced().with_phase(effective_phase(drive, point.kappa_x))
        closed = chi_closed_form(substituted, decay, point).value
        assert abs(numeric - closed) / max(1.0, abs(numeric), abs(closed)) <= 1e-10


def test_effective_phase_is_identity_for_balanced_angles():
    drive = DriveConfig(omega1=1.0, phi=0.3)
    assert effective_phase(drive, 1.7) == pytest.approx(0.3, abs=1e-12)
    shifted = DriveConfig(phi=0.3, theta2=0.0, theta3=0.0, k_over_kappa=2.0)
    assert effective_phase(shifted, 0.5) == pytest.approx(0.3 - 2.0 * 0.5 * 2.0)


def test_effective_rabi_follows_standing_wave():
    drive = DriveConfig(omega1=3.0)
    assert effective_rabi(drive, math.pi / 2) == 3.0
    assert effective_rabi(drive, 0.0) == 0.0


def test_collective_phase():
    assert collective_phase(0.1, 0.5, 1.2) == pytest.approx(1.6)


def test_roots_for_sub_half_wavelength_case():
    pair = roots_r(DriveConfig(omega1=30.0, omega2=20.0, omega3=20.0, phi=0.0), 7.5)
    assert pair.is_real
    assert pair.r1.real == pytest.approx(-0.5, abs=1e-12)
    assert pair.r2.real == pytest.approx(-1.2777777777777777, abs=1e-12)


def test_roots_outside_unit_interval():
    pair = roots_r(DriveConfig(omega1=3.0, omega2=1.0, omega3=1.0, phi=math.pi / 2), 5.0)
    assert sorted(abs(r) for r in pair.real_roots()) == pytest.approx([3.2998, 3.2998], abs=1e-4)


def test_roots_strong_standing_wave():
    pair = roots_r(DriveConfig(omega1=20.0, omega2=1.0, omega3=1.0, phi=math.pi / 2), 5.0)
    assert sorted(pair.real_roots()) == pytest.approx([-math.sqrt(98) / 20, math.sqrt(98) / 20], abs=1e-12)


def test_roots_sum_and_product():
    rng = np.random.default_rng(17)
    for _ in range(100):
        drive = _random_drive(rng)
        delta = float(rng.uniform(-50, 50))
        pair = roots_r(drive, delta)
        total = -drive.omega2 * drive.omega3 * math.cos(drive.phi) / (delta * drive.omega1)
        product = ((drive.omega2**2 + drive.omega3**2) - 4 * delta**2) / drive.omega1**2
        assert abs(pair.r1 + pair.r2 - total) <= 1e-9 * max(1.0, abs(total))
        assert abs(pair.r1 * pair.r2 - product) <= 1e-9 * max(1.0, abs(product))


def test_roots_zero_the_metastable_bracket():
    rng = np.random.default_rng(19)
    for _ in range(500):
        o1, o2, o3 = (float(v) for v in rng.uniform(1.0, 40.0, size=3))
        drive = DriveConfig(omega1=o1, omega2=o2, omega3=o3, phi=float(rng.uniform(0.0, 2 * math.pi)))
        delta = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 50.0))
        pair = roots_r(drive, delta)
        for r in (pair.r1, pair.r2):
            scale = 8 * abs(delta) ** 3 + 2 * abs(delta) * (o1**2 * abs(r) ** 2 + o2**2 + o3**2) + 2 * o1 * o2 * o3 * abs(r)
            assert abs(metastable_bracket(drive, delta, r)) <= 1e-10 * scale


def test_complex_roots_when_discriminant_negative():
    pair = roots_r(DriveConfig(omega1=30.0, omega2=20.0, omega3=20.0, phi=math.pi / 2), 1.0)
    assert not pair.is_real
    assert pair.real_roots() == []
    assert pair.r1 == pytest.approx(pair.r2.conjugate())


@pytest.mark.parametrize("drive, delta", [(DriveConfig(omega1=3.0), 0.0), (DriveConfig(omega1=0.0), 1.0)])
def test_roots_degenerate_parameters(drive, delta):
    with pytest.raises(DegenerateParameters):
        roots_r(drive, delta)


@pytest.mark.parametrize(
    "kwargs",
    [{"omega1": -1.0}, {"phi": math.inf}, {"omega2": math.nan}],
)
def test_drive_validation(kwargs):
    with pytest.raises(ValueError):
        DriveConfig(**kwargs)


@pytest.mark.parametrize("kwargs", [{"gamma1": 0.0}, {"gamma2": -0.1}, {"gamma_bc": -1.0}])
def test_decay_validation(kwargs):
    with pytest.raises(ValueError):
        DecayConfig(**kwargs)
