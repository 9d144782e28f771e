"""Closed-form weak-probe susceptibility of the four-level scheme.

With unit probe Rabi frequency the probe coherence is

    ρ̃_{a₁c} = (Ω₂² − 4Δ² + 2iγ₂Δ) / Y,    Y = A + iB,

    A = −8Δ³ + 2Δ(Ω₁²sin²κx + Ω₂² + Ω₃²) + 2γ₁γ₂Δ + 2Ω₁Ω₂Ω₃cosφ sinκx
    B = 4Δ²(γ₁ + γ₂) − γ₁Ω₂² − γ₂Ω₁²sin²κx

and χ is that coherence times the medium prefactor. The expression holds for
γ_bc = 0 and balanced beam angles (cosθ₂ + cosθ₃ = 0); other angles reduce to
it through :func:`effective_phase`.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DegenerateDenominator, DegenerateParameters, UnsupportedGeometry
from .model import DecayConfig, DriveConfig, MediumPrefactor, ProbePoint, Susceptibility

logger = logging.getLogger(__name__)

DEFAULT_PREFACTOR = MediumPrefactor()


@dataclass(frozen=True)
class RootPair:
    """Roots R₁,₂ of the metastable absorption denominator in sinκx.

    ``r1`` carries the + sign of the square root, ``r2`` the − sign.
    """

    r1: complex
    r2: complex

    @property
    def is_real(self) -> bool:
        return self.r1.imag == 0.0 and self.r2.imag == 0.0

    def real_roots(self) -> list[float]:
        if not self.is_real:
            return []
        return [self.r1.real, self.r2.real]


def effective_rabi(drive: DriveConfig, kappa_x: float) -> float:
    """Local standing-wave Rabi frequency Ω₁ sinκx."""
    return drive.omega1 * math.sin(kappa_x)


def effective_phase(drive: DriveConfig, kappa_x: ArrayLike) -> NDArray[np.float64] | float:
    """Phase that reproduces general beam angles in the balanced closed form.

    The running-beam phases e^{ikx cosθ} enter only the three-field loop term,
    shifting φ by −(k/κ)κx(cosθ₂ + cosθ₃).
    """
    shifted = drive.phi - drive.k_over_kappa * np.asarray(kappa_x, dtype=float) * drive.angle_sum
    if np.ndim(shifted) == 0:
        return float(shifted)
    return shifted


def _a_b(drive: DriveConfig, decay: DecayConfig, delta, s):
    g1, g2 = decay.gamma1, decay.gamma2
    o1, o2, o3 = drive.omega1, drive.omega2, drive.omega3
    s1sq = o1**2 * s**2
    a = (
        -8 * delta**3
        + 2 * delta * (s1sq + o2**2 + o3**2)
        + 2 * g1 * g2 * delta
        + 2 * o1 * o2 * o3 * math.cos(drive.phi) * s
    )
    b = 4 * delta**2 * (g1 + g2) - g1 * o2**2 - g2 * s1sq
    return a, b


def _numerator(drive: DriveConfig, decay: DecayConfig, delta):
    return drive.omega2**2 - 4 * delta**2 + 2j * decay.gamma2 * delta


def y_denominator(drive: DriveConfig, decay: DecayConfig, point: ProbePoint) -> complex:
    """Y = A + iB at one (Δ, κx) point."""
    a, b = _a_b(drive, decay, point.delta, math.sin(point.kappa_x))
    return complex(a, b)


def _require_balanced(drive: DriveConfig) -> None:
    if not drive.is_balanced:
        raise UnsupportedGeometry(
            "closed form needs cos(theta2) + cos(theta3) = 0; "
            "use effective_phase() or the numeric solver",
            data={"angle_sum": drive.angle_sum},
        )


def chi_closed_form(
    drive: DriveConfig,
    decay: DecayConfig,
    point: ProbePoint,
    prefactor: MediumPrefactor = DEFAULT_PREFACTOR,
) -> Susceptibility:
    """χ from the closed form, split into χ' and χ'' over Z = YY*."""
    _require_balanced(drive)
    a, b = _a_b(drive, decay, point.delta, math.sin(point.kappa_x))
    z = a * a + b * b
    if z == 0.0:
        raise DegenerateDenominator(
            "Y = 0 at this point", data={"delta": point.delta, "kappa_x": point.kappa_x}
        )
    n = drive.omega2**2 - 4 * point.delta**2
    g2d = 2 * decay.gamma2 * point.delta
    chi_re = prefactor.scale * (n * a + g2d * b) / z
    chi_im = prefactor.scale * (g2d * a - n * b) / z
    return Susceptibility(chi_re=chi_re, chi_im=chi_im)


def chi_closed_form_grid(
    drive: DriveConfig,
    decay: DecayConfig,
    delta: ArrayLike,
    kappa_x: ArrayLike,
    prefactor: MediumPrefactor = DEFAULT_PREFACTOR,
) -> NDArray[np.complex128]:
    """Vectorized closed form; ``delta`` and ``kappa_x`` broadcast together.

    Points where Y = 0 come back as complex NaN.
    """
    _require_balanced(drive)
    delta_arr = np.asarray(delta, dtype=float)
    s = np.sin(np.asarray(kappa_x, dtype=float))
    a, b = _a_b(drive, decay, delta_arr, s)
    z = a * a + b * b
    n = drive.omega2**2 - 4 * delta_arr**2
    g2d = 2 * decay.gamma2 * delta_arr
    with np.errstate(divide="ignore", invalid="ignore"):
        chi_re = prefactor.scale * (n * a + g2d * b) / z
        chi_im = prefactor.scale * (g2d * a - n * b) / z
    out = np.asarray(chi_re + 1j * chi_im, dtype=np.complex128)
    degenerate = np.broadcast_to(z == 0.0, out.shape)
    if degenerate.any():
        logger.debug("closed form undefined at %d grid points", int(degenerate.sum()))
        out = np.where(degenerate, complex(np.nan, np.nan), out)
    return out


def _metastable_bracket(drive: DriveConfig, delta, s):
    o1, o2, o3 = drive.omega1, drive.omega2, drive.omega3
    return (
        8 * delta**3
        - 2 * delta * (o1**2 * s**2 + o2**2 + o3**2)
        - 2 * o1 * o2 * o3 * math.cos(drive.phi) * s
    )


def chi_metastable(
    drive: DriveConfig,
    gamma1: float,
    point: ProbePoint,
    prefactor: MediumPrefactor = DEFAULT_PREFACTOR,
) -> float:
    """Absorption χ'' in the metastable limit γ₂ = 0."""
    n = drive.omega2**2 - 4 * point.delta**2
    bracket = _metastable_bracket(drive, point.delta, math.sin(point.kappa_x))
    denominator = gamma1**2 * n**2 + bracket**2
    if denominator == 0.0:
        raise DegenerateDenominator(
            "numerator and bracket vanish together",
            data={"delta": point.delta, "kappa_x": point.kappa_x},
        )
    return prefactor.scale * gamma1 * n**2 / denominator


def metastable_bracket(drive: DriveConfig, delta: float, sin_kx: complex) -> complex:
    """Bracketed term of the metastable denominator at sinκx = ``sin_kx``."""
    return _metastable_bracket(drive, delta, sin_kx)


def roots_r(drive: DriveConfig, delta: float) -> RootPair:
    """Values of sinκx where the metastable absorption denominator is minimal.

    R₁,₂ = {−Ω₂Ω₃cosφ ± √(Ω₂²Ω₃²cos²φ − 4Δ²[(Ω₂²+Ω₃²) − 4Δ²])}/(2ΔΩ₁).
    A negative discriminant gives a complex-conjugate pair.
    """
    if delta == 0.0 or drive.omega1 == 0.0:
        raise DegenerateParameters(
            "roots need delta != 0 and omega1 != 0",
            data={"delta": delta, "omega1": drive.omega1},
        )
    p = drive.omega2 * drive.omega3 * math.cos(drive.phi)
    q = 4 * delta**2 * ((drive.omega2**2 + drive.omega3**2) - 4 * delta**2)
    disc = p * p - q
    denom = 2 * delta * drive.omega1
    if disc < 0:
        root = cmath.sqrt(disc)
        return RootPair(r1=(-p + root) / denom, r2=(-p - root) / denom)

    root = math.sqrt(disc)
    # Pick the cancellation-free numerator, recover the other root from the product.
    product = ((drive.omega2**2 + drive.omega3**2) - 4 * delta**2) / drive.omega1**2
    if p >= 0:
        big = (-p - root) / denom
        if big == 0.0:
            return RootPair(r1=complex(0.0), r2=complex(0.0))
        return RootPair(r1=complex(product / big), r2=complex(big))
    big = (-p + root) / denom
    return RootPair(r1=complex(big), r2=complex(product / big))


def transparency_detunings(drive: DriveConfig) -> tuple[float, float]:
    """Detunings ±Ω₂/2 where metastable absorption vanishes."""
    return (-drive.omega2 / 2, drive.omega2 / 2)
