"""Parameter types shared by every solver.

Frequencies are in units of γ₁ (γ₁ = 1 by default), positions are the
dimensionless phase κx along the cavity standing wave.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Any

# θ₃ = π/4, θ₂ = π/2 + π/4: the beam geometry where the spatial phases cancel.
DEFAULT_THETA3 = math.pi / 4
DEFAULT_THETA2 = math.pi / 2 + math.pi / 4

BALANCE_TOLERANCE = 1e-12


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class DriveConfig:
    """Drive-field amplitudes, collective phase and beam geometry.

    ``omega1`` is the peak Rabi frequency of the standing wave; the coupling
    seen by the atom is ``omega1 * sin(kappa_x)``. ``k_over_kappa`` relates
    the running-beam wavenumber k to the cavity wavenumber κ.
    """

    omega1: float = 0.0
    omega2: float = 0.0
    omega3: float = 0.0
    phi: float = 0.0
    theta2: float = DEFAULT_THETA2
    theta3: float = DEFAULT_THETA3
    k_over_kappa: float = 1.0

    def __post_init__(self) -> None:
        _require_finite(
            omega1=self.omega1,
            omega2=self.omega2,
            omega3=self.omega3,
            phi=self.phi,
            theta2=self.theta2,
            theta3=self.theta3,
            k_over_kappa=self.k_over_kappa,
        )
        for name in ("omega1", "omega2", "omega3"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)!r}")

    @property
    def angle_sum(self) -> float:
        """cosθ₂ + cosθ₃."""
        return math.cos(self.theta2) + math.cos(self.theta3)

    @property
    def is_balanced(self) -> bool:
        """True when the running-beam phases cancel (cosθ₂ + cosθ₃ = 0)."""
        return abs(self.angle_sum) <= BALANCE_TOLERANCE

    def with_phase(self, phi: float) -> "DriveConfig":
        return replace(self, phi=phi)

    def balanced(self) -> "DriveConfig":
        """Same amplitudes and phase, default (balanced) beam angles."""
        return replace(self, theta2=DEFAULT_THETA2, theta3=DEFAULT_THETA3)

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class DecayConfig:
    """Radiative rates of |a₁⟩, |a₂⟩ and the b–c dephasing rate."""

    gamma1: float = 1.0
    gamma2: float = 0.0
    gamma_bc: float = 0.0

    def __post_init__(self) -> None:
        _require_finite(gamma1=self.gamma1, gamma2=self.gamma2, gamma_bc=self.gamma_bc)
        if self.gamma1 <= 0:
            raise ValueError(f"gamma1 must be > 0, got {self.gamma1!r}")
        if self.gamma2 < 0:
            raise ValueError(f"gamma2 must be >= 0, got {self.gamma2!r}")
        if self.gamma_bc < 0:
            raise ValueError(f"gamma_bc must be >= 0, got {self.gamma_bc!r}")

    @property
    def is_metastable(self) -> bool:
        return self.gamma2 == 0.0

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class ProbePoint:
    """Probe detuning Δ and position κx."""

    delta: float
    kappa_x: float

    def __post_init__(self) -> None:
        _require_finite(delta=self.delta, kappa_x=self.kappa_x)


@dataclass(frozen=True)
class MediumPrefactor:
    """2N|℘|²/(ε₀ħ) collapsed into one scale; the probe amplitude cancels."""

    scale: float = 1.0

    def __post_init__(self) -> None:
        _require_finite(scale=self.scale)
        if self.scale <= 0:
            raise ValueError(f"scale must be > 0, got {self.scale!r}")


@dataclass(frozen=True)
class Susceptibility:
    """χ = χ' + iχ'' in units of the medium prefactor."""

    chi_re: float
    chi_im: float

    @classmethod
    def from_complex(cls, value: complex) -> "Susceptibility":
        return cls(chi_re=float(value.real), chi_im=float(value.imag))

    @property
    def value(self) -> complex:
        return complex(self.chi_re, self.chi_im)

    def to_dict(self) -> dict[str, Any]:
        return {"chi_re": self.chi_re, "chi_im": self.chi_im}


def wrap_position(kappa_x: float) -> float:
    """Fold a position into [−π, π)."""
    wrapped = math.fmod(kappa_x + math.pi, 2 * math.pi)
    if wrapped < 0:
        wrapped += 2 * math.pi
    return wrapped - math.pi


def collective_phase(phi1: float, phi2: float, phi3: float) -> float:
    """Collective phase φ = φ₂ + φ₃ − φ₁ of three individually phased drives."""
    return phi2 + phi3 - phi1
