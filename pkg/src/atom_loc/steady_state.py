"""Direct steady-state solve of the linearized coherence equations.

To first order in the probe (atom starting in |c⟩) the rotated-frame
coherences R = (ρ̃_{a₁c}, ρ̃_{a₂c}, ρ̃_{bc}) obey dR/dt = −M R + C. The steady
state M⁻¹C is computed here for arbitrary beam angles and b–c dephasing.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import SingularSystem
from .model import DecayConfig, DriveConfig, MediumPrefactor, ProbePoint, Susceptibility
from .susceptibility import DEFAULT_PREFACTOR

logger = logging.getLogger(__name__)

# Probe Rabi frequency ℘E_p/ħ is set to one; χ is linear in it.
PROBE_SOURCE = 0.5j
SINGULAR_RELATIVE_DET = 1e-12


@dataclass(frozen=True)
class LinearSystem:
    m: NDArray[np.complex128]
    c: NDArray[np.complex128]


@dataclass(frozen=True)
class CoherenceVector:
    rho_a1c: complex
    rho_a2c: complex
    rho_bc: complex
    residual: float = 0.0

    @classmethod
    def from_array(cls, r: NDArray[np.complex128], residual: float = 0.0) -> "CoherenceVector":
        return cls(complex(r[0]), complex(r[1]), complex(r[2]), residual)

    def as_array(self) -> NDArray[np.complex128]:
        return np.array([self.rho_a1c, self.rho_a2c, self.rho_bc], dtype=np.complex128)


def build_system(drive: DriveConfig, decay: DecayConfig, point: ProbePoint) -> LinearSystem:
    """Coefficient matrix M and source C for one (Δ, κx) point."""
    delta = point.delta
    s = math.sin(point.kappa_x)
    kx = drive.k_over_kappa * point.kappa_x
    phase3 = np.exp(1j * (kx * math.cos(drive.theta3) - drive.phi))
    phase2 = np.exp(1j * kx * math.cos(drive.theta2))
    half_i = 0.5j

    m = np.empty((3, 3), dtype=np.complex128)
    m[0, 0] = 1j * delta + decay.gamma1 / 2
    m[0, 1] = -half_i * drive.omega3 * phase3
    m[0, 2] = -half_i * drive.omega1 * s
    m[1, 0] = -half_i * drive.omega3 * np.conj(phase3)
    m[1, 1] = 1j * delta + decay.gamma2 / 2
    m[1, 2] = -half_i * drive.omega2 * phase2
    m[2, 0] = -half_i * drive.omega1 * s
    m[2, 1] = -half_i * drive.omega2 * np.conj(phase2)
    m[2, 2] = 1j * delta + decay.gamma_bc

    c = np.array([PROBE_SOURCE, 0.0, 0.0], dtype=np.complex128)
    return LinearSystem(m=m, c=c)


def relative_determinant(m: NDArray[np.complex128]) -> float:
    """|det M| over the product of row norms; scale-free singularity measure."""
    row_norms = np.linalg.norm(m, axis=1)
    scale = float(np.prod(row_norms))
    if scale == 0.0:
        return 0.0
    return float(abs(np.linalg.det(m))) / scale


def solve_coherences(system: LinearSystem) -> CoherenceVector:
    """R = M⁻¹C by LU elimination with partial pivoting."""
    rel_det = relative_determinant(system.m)
    if rel_det < SINGULAR_RELATIVE_DET or abs(np.linalg.det(system.m)) <= 1e-300:
        raise SingularSystem(
            "coherence matrix is singular", data={"relative_det": rel_det}
        )
    r = np.linalg.solve(system.m, system.c)
    c_norm = float(np.linalg.norm(system.c))
    residual = float(np.linalg.norm(system.m @ r - system.c))
    if c_norm > 0:
        residual /= c_norm
    return CoherenceVector.from_array(r, residual=residual)


def chi_numeric(
    drive: DriveConfig,
    decay: DecayConfig,
    point: ProbePoint,
    prefactor: MediumPrefactor = DEFAULT_PREFACTOR,
) -> Susceptibility:
    """χ from the linear solve: prefactor times ρ̃_{a₁c}."""
    coherences = solve_coherences(build_system(drive, decay, point))
    return Susceptibility.from_complex(prefactor.scale * coherences.rho_a1c)
