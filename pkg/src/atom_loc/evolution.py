"""Time-domain oracle: integrate dR/dt = −M R + C from the ground state.

Classical fixed-step RK4. Because the system is linear and autonomous, one
RK4 step is an affine map R → P R + q; composing that map with itself lets
long horizons be covered in few operations while every sample remains an
exact fixed-step RK4 iterate.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .errors import AtomLocError, NonConverged, StepUnstable
from .model import DecayConfig, DriveConfig, MediumPrefactor, ProbePoint, Susceptibility
from .steady_state import CoherenceVector, LinearSystem, build_system, chi_numeric
from .susceptibility import DEFAULT_PREFACTOR, chi_closed_form

logger = logging.getLogger(__name__)

HORIZON_CAP = 1e4
TINY_DAMPING = 1e-300
# Checks per chunk size before the chunk is doubled.
CHECKS_PER_LEVEL = 32


@dataclass(frozen=True)
class EvolutionSettings:
    """Step size, horizon and steady-state threshold (times in 1/γ₁)."""

    dt: float
    t_max: float
    tol: float = 1e-10
    check_interval: float = 1.0

    def __post_init__(self) -> None:
        for name in ("dt", "t_max", "tol", "check_interval"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")

    @classmethod
    def for_point(
        cls,
        drive: DriveConfig,
        decay: DecayConfig,
        point: ProbePoint,
        *,
        tol: float = 1e-10,
        t_max: float | None = None,
    ) -> "EvolutionSettings":
        """Default step from the fastest frequency, horizon from the slowest decay."""
        fastest = max(
            decay.gamma1,
            decay.gamma2,
            drive.omega1,
            drive.omega2,
            drive.omega3,
            2 * abs(point.delta),
            1.0,
        )
        if t_max is None:
            t_max = default_horizon(decay)
        return cls(dt=0.2 / fastest, t_max=t_max, tol=tol)


def default_horizon(decay: DecayConfig) -> float:
    slowest = min(
        decay.gamma1 / 2,
        decay.gamma2 / 2 + TINY_DAMPING,
        decay.gamma_bc + TINY_DAMPING,
    )
    return min(200.0 / slowest, HORIZON_CAP)


def rk4_step(
    m: NDArray[np.complex128],
    c: NDArray[np.complex128],
    r: NDArray[np.complex128],
    h: float,
) -> NDArray[np.complex128]:
    """One classical Runge–Kutta step of dR/dt = −M R + C."""

    def rate(y: NDArray[np.complex128]) -> NDArray[np.complex128]:
        return -(m @ y) + c

    k1 = rate(r)
    k2 = rate(r + 0.5 * h * k1)
    k3 = rate(r + 0.5 * h * k2)
    k4 = rate(r + h * k3)
    return r + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6


@dataclass(frozen=True)
class StepMap:
    """Affine map R → p R + q equal to ``steps`` consecutive RK4 steps."""

    p: NDArray[np.complex128]
    q: NDArray[np.complex128]
    steps: int
    dt: float

    @classmethod
    def from_system(cls, system: LinearSystem, dt: float) -> "StepMap":
        n = system.c.shape[0]
        zero_source = np.zeros(n, dtype=np.complex128)
        q = rk4_step(system.m, system.c, np.zeros(n, dtype=np.complex128), dt)
        p = np.empty((n, n), dtype=np.complex128)
        for j in range(n):
            basis = np.zeros(n, dtype=np.complex128)
            basis[j] = 1.0
            p[:, j] = rk4_step(system.m, zero_source, basis, dt)
        return cls(p=p, q=q, steps=1, dt=dt)

    @property
    def duration(self) -> float:
        return self.steps * self.dt

    def doubled(self) -> "StepMap":
        return StepMap(p=self.p @ self.p, q=self.p @ self.q + self.q, steps=2 * self.steps, dt=self.dt)

    def apply(self, r: NDArray[np.complex128]) -> NDArray[np.complex128]:
        return self.p @ r + self.q


@dataclass(frozen=True)
class EvolutionResult:
    coherences: CoherenceVector
    t_final: float
    steps: int
    residual: float


def _min_damping(m: NDArray[np.complex128]) -> float:
    damping = [float(v) for v in np.real(np.diag(m)) if v > 0]
    return min(damping) if damping else TINY_DAMPING


def evolve_with_metadata(system: LinearSystem, settings: EvolutionSettings) -> EvolutionResult:
    """Integrate from R = 0 until ‖−M R + C‖ ≤ tol‖C‖ or t_max."""
    c_norm = float(np.linalg.norm(system.c))
    if c_norm == 0.0:
        zero = CoherenceVector(0j, 0j, 0j)
        return EvolutionResult(coherences=zero, t_final=0.0, steps=0, residual=0.0)

    chunk = StepMap.from_system(system, settings.dt)
    while chunk.duration * 2 <= settings.check_interval:
        chunk = chunk.doubled()

    bound = 1e6 * c_norm / _min_damping(system.m)
    r = np.zeros_like(system.c)
    t = 0.0
    steps = 0
    checks = 0
    residual = math.inf
    while t < settings.t_max:
        r = chunk.apply(r)
        t += chunk.duration
        steps += chunk.steps
        norm_r = float(np.linalg.norm(r))
        if not math.isfinite(norm_r) or norm_r > bound:
            raise StepUnstable(
                f"solution norm {norm_r:.3e} exceeds {bound:.3e} at t={t:g}; reduce dt",
                data={"dt": settings.dt, "t": t},
            )
        residual = float(np.linalg.norm(system.c - system.m @ r)) / c_norm
        if residual <= settings.tol:
            logger.debug("steady state after %d steps (t=%g, residual=%.2e)", steps, t, residual)
            return EvolutionResult(
                coherences=CoherenceVector.from_array(r, residual=residual),
                t_final=t,
                steps=steps,
                residual=residual,
            )
        checks += 1
        if checks >= CHECKS_PER_LEVEL and t + 2 * chunk.duration <= settings.t_max:
            chunk = chunk.doubled()
            checks = 0
    logger.warning("evolution did not converge by t=%g (residual %.2e)", settings.t_max, residual)
    raise NonConverged(settings.t_max, residual)


def evolve(system: LinearSystem, settings: EvolutionSettings) -> CoherenceVector:
    """Steady-state coherences reached by time evolution."""
    return evolve_with_metadata(system, settings).coherences


def deviation(a: complex, b: complex) -> float:
    """Absolute-or-relative distance: |a − b| / max(1, |a|, |b|)."""
    return abs(a - b) / max(1.0, abs(a), abs(b))


@dataclass
class VerificationReport:
    point: ProbePoint
    closed_form: Susceptibility | None = None
    numeric: Susceptibility | None = None
    evolution: Susceptibility | None = None
    t_final: float | None = None
    deviations: dict[str, float] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)

    @property
    def max_deviation(self) -> float:
        return max(self.deviations.values(), default=0.0)

    @property
    def ok(self) -> bool:
        return not self.errors and self.numeric is not None and self.evolution is not None

    def to_dict(self) -> dict[str, Any]:
        def chi(value: Susceptibility | None) -> dict[str, float] | None:
            return value.to_dict() if value is not None else None

        return {
            "delta": self.point.delta,
            "kappa_x": self.point.kappa_x,
            "closed_form": chi(self.closed_form),
            "numeric": chi(self.numeric),
            "evolution": chi(self.evolution),
            "t_final": self.t_final,
            "deviations": dict(self.deviations),
            "max_deviation": self.max_deviation,
            "errors": dict(self.errors),
        }


def verify_point(
    drive: DriveConfig,
    decay: DecayConfig,
    point: ProbePoint,
    settings: EvolutionSettings | None = None,
    prefactor: MediumPrefactor = DEFAULT_PREFACTOR,
) -> VerificationReport:
    """Compare closed form, linear solve and time evolution at one point."""
    report = VerificationReport(point=point)
    if drive.is_balanced and decay.gamma_bc == 0.0:
        try:
            report.closed_form = chi_closed_form(drive, decay, point, prefactor)
        except AtomLocError as e:
            report.errors["closed_form"] = str(e)
    try:
        report.numeric = chi_numeric(drive, decay, point, prefactor)
    except AtomLocError as e:
        report.errors["numeric"] = str(e)
    try:
        result = evolve_with_metadata(
            build_system(drive, decay, point),
            settings or EvolutionSettings.for_point(drive, decay, point),
        )
        report.evolution = Susceptibility.from_complex(prefactor.scale * result.coherences.rho_a1c)
        report.t_final = result.t_final
    except AtomLocError as e:
        report.errors["evolution"] = str(e)

    values = {
        "closed_form": report.closed_form,
        "numeric": report.numeric,
        "evolution": report.evolution,
    }
    names = [name for name, value in values.items() if value is not None]
    for i, first in enumerate(names):
        for second in names[i + 1 :]:
            report.deviations[f"{first}/{second}"] = deviation(
                values[first].value, values[second].value
            )
    return report
