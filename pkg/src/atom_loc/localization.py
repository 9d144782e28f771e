"""From absorption profiles to localization statements.

Analytic peak positions come from sinκx = R₁,₂; numeric peaks come from a
periodic prominence search on χ'' sampled over one wavelength. Detuning
branches give, for φ ∈ {0, π/2, π} and Ω₂ = Ω₃, the detuning that puts an
absorption maximum at a given position.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.signal import find_peaks

from .errors import DegenerateDenominator, UnsupportedPhase
from .model import DecayConfig, DriveConfig, MediumPrefactor, wrap_position
from .scan import evaluate_chi
from .susceptibility import DEFAULT_PREFACTOR, roots_r

logger = logging.getLogger(__name__)

DEFAULT_GRID_N = 2048
DEFAULT_MIN_PROMINENCE = 1e-2
MIN_GRID_N = 256
UNIFORM_RELATIVE_SPREAD = 1e-9
MERGE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Peak:
    kappa_x: float
    height: float
    fwhm: float | None = None
    prominence: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "kappa_x": self.kappa_x,
            "height": self.height,
            "fwhm": self.fwhm,
            "prominence": self.prominence,
        }


@dataclass(frozen=True)
class PeakSet:
    peaks: tuple[Peak, ...] = ()
    profile_resolution: int = DEFAULT_GRID_N
    uniform: bool = False

    def __len__(self) -> int:
        return len(self.peaks)

    @property
    def positions(self) -> list[float]:
        return [p.kappa_x for p in self.peaks]

    @property
    def mean_fwhm(self) -> float | None:
        widths = [p.fwhm for p in self.peaks if p.fwhm is not None]
        if not widths:
            return None
        return float(np.mean(widths))

    def to_dict(self) -> dict[str, Any]:
        return {
            "peaks": [p.to_dict() for p in self.peaks],
            "profile_resolution": self.profile_resolution,
            "uniform": self.uniform,
        }


class LocalizationClass(str, Enum):
    SUB_HALF_NEGATIVE = "SubHalfNegative"
    SUB_HALF_POSITIVE = "SubHalfPositive"
    BOTH_HALVES = "BothHalves"
    UNIFORM = "Uniform"
    NO_PEAKS = "NoPeaks"

    @property
    def mirrored(self) -> "LocalizationClass":
        """Class of the profile reflected through κx → −κx."""
        if self is LocalizationClass.SUB_HALF_NEGATIVE:
            return LocalizationClass.SUB_HALF_POSITIVE
        if self is LocalizationClass.SUB_HALF_POSITIVE:
            return LocalizationClass.SUB_HALF_NEGATIVE
        return self


class PhaseCase(str, Enum):
    ZERO = "Zero"
    HALF_PI = "HalfPi"
    PI = "Pi"

    @classmethod
    def from_phi(cls, phi: float, tol: float = 1e-9) -> "PhaseCase":
        c = math.cos(phi)
        if abs(c - 1.0) <= tol:
            return cls.ZERO
        if abs(c) <= tol:
            return cls.HALF_PI
        if abs(c + 1.0) <= tol:
            return cls.PI
        raise UnsupportedPhase(
            f"detuning branches need phi in {{0, pi/2, pi}}, got {phi!r}", data={"phi": phi}
        )


@dataclass(frozen=True)
class DetuningBranch:
    phase_case: PhaseCase
    branch_id: int
    values: tuple[tuple[float, float], ...] = field(default_factory=tuple)

    def to_dict(self) -> dict[str, Any]:
        return {
            "phase_case": self.phase_case.value,
            "branch_id": self.branch_id,
            "values": [list(v) for v in self.values],
        }


def _fold_arcsin(r: float) -> list[float]:
    base = math.asin(max(-1.0, min(1.0, r)))
    return [wrap_position(base), wrap_position(math.pi - base)]


def _merge_sorted(positions: Iterable[float], tol: float) -> list[float]:
    merged: list[float] = []
    for x in sorted(positions):
        if merged and x - merged[-1] <= tol:
            continue
        merged.append(x)
    # −π and the folded +π are one point.
    if len(merged) > 1 and (merged[0] + 2 * math.pi) - merged[-1] <= tol:
        merged.pop()
    return merged


def peak_positions_analytic(drive: DriveConfig, delta: float) -> list[float]:
    """Absorption maxima from sinκx = R₁,₂, folded into [−π, π)."""
    pair = roots_r(drive, delta)
    positions: list[float] = []
    for r in pair.real_roots():
        if abs(r) <= 1.0 + MERGE_TOLERANCE:
            positions.extend(_fold_arcsin(r))
    return _merge_sorted(positions, MERGE_TOLERANCE)


def _absorption(
    drive: DriveConfig,
    decay: DecayConfig,
    delta: float,
    prefactor: MediumPrefactor,
) -> Callable[[float], float]:
    def at(x: float) -> float:
        return float(evaluate_chi(drive, decay, delta, [wrap_position(x)], prefactor)[0].imag)

    return at


def _crossing(
    f: Callable[[float], float],
    y: np.ndarray,
    x: np.ndarray,
    index: int,
    x_peak: float,
    level: float,
    direction: int,
) -> float | None:
    n = y.size
    h = 2 * math.pi / n
    for k in range(1, n):
        j = (index + direction * k) % n
        if y[j] < level:
            x_far = x[index] + direction * k * h
            if f(x_far) >= level:
                return x_far
            lo, hi = sorted((x_far, x_peak))
            return brentq(lambda t: f(t) - level, lo, hi, xtol=1e-13)
    return None


def peak_positions_numeric(
    drive: DriveConfig,
    decay: DecayConfig,
    delta: float,
    prefactor: MediumPrefactor = DEFAULT_PREFACTOR,
    grid_n: int = DEFAULT_GRID_N,
    min_prominence: float = DEFAULT_MIN_PROMINENCE,
) -> PeakSet:
    """Maxima of χ'' over one period, with parabolic refinement and FWHM.

    Prominence is measured relative to the profile's max − min. Widths are
    taken at half the peak's prominence below its top.
    """
    if grid_n < MIN_GRID_N:
        raise ValueError(f"grid_n must be >= {MIN_GRID_N}, got {grid_n!r}")
    h = 2 * math.pi / grid_n
    x = -math.pi + h * np.arange(grid_n)
    y = evaluate_chi(drive, decay, delta, x, prefactor).imag
    if np.isnan(y).all():
        raise DegenerateDenominator("χ is undefined at every sampled position", data={"delta": delta})
    if np.isnan(y).any():
        logger.warning("%d undefined samples excluded from peak search", int(np.isnan(y).sum()))
        y = np.where(np.isnan(y), np.nanmin(y), y)

    top, bottom = float(y.max()), float(y.min())
    if top - bottom <= UNIFORM_RELATIVE_SPREAD * abs(top):
        logger.debug("uniform profile at delta=%g (spread %.3e)", delta, top - bottom)
        return PeakSet(peaks=(), profile_resolution=grid_n, uniform=True)

    # Start the period at the global minimum so no maximum straddles the seam.
    shift = int(np.argmin(y))
    rolled = np.append(np.roll(y, -shift), y[shift])
    found, props = find_peaks(rolled, prominence=min_prominence * (top - bottom))

    f = _absorption(drive, decay, delta, prefactor)
    peaks: list[Peak] = []
    for idx, prominence in zip(found, props["prominences"]):
        i = (int(idx) + shift) % grid_n
        y0, y1, y2 = y[(i - 1) % grid_n], y[i], y[(i + 1) % grid_n]
        curvature = y0 - 2 * y1 + y2
        offset = 0.5 * (y0 - y2) / curvature if curvature < 0 else 0.0
        offset = max(-0.5, min(0.5, offset))
        x_peak = float(x[i] + offset * h)
        height = f(x_peak)
        if height < y1:
            x_peak, height = float(x[i]), float(y1)

        level = height - 0.5 * float(prominence)
        left = _crossing(f, y, x, i, x_peak, level, -1)
        right = _crossing(f, y, x, i, x_peak, level, +1)
        fwhm = right - left if left is not None and right is not None else None
        peaks.append(
            Peak(kappa_x=wrap_position(x_peak), height=height, fwhm=fwhm, prominence=float(prominence))
        )

    peaks.sort(key=lambda p: p.kappa_x)
    distinct: list[Peak] = []
    for p in peaks:
        if distinct and p.kappa_x - distinct[-1].kappa_x < h:
            if p.height > distinct[-1].height:
                distinct[-1] = p
            continue
        distinct.append(p)
    logger.debug("delta=%g: %d peaks at %s", delta, len(distinct), [p.kappa_x for p in distinct])
    return PeakSet(peaks=tuple(distinct), profile_resolution=grid_n)


def classify(peaks: PeakSet) -> LocalizationClass:
    """Half-wavelength confinement of a peak set."""
    if peaks.uniform:
        return LocalizationClass.UNIFORM
    if not peaks.peaks:
        return LocalizationClass.NO_PEAKS
    edge = 2 * math.pi / peaks.profile_resolution
    positions = peaks.positions
    if any(abs(x) <= edge or abs(x) >= math.pi - edge for x in positions):
        return LocalizationClass.BOTH_HALVES
    if all(x < 0 for x in positions):
        return LocalizationClass.SUB_HALF_NEGATIVE
    if all(x > 0 for x in positions):
        return LocalizationClass.SUB_HALF_POSITIVE
    return LocalizationClass.BOTH_HALVES


def _require_equal_drives(drive: DriveConfig) -> float:
    scale = max(drive.omega2, drive.omega3, 1.0)
    if abs(drive.omega2 - drive.omega3) > 1e-12 * scale:
        raise ValueError(
            f"detuning branches need omega2 == omega3, got {drive.omega2!r} and {drive.omega3!r}"
        )
    return drive.omega2


def _branch_functions(
    phase_case: PhaseCase, drive: DriveConfig
) -> list[tuple[int, Callable[[float], float]]]:
    omega = _require_equal_drives(drive)
    o1 = drive.omega1

    def root(s: float) -> float:
        return math.sqrt(o1**2 * s**2 + 8 * omega**2)

    if phase_case is PhaseCase.ZERO:
        return [
            (1, lambda s: (o1 * s + root(s)) / 4),
            (2, lambda s: (o1 * s - root(s)) / 4),
            (3, lambda s: -o1 * s / 2),
        ]
    if phase_case is PhaseCase.PI:
        return [
            (1, lambda s: (-o1 * s + root(s)) / 4),
            (2, lambda s: (-o1 * s - root(s)) / 4),
            (3, lambda s: o1 * s / 2),
        ]
    half = lambda s: 0.5 * math.sqrt(o1**2 * s**2 + 2 * omega**2)  # noqa: E731
    return [(1, half), (2, lambda s: -half(s))]


def _as_phase_case(phase_case: PhaseCase | float) -> PhaseCase:
    if isinstance(phase_case, PhaseCase):
        return phase_case
    return PhaseCase.from_phi(float(phase_case))


def detuning_branches(
    phase_case: PhaseCase | float,
    drive: DriveConfig,
    kappa_x_samples: Sequence[float],
) -> list[DetuningBranch]:
    """Detunings that place an absorption maximum at each sampled position."""
    case = _as_phase_case(phase_case)
    branches = []
    for branch_id, func in _branch_functions(case, drive):
        values = tuple((float(x), func(math.sin(x))) for x in kappa_x_samples)
        branches.append(DetuningBranch(phase_case=case, branch_id=branch_id, values=values))
    return branches


def branch_intersections(
    phase_case: PhaseCase | float,
    drive: DriveConfig,
    delta: float,
    grid_n: int = DEFAULT_GRID_N,
) -> list[float]:
    """Positions where the horizontal line Δ = ``delta`` meets the branch curves."""
    case = _as_phase_case(phase_case)
    h = 2 * math.pi / grid_n
    x = -math.pi + h * np.arange(grid_n + 1)
    hits: list[float] = []
    for _, func in _branch_functions(case, drive):
        g = lambda t: func(math.sin(t)) - delta  # noqa: E731
        values = np.array([g(float(t)) for t in x])
        for j in range(grid_n):
            a, b = values[j], values[j + 1]
            if a == 0.0:
                hits.append(wrap_position(float(x[j])))
            elif a * b < 0:
                hits.append(wrap_position(brentq(g, float(x[j]), float(x[j + 1]), xtol=1e-14)))
    return _merge_sorted(hits, 1e-9)
