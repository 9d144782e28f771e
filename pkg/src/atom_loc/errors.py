"""Exceptions raised by the solvers and the CLI."""

from __future__ import annotations

from typing import Any


class AtomLocError(Exception):
    """Base error for every computational failure in the package."""

    def __init__(self, message: str, data: Any = None):
        super().__init__(message)
        self.data = data


class DegenerateDenominator(AtomLocError):
    """Y = A + iB (or the metastable denominator) vanished at this point."""


class DegenerateParameters(AtomLocError):
    """Δ = 0 or Ω₁ = 0: the factorized absorption form does not apply."""


class UnsupportedGeometry(AtomLocError):
    """The closed form needs cosθ₂ + cosθ₃ = 0."""


class SingularSystem(AtomLocError):
    """The 3×3 coherence matrix is numerically singular."""


class NonConverged(AtomLocError):
    """Time evolution did not reach steady state before t_max."""

    def __init__(self, t_max: float, residual: float):
        super().__init__(
            f"no steady state by t={t_max:g} (relative residual {residual:.3e})",
            data={"t_max": t_max, "residual": residual},
        )
        self.t_max = t_max
        self.residual = residual


class StepUnstable(AtomLocError):
    """Fixed-step integration blew up; dt is too large."""


class UnsupportedPhase(AtomLocError):
    """Detuning branches exist in closed form only for φ ∈ {0, π/2, π}."""


class UnknownPreset(AtomLocError):
    """No preset with this name."""


class UnsupportedTable(AtomLocError):
    """The table cannot be rendered in the requested form."""
