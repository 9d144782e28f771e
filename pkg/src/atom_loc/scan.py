"""Batch evaluation: χ profiles along κx, (Δ, κx) heatmaps and named presets."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Iterator

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray

from . import __version__
from .errors import AtomLocError, UnknownPreset
from .model import DecayConfig, DriveConfig, MediumPrefactor, ProbePoint
from .steady_state import chi_numeric
from .susceptibility import DEFAULT_PREFACTOR, chi_closed_form_grid

logger = logging.getLogger(__name__)

PROFILE_COLUMNS = ("kappa_x", "chi_re", "chi_im")
HEATMAP_COLUMNS = ("delta", "kappa_x", "chi_re", "chi_im")
UNDEFINED = "undefined"


class Quantity(str, Enum):
    CHI_IM = "chi_im"
    CHI_RE = "chi_re"
    BOTH = "both"


def uses_closed_form(drive: DriveConfig, decay: DecayConfig) -> bool:
    """Closed form applies for balanced beam angles and no b–c dephasing."""
    return drive.is_balanced and decay.gamma_bc == 0.0


def _numeric_values(
    drive: DriveConfig,
    decay: DecayConfig,
    delta: float,
    kappa_x: NDArray[np.float64],
    prefactor: MediumPrefactor,
) -> NDArray[np.complex128]:
    out = np.empty(kappa_x.shape, dtype=np.complex128)
    for i, x in enumerate(kappa_x):
        try:
            out[i] = chi_numeric(drive, decay, ProbePoint(delta, float(x)), prefactor).value
        except AtomLocError as e:
            logger.warning("undefined point delta=%g kappa_x=%g: %s", delta, x, e)
            out[i] = complex(np.nan, np.nan)
    return out


def evaluate_chi(
    drive: DriveConfig,
    decay: DecayConfig,
    delta: float,
    kappa_x: ArrayLike,
    prefactor: MediumPrefactor = DEFAULT_PREFACTOR,
) -> NDArray[np.complex128]:
    """χ at one detuning over a 1D array of positions; NaN marks undefined points."""
    positions = np.atleast_1d(np.asarray(kappa_x, dtype=float))
    if uses_closed_form(drive, decay):
        return chi_closed_form_grid(drive, decay, delta, positions, prefactor)
    return _numeric_values(drive, decay, delta, positions, prefactor)


@dataclass(frozen=True)
class ScanRequest:
    drive: DriveConfig
    decay: DecayConfig = field(default_factory=DecayConfig)
    prefactor: MediumPrefactor = field(default_factory=MediumPrefactor)
    delta: float = 0.0
    x_range: tuple[float, float] = (-math.pi, math.pi)
    x_count: int = 512
    delta_range: tuple[float, float] | None = None
    delta_count: int = 2
    quantity: Quantity = Quantity.CHI_IM
    workers: int = 1

    def __post_init__(self) -> None:
        lo, hi = self.x_range
        if not lo < hi:
            raise ValueError(f"x_range must satisfy lo < hi, got {self.x_range!r}")
        if self.x_count < 2:
            raise ValueError(f"x_count must be >= 2, got {self.x_count!r}")
        if self.delta_range is not None:
            dlo, dhi = self.delta_range
            if not dlo < dhi:
                raise ValueError(f"delta_range must satisfy lo < hi, got {self.delta_range!r}")
            if self.delta_count < 2:
                raise ValueError(f"delta_count must be >= 2, got {self.delta_count!r}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers!r}")

    def positions(self) -> NDArray[np.float64]:
        return np.linspace(self.x_range[0], self.x_range[1], self.x_count)

    def detunings(self) -> NDArray[np.float64]:
        if self.delta_range is None:
            raise ValueError("request has no delta_range")
        return np.linspace(self.delta_range[0], self.delta_range[1], self.delta_count)

    def with_overrides(self, **changes: Any) -> "ScanRequest":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class ProfileTable:
    """Scan result as column arrays; ``defined`` is False at singular points."""

    columns: tuple[str, ...]
    data: dict[str, NDArray[np.float64]]
    defined: NDArray[np.bool_]
    metadata: dict[str, Any]
    quantity: Quantity = Quantity.CHI_IM

    @property
    def is_2d(self) -> bool:
        return "delta" in self.columns

    def __len__(self) -> int:
        return int(self.defined.shape[0])

    def rows(self) -> Iterator[tuple[float | None, ...]]:
        for i in range(len(self)):
            yield tuple(
                None if (name.startswith("chi") and not self.defined[i]) else float(self.data[name][i])
                for name in self.columns
            )

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({name: self.data[name] for name in self.columns})
        for name in ("chi_re", "chi_im"):
            frame.loc[~self.defined, name] = np.nan
        return frame

    def to_csv(self) -> str:
        return self.to_frame().to_csv(
            index=False,
            float_format="%.17g",
            na_rep=UNDEFINED,
            lineterminator="\n",
        )

    def to_dict(self) -> dict[str, Any]:
        exported = list(self.columns)
        if self.quantity is Quantity.CHI_IM:
            exported.remove("chi_re")
        elif self.quantity is Quantity.CHI_RE:
            exported.remove("chi_im")
        index = [self.columns.index(name) for name in exported]
        return {
            "metadata": self.metadata,
            "columns": exported,
            "rows": [[row[i] for i in index] for row in self.rows()],
        }


def _metadata(request: ScanRequest, kind: str) -> dict[str, Any]:
    meta: dict[str, Any] = {
        "kind": kind,
        "version": __version__,
        "drive": request.drive.to_dict(),
        "decay": request.decay.to_dict(),
        "medium": {"scale": request.prefactor.scale},
        "path": "closed_form" if uses_closed_form(request.drive, request.decay) else "numeric",
        "x_range": list(request.x_range),
        "x_count": request.x_count,
        "quantity": request.quantity.value,
    }
    if kind == "profile":
        meta["probe"] = {"delta": request.delta}
    else:
        meta["delta_range"] = list(request.delta_range or ())
        meta["delta_count"] = request.delta_count
    return meta


def _map_ordered(func: Callable[[Any], Any], items: list[Any], workers: int) -> list[Any]:
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def profile(request: ScanRequest) -> ProfileTable:
    """χ along κx at the request's detuning."""
    x = request.positions()
    chunks = np.array_split(x, min(request.workers, len(x)))
    parts = _map_ordered(
        lambda chunk: evaluate_chi(request.drive, request.decay, request.delta, chunk, request.prefactor),
        chunks,
        request.workers,
    )
    chi = np.concatenate(parts)
    defined = np.isfinite(chi.real) & np.isfinite(chi.imag)
    return ProfileTable(
        columns=PROFILE_COLUMNS,
        data={"kappa_x": x, "chi_re": chi.real.copy(), "chi_im": chi.imag.copy()},
        defined=defined,
        metadata=_metadata(request, "profile"),
        quantity=request.quantity,
    )


def heatmap(request: ScanRequest) -> ProfileTable:
    """χ over the (Δ, κx) grid, Δ outer and κx inner."""
    x = request.positions()
    deltas = request.detunings()
    rows = _map_ordered(
        lambda d: evaluate_chi(request.drive, request.decay, float(d), x, request.prefactor),
        list(deltas),
        request.workers,
    )
    chi = np.concatenate(rows)
    defined = np.isfinite(chi.real) & np.isfinite(chi.imag)
    return ProfileTable(
        columns=HEATMAP_COLUMNS,
        data={
            "delta": np.repeat(deltas, x.size),
            "kappa_x": np.tile(x, deltas.size),
            "chi_re": chi.real.copy(),
            "chi_im": chi.imag.copy(),
        },
        defined=defined,
        metadata=_metadata(request, "heatmap"),
        quantity=request.quantity,
    )


def _fig2(**changes: float) -> ScanRequest:
    drive = DriveConfig(omega1=3.0, omega2=1.0, omega3=1.0, phi=math.pi / 2)
    delta = changes.pop("delta")
    if changes:
        drive = replace(drive, **changes)
    return ScanRequest(drive=drive, decay=DecayConfig(gamma2=0.0), delta=delta)


def _strong(phi: float, delta: float, heat: bool = False) -> ScanRequest:
    drive = DriveConfig(omega1=30.0, omega2=20.0, omega3=20.0, phi=phi)
    request = ScanRequest(drive=drive, decay=DecayConfig(gamma2=0.0), delta=delta)
    if heat:
        request = replace(request, delta_range=(0.0, 30.0), delta_count=301)
    return request


PRESETS: dict[str, tuple[str, Callable[[], ScanRequest]]] = {
    "fig2a": ("two broad antinode peaks", lambda: _fig2(delta=5.0)),
    "fig2b": ("four peaks, smaller detuning", lambda: _fig2(delta=1.4)),
    "fig2c": ("four peaks, detuning 1.3", lambda: _fig2(delta=1.3)),
    "fig2d": ("four sharp peaks, strong standing wave", lambda: _fig2(delta=5.0, omega1=20.0)),
    "fig3_phi0": ("detuning map, phase 0", lambda: _strong(0.0, 7.5, heat=True)),
    "fig3_phihalf": ("detuning map, phase pi/2", lambda: _strong(math.pi / 2, math.sqrt(425.0), heat=True)),
    "fig3_phipi": ("detuning map, phase pi", lambda: _strong(math.pi, 7.5, heat=True)),
    "fig4e": ("uniform absorption at zero detuning", lambda: _strong(math.pi / 2, 0.0)),
    "subhalf_phi0": ("two peaks in the negative half-wavelength", lambda: _strong(0.0, 7.5)),
    "subhalf_phipi": ("two peaks in the positive half-wavelength", lambda: _strong(math.pi, 7.5)),
}


def preset(name: str) -> ScanRequest:
    """Scan request for a named parameter regime."""
    try:
        _, factory = PRESETS[name]
    except KeyError:
        raise UnknownPreset(
            f"unknown preset {name!r}", data={"available": sorted(PRESETS)}
        ) from None
    return factory()
