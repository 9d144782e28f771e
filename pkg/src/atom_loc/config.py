"""Run configuration: presets, JSON documents and command-line overrides.

Values are layered preset < document < flags. Documents use the schema::

    {
      "drive":  {"omega1", "omega2", "omega3", "phi", "theta2", "theta3", "k_over_kappa"},
      "decay":  {"gamma1", "gamma2", "gamma_bc"},
      "probe":  {"delta"},
      "medium": {"scale"},
      "scan":   {"x_count", "grid_n", "delta_range": [lo, hi, n], "min_prominence"}
    }

Every numeric value may be a JSON number or an expression such as "pi/2".
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .localization import DEFAULT_GRID_N, DEFAULT_MIN_PROMINENCE
from .model import DecayConfig, DriveConfig, MediumPrefactor
from .scan import Quantity, ScanRequest

COMMANDS = ("profile", "heatmap", "peaks", "curves", "classify", "verify", "preset-list")
FORMATS = ("csv", "json", "svg")

DEFAULT_X_COUNT = 512
VERIFY_X_COUNT = 17

_PI_EXPR = re.compile(
    r"^(?P<sign>[+-])?(?P<mult>\d+(?:\.\d*)?)?\s*\*?\s*pi(?:\s*/\s*(?P<div>\d+(?:\.\d*)?))?$"
)

SCHEMA: dict[str, tuple[str, ...]] = {
    "drive": tuple(f.name for f in fields(DriveConfig)),
    "decay": tuple(f.name for f in fields(DecayConfig)),
    "probe": ("delta",),
    "medium": ("scale",),
    "scan": ("x_count", "grid_n", "delta_range", "min_prominence"),
}


def parse_number(text: str | float | int) -> float:
    """Parse a decimal or a multiple of pi ("pi", "-pi/2", "3pi/4", "3*pi/4")."""
    if isinstance(text, bool):
        raise ValueError(f"not a number: {text!r}")
    if isinstance(text, (int, float)):
        value = float(text)
    else:
        token = text.strip().lower()
        match = _PI_EXPR.match(token)
        if match:
            mult = float(match["mult"]) if match["mult"] else 1.0
            div = float(match["div"]) if match["div"] else 1.0
            if div == 0.0:
                raise ValueError(f"division by zero in {text!r}")
            value = mult * math.pi / div
            if match["sign"] == "-":
                value = -value
        else:
            try:
                value = float(token)
            except ValueError:
                raise ValueError(f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"not a finite number: {text!r}")
    return value


def parse_count(text: str | int, minimum: int = 2) -> int:
    if isinstance(text, bool):
        raise ValueError(f"not an integer: {text!r}")
    try:
        value = int(text)
    except (TypeError, ValueError):
        raise ValueError(f"not an integer: {text!r}") from None
    if isinstance(text, float) and text != value:
        raise ValueError(f"not an integer: {text!r}")
    if value < minimum:
        raise ValueError(f"must be >= {minimum}, got {value}")
    return value


def parse_delta_range(text: str | list | tuple) -> tuple[float, float, int]:
    """``LO:HI:N`` (or a three-element list) into (lo, hi, n)."""
    parts = text.split(":") if isinstance(text, str) else list(text)
    if len(parts) != 3:
        raise ValueError(f"delta range must be LO:HI:N, got {text!r}")
    lo, hi = parse_number(parts[0]), parse_number(parts[1])
    n = parse_count(parts[2])
    if not lo < hi:
        raise ValueError(f"delta range needs LO < HI, got {text!r}")
    return lo, hi, n


def read_document(path: str | Path) -> dict[str, Any]:
    """Load a JSON config document."""
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as e:
        raise ValueError(f"cannot read config {path}: {e.strerror or e}") from None
    except json.JSONDecodeError as e:
        raise ValueError(f"invalid JSON in {path}: {e.msg} (line {e.lineno})") from None
    if not isinstance(doc, dict):
        raise ValueError(f"config {path} must hold a JSON object")
    return doc


@dataclass
class RunConfig:
    """Everything one CLI invocation computes.

    ``quantity``, ``preset``, ``config_path``, ``format``, ``output``,
    ``dump_config`` and ``verbose`` say where a run came from or how its
    result is written; they do not take part in equality.
    """

    command: str = "profile"
    drive: DriveConfig = field(default_factory=DriveConfig)
    decay: DecayConfig = field(default_factory=DecayConfig)
    prefactor: MediumPrefactor = field(default_factory=MediumPrefactor)
    delta: float = 0.0
    x_count: int | None = None
    grid_n: int = DEFAULT_GRID_N
    delta_range: tuple[float, float, int] | None = None
    min_prominence: float = DEFAULT_MIN_PROMINENCE
    workers: int = 1
    quantity: Quantity = field(default=Quantity.CHI_IM, compare=False)
    preset: str | None = field(default=None, compare=False)
    config_path: str | None = field(default=None, compare=False)
    format: str | None = field(default=None, compare=False)
    output: str | None = field(default=None, compare=False)
    dump_config: bool = field(default=False, compare=False)
    verbose: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.format is not None and self.format not in FORMATS:
            raise ValueError(f"format must be one of {', '.join(FORMATS)}, got {self.format!r}")
        if self.x_count is not None and self.x_count < 2:
            raise ValueError(f"x_count must be >= 2, got {self.x_count!r}")
        if self.grid_n < 256:
            raise ValueError(f"grid_n must be >= 256, got {self.grid_n!r}")
        if not 0.0 <= self.min_prominence < 1.0:
            raise ValueError(f"min_prominence must be in [0, 1), got {self.min_prominence!r}")

    @classmethod
    def from_request(cls, command: str, request: ScanRequest, name: str | None = None) -> "RunConfig":
        """Config holding a preset's scan parameters."""
        delta_range = None
        if request.delta_range is not None:
            delta_range = (*request.delta_range, request.delta_count)
        return cls(
            command=command,
            drive=request.drive,
            decay=request.decay,
            prefactor=request.prefactor,
            delta=request.delta,
            delta_range=delta_range,
            preset=name,
        )

    def from_document(self, doc: dict[str, Any]) -> "RunConfig":
        """This config with every value present in ``doc`` applied on top."""
        unknown = set(doc) - set(SCHEMA)
        if unknown:
            raise ValueError(f"unknown config section(s): {', '.join(sorted(unknown))}")
        for section, keys in SCHEMA.items():
            values = doc.get(section, {})
            if not isinstance(values, dict):
                raise ValueError(f"config section {section!r} must be an object")
            extra = set(values) - set(keys)
            if extra:
                raise ValueError(f"unknown key(s) in {section!r}: {', '.join(sorted(extra))}")

        drive = {k: parse_number(v) for k, v in doc.get("drive", {}).items()}
        decay = {k: parse_number(v) for k, v in doc.get("decay", {}).items()}
        changes: dict[str, Any] = {
            "drive": replace(self.drive, **drive),
            "decay": replace(self.decay, **decay),
        }
        if "delta" in doc.get("probe", {}):
            changes["delta"] = parse_number(doc["probe"]["delta"])
        if "scale" in doc.get("medium", {}):
            changes["prefactor"] = MediumPrefactor(scale=parse_number(doc["medium"]["scale"]))
        scan = doc.get("scan", {})
        if scan.get("x_count") is not None:
            changes["x_count"] = parse_count(scan["x_count"])
        if "grid_n" in scan:
            changes["grid_n"] = parse_count(scan["grid_n"], minimum=256)
        if "delta_range" in scan:
            dr = scan["delta_range"]
            changes["delta_range"] = None if dr is None else parse_delta_range(dr)
        if "min_prominence" in scan:
            changes["min_prominence"] = parse_number(scan["min_prominence"])
        return replace(self, **changes)

    def to_document(self) -> dict[str, Any]:
        return {
            "drive": self.drive.to_dict(),
            "decay": self.decay.to_dict(),
            "probe": {"delta": self.delta},
            "medium": {"scale": self.prefactor.scale},
            "scan": {
                "x_count": self.x_count,
                "grid_n": self.grid_n,
                "delta_range": list(self.delta_range) if self.delta_range else None,
                "min_prominence": self.min_prominence,
            },
        }

    @property
    def effective_x_count(self) -> int:
        if self.x_count is not None:
            return self.x_count
        return VERIFY_X_COUNT if self.command == "verify" else DEFAULT_X_COUNT

    def to_request(self) -> ScanRequest:
        request = ScanRequest(
            drive=self.drive,
            decay=self.decay,
            prefactor=self.prefactor,
            delta=self.delta,
            x_count=self.effective_x_count,
            quantity=self.quantity,
            workers=self.workers,
        )
        if self.delta_range is not None:
            lo, hi, n = self.delta_range
            request = request.with_overrides(delta_range=(lo, hi), delta_count=n)
        return request
