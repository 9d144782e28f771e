"""atom-loc: susceptibility profiles and atom-localization analysis from the command line."""

from __future__ import annotations

import io
import json
import logging
from dataclasses import replace
from enum import Enum
from pathlib import Path
from typing import Annotated, Any, Callable, Optional, Sequence

import pandas as pd
import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table

from . import scan
from .config import RunConfig, parse_delta_range, parse_number, read_document
from .errors import (
    AtomLocError,
    DegenerateParameters,
    NonConverged,
    StepUnstable,
    UnknownPreset,
    UnsupportedPhase,
    UnsupportedTable,
)
from .evolution import verify_point
from .localization import (
    PhaseCase,
    branch_intersections,
    classify,
    detuning_branches,
    peak_positions_analytic,
    peak_positions_numeric,
)
from .model import ProbePoint
from .plot import render_svg
from .scan import Quantity

app = typer.Typer(
    name="atom-loc",
    help="Weak-probe susceptibility of a four-level atom in a standing wave, and what its peaks say about where the atom is.",
    no_args_is_help=True,
)

# typer may bundle its own click; raise the usage error class it catches (exit status 2).
UsageError = typer.BadParameter.__mro__[1]

console = Console()
err_console = Console(stderr=True, soft_wrap=True)

VERIFY_TOLERANCE = 1e-6

# Formats each command can write; the first is the default. preset-list
# prints a table unless JSON is asked for.
COMMAND_FORMATS: dict[str, tuple[str, ...]] = {
    "profile": ("csv", "json", "svg"),
    "heatmap": ("csv", "json", "svg"),
    "peaks": ("json", "csv"),
    "curves": ("csv", "json"),
    "classify": ("json",),
    "verify": ("json",),
    "preset-list": ("json",),
}

_DRIVE_FLAGS = ("omega1", "omega2", "omega3", "phi", "theta2", "theta3")
_DECAY_FLAGS = ("gamma2", "gamma_bc")


class OutputFormat(str, Enum):
    csv = "csv"
    json = "json"
    svg = "svg"


def handle_error(e: Exception) -> int:
    """Print a one-line diagnostic (plus an optional hint) and return the exit status."""
    err_console.print(f"[red]Error:[/red] {escape(str(e))}")
    if isinstance(e, NonConverged):
        err_console.print("[dim]Hint: the slowest decay sets the horizon; check gamma2 and gamma_bc.[/dim]")
    elif isinstance(e, StepUnstable):
        err_console.print("[dim]Hint: integration step too large for these drive strengths.[/dim]")
    elif isinstance(e, UnsupportedPhase):
        err_console.print("[dim]Hint: detuning curves exist for --phi 0, pi/2 or pi.[/dim]")
    elif isinstance(e, UnsupportedTable):
        err_console.print("[dim]Hint: use --format csv or --format json for this table.[/dim]")
    return 1


def _configure_logging(verbose: bool) -> None:
    logger = logging.getLogger("atom_loc")
    if not any(isinstance(h, RichHandler) for h in logger.handlers):
        handler = RichHandler(console=err_console, show_time=False, show_path=False)
        handler.setFormatter(logging.Formatter("%(message)s"))
        logger.addHandler(handler)
        logger.propagate = False
    logger.setLevel(logging.DEBUG if verbose else logging.WARNING)


# Shared options
PresetOption = Annotated[Optional[str], typer.Option("--preset", help="Named parameter regime (see preset-list)")]
Omega1Option = Annotated[
    Optional[float], typer.Option("--omega1", parser=parse_number, metavar="X", help="Standing-wave peak Rabi frequency Ω₁")
]
Omega2Option = Annotated[
    Optional[float], typer.Option("--omega2", parser=parse_number, metavar="X", help="Rabi frequency Ω₂ (a₂–b)")
]
Omega3Option = Annotated[
    Optional[float], typer.Option("--omega3", parser=parse_number, metavar="X", help="Rabi frequency Ω₃ (a₁–a₂)")
]
PhiOption = Annotated[
    Optional[float], typer.Option("--phi", parser=parse_number, metavar="X", help="Collective phase φ, e.g. pi/2")
]
Theta2Option = Annotated[
    Optional[float], typer.Option("--theta2", parser=parse_number, metavar="X", help="Beam angle θ₂ (default 3pi/4)")
]
Theta3Option = Annotated[
    Optional[float], typer.Option("--theta3", parser=parse_number, metavar="X", help="Beam angle θ₃ (default pi/4)")
]
Gamma2Option = Annotated[
    Optional[float], typer.Option("--gamma2", parser=parse_number, metavar="X", help="Decay rate γ₂ of |a₂⟩")
]
GammaBcOption = Annotated[
    Optional[float], typer.Option("--gamma-bc", parser=parse_number, metavar="X", help="b–c dephasing rate")
]
DeltaOption = Annotated[
    Optional[float], typer.Option("--delta", parser=parse_number, metavar="X", help="Probe detuning Δ")
]
XCountOption = Annotated[Optional[int], typer.Option("--x-count", min=2, metavar="N", help="Positions sampled over [-pi, pi]")]
DeltaRangeOption = Annotated[
    Optional[str], typer.Option("--delta-range", metavar="LO:HI:N", help="Detuning axis of a heatmap")
]
GridNOption = Annotated[Optional[int], typer.Option("--grid-n", min=256, metavar="N", help="Peak-search grid size")]
FormatOption = Annotated[Optional[OutputFormat], typer.Option("--format", help="Output format")]
ConfigOption = Annotated[Optional[Path], typer.Option("--config", metavar="PATH", help="JSON config document")]
OutputOption = Annotated[Optional[Path], typer.Option("--output", "-o", metavar="PATH", help="Write here instead of stdout")]
DumpConfigOption = Annotated[bool, typer.Option("--dump-config", help="Print the resolved config as JSON and stop")]
VerboseOption = Annotated[bool, typer.Option("--verbose", "-v", help="Debug logging on stderr")]
WorkersOption = Annotated[int, typer.Option("--workers", min=1, help="Threads for scan evaluation")]
QuantityOption = Annotated[Quantity, typer.Option("--quantity", help="Quantity plotted and exported as JSON")]


def _build_config(command: str, params: dict[str, Any]) -> RunConfig:
    """Layer preset < config document < flags."""
    name = params.get("preset")
    config_path = params.get("config")
    drive = {k: params[k] for k in _DRIVE_FLAGS if params.get(k) is not None}
    decay = {k: params[k] for k in _DECAY_FLAGS if params.get(k) is not None}
    scan_flags = {k: params[k] for k in ("delta", "x_count", "grid_n", "delta_range") if params.get(k) is not None}
    if command != "preset-list" and name is None and config_path is None and not (drive or decay or scan_flags):
        raise UsageError("no parameters given; pass --preset, --config or parameter flags")

    if name is not None:
        try:
            config = RunConfig.from_request(command, scan.preset(name), name)
        except UnknownPreset as e:
            raise typer.BadParameter(f"{e}; choose from {', '.join(e.data['available'])}", param_hint="--preset")
    else:
        config = RunConfig(command=command)

    try:
        if config_path is not None:
            try:
                config = config.from_document(read_document(config_path))
            except ValueError as e:
                raise typer.BadParameter(str(e), param_hint="--config")
        if "delta_range" in scan_flags:
            try:
                scan_flags["delta_range"] = parse_delta_range(scan_flags["delta_range"])
            except ValueError as e:
                raise typer.BadParameter(str(e), param_hint="--delta-range")
        return replace(
            config,
            drive=replace(config.drive, **drive),
            decay=replace(config.decay, **decay),
            **scan_flags,
            workers=params.get("workers", 1),
            quantity=params.get("quantity") or Quantity.CHI_IM,
            config_path=str(config_path) if config_path is not None else None,
            format=params["format"].value if params.get("format") is not None else None,
            output=str(params["output"]) if params.get("output") is not None else None,
            dump_config=bool(params.get("dump_config")),
            verbose=bool(params.get("verbose")),
        )
    except ValueError as e:
        raise UsageError(str(e))


def _dispatch(ctx: typer.Context, command: str, params: dict[str, Any]) -> None:
    config = _build_config(command, params)
    if isinstance(ctx.obj, dict) and ctx.obj.get("capture"):
        ctx.obj["config"] = config
        return
    code = run(config)
    if code:
        raise typer.Exit(code)


def parse_args(argv: Sequence[str]) -> RunConfig:
    """Parse a command line into a RunConfig without running it.

    Raises ``UsageError`` (exit status 2) on unknown flags, bad numbers
    or missing parameters.
    """
    command = typer.main.get_command(app)
    obj: dict[str, Any] = {"capture": True}
    command.main(args=list(argv), prog_name="atom-loc", standalone_mode=False, obj=obj)
    if "config" not in obj:
        raise UsageError("no command given")
    return obj["config"]


def _format_for(config: RunConfig) -> str:
    allowed = COMMAND_FORMATS[config.command]
    fmt = config.format or allowed[0]
    if fmt not in allowed:
        raise UsageError(f"{config.command} writes {', '.join(allowed)}; got --format {fmt}")
    return fmt


def _dumps(payload: Any) -> str:
    return json.dumps(payload, indent=2, default=str) + "\n"


def _table_output(table: scan.ProfileTable, config: RunConfig, fmt: str) -> str:
    table.metadata["preset"] = config.preset
    if fmt == "json":
        return _dumps(table.to_dict())
    if fmt == "svg":
        return render_svg(table)
    return table.to_csv()


def _run_profile(config: RunConfig, fmt: str) -> tuple[str, int]:
    request = config.to_request()
    return _table_output(scan.profile(request), config, fmt), 0


def _run_heatmap(config: RunConfig, fmt: str) -> tuple[str, int]:
    if config.delta_range is None:
        raise UsageError("heatmap needs --delta-range LO:HI:N or a preset that sets one")
    request = config.to_request()
    return _table_output(scan.heatmap(request), config, fmt), 0


def _analytic_positions(config: RunConfig) -> list[float] | None:
    if not (config.decay.is_metastable and config.drive.is_balanced and config.decay.gamma_bc == 0.0):
        return None
    try:
        return peak_positions_analytic(config.drive, config.delta)
    except DegenerateParameters:
        return None


def _run_peaks(config: RunConfig, fmt: str) -> tuple[str, int]:
    peaks = peak_positions_numeric(
        config.drive,
        config.decay,
        config.delta,
        config.prefactor,
        grid_n=config.grid_n,
        min_prominence=config.min_prominence,
    )
    if fmt == "csv":
        frame = pd.DataFrame(
            [p.to_dict() for p in peaks.peaks], columns=["kappa_x", "height", "fwhm", "prominence"]
        )
        return frame.to_csv(index=False, float_format="%.17g", na_rep="undefined", lineterminator="\n"), 0
    payload = {
        "preset": config.preset,
        "delta": config.delta,
        **peaks.to_dict(),
        "class": classify(peaks).value,
        "analytic_positions": _analytic_positions(config),
    }
    return _dumps(payload), 0


def _run_classify(config: RunConfig, fmt: str) -> tuple[str, int]:
    peaks = peak_positions_numeric(
        config.drive,
        config.decay,
        config.delta,
        config.prefactor,
        grid_n=config.grid_n,
        min_prominence=config.min_prominence,
    )
    result = classify(peaks)
    payload = {
        "preset": config.preset,
        "delta": config.delta,
        "class": result.value,
        "positions": peaks.positions,
    }
    return _dumps(payload), 0


def _run_curves(config: RunConfig, fmt: str) -> tuple[str, int]:
    case = PhaseCase.from_phi(config.drive.phi)
    samples = config.to_request().positions()
    branches = detuning_branches(case, config.drive, samples)
    if fmt == "csv":
        frame = pd.DataFrame({"kappa_x": samples})
        for branch in branches:
            frame[f"branch_{branch.branch_id}"] = [d for _, d in branch.values]
        return frame.to_csv(index=False, float_format="%.17g", lineterminator="\n"), 0
    payload = {
        "phase_case": case.value,
        "delta": config.delta,
        "branches": [b.to_dict() for b in branches],
        "intersections": branch_intersections(case, config.drive, config.delta, grid_n=config.grid_n),
    }
    return _dumps(payload), 0


def _run_verify(config: RunConfig, fmt: str) -> tuple[str, int]:
    positions = config.to_request().positions()
    reports = [
        verify_point(config.drive, config.decay, ProbePoint(config.delta, float(x)), prefactor=config.prefactor)
        for x in positions
    ]
    max_dev = max((r.max_deviation for r in reports), default=0.0)
    failed = [r for r in reports if not r.ok]
    passed = not failed and max_dev <= VERIFY_TOLERANCE
    payload = {
        "preset": config.preset,
        "delta": config.delta,
        "points": [r.to_dict() for r in reports],
        "max_deviation": max_dev,
        "tolerance": VERIFY_TOLERANCE,
        "passed": passed,
        "summary": f"3-way max deviation {max_dev:.3e} {'<=' if max_dev <= VERIFY_TOLERANCE else '>'} {VERIFY_TOLERANCE:g}",
    }
    if not passed:
        detail = f"{len(failed)} point(s) without a full comparison" if failed else payload["summary"]
        err_console.print(f"[red]Error:[/red] verification failed: {escape(detail)}")
    return _dumps(payload), 0 if passed else 1


def _preset_rows() -> list[dict[str, Any]]:
    rows = []
    for name, (description, factory) in scan.PRESETS.items():
        request = factory()
        rows.append(
            {
                "name": name,
                "description": description,
                "drive": request.drive.to_dict(),
                "decay": request.decay.to_dict(),
                "delta": request.delta,
                "delta_range": [*request.delta_range, request.delta_count] if request.delta_range else None,
            }
        )
    return rows


def _run_preset_list(config: RunConfig, fmt: str) -> tuple[str | None, int]:
    rows = _preset_rows()
    if config.format == "json":
        return _dumps(rows), 0
    table = Table(title="Presets")
    table.add_column("Name", style="cyan")
    table.add_column("Ω₁, Ω₂, Ω₃", style="green")
    table.add_column("φ")
    table.add_column("γ₂")
    table.add_column("Δ", style="yellow")
    table.add_column("Description", style="dim")
    for row in rows:
        drive = row["drive"]
        table.add_row(
            row["name"],
            f"{drive['omega1']:g}, {drive['omega2']:g}, {drive['omega3']:g}",
            f"{drive['phi']:.4g}",
            f"{row['decay']['gamma2']:g}",
            f"{row['delta']:.6g}" + (" (map)" if row["delta_range"] else ""),
            row["description"],
        )
    if config.output is None:
        console.print(table)
        return None, 0
    capture = Console(record=True, width=120, file=io.StringIO())
    capture.print(table)
    return capture.export_text(), 0


RUNNERS: dict[str, Callable[[RunConfig, str], tuple[str | None, int]]] = {
    "profile": _run_profile,
    "heatmap": _run_heatmap,
    "peaks": _run_peaks,
    "curves": _run_curves,
    "classify": _run_classify,
    "verify": _run_verify,
    "preset-list": _run_preset_list,
}


def run(config: RunConfig) -> int:
    """Execute a parsed config; 0 on success, 1 on computational failure, 2 on usage error."""
    _configure_logging(config.verbose)
    try:
        if config.dump_config:
            text, status = _dumps(config.to_document()), 0
        else:
            text, status = RUNNERS[config.command](config, _format_for(config))
        if text is not None:
            if config.output:
                Path(config.output).write_text(text, encoding="utf-8")
            else:
                print(text, end="")
    except UsageError as e:
        err_console.print(f"[red]Error:[/red] {escape(e.format_message())}")
        return 2
    except (AtomLocError, ValueError, OSError) as e:
        return handle_error(e)
    return status


@app.command()
def profile(
    ctx: typer.Context,
    preset: PresetOption = None,
    omega1: Omega1Option = None,
    omega2: Omega2Option = None,
    omega3: Omega3Option = None,
    phi: PhiOption = None,
    theta2: Theta2Option = None,
    theta3: Theta3Option = None,
    gamma2: Gamma2Option = None,
    gamma_bc: GammaBcOption = None,
    delta: DeltaOption = None,
    x_count: XCountOption = None,
    delta_range: DeltaRangeOption = None,
    grid_n: GridNOption = None,
    format: FormatOption = None,
    config: ConfigOption = None,
    output: OutputOption = None,
    dump_config: DumpConfigOption = False,
    quantity: QuantityOption = Quantity.CHI_IM,
    workers: WorkersOption = 1,
    verbose: VerboseOption = False,
):
    """χ along κx at one detuning (CSV, JSON or SVG)."""
    _dispatch(ctx, "profile", locals())


@app.command()
def heatmap(
    ctx: typer.Context,
    preset: PresetOption = None,
    omega1: Omega1Option = None,
    omega2: Omega2Option = None,
    omega3: Omega3Option = None,
    phi: PhiOption = None,
    theta2: Theta2Option = None,
    theta3: Theta3Option = None,
    gamma2: Gamma2Option = None,
    gamma_bc: GammaBcOption = None,
    delta: DeltaOption = None,
    x_count: XCountOption = None,
    delta_range: DeltaRangeOption = None,
    grid_n: GridNOption = None,
    format: FormatOption = None,
    config: ConfigOption = None,
    output: OutputOption = None,
    dump_config: DumpConfigOption = False,
    quantity: QuantityOption = Quantity.CHI_IM,
    workers: WorkersOption = 1,
    verbose: VerboseOption = False,
):
    """χ over a (Δ, κx) grid, Δ outer and κx inner."""
    _dispatch(ctx, "heatmap", locals())


@app.command()
def peaks(
    ctx: typer.Context,
    preset: PresetOption = None,
    omega1: Omega1Option = None,
    omega2: Omega2Option = None,
    omega3: Omega3Option = None,
    phi: PhiOption = None,
    theta2: Theta2Option = None,
    theta3: Theta3Option = None,
    gamma2: Gamma2Option = None,
    gamma_bc: GammaBcOption = None,
    delta: DeltaOption = None,
    x_count: XCountOption = None,
    delta_range: DeltaRangeOption = None,
    grid_n: GridNOption = None,
    format: FormatOption = None,
    config: ConfigOption = None,
    output: OutputOption = None,
    dump_config: DumpConfigOption = False,
    verbose: VerboseOption = False,
):
    """Absorption peaks along κx with widths and localization class."""
    _dispatch(ctx, "peaks", locals())


@app.command()
def curves(
    ctx: typer.Context,
    preset: PresetOption = None,
    omega1: Omega1Option = None,
    omega2: Omega2Option = None,
    omega3: Omega3Option = None,
    phi: PhiOption = None,
    theta2: Theta2Option = None,
    theta3: Theta3Option = None,
    gamma2: Gamma2Option = None,
    gamma_bc: GammaBcOption = None,
    delta: DeltaOption = None,
    x_count: XCountOption = None,
    delta_range: DeltaRangeOption = None,
    grid_n: GridNOption = None,
    format: FormatOption = None,
    config: ConfigOption = None,
    output: OutputOption = None,
    dump_config: DumpConfigOption = False,
    verbose: VerboseOption = False,
):
    """Detunings that put an absorption peak at each position (φ = 0, π/2, π)."""
    _dispatch(ctx, "curves", locals())


@app.command("classify")
def classify_cmd(
    ctx: typer.Context,
    preset: PresetOption = None,
    omega1: Omega1Option = None,
    omega2: Omega2Option = None,
    omega3: Omega3Option = None,
    phi: PhiOption = None,
    theta2: Theta2Option = None,
    theta3: Theta3Option = None,
    gamma2: Gamma2Option = None,
    gamma_bc: GammaBcOption = None,
    delta: DeltaOption = None,
    x_count: XCountOption = None,
    delta_range: DeltaRangeOption = None,
    grid_n: GridNOption = None,
    format: FormatOption = None,
    config: ConfigOption = None,
    output: OutputOption = None,
    dump_config: DumpConfigOption = False,
    verbose: VerboseOption = False,
):
    """Whether every absorption peak lies in one half-wavelength."""
    _dispatch(ctx, "classify", locals())


@app.command()
def verify(
    ctx: typer.Context,
    preset: PresetOption = None,
    omega1: Omega1Option = None,
    omega2: Omega2Option = None,
    omega3: Omega3Option = None,
    phi: PhiOption = None,
    theta2: Theta2Option = None,
    theta3: Theta3Option = None,
    gamma2: Gamma2Option = None,
    gamma_bc: GammaBcOption = None,
    delta: DeltaOption = None,
    x_count: XCountOption = None,
    delta_range: DeltaRangeOption = None,
    grid_n: GridNOption = None,
    format: FormatOption = None,
    config: ConfigOption = None,
    output: OutputOption = None,
    dump_config: DumpConfigOption = False,
    verbose: VerboseOption = False,
):
    """Closed form, linear solve and time evolution compared along κx."""
    _dispatch(ctx, "verify", locals())


@app.command("preset-list")
def preset_list(
    ctx: typer.Context,
    format: FormatOption = None,
    output: OutputOption = None,
    verbose: VerboseOption = False,
):
    """List the named parameter regimes."""
    _dispatch(ctx, "preset-list", locals())


if __name__ == "__main__":
    app()
