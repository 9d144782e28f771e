import xml.etree.ElementTree as ET

import numpy as np
import pytest
from scipy.signal import find_peaks
from typer.testing import CliRunner

from atom_loc import cli
from atom_loc.errors import UnsupportedTable
from atom_loc.model import DriveConfig
from atom_loc.plot import emit_svg, render_svg
from atom_loc.scan import Quantity, ScanRequest, heatmap, preset, profile

pytestmark = pytest.mark.unit

runner = CliRunner()

NS = "{http://www.w3.org/2000/svg}"


def _polyline_values(svg):
    root = ET.fromstring(svg)
    (line,) = root.iter(f"{NS}polyline")
    pairs = [p.split(",") for p in line.get("points").split()]
    return np.array([float(x) for x, _ in pairs]), np.array([float(y) for _, y in pairs])


def test_single_polyline_and_guide():
    svg = render_svg(profile(preset("fig2a").with_overrides(x_count=64)))
    root = ET.fromstring(svg)
    assert root.tag == f"{NS}svg"
    assert len(list(root.iter(f"{NS}polyline"))) == 1
    guides = [el for el in root.iter(f"{NS}line") if el.get("class") == "guide"]
    assert len(guides) == 1
    assert guides[0].get("x1") == guides[0].get("x2") == "345.000"
    labels = [el.text for el in root.iter(f"{NS}text")]
    assert "π/2" in labels and "−π" in labels and "0" in labels


def test_polyline_spans_plot_area():
    xs, ys = _polyline_values(render_svg(profile(preset("fig2b").with_overrides(x_count=33))))
    assert len(xs) == 33
    assert xs[0] == pytest.approx(70.0) and xs[-1] == pytest.approx(620.0)
    assert np.all(np.diff(xs) > 0)
    assert ys.min() >= 60.0 and ys.max() <= 350.0


def test_strong_standing_wave_has_four_maxima():
    _, ys = _polyline_values(render_svg(profile(preset("fig2d"))))
    # SVG y grows downward.
    maxima, _ = find_peaks(-ys, prominence=1.0)
    assert len(maxima) == 4


def test_svg_is_deterministic():
    request = preset("subhalf_phi0").with_overrides(x_count=128)
    assert render_svg(profile(request)) == render_svg(profile(request))


def test_title_carries_parameters():
    table = profile(preset("fig2d").with_overrides(x_count=16, quantity=Quantity.CHI_RE))
    table.metadata["preset"] = "fig2d"
    titles = [el.text for el in ET.fromstring(render_svg(table)).iter(f"{NS}text")][:2]
    assert titles[0] == "χ′ vs κx (fig2d)"
    assert "Ω₁=20" in titles[1]


def test_heatmap_cannot_be_plotted():
    table = heatmap(ScanRequest(drive=DriveConfig(), x_count=2, delta_range=(-1.0, 1.0)))
    with pytest.raises(UnsupportedTable):
        render_svg(table)


def test_undefined_profile_cannot_be_plotted():
    table = profile(ScanRequest(drive=DriveConfig(), delta=0.0, x_count=8))
    with pytest.raises(UnsupportedTable):
        render_svg(table)


def test_emit_svg_writes_file(tmp_path):
    out = tmp_path / "fig2a.svg"
    svg = emit_svg(profile(preset("fig2a").with_overrides(x_count=16)), out)
    assert out.read_text(encoding="utf-8") == svg


def test_cli_svg_output(tmp_path):
    out = tmp_path / "fig2d.svg"
    result = runner.invoke(cli.app, ["profile", "--preset", "fig2d", "--format", "svg", "-o", str(out)])
    assert result.exit_code == 0
    _, ys = _polyline_values(out.read_text(encoding="utf-8"))
    assert len(ys) == 512
