import json
import math

import pytest
import typer
from typer.testing import CliRunner

from atom_loc import cli, evolution
from atom_loc.errors import NonConverged
from atom_loc.model import DriveConfig

pytestmark = pytest.mark.unit

runner = CliRunner()


def test_parse_args_preset_with_override():
    config = cli.parse_args(["profile", "--preset", "fig2a", "--omega1", "20", "--x-count", "64"])
    assert config.command == "profile"
    assert config.preset == "fig2a"
    assert config.drive == DriveConfig(omega1=20.0, omega2=1.0, omega3=1.0, phi=math.pi / 2)
    assert config.x_count == 64
    assert config.delta == 5.0


def test_parse_args_pi_expressions():
    config = cli.parse_args(["peaks", "--omega1", "30", "--omega2", "20", "--omega3", "20", "--phi", "pi", "--delta", "7.5"])
    assert config.drive.phi == pytest.approx(math.pi)
    assert config.preset is None
    assert config.grid_n == 2048


def test_parse_args_delta_range():
    config = cli.parse_args(["heatmap", "--omega2", "20", "--delta-range", "0:30:31"])
    assert config.delta_range == (0.0, 30.0, 31)


@pytest.mark.parametrize(
    "argv",
    [
        ["profile", "--preset", "fig2a", "--phi", "banana"],
        ["profile", "--preset", "fig2a", "--colour", "red"],
        ["profile"],
        ["profile", "--preset", "fig9"],
        ["heatmap", "--preset", "fig3_phi0", "--delta-range", "30:0:5"],
        ["profile", "--preset", "fig2a", "--grid-n", "16"],
        ["profile", "--omega1", "-3"],
    ],
)
def test_parse_args_usage_errors(argv):
    with pytest.raises(cli.UsageError) as excinfo:
        cli.parse_args(argv)
    assert excinfo.value.exit_code == 2


def test_usage_errors_share_typer_base():
    assert issubclass(typer.BadParameter, cli.UsageError)
    assert cli.UsageError("x").exit_code == 2


def test_bad_number_exits_2():
    result = runner.invoke(cli.app, ["profile", "--preset", "fig2a", "--phi", "banana"])
    assert result.exit_code == 2


def test_missing_parameters_exit_2():
    result = runner.invoke(cli.app, ["profile"])
    assert result.exit_code == 2


def test_profile_csv_uniform_regime():
    result = runner.invoke(cli.app, ["profile", "--preset", "fig4e", "--x-count", "5"])
    assert result.exit_code == 0
    lines = result.stdout.splitlines()
    assert lines[0] == "kappa_x,chi_re,chi_im"
    assert len(lines) == 6
    for line in lines[1:]:
        assert float(line.split(",")[2]) == pytest.approx(1.0, abs=1e-12)


def test_profile_json_both_quantities():
    result = runner.invoke(cli.app, ["profile", "--preset", "fig2b", "--x-count", "3", "--format", "json", "--quantity", "both"])
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    assert payload["columns"] == ["kappa_x", "chi_re", "chi_im"]
    assert payload["metadata"]["preset"] == "fig2b"
    assert payload["metadata"]["probe"]["delta"] == 1.4
    assert len(payload["rows"]) == 3


def test_profile_writes_output_file(tmp_path):
    out = tmp_path / "fig2a.csv"
    result = runner.invoke(cli.app, ["profile", "--preset", "fig2a", "--x-count", "9", "-o", str(out)])
    assert result.exit_code == 0
    assert result.stdout == ""
    assert out.read_text().startswith("kappa_x,chi_re,chi_im\n")


def test_peaks_sub_half_wavelength():
    result = runner.invoke(cli.app, ["peaks", "--preset", "subhalf_phi0"])
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    positions = [p["kappa_x"] for p in payload["peaks"]]
    assert positions == pytest.approx([-2.6180, -0.5236], abs=2 * math.pi / 2048)
    assert payload["class"] == "SubHalfNegative"
    assert payload["uniform"] is False
    assert payload["analytic_positions"] == pytest.approx([-5 * math.pi / 6, -math.pi / 6], abs=1e-12)


def test_peaks_csv():
    result = runner.invoke(cli.app, ["peaks", "--preset", "fig2d", "--format", "csv"])
    assert result.exit_code == 0
    lines = result.stdout.splitlines()
    assert lines[0] == "kappa_x,height,fwhm,prominence"
    assert len(lines) == 5


def test_peaks_uniform_regime():
    result = runner.invoke(cli.app, ["peaks", "--preset", "fig4e"])
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    assert payload["uniform"] is True
    assert payload["peaks"] == []
    assert payload["class"] == "Uniform"


def test_classify_mirror_preset():
    result = runner.invoke(cli.app, ["classify", "--preset", "subhalf_phipi"])
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    assert payload["class"] == "SubHalfPositive"
    assert payload["positions"] == pytest.approx([math.pi / 6, 5 * math.pi / 6], abs=2 * math.pi / 2048)


def test_curves_csv_and_json():
    result = runner.invoke(cli.app, ["curves", "--preset", "subhalf_phi0", "--x-count", "5"])
    assert result.exit_code == 0
    lines = result.stdout.splitlines()
    assert lines[0] == "kappa_x,branch_1,branch_2,branch_3"
    assert len(lines) == 6

    result = runner.invoke(cli.app, ["curves", "--preset", "subhalf_phi0", "--x-count", "5", "--format", "json"])
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    assert payload["phase_case"] == "Zero"
    assert [b["branch_id"] for b in payload["branches"]] == [1, 2, 3]
    assert payload["intersections"] == pytest.approx([-5 * math.pi / 6, -math.pi / 6], abs=1e-9)


def test_curves_unsupported_phase():
    result = runner.invoke(cli.app, ["curves", "--preset", "subhalf_phi0", "--phi", "1"])
    assert result.exit_code == 1
    assert "Error:" in result.stderr


def test_peaks_on_undefined_profile_fail():
    result = runner.invoke(cli.app, ["peaks", "--omega1", "0", "--delta", "0"])
    assert result.exit_code == 1
    assert "undefined at every sampled position" in result.stderr


def test_heatmap_csv_order():
    result = runner.invoke(
        cli.app, ["heatmap", "--omega1", "0", "--x-count", "2", "--delta-range", "-1:1:2"]
    )
    assert result.exit_code == 0
    lines = result.stdout.splitlines()
    assert lines[0] == "delta,kappa_x,chi_re,chi_im"
    assert [tuple(map(float, line.split(",")[:2])) for line in lines[1:]] == [
        (-1.0, -math.pi),
        (-1.0, math.pi),
        (1.0, -math.pi),
        (1.0, math.pi),
    ]


def test_heatmap_svg_is_rejected():
    result = runner.invoke(cli.app, ["heatmap", "--preset", "fig3_phi0", "--x-count", "4", "--format", "svg"])
    assert result.exit_code == 1
    assert "Error:" in result.stderr


def test_heatmap_without_detuning_axis():
    result = runner.invoke(cli.app, ["heatmap", "--preset", "fig2a"])
    assert result.exit_code == 2


def test_format_not_offered_by_command():
    result = runner.invoke(cli.app, ["classify", "--preset", "fig2a", "--format", "csv"])
    assert result.exit_code == 2


def test_verify_passes():
    result = runner.invoke(cli.app, ["verify", "--preset", "fig2b", "--x-count", "5"])
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    assert payload["passed"] is True
    assert payload["max_deviation"] <= 1e-6
    assert len(payload["points"]) == 5
    assert payload["summary"].startswith("3-way max deviation")


def test_verify_reports_non_convergence(monkeypatch):
    monkeypatch.setattr(evolution, "default_horizon", lambda decay: 0.5)
    result = runner.invoke(cli.app, ["verify", "--preset", "fig2b", "--x-count", "3"])
    assert result.exit_code == 1
    assert "verification failed" in result.stderr
    payload = json.loads(result.stdout)
    assert payload["passed"] is False
    assert all("evolution" in point["errors"] for point in payload["points"])


def test_dump_config_round_trip(tmp_path):
    dumped = tmp_path / "run.json"
    result = runner.invoke(
        cli.app, ["profile", "--preset", "fig3_phi0", "--omega1", "25", "--dump-config", "-o", str(dumped)]
    )
    assert result.exit_code == 0
    doc = json.loads(dumped.read_text())
    assert doc["drive"]["omega1"] == 25.0
    assert doc["scan"]["delta_range"] == [0.0, 30.0, 301]

    from_file = cli.parse_args(["profile", "--config", str(dumped)])
    from_flags = cli.parse_args(["profile", "--preset", "fig3_phi0", "--omega1", "25"])
    assert from_file == from_flags


def test_flags_override_config_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"drive": {"omega1": 3, "omega2": 1, "omega3": 1, "phi": "pi/2"}, "probe": {"delta": 5}}))
    config = cli.parse_args(["peaks", "--config", str(path), "--delta", "1.4"])
    assert config.delta == 1.4
    assert config.drive.phi == pytest.approx(math.pi / 2)


def test_invalid_config_file_exits_2(tmp_path):
    path = tmp_path / "run.json"
    path.write_text('{"drive": {"omega9": 1}}')
    result = runner.invoke(cli.app, ["profile", "--config", str(path)])
    assert result.exit_code == 2


def test_preset_list_json():
    result = runner.invoke(cli.app, ["preset-list", "--format", "json"])
    assert result.exit_code == 0
    rows = json.loads(result.stdout)
    names = [row["name"] for row in rows]
    assert "fig2a" in names and "subhalf_phipi" in names
    heat = next(row for row in rows if row["name"] == "fig3_phi0")
    assert heat["delta_range"] == [0.0, 30.0, 301]


def test_preset_list_table():
    result = runner.invoke(cli.app, ["preset-list"])
    assert result.exit_code == 0
    assert "Presets" in result.stdout
    assert "fig2a" in result.stdout


def test_preset_list_rejects_csv():
    result = runner.invoke(cli.app, ["preset-list", "--format", "csv"])
    assert result.exit_code == 2


def test_handle_error_returns_failure_status():
    assert cli.handle_error(NonConverged(100.0, 1e-3)) == 1
