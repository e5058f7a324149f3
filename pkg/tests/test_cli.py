import json

from ddstrap.cli import main, parse_args
from ddstrap.utils.config import load_preset


def test_config_command_prints_canonical_form(capsys):
    """Ensure 'config' emits the SI form of a preset."""
    assert main(["config", "--preset", "fig2e"]) == 0
    emitted = json.loads(capsys.readouterr().out)
    assert emitted["name"] == "fig2e"
    assert emitted["surface"]["layers"][0]["thickness"] == f"{158e-9!r} m"


def test_config_command_reads_files(tmp_path, capsys):
    """Ensure a configuration file round-trips through the CLI."""
    path = tmp_path / "fig4.json"
    assert main(["config", "--preset", "fig4"]) == 0
    path.write_text(capsys.readouterr().out, encoding="utf-8")
    assert main(["config", "--config", str(path)]) == 0
    assert json.loads(capsys.readouterr().out)["lasers"]["rabi_frequency"] == load_preset("fig4").model_dump(
        mode="json")["lasers"]["rabi_frequency"]


def test_unknown_preset_exit_code(capsys):
    """Ensure configuration errors exit with 2 and print the error payload."""
    assert main(["trap", "--preset", "fig99"]) == 2
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error_code"] == "config_error"


def test_missing_configuration_exit_code(capsys):
    """Ensure a command without --config or --preset fails cleanly."""
    assert main(["cp"]) == 2


def test_lattice_needs_grating(tmp_path):
    """Ensure the lattice command refuses planar configurations."""
    assert main(["lattice", "--preset", "fig2e", "--out", str(tmp_path)]) == 2


def test_optimize_defaults():
    """Ensure the search subcommands default to their bundled boxes."""
    assert parse_args(["optimize-stack"]).search == "fig2b"
    assert parse_args(["optimize-grating"]).search == "fig5b"
    assert parse_args(["scan", "--preset", "fig7", "--scan", "fig7-power"]).threads is None


def test_field_profile_writes_table(tmp_path):
    """Ensure the field-profile command writes a CSV with a commented header."""
    assert main(["field-profile", "--preset", "fig2e", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "fig2e_field_profile.csv").read_text(encoding="utf-8")
    assert text.startswith("# preset: fig2e")
    assert "z_m,intensity_W_per_m2" in text
