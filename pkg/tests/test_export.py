import json
import math

import numpy as np
import pandas as pd
import pytest

from ddstrap.models.fields import PotentialCurve
from ddstrap.models.schemas import LifetimeBudget, TrapReport
from ddstrap.utils.export import curves_frame, report_dict, report_json, report_text, write_report, write_table
from tests.conftest import MHZ


@pytest.fixture
def report():
    budget = LifetimeBudget(tau_out=0.2, tau_tunnel=math.inf, log10_tau_tunnel=math.inf, tau_antidamping=0.5,
                            tau_adiabatic=1e-6, gamma_sc=100.0, beta=1.0, tau=0.1429)
    return TrapReport(status="OK", z_b=24e-9, z_t=31e-9, U0=13.5 * MHZ, omega_z=2 * math.pi * 30e6,
                      lifetime=budget, flags=["flagged-quadrature"])


def test_report_units(report):
    """Ensure energies leave in Hz and angular frequencies as cyclic Hz."""
    out = report_dict(report)
    assert out["U0_Hz"] == pytest.approx(13.5e6)
    assert out["omega_z_Hz"] == pytest.approx(30e6)
    assert out["U_l_Hz"] is None
    assert out["lifetime"]["tau_out"] == 0.2


def test_report_json_spells_infinity(report, tmp_path):
    """Ensure infinite times survive as strings in JSON."""
    payload = json.loads(report_json(report))
    assert payload["lifetime"]["tau_tunnel"] == "inf"
    target = write_report(report, str(tmp_path / "r.json"))
    assert json.loads(target.read_text())["status"] == "OK"


def test_report_text(report):
    """Ensure the key-value block flattens the lifetime section."""
    text = report_text(report)
    assert "lifetime.tau_out = 0.2" in text
    assert "flags = flagged-quadrature" in text


def test_csv_header(tmp_path):
    """Ensure tables start with commented metadata."""
    z = np.array([1e-8, 2e-8])
    frame = curves_frame({"5S": PotentialCurve(z=z, values=np.array([-MHZ, -0.5 * MHZ]))})
    target = write_table(frame, str(tmp_path / "out" / "cp.csv"), {"preset": "fig2e"})
    lines = target.read_text().splitlines()
    assert lines[0] == "# preset: fig2e"
    table = pd.read_csv(target, comment="#")
    assert table["U_5S_Hz"].tolist() == pytest.approx([-1e6, -0.5e6])


def test_json_table(tmp_path):
    """Ensure the JSON table keeps the header under metadata."""
    frame = pd.DataFrame({"z_m": [1e-8], "U_Hz": [2.0]})
    target = write_table(frame, str(tmp_path / "t.json"), {"preset": "fig6"}, fmt="json")
    payload = json.loads(target.read_text())
    assert payload["metadata"] == {"preset": "fig6"}
    assert payload["rows"] == [{"z_m": 1e-8, "U_Hz": 2.0}]
