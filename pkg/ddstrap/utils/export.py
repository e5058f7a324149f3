"""
Result exports: CSV tables (pandas) with a commented header, TrapReport as JSON or a key-value block.

Energies leave the package as U/h in Hz and angular frequencies as cyclic Hz;
lengths stay in m and times in s.
"""

import json
import math
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import numpy as np
import pandas as pd

from ..models.fields import IntensityMap, IntensityProfile, PotentialCurve, PotentialMap
from ..models.schemas import TrapReport
from .units import angular_to_hz, to_hz

ENERGY_FIELDS = ("U0", "U_b", "U_l", "E_g", "lattice_recoil")
FREQUENCY_FIELDS = ("omega_x", "omega_z")


def profile_frame(profile: IntensityProfile) -> pd.DataFrame:
    return pd.DataFrame({"z_m": profile.z, "intensity_W_per_m2": profile.intensity})


def intensity_map_frame(field_map: IntensityMap) -> pd.DataFrame:
    xx, zz = np.meshgrid(field_map.x, field_map.z, indexing="ij")
    return pd.DataFrame({"x_m": xx.ravel(), "z_m": zz.ravel(), "intensity_W_per_m2": field_map.intensity.ravel()})


def curves_frame(curves: Mapping[str, PotentialCurve]) -> pd.DataFrame:
    """Several U(z) curves on one grid, one column per label in Hz."""
    first = next(iter(curves.values()))
    frame = pd.DataFrame({"z_m": first.z})
    for label, curve in curves.items():
        frame[f"U_{label}_Hz"] = to_hz(np.asarray(curve.values))
    return frame


def potential_map_frame(potential: PotentialMap) -> pd.DataFrame:
    xx, zz = np.meshgrid(potential.x, potential.z, indexing="ij")
    return pd.DataFrame({"x_m": xx.ravel(), "z_m": zz.ravel(), "U_Hz": to_hz(potential.values.ravel())})


def write_table(frame: pd.DataFrame, path: str, header: Optional[Dict[str, Any]] = None, fmt: str = "csv") -> Path:
    """CSV with '# key: value' header lines, or JSON records with the header under 'metadata'."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        payload = {"metadata": header or {}, "rows": json.loads(frame.to_json(orient="records"))}
        target.write_text(json.dumps(payload, indent=2), encoding="utf-8")
        return target
    with target.open("w", encoding="utf-8", newline="") as handle:
        for key, value in (header or {}).items():
            handle.write(f"# {key}: {value}\n")
        frame.to_csv(handle, index=False, float_format="%.10g")
    return target


# =============================================================================
# Trap reports
# =============================================================================
def report_dict(report: TrapReport) -> Dict[str, Any]:
    """TrapReport in output units: energies U/h [Hz], frequencies [Hz], lengths [m], times [s]."""
    out: Dict[str, Any] = {"status": report.status}
    for name in ("z_b", "z_t", "delta_z", "delta_p", "rho_ee"):
        out[name] = getattr(report, name)
    for name in ENERGY_FIELDS:
        value = getattr(report, name)
        out[f"{name}_Hz"] = None if value is None else float(to_hz(value))
    for name in FREQUENCY_FIELDS:
        value = getattr(report, name)
        out[f"{name}_Hz"] = None if value is None else float(angular_to_hz(value))
    if report.U_l is not None and report.lattice_recoil:
        out["U_l_over_E_R"] = report.U_l / report.lattice_recoil
    if report.lifetime is not None:
        out["lifetime"] = report.lifetime.model_dump()
    out["flags"] = list(report.flags)
    return out


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_json_safe(v) for v in value]
    return value


def report_json(report: TrapReport) -> str:
    return json.dumps(_json_safe(report_dict(report)), indent=2)


def report_text(report: TrapReport) -> str:
    """Key-value block, one quantity per line."""
    lines = []
    for key, value in report_dict(report).items():
        if isinstance(value, dict):
            for sub, sub_value in value.items():
                lines.append(f"{key}.{sub} = {sub_value}")
        elif isinstance(value, list):
            lines.append(f"{key} = {','.join(value) if value else '-'}")
        else:
            lines.append(f"{key} = {value}")
    return "\n".join(lines)


def write_report(report: TrapReport, path: str, fmt: str = "json") -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text((report_json(report) if fmt == "json" else report_text(report)) + "\n", encoding="utf-8")
    return target
