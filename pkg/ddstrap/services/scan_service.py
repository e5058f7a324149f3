"""
Scan Service

Runs the trap pipelines over a grid of dotted-path parameter overrides:
- grid points are distributed over a ThreadPoolExecutor and collected in grid order
- per-point failures (simulation, numerical or validation errors) are recorded as a status, never abort the scan
- optionally solves the 780 nm detuning so that every point traps at a fixed z_t
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError

from ..models.fields import PotentialCurve
from ..models.schemas import ConfigError, NoBarrierPositionError, NotTrappedError, RunConfig, ScanSpec, SimulationError, TrapReport
from ..tools.dressing import solve_detuning_for_position, trap_geometry_curve
from ..utils.config import apply_overrides, parse_parameter
from ..utils.export import report_dict
from ..workflow.trap_workflow import TrapWorkflow, trap_workflow

logger = logging.getLogger(__name__)

NT_CODES = {"NT", "no_barrier_position", "no_spr_found"}

# Delta0 search window for fixed-position scans, relative to the configured detuning
HOLD_BRACKET = (0.25, 2.0)


def axis_values(model, axis) -> np.ndarray:
    start = parse_parameter(model, axis.parameter, axis.start)
    stop = parse_parameter(model, axis.parameter, axis.stop)
    if axis.spacing == "log":
        if start <= 0 or stop <= 0:
            raise ConfigError(f"log spacing needs positive bounds for '{axis.parameter}'", key=axis.parameter)
        return np.geomspace(start, stop, axis.count)
    return np.linspace(start, stop, axis.count)


def flatten_report(report: TrapReport) -> Dict[str, Any]:
    """One-level dict of report metrics in output units (Hz, m, s)."""
    row = {}
    for key, value in report_dict(report).items():
        if key == "lifetime":
            row.update(value)
        elif key == "flags":
            row["flags"] = ",".join(value)
        else:
            row[key] = value
    return row


def point_status(report: TrapReport) -> str:
    if report.status == "OK" and "flagged-quadrature" in report.flags:
        return "flagged-quadrature"
    return report.status


class ScanService:
    """Parameter scans over run configurations"""

    def __init__(self, workflow: Optional[TrapWorkflow] = None):
        self.workflow = workflow or trap_workflow

    def grid(self, config: RunConfig, spec: ScanSpec) -> List[Tuple[Tuple[int, ...], Dict[str, float]]]:
        """Grid points as (multi-index, overrides), in C order over the axes."""
        values = [axis_values(type(config), axis) for axis in spec.axes]
        points = []
        for index in itertools.product(*[range(len(v)) for v in values]):
            overrides = {axis.parameter: float(values[k][i]) for k, (axis, i) in enumerate(zip(spec.axes, index))}
            points.append((index, overrides))
        return points

    # =============================================================================
    # Fixed trap position
    # =============================================================================
    def trap_position(self, state, delta0: float) -> Optional[float]:
        """z_t of the ridge column (lattices) or of the curve for one Delta0; None when untrapped."""
        nodes = self.workflow.dressing_nodes
        try:
            dressing = nodes.dress(state, delta0)["dressing"]
        except NoBarrierPositionError:
            return None
        u = np.asarray(dressing["U"])
        z_b = dressing["z_b"]
        if u.ndim == 2:
            row = nodes.ridge_index(state)
            u, z_b = u[row], float(np.asarray(z_b)[row])
            if math.isnan(z_b):
                return None
        report = trap_geometry_curve(PotentialCurve(z=state["z"], values=u), z_b, nodes.atomic.atom.mass)
        return report.z_t if report.status == "OK" else None

    def hold_detuning(self, config: RunConfig, target: float, threads: int = 1,
                      cache_dir: Optional[str] = None) -> float:
        """Delta0 placing the trap at ``target``; the field and CP stages are memoized, so only dressing repeats."""
        state = self.workflow.run(config, threads=threads, cache_dir=cache_dir)
        if "cp" not in state:
            raise NotTrappedError("pipeline stopped before the dressing stage")
        delta0 = config.lasers.detuning_780
        bracket = (HOLD_BRACKET[0] * delta0, HOLD_BRACKET[1] * delta0)
        return solve_detuning_for_position(lambda d: self.trap_position(state, d), target, bracket)

    # =============================================================================
    # Points and scans
    # =============================================================================
    def evaluate(self, config: RunConfig, overrides: Dict[str, float], hold_trap_position: Optional[float] = None,
                 threads: int = 1, cache_dir: Optional[str] = None) -> Dict[str, Any]:
        """Metrics of one grid point; failures become a status"""
        row: Dict[str, Any] = dict(overrides)
        try:
            point = apply_overrides(config, overrides)
            if hold_trap_position is not None:
                delta0 = self.hold_detuning(point, hold_trap_position, threads, cache_dir)
                point = apply_overrides(point, {"lasers.detuning_780": delta0})
                row["lasers.detuning_780"] = delta0
            state = self.workflow.run(point, threads=threads, cache_dir=cache_dir)
            report = state["report"]
            row.update(flatten_report(report))
            row["status"] = point_status(report)
        except SimulationError as e:
            logger.warning("Scan point %s failed: %s", overrides, e.error_message)
            row["status"] = "NT" if e.error_code in NT_CODES else e.error_code
            row["error"] = e.error_message
        except ValidationError as e:
            logger.warning("Scan point %s is not a valid configuration: %s", overrides, e)
            row["status"] = "config_error"
            row["error"] = str(e)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
            logger.warning("Scan point %s failed numerically: %s", overrides, e)
            row["status"] = "numerical_error"
            row["error"] = f"{type(e).__name__}: {e}"
        return row

    def run_scan(self, config: RunConfig, spec: ScanSpec, threads: int = 1,
                 cache_dir: Optional[str] = None) -> pd.DataFrame:
        """
        Table with one row per grid point: axis values (SI), requested metrics, status.

        Rows come back in grid order whatever the completion order of the workers.
        """
        points = self.grid(config, spec)
        logger.info("Scanning %d points on %d threads", len(points), threads)
        rows: Dict[Tuple[int, ...], Dict[str, Any]] = {}
        with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
            futures = {
                executor.submit(self.evaluate, config, overrides, spec.hold_trap_position, 1, cache_dir): index
                for index, overrides in points
            }
            for future in as_completed(futures):
                rows[futures[future]] = future.result()

        ordered = [rows[index] for index, _ in points]
        frame = pd.DataFrame(ordered)
        axes = [axis.parameter for axis in spec.axes]
        if spec.hold_trap_position is not None and "lasers.detuning_780" not in axes:
            axes.append("lasers.detuning_780")
        metrics = []
        for name in spec.metrics:
            for column in (name, f"{name}_Hz"):
                if column in frame.columns and column not in metrics:
                    metrics.append(column)
        extra = [c for c in ("status", "flags", "error") if c in frame.columns]
        return frame.reindex(columns=[*axes, *metrics, *extra])


# Global scan service instance
scan_service = ScanService()
