"""
Command-line entry point

    ddstrap trap --preset fig2e --out results
    ddstrap lattice --preset fig6 --threads 8 --cache .rcwa-cache
    ddstrap scan --preset fig7 --scan fig7-detuning
    ddstrap optimize-stack --search fig2b
    ddstrap config --preset fig2e

Exit codes: 0 success, 2 configuration or domain error, 3 numerical failure.
"""

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional

import pandas as pd

from .models.schemas import ConfigError, OptimizationSpec, RunConfig, ScanSpec, SimulationError
from .presets import OPTIMIZE_PRESETS, SCAN_PRESETS
from .services.cache_service import cache_service
from .services.optimizer_service import optimizer_service
from .services.scan_service import scan_service
from .tools.atomic_data import EXCITED, GROUND
from .utils.config import default_threads, emit_config, resolve_config, resolve_document
from .utils.export import (
    curves_frame,
    intensity_map_frame,
    potential_map_frame,
    profile_frame,
    write_report,
    write_table,
)
from .utils.logging_setup import configure_logging
from .utils.units import to_hz
from .workflow.trap_workflow import trap_workflow

logger = logging.getLogger(__name__)


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration file (JSON, quantities with units)")
    common.add_argument("--preset", help="bundled run configuration (fig2e, fig4, fig6, fig7)")
    common.add_argument("--out", default="results", help="output directory")
    common.add_argument("--cache", help="RCWA reflection-matrix cache directory (default: DDSTRAP_CACHE_DIR)")
    common.add_argument("--threads", type=int, help="worker threads (default: DDSTRAP_THREADS)")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
    common.add_argument("--log-level", choices=("DEBUG", "INFO", "WARNING", "ERROR"), help="default: DDSTRAP_LOG_LEVEL")

    parser = argparse.ArgumentParser(prog="ddstrap", description="Doubly-dressed near-surface trap simulator.")
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("field-profile", parents=[common], help="1529 nm intensity in front of the surface")
    commands.add_parser("cp", parents=[common], help="5S and 5P Casimir-Polder potentials")
    commands.add_parser("trap", parents=[common], help="planar trap report")
    commands.add_parser("lattice", parents=[common], help="grating lattice report")
    for name, default in (("optimize-stack", "fig2b"), ("optimize-grating", "fig5b")):
        sub = commands.add_parser(name, parents=[common], help="exhaustive geometry search")
        sub.add_argument("--search", default=default, help=f"optimization preset or file (default: {default})")
    scan = commands.add_parser("scan", parents=[common], help="parameter scan")
    scan.add_argument("--scan", required=True, help=f"scan preset ({', '.join(sorted(SCAN_PRESETS))}) or file")
    serve = commands.add_parser("serve", parents=[common], help="HTTP API")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    commands.add_parser("config", parents=[common], help="canonical form of a configuration")
    return parser.parse_args(argv)


def _output_path(args: argparse.Namespace, stem: str, suffix: Optional[str] = None) -> str:
    return str(Path(args.out) / f"{stem}.{suffix or args.format}")


def _threads(args: argparse.Namespace) -> int:
    return max(1, args.threads) if args.threads else default_threads()


# =============================================================================
# Commands
# =============================================================================
def run_field_profile(args: argparse.Namespace, config: RunConfig) -> str:
    nodes = trap_workflow.optics_nodes
    if config.grating is not None:
        result = nodes.compute_grating_intensity({"config": config})
        frame = intensity_map_frame(result["intensity"])
        geometry = config.grating.geometry_hash()
    else:
        result = nodes.compute_intensity({"config": config})
        frame = profile_frame(result["intensity"])
        geometry = config.surface.geometry_hash()
    header = {
        "preset": config.name,
        "geometry_hash": geometry,
        "wavelength_m": config.lasers.wavelength_1529,
        "spr_angle_deg": math.degrees(result["spr_angle"]),
        "flags": ",".join(getattr(result["intensity"], "flags", [])) or "-",
    }
    return str(write_table(frame, _output_path(args, f"{config.name}_field_profile"), header, args.format))


def run_cp(args: argparse.Namespace, config: RunConfig) -> str:
    nodes = trap_workflow.casimir_nodes
    if config.grating is not None:
        cp = nodes.compute_grating_casimir_polder({"config": config, "threads": _threads(args), "cache_dir": args.cache})["cp"]
        frame = potential_map_frame(cp[GROUND]).rename(columns={"U_Hz": "U_5S_Hz"})
        frame["U_5P_Hz"] = to_hz(cp[EXCITED].values.ravel())
    else:
        cp = nodes.compute_casimir_polder({"config": config})["cp"]
        frame = curves_frame({"5S": cp[GROUND], "5P": cp[EXCITED]})
    metadata = cp[GROUND].metadata
    header = {
        "preset": config.name,
        "geometry_hash": metadata.get("geometry_hash"),
        "quadrature": json.dumps(metadata.get("quadrature", {}), sort_keys=True),
        "tail_ratio": metadata.get("tail_ratio"),
        "flags": ",".join(sorted(set(cp[GROUND].flags) | set(cp[EXCITED].flags))) or "-",
    }
    return str(write_table(frame, _output_path(args, f"{config.name}_cp"), header, args.format))


def run_trap(args: argparse.Namespace, config: RunConfig, lattice: bool) -> str:
    if lattice and config.grating is None:
        raise ConfigError("'lattice' needs a configuration with a 'grating' section", section="grating")
    if not lattice and config.grating is not None:
        raise ConfigError("'trap' runs planar stacks; use 'lattice' for gratings", section="grating")

    state = trap_workflow.run(config, threads=_threads(args), cache_dir=args.cache)
    report = state["report"]
    potential = state.get("potential")
    if potential is not None:
        if lattice:
            frame = potential_map_frame(potential)
        else:
            frame = curves_frame({"total": potential})
        write_table(frame, _output_path(args, f"{config.name}_potential"), {"preset": config.name,
                    "flags": ",".join(potential.flags) or "-"}, args.format)
    target = write_report(report, _output_path(args, f"{config.name}_report", "json" if args.format == "json" else "txt"),
                          args.format)
    print(json.dumps({"status": report.status, "report": str(target)}))
    return str(target)


def run_optimize(args: argparse.Namespace, grating: bool) -> str:
    spec: OptimizationSpec = resolve_document(args.search, OPTIMIZE_PRESETS, OptimizationSpec)
    threads = _threads(args)
    if grating:
        if spec.grating is None:
            raise ConfigError("optimization document has no 'grating' search box", section="grating")
        result = optimizer_service.optimize_grating(spec.grating, spec.objective, spec.wavelength, spec.power,
                                                    spec.waist, spec.truncation, threads)
    else:
        if spec.stack is None:
            raise ConfigError("optimization document has no 'stack' search box", section="stack")
        result = optimizer_service.optimize_stack(spec.stack, spec.objective, spec.wavelength, spec.power,
                                                  spec.waist, threads)

    names = list(result.axes)
    grids = pd.MultiIndex.from_product(list(result.axes.values()), names=[f"{n}_m" for n in names]).to_frame(index=False)
    grids["gradient_W_per_m3"] = result.objective.ravel()
    grids["spr_angle_rad"] = result.angles.ravel()
    best = result.best_parameters()
    header = {"search": spec.name, **{f"best_{k}_m": v for k, v in best.items()},
              "best_gradient_W_per_m3": result.best_value, "best_spr_angle_deg": math.degrees(result.best_angle)}
    target = write_table(grids, _output_path(args, f"{spec.name}_{args.command.replace('-', '_')}"), header, args.format)
    print(json.dumps({"best": best, "gradient_W_per_m3": result.best_value, "map": str(target)}))
    return str(target)


def run_scan(args: argparse.Namespace, config: RunConfig) -> str:
    spec: ScanSpec = resolve_document(args.scan, SCAN_PRESETS, ScanSpec)
    frame = scan_service.run_scan(config, spec, threads=_threads(args), cache_dir=args.cache)
    stem = Path(args.scan).stem if args.scan not in SCAN_PRESETS else args.scan
    path = spec.output or _output_path(args, f"{config.name}_{stem}_scan")
    header = {"preset": config.name, "scan": args.scan, "points": len(frame)}
    target = write_table(frame, path, header, args.format)
    counts = frame["status"].value_counts().to_dict() if "status" in frame else {}
    print(json.dumps({"points": len(frame), "status": counts, "table": str(target)}))
    return str(target)


def run_serve(args: argparse.Namespace) -> None:
    import uvicorn

    uvicorn.run("ddstrap.api.main:app", host=args.host, port=args.port)


def dispatch(args: argparse.Namespace) -> None:
    if args.command == "serve":
        run_serve(args)
        return
    if args.command in ("optimize-stack", "optimize-grating"):
        run_optimize(args, grating=args.command == "optimize-grating")
        return

    config = resolve_config(args.config, args.preset)
    if args.cache:
        cache_service.configure(args.cache)
    if args.command == "config":
        print(emit_config(config))
    elif args.command == "field-profile":
        run_field_profile(args, config)
    elif args.command == "cp":
        run_cp(args, config)
    elif args.command in ("trap", "lattice"):
        run_trap(args, config, lattice=args.command == "lattice")
    elif args.command == "scan":
        run_scan(args, config)


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    configure_logging(args.log_level)
    try:
        dispatch(args)
    except SimulationError as e:
        logger.error("%s: %s", e.error_code, e.error_message)
        print(json.dumps(e.dict(), default=str), file=sys.stderr)
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
