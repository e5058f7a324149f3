import json
import logging
from typing import Any, Dict, List, Optional

# Load environment variables first, before importing any modules that might need them
from dotenv import load_dotenv
load_dotenv()

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from ..models.schemas import ConfigError, DomainError, RunConfig, SimulationError
from ..presets import OPTIMIZE_PRESETS, PRESETS, SCAN_PRESETS
from ..tools.atomic_data import EXCITED, GROUND
from ..utils.config import apply_overrides, default_threads, load_preset, validate_document
from ..utils.export import report_json
from ..utils.units import to_hz
from ..workflow.trap_workflow import trap_workflow

logger = logging.getLogger(__name__)


# Request/Response models
class RunRequest(BaseModel):
    """A bundled preset or an inline configuration (unit strings), plus dotted-path SI overrides."""
    preset: Optional[str] = None
    config: Optional[Dict[str, Any]] = None
    overrides: Dict[str, Any] = Field(default_factory=dict)


class ProfileResponse(BaseModel):
    name: str
    spr_angle_rad: float
    z_m: List[float]
    x_m: Optional[List[float]] = None
    intensity_W_per_m2: List[Any]
    flags: List[str] = []


class CPResponse(BaseModel):
    name: str
    z_m: List[float]
    x_m: Optional[List[float]] = None
    U_5S_Hz: List[Any]
    U_5P_Hz: List[Any]
    flags: List[str] = []


app = FastAPI(title="Doubly-Dressed Surface Trap API", version="1.0.0")

# Configure CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["http://localhost:3000", "http://127.0.0.1:3000"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


def _http_error(error: SimulationError) -> HTTPException:
    status_code = 422 if isinstance(error, (ConfigError, DomainError)) else 500
    return HTTPException(status_code=status_code, detail=error.dict())


def _resolve(request: RunRequest) -> RunConfig:
    if request.config is not None:
        config = validate_document(request.config)
    elif request.preset is not None:
        config = load_preset(request.preset)
    else:
        raise ConfigError("request needs a 'preset' or a 'config'")
    return apply_overrides(config, request.overrides) if request.overrides else config


@app.get("/")
async def root():
    return {"message": "Doubly-Dressed Surface Trap API"}


@app.get("/health")
async def health_check():
    return {"status": "healthy", "message": "API is running"}


@app.get("/presets")
async def list_presets():
    """Bundled run, scan and optimization presets"""
    return {
        "runs": sorted(PRESETS),
        "scans": sorted(SCAN_PRESETS),
        "optimizations": sorted(OPTIMIZE_PRESETS),
    }


@app.post("/field-profile", response_model=ProfileResponse)
def field_profile(request: RunRequest):
    """1529 nm intensity I(z) (planar) or I(x, z) (grating) on the dressing grid"""
    try:
        config = _resolve(request)
        nodes = trap_workflow.optics_nodes
        state = {"config": config}
        result = nodes.compute_grating_intensity(state) if config.grating is not None else nodes.compute_intensity(state)
    except SimulationError as e:
        raise _http_error(e)

    intensity = result["intensity"]
    return ProfileResponse(
        name=config.name,
        spr_angle_rad=result["spr_angle"],
        z_m=result["z"].tolist(),
        x_m=result["x"].tolist() if "x" in result else None,
        intensity_W_per_m2=intensity.intensity.tolist(),
        flags=list(getattr(intensity, "flags", [])),
    )


@app.post("/cp", response_model=CPResponse)
def casimir_polder(request: RunRequest):
    """5S and 5P Casimir-Polder potentials in Hz"""
    try:
        config = _resolve(request)
        nodes = trap_workflow.casimir_nodes
        if config.grating is not None:
            state = {"config": config, "threads": default_threads()}
            cp = nodes.compute_grating_casimir_polder(state)["cp"]
        else:
            cp = nodes.compute_casimir_polder({"config": config})["cp"]
    except SimulationError as e:
        raise _http_error(e)

    ground, excited = cp[GROUND], cp[EXCITED]
    return CPResponse(
        name=config.name,
        z_m=ground.z.tolist(),
        x_m=ground.x.tolist() if hasattr(ground, "x") else None,
        U_5S_Hz=to_hz(ground.values).tolist(),
        U_5P_Hz=to_hz(excited.values).tolist(),
        flags=sorted(set(ground.flags) | set(excited.flags)),
    )


@app.post("/trap")
def trap(request: RunRequest):
    """Full pipeline: trap geometry, ground state and lifetime budget"""
    try:
        config = _resolve(request)
        state = trap_workflow.run(config, threads=default_threads())
    except SimulationError as e:
        raise _http_error(e)

    report = state["report"]
    logger.info("Trap request '%s' finished with status %s", config.name, report.status)
    return {"name": config.name, "report": json.loads(report_json(report))}


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host="0.0.0.0", port=8000)
