"""
Schemas for run configuration, surfaces, reports and errors.

Physical quantities are SI floats internally; the annotated unit types from
``ddstrap.utils.units`` read "<number> <unit>" strings from configuration files
and write canonical SI strings back.
"""

import hashlib
import json
import math
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..utils.units import Angle, AngularFrequency, Length, Power, Wavevector


# =============================================================================
# Errors
# =============================================================================
class SimulationError(Exception):
    """Base error carrying a machine-readable code and free-form context."""

    exit_code = 3

    def __init__(self, error_code: str, error_message: str, extras: Optional[Dict[str, Any]] = None):
        self.error_code = error_code
        self.error_message = error_message
        self.extras = extras
        super().__init__(error_message)

    def dict(self):
        """FastAPI/JSON compatible view"""
        return {
            "error_code": self.error_code,
            "error_message": self.error_message,
            "extras": self.extras,
        }


class ConfigError(SimulationError):
    """Invalid configuration: unknown label, missing key, bad unit."""

    exit_code = 2

    def __init__(self, error_message: str, section: Optional[str] = None, key: Optional[str] = None,
                 line: Optional[int] = None, extras: Optional[Dict[str, Any]] = None):
        self.section = section
        self.key = key
        self.line = line
        context = dict(extras or {})
        context.update({k: v for k, v in {"section": section, "key": key, "line": line}.items() if v is not None})
        super().__init__("config_error", error_message, context or None)


class DomainError(SimulationError):
    """Argument outside the physical domain of an operation."""

    exit_code = 2

    def __init__(self, error_message: str, extras: Optional[Dict[str, Any]] = None):
        super().__init__("domain_error", error_message, extras)


class NumericalError(SimulationError):
    """Numerical failure: eigenproblem, divergence, missing root."""

    def __init__(self, error_message: str, extras: Optional[Dict[str, Any]] = None, error_code: str = "numerical_error"):
        super().__init__(error_code, error_message, extras)


class PermittivityRangeError(NumericalError):
    def __init__(self, material: str, omega: float, valid: tuple):
        super().__init__(
            f"frequency {omega:.4e} rad/s outside the validity range of material '{material}'",
            {"material": material, "omega": omega, "valid_rad_per_s": list(valid)},
            error_code="permittivity_range",
        )


class NoSPRFoundError(NumericalError):
    def __init__(self, error_message: str = "no SPR found", extras: Optional[Dict[str, Any]] = None):
        super().__init__(error_message, extras, error_code="no_spr_found")


class NoBarrierPositionError(NumericalError):
    def __init__(self, error_message: str = "no barrier position", extras: Optional[Dict[str, Any]] = None):
        super().__init__(error_message, extras, error_code="no_barrier_position")


class NotTrappedError(NumericalError):
    """Raised where a trap is required; scans record it as status NT."""

    def __init__(self, error_message: str = "Non Trapped", extras: Optional[Dict[str, Any]] = None):
        super().__init__(error_message, extras, error_code="NT")


# =============================================================================
# Surfaces
# =============================================================================
def _digest(payload: Dict[str, Any]) -> str:
    text = json.dumps(payload, sort_keys=True)
    return hashlib.sha1(text.encode("utf-8")).hexdigest()[:16]


class Layer(BaseModel):
    """Homogeneous film of finite thickness"""
    model_config = ConfigDict(frozen=True)

    material: str
    thickness: Length

    @field_validator("thickness")
    @classmethod
    def _positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("layer thickness must be > 0")
        return value


class LayerStack(BaseModel):
    """
    Planar multilayer, listed from the incidence side to the substrate.

    For Casimir-Polder work the incidence medium is the vacuum the atom sits in;
    back illumination uses ``reversed()``.
    """
    model_config = ConfigDict(frozen=True)

    incidence: str = "vacuum"
    layers: List[Layer] = Field(default_factory=list)
    substrate: str

    def reversed(self) -> "LayerStack":
        return LayerStack(incidence=self.substrate, layers=list(reversed(self.layers)), substrate=self.incidence)

    def materials(self) -> List[str]:
        return [self.incidence, *[layer.material for layer in self.layers], self.substrate]

    def geometry_hash(self) -> str:
        return _digest({"stack": self.model_dump()})


class GratingGeometry(BaseModel):
    """
    1D lamellar grating: ridges of ``ridge_material`` (centered on x = 0) and
    grooves of ``groove_material`` in a layer of height ``ridge_height``, standing
    on ``layers`` and a semi-infinite ``substrate``; ``cover`` fills z > 0.
    """
    model_config = ConfigDict(frozen=True)

    period: Length
    ridge_width: Length
    ridge_height: Length
    ridge_material: str = "SiO2"
    groove_material: str = "vacuum"
    cover: str = "vacuum"
    layers: List[Layer] = Field(default_factory=list)
    substrate: str = "Si"

    @model_validator(mode="after")
    def _check_widths(self) -> "GratingGeometry":
        if not (0.0 < self.ridge_width < self.period):
            raise ValueError("ridge width must satisfy 0 < ridge_width < period")
        if not self.ridge_height > 0:
            raise ValueError("ridge height must be > 0")
        return self

    @property
    def fill_factor(self) -> float:
        return self.ridge_width / self.period

    def uniform_stack(self, material: str) -> LayerStack:
        """Planar stack with the grating layer filled by one material."""
        return LayerStack(
            incidence=self.cover,
            layers=[Layer(material=material, thickness=self.ridge_height), *self.layers],
            substrate=self.substrate,
        )

    def geometry_hash(self) -> str:
        return _digest({"grating": self.model_dump()})


# =============================================================================
# Run configuration sections
# =============================================================================
class DressingConfig(BaseModel):
    """Lasers: 1529 nm dressing of 5P (two beams) and the 780 nm beam on the D2 line."""

    power_1529_back: Power = 0.4
    alpha_1529: float = 0.0
    mismatch_1529: AngularFrequency = 2.0 * math.pi * 5e6
    wavelength_1529: Length = 1529.34e-9
    detuning_1529: Optional[AngularFrequency] = None
    waist_1529: Length = 200e-6
    angle_1529_back: Optional[Angle] = None
    angle_1529_front: Angle = 0.0
    power_780: Power = 0.2
    waist_780: Length = 200e-6
    detuning_780: AngularFrequency = 2.0 * math.pi * 30e9
    rabi_frequency: Optional[AngularFrequency] = None
    fold_cp_shift: bool = True

    @model_validator(mode="after")
    def _check_signs(self) -> "DressingConfig":
        if self.power_1529_back < 0 or self.power_780 < 0:
            raise ValueError("laser powers must be >= 0")
        if self.alpha_1529 < 0:
            raise ValueError("alpha_1529 must be >= 0")
        if self.detuning_1529 is not None and not self.detuning_1529 > 0:
            raise ValueError("detuning_1529 must be > 0 (blue side of the 5P-4D line)")
        if self.rabi_frequency is not None and self.rabi_frequency < 0:
            raise ValueError("rabi_frequency must be >= 0")
        return self


class GridConfig(BaseModel):
    z_min: Length = 2e-9
    z_max: Length = 2e-6
    n_z: int = Field(default=600, ge=16)
    n_x: int = Field(default=32, ge=8)
    grating_z_points: int = Field(default=96, ge=16)

    @model_validator(mode="after")
    def _ordered(self) -> "GridConfig":
        if not (0 < self.z_min < self.z_max):
            raise ValueError("grid needs 0 < z_min < z_max")
        return self


class QuadratureSpec(BaseModel):
    """Quadrature resolution for the Casimir-Polder integrals."""

    xi_panels_per_decade: int = Field(default=4, ge=1)
    xi_nodes_per_panel: int = Field(default=8, ge=2)
    laguerre_nodes: int = Field(default=48, ge=8)
    tail_ratio: float = 1e-6
    tolerance: float = 1e-4
    n_kx: int = Field(default=8, ge=2)
    ky_panels: int = Field(default=10, ge=2)
    ky_nodes_per_panel: int = Field(default=6, ge=2)
    grating_xi_panels_per_decade: int = Field(default=2, ge=1)
    grating_xi_nodes_per_panel: int = Field(default=4, ge=2)


class RcwaConfig(BaseModel):
    truncation: int = Field(default=15, ge=1)
    adaptive: bool = True
    max_truncation: int = Field(default=40, ge=1)
    convergence_tol: float = 1e-3


class DynamicsConfig(BaseModel):
    k_eff: Optional[Wavevector] = None
    tunnel_energy_reference: Literal["trap_minimum", "asymptote"] = "trap_minimum"
    itp_spacing: Length = 0.05e-9
    itp_tolerance: float = 1e-12
    max_iterations: int = Field(default=400000, ge=100)


class RunConfig(BaseModel):
    """Validated run configuration (one trap or lattice computation)."""

    name: str = "custom"
    surface: Optional[LayerStack] = None
    grating: Optional[GratingGeometry] = None
    lasers: DressingConfig = Field(default_factory=DressingConfig)
    grids: GridConfig = Field(default_factory=GridConfig)
    quadrature: QuadratureSpec = Field(default_factory=QuadratureSpec)
    rcwa: RcwaConfig = Field(default_factory=RcwaConfig)
    dynamics: DynamicsConfig = Field(default_factory=DynamicsConfig)

    @model_validator(mode="after")
    def _has_surface(self) -> "RunConfig":
        if self.surface is None and self.grating is None:
            raise ValueError("a run needs a 'surface' (planar stack) or a 'grating' section")
        return self


# =============================================================================
# Scans and optimization
# =============================================================================
class ScanAxis(BaseModel):
    """One scanned parameter; start/stop carry units matching the target field."""

    parameter: str
    start: str
    stop: str
    count: int = Field(ge=2)
    spacing: Literal["linear", "log"] = "linear"


class ScanSpec(BaseModel):
    axes: List[ScanAxis]
    metrics: List[str] = Field(default_factory=lambda: ["z_b", "z_t", "U0", "U_b", "U_l", "omega_z", "tau"])
    hold_trap_position: Optional[Length] = None
    output: Optional[str] = None


class AxisRange(BaseModel):
    start: Length
    stop: Length
    count: int = Field(ge=1)


class OptimizationObjective(BaseModel):
    """Intensity gradient over [window_start, window_stop] in front of the surface."""

    kind: Literal["intensity_gradient"] = "intensity_gradient"
    window_start: Length = 50e-9
    window_stop: Length = 100e-9

    @model_validator(mode="after")
    def _ordered(self) -> "OptimizationObjective":
        if not self.window_start < self.window_stop:
            raise ValueError("objective window needs z1 < z2")
        return self


class StackSearchBox(BaseModel):
    dielectric: str = "SiO2"
    metal: str = "Au"
    substrate: str = "Si"
    dielectric_thickness: AxisRange
    metal_thickness: AxisRange


class GratingSearchBox(BaseModel):
    period: Length = 100e-9
    ridge_material: str = "SiO2"
    metal: str = "Au"
    substrate: str = "Si"
    ridge_height: AxisRange
    ridge_width: AxisRange
    metal_thickness: AxisRange


class OptimizationSpec(BaseModel):
    """Search document for optimize-stack (``stack``) or optimize-grating (``grating``)."""

    name: str = "custom"
    stack: Optional[StackSearchBox] = None
    grating: Optional[GratingSearchBox] = None
    objective: OptimizationObjective = Field(default_factory=OptimizationObjective)
    wavelength: Length = 1529.34e-9
    power: Power = 0.4
    waist: Length = 200e-6
    truncation: int = Field(default=15, ge=1)

    @model_validator(mode="after")
    def _has_box(self) -> "OptimizationSpec":
        if self.stack is None and self.grating is None:
            raise ValueError("an optimization needs a 'stack' or a 'grating' search box")
        return self


# =============================================================================
# Reports
# =============================================================================
TrapStatus = Literal["OK", "NT", "NPM"]


class LifetimeBudget(BaseModel):
    """Characteristic times of a trap [s] and the rates that feed them."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    tau_out: float
    tau_tunnel: float
    log10_tau_tunnel: float
    tau_antidamping: float
    tau_adiabatic: float
    gamma_sc: float
    beta: float
    tau: float
    flags: List[str] = Field(default_factory=list)


class TrapReport(BaseModel):
    """Trap or lattice characterization; SI units throughout (J, m, rad/s)."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    status: TrapStatus
    z_b: Optional[float] = None
    z_t: Optional[float] = None
    U0: Optional[float] = None
    U_b: Optional[float] = None
    U_l: Optional[float] = None
    omega_x: Optional[float] = None
    omega_z: Optional[float] = None
    rho_ee: Optional[float] = None
    E_g: Optional[float] = None
    delta_z: Optional[float] = None
    delta_p: Optional[float] = None
    lattice_recoil: Optional[float] = None
    lifetime: Optional[LifetimeBudget] = None
    flags: List[str] = Field(default_factory=list)
    metadata: Dict[str, Any] = Field(default_factory=dict)
