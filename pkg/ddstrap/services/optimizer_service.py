"""
Optimizer Service

Exhaustive geometry searches maximizing the 1529 nm intensity gradient
(I(z1) - I(z2)) / (z2 - z1) in front of the surface, each geometry illuminated
from the back at its own SPR angle.
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from ..models.schemas import (
    AxisRange,
    GratingGeometry,
    GratingSearchBox,
    Layer,
    LayerStack,
    NoSPRFoundError,
    OptimizationObjective,
    SimulationError,
    StackSearchBox,
)
from ..tools.materials import MaterialLibrary, load_materials
from ..tools.rcwa import grating_field_map, grating_spr_angle
from ..tools.stratified import field_intensity_profile, intensity_gradient, spr_angle

logger = logging.getLogger(__name__)


def axis_grid(axis: AxisRange) -> np.ndarray:
    if axis.count == 1:
        return np.array([axis.start])
    return np.linspace(axis.start, axis.stop, axis.count)


@dataclass
class OptimizationResult:
    """Objective map over the search box [W/m^3] (NaN where no SPR exists) and its argmax."""
    axes: Dict[str, np.ndarray]
    objective: np.ndarray
    best_index: Tuple[int, ...]
    best_value: float
    best_angle: float
    best: object  # LayerStack or GratingGeometry
    angles: np.ndarray = field(default=None)

    def best_parameters(self) -> Dict[str, float]:
        return {name: float(values[i]) for (name, values), i in zip(self.axes.items(), self.best_index)}


class OptimizerService:
    """Grid searches for planar stacks and ridge gratings"""

    def __init__(self, library: Optional[MaterialLibrary] = None):
        self.library = library

    def _library(self) -> MaterialLibrary:
        return self.library or load_materials()

    def _search(self, axes: Dict[str, np.ndarray], evaluate: Callable[[Tuple[float, ...]], Tuple[float, float]],
                build: Callable[[Tuple[float, ...]], object], threads: int) -> OptimizationResult:
        shape = tuple(len(v) for v in axes.values())
        objective = np.full(shape, np.nan)
        angles = np.full(shape, np.nan)
        indices = list(itertools.product(*[range(n) for n in shape]))

        def task(index):
            point = tuple(float(values[i]) for values, i in zip(axes.values(), index))
            try:
                return index, evaluate(point)
            except NoSPRFoundError:
                return index, (math.nan, math.nan)
            except SimulationError as e:
                logger.warning("Search point %s failed: %s", point, e.error_message)
                return index, (math.nan, math.nan)

        with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
            futures = [executor.submit(task, index) for index in indices]
            for future in as_completed(futures):
                index, (value, angle) = future.result()
                objective[index] = value
                angles[index] = angle

        if np.all(np.isnan(objective)):
            raise NoSPRFoundError("no geometry in the search box supports an SPR", {"points": len(indices)})
        best_flat = int(np.nanargmax(objective))
        best_index = tuple(int(i) for i in np.unravel_index(best_flat, shape))
        point = tuple(float(values[i]) for values, i in zip(axes.values(), best_index))
        logger.info("Best geometry %s: gradient %.4e W/m^3", point, objective[best_index])
        return OptimizationResult(axes=axes, objective=objective, best_index=best_index,
                                  best_value=float(objective[best_index]), best_angle=float(angles[best_index]),
                                  best=build(point), angles=angles)

    # =============================================================================
    # Planar stack
    # =============================================================================
    def optimize_stack(self, box: StackSearchBox, objective: Optional[OptimizationObjective] = None,
                       wavelength: float = 1529.34e-9, power: float = 0.4, waist: float = 200e-6,
                       threads: int = 1) -> OptimizationResult:
        """Dielectric / metal thickness search over vacuum | dielectric | metal | substrate."""
        objective = objective or OptimizationObjective()
        library = self._library()
        axes = {
            "dielectric_thickness": axis_grid(box.dielectric_thickness),
            "metal_thickness": axis_grid(box.metal_thickness),
        }
        z = np.array([objective.window_start, objective.window_stop])

        def build(point) -> LayerStack:
            return LayerStack(
                incidence="vacuum",
                layers=[Layer(material=box.dielectric, thickness=point[0]), Layer(material=box.metal, thickness=point[1])],
                substrate=box.substrate,
            )

        def evaluate(point):
            stack = build(point)
            angle = spr_angle(stack, wavelength, stack.substrate, library).angle
            profile = field_intensity_profile(stack, wavelength, angle, power, waist, side="back", z=z, library=library)
            return intensity_gradient(profile, objective.window_start, objective.window_stop), angle

        return self._search(axes, evaluate, build, threads)

    # =============================================================================
    # Grating
    # =============================================================================
    def optimize_grating(self, box: GratingSearchBox, objective: Optional[OptimizationObjective] = None,
                         wavelength: float = 1529.34e-9, power: float = 0.5, waist: float = 200e-6,
                         truncation: int = 15, threads: int = 1) -> OptimizationResult:
        """Ridge height / ridge width / metal thickness search; the gradient is taken above a ridge (x = 0)."""
        objective = objective or OptimizationObjective()
        library = self._library()
        axes = {
            "ridge_height": axis_grid(box.ridge_height),
            "ridge_width": axis_grid(box.ridge_width),
            "metal_thickness": axis_grid(box.metal_thickness),
        }
        z = np.array([objective.window_start, objective.window_stop])

        def build(point) -> GratingGeometry:
            return GratingGeometry(
                period=box.period, ridge_height=point[0], ridge_width=point[1], ridge_material=box.ridge_material,
                layers=[Layer(material=box.metal, thickness=point[2])], substrate=box.substrate,
            )

        def evaluate(point):
            g = build(point)
            angle = grating_spr_angle(g, wavelength, truncation, library=library)
            field_map = grating_field_map(g, wavelength, "back", power, waist, angle, truncation,
                                          x=np.array([0.0]), z=z, library=library)
            i1, i2 = field_map.intensity[0]
            return float((i1 - i2) / (z[1] - z[0])), angle

        return self._search(axes, evaluate, build, threads)


# Global optimizer service instance
optimizer_service = OptimizerService()
