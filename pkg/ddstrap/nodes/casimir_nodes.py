"""
Casimir-Polder nodes
"""

import logging

from ..models.schemas import RunConfig
from ..services.cache_service import cache_service
from ..tools.atomic_data import EXCITED, GROUND, load_atomic_data
from ..tools.casimir_polder import cp_grating_map, cp_planar_curve
from ..tools.materials import load_materials
from .optics_nodes import dressing_grid, lattice_x_grid

logger = logging.getLogger(__name__)


class CasimirNodes:
    """Nodes computing the 5S and 5P surface potentials (memoized: they do not depend on the lasers)"""

    def __init__(self):
        self.atomic = load_atomic_data()
        self.library = load_materials()

    def compute_casimir_polder(self, state) -> dict:
        config: RunConfig = state["config"]
        stack = config.surface
        z = dressing_grid(config)
        grids = config.grids
        key = ("planar-cp", stack.geometry_hash(), grids.z_min, grids.z_max, grids.n_z,
               tuple(sorted(config.quadrature.model_dump().items())))

        def compute():
            return {
                state_label: cp_planar_curve(state_label, z, stack, config.quadrature, self.atomic, self.library)
                for state_label in (GROUND, EXCITED)
            }

        curves = cache_service.memo.get_or_compute(key, compute)
        flags = sorted({f for curve in curves.values() for f in curve.flags})
        if flags:
            logger.warning("CP curves flagged: %s", ", ".join(flags))
        return {"cp": curves, "current_step": "compute_casimir_polder"}

    def compute_grating_casimir_polder(self, state) -> dict:
        config: RunConfig = state["config"]
        g = config.grating
        z = dressing_grid(config)
        x = lattice_x_grid(config)
        grids = config.grids
        threads = state.get("threads", 1)
        key = ("grating-cp", g.geometry_hash(), grids.z_min, grids.z_max, grids.n_z, grids.n_x,
               grids.grating_z_points, tuple(sorted(config.quadrature.model_dump().items())),
               tuple(sorted(config.rcwa.model_dump().items())))

        def compute():
            logger.info("Computing grating CP maps (%d threads)", threads)
            return cp_grating_map(g, x, z, grids.grating_z_points, config.quadrature, config.rcwa, self.atomic,
                                  self.library, threads=threads, cache=cache_service.configure(state.get("cache_dir")))

        maps = cache_service.memo.get_or_compute(key, compute)
        return {"cp": maps, "current_step": "compute_grating_casimir_polder"}
