"""
Trap Workflows

LangGraph pipelines from a validated RunConfig to a TrapReport.

Planar stack:
1. 1529 nm intensity (SPR angle when none is configured) and optical 5P shift
2. 5S / 5P Casimir-Polder curves
3. Detuning, barrier position, populations and total potential
4. Trap geometry
5. Ground state and lifetime budget (trapped configurations only)

Lattice (1D grating): the same steps on U(x, z), with the lattice depth and
transverse frequency extracted from the ridge and groove columns.
"""

from typing import Any, Dict, List, Optional, TypedDict

import numpy as np
from langgraph.graph import END, StateGraph

from ..models.fields import BoundState, StatePotentials
from ..models.schemas import RunConfig, TrapReport
from ..nodes.casimir_nodes import CasimirNodes
from ..nodes.dressing_nodes import DressingNodes
from ..nodes.dynamics_nodes import DynamicsNodes
from ..nodes.optics_nodes import OpticsNodes


class TrapState(TypedDict, total=False):
    """State shared by the planar and lattice pipelines"""

    # Inputs
    config: RunConfig
    threads: int
    cache_dir: Optional[str]

    # Optics
    z: np.ndarray
    x: np.ndarray
    spr_angle: float
    intensity: Any  # IntensityProfile or IntensityMap
    u_5p_optical: np.ndarray

    # Surface potentials
    cp: Dict[str, Any]  # state label -> PotentialCurve or PotentialMap

    # Dressing
    potentials: StatePotentials
    dressing: Dict[str, Any]
    potential: Any  # PotentialCurve or PotentialMap

    # Results
    report: TrapReport
    bound_state: BoundState
    flags: List[str]

    # Workflow control
    current_step: str


class TrapWorkflow:
    """Planar and lattice trap pipelines"""

    def __init__(self):
        self.optics_nodes = OpticsNodes()
        self.casimir_nodes = CasimirNodes()
        self.dressing_nodes = DressingNodes()
        self.dynamics_nodes = DynamicsNodes()

        self.planar = self._build_planar_workflow()
        self.lattice = self._build_lattice_workflow()

    def _build_planar_workflow(self) -> StateGraph:
        workflow = StateGraph(TrapState)

        workflow.add_node("compute_intensity", self.optics_nodes.compute_intensity)
        workflow.add_node("compute_casimir_polder", self.casimir_nodes.compute_casimir_polder)
        workflow.add_node("assemble_potential", self.dressing_nodes.assemble_potential)
        workflow.add_node("extract_trap", self.dressing_nodes.extract_trap)
        workflow.add_node("solve_ground_state", self.dynamics_nodes.solve_ground_state)
        workflow.add_node("lifetime_budget", self.dynamics_nodes.lifetime_budget)

        workflow.set_entry_point("compute_intensity")
        workflow.add_edge("compute_intensity", "compute_casimir_polder")
        workflow.add_edge("compute_casimir_polder", "assemble_potential")

        workflow.add_conditional_edges(
            "assemble_potential",
            self._route_after_assembly,
            {
                "assembled": "extract_trap",
                "no_barrier": END,
            }
        )
        workflow.add_conditional_edges(
            "extract_trap",
            self._route_after_extraction,
            {
                "trapped": "solve_ground_state",
                "not_trapped": END,
            }
        )
        workflow.add_conditional_edges(
            "solve_ground_state",
            self._route_after_ground_state,
            {
                "bound": "lifetime_budget",
                "not_bound": END,
            }
        )
        workflow.add_edge("lifetime_budget", END)

        return workflow.compile()

    def _build_lattice_workflow(self) -> StateGraph:
        workflow = StateGraph(TrapState)

        workflow.add_node("compute_grating_intensity", self.optics_nodes.compute_grating_intensity)
        workflow.add_node("compute_grating_casimir_polder", self.casimir_nodes.compute_grating_casimir_polder)
        workflow.add_node("assemble_lattice_potential", self.dressing_nodes.assemble_lattice_potential)
        workflow.add_node("extract_lattice", self.dressing_nodes.extract_lattice)
        workflow.add_node("solve_ground_state", self.dynamics_nodes.solve_ground_state)
        workflow.add_node("lifetime_budget", self.dynamics_nodes.lifetime_budget)

        workflow.set_entry_point("compute_grating_intensity")
        workflow.add_edge("compute_grating_intensity", "compute_grating_casimir_polder")
        workflow.add_edge("compute_grating_casimir_polder", "assemble_lattice_potential")

        workflow.add_conditional_edges(
            "assemble_lattice_potential",
            self._route_after_assembly,
            {
                "assembled": "extract_lattice",
                "no_barrier": END,
            }
        )
        workflow.add_conditional_edges(
            "extract_lattice",
            self._route_after_extraction,
            {
                "trapped": "solve_ground_state",
                "not_trapped": END,
            }
        )
        workflow.add_conditional_edges(
            "solve_ground_state",
            self._route_after_ground_state,
            {
                "bound": "lifetime_budget",
                "not_bound": END,
            }
        )
        workflow.add_edge("lifetime_budget", END)

        return workflow.compile()

    def _route_after_assembly(self, state: TrapState) -> str:
        """A report at this point means no barrier position was found"""
        return "no_barrier" if state.get("report") is not None else "assembled"

    def _route_after_extraction(self, state: TrapState) -> str:
        """NPM lattices still hold atoms above the ridges"""
        report = state["report"]
        return "trapped" if report.status in ("OK", "NPM") and report.z_t is not None else "not_trapped"

    def _route_after_ground_state(self, state: TrapState) -> str:
        return "bound" if state.get("bound_state") is not None else "not_bound"

    def workflow_for(self, config: RunConfig):
        return self.lattice if config.grating is not None else self.planar

    def run(self, config: RunConfig, threads: int = 1, cache_dir: Optional[str] = None) -> TrapState:
        """Run the pipeline matching the configuration (grating -> lattice, otherwise planar)"""
        return self.workflow_for(config).invoke({"config": config, "threads": threads, "cache_dir": cache_dir})


# Create global workflow instance
trap_workflow = TrapWorkflow()

# Export compiled workflows for LangGraph Studio
planar_workflow = trap_workflow.planar
lattice_workflow = trap_workflow.lattice
