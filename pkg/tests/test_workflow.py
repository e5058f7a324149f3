import math

import pytest
from scipy import constants

from ddstrap.models.schemas import TrapReport
from ddstrap.utils.config import load_preset
from ddstrap.workflow.trap_workflow import TrapWorkflow, trap_workflow
from tests.conftest import MHZ


class StubNodes:
    """Every node records its name; assembly and extraction outcomes are scripted."""

    def __init__(self, visited, barrier=True, trapped=True, bound=True):
        self.visited = visited
        self.barrier = barrier
        self.trapped = trapped
        self.bound = bound

    def _step(self, name, **update):
        self.visited.append(name)
        return {"current_step": name, **update}

    def compute_intensity(self, state):
        return self._step("compute_intensity")

    def compute_grating_intensity(self, state):
        return self._step("compute_grating_intensity")

    def compute_casimir_polder(self, state):
        return self._step("compute_casimir_polder")

    def compute_grating_casimir_polder(self, state):
        return self._step("compute_grating_casimir_polder")

    def _assemble(self, name):
        if not self.barrier:
            return self._step(name, report=TrapReport(status="NT", flags=["no-barrier-position"]))
        return self._step(name)

    def assemble_potential(self, state):
        return self._assemble("assemble_potential")

    def assemble_lattice_potential(self, state):
        return self._assemble("assemble_lattice_potential")

    def _extract(self, name, status="OK"):
        if not self.trapped:
            return self._step(name, report=TrapReport(status="NT", flags=["no-minimum"]))
        return self._step(name, report=TrapReport(status=status, z_b=20e-9, z_t=30e-9, omega_z=1e6))

    def extract_trap(self, state):
        return self._extract("extract_trap")

    def extract_lattice(self, state):
        return self._extract("extract_lattice", status="NPM")

    def solve_ground_state(self, state):
        if not self.bound:
            return self._step("solve_ground_state")
        return self._step("solve_ground_state", bound_state=object())

    def lifetime_budget(self, state):
        return self._step("lifetime_budget")


def _stub_workflow(**outcomes):
    visited = []
    nodes = StubNodes(visited, **outcomes)
    workflow = TrapWorkflow.__new__(TrapWorkflow)
    workflow.optics_nodes = workflow.casimir_nodes = workflow.dressing_nodes = workflow.dynamics_nodes = nodes
    workflow.planar = workflow._build_planar_workflow()
    workflow.lattice = workflow._build_lattice_workflow()
    return workflow, visited


PLANAR_PATH = ["compute_intensity", "compute_casimir_polder", "assemble_potential", "extract_trap",
               "solve_ground_state", "lifetime_budget"]


def test_planar_pipeline_runs_every_stage():
    """Ensure a trapped planar configuration reaches the lifetime budget."""
    workflow, visited = _stub_workflow()
    state = workflow.run(load_preset("fig2e"))
    assert visited == PLANAR_PATH
    assert state["current_step"] == "lifetime_budget"


def test_missing_barrier_ends_the_pipeline():
    """Ensure no barrier position stops after assembly with an NT report."""
    workflow, visited = _stub_workflow(barrier=False)
    state = workflow.run(load_preset("fig2e"))
    assert visited == PLANAR_PATH[:3]
    assert state["report"].status == "NT"


def test_untrapped_curve_skips_dynamics():
    """Ensure an NT trap report skips the ground state."""
    workflow, visited = _stub_workflow(trapped=False)
    workflow.run(load_preset("fig2e"))
    assert visited == PLANAR_PATH[:4]


def test_unbound_trap_skips_lifetime():
    """Ensure a trap without bound state ends after the ground-state solve."""
    workflow, visited = _stub_workflow(bound=False)
    workflow.run(load_preset("fig2e"))
    assert visited == PLANAR_PATH[:5]


def test_grating_configuration_takes_lattice_pipeline():
    """Ensure gratings run the lattice graph and NPM lattices still get dynamics."""
    workflow, visited = _stub_workflow()
    workflow.run(load_preset("fig6"))
    assert visited == ["compute_grating_intensity", "compute_grating_casimir_polder", "assemble_lattice_potential",
                       "extract_lattice", "solve_ground_state", "lifetime_budget"]


def test_workflow_selection():
    """Ensure the planar graph serves stacks and the lattice graph serves gratings."""
    assert trap_workflow.workflow_for(load_preset("fig2e")) is trap_workflow.planar
    assert trap_workflow.workflow_for(load_preset("fig6")) is trap_workflow.lattice


@pytest.mark.acceptance
def test_reference_planar_trap():
    """Ensure the reference stack traps at about 31 nm with a 13.5 MHz depth."""
    report = trap_workflow.run(load_preset("fig2e"), threads=4)["report"]
    assert report.status == "OK"
    assert report.z_b == pytest.approx(24e-9, abs=5e-9)
    assert report.z_t == pytest.approx(31e-9, abs=5e-9)
    assert report.U0 / MHZ == pytest.approx(13.5, rel=0.3)
    assert report.lifetime is not None
    assert report.delta_z * report.delta_p >= 0.5 * constants.hbar * 0.99


@pytest.mark.acceptance
def test_reference_lattice():
    """Ensure the ridge grating gives the reference lattice depth and frequencies."""
    report = trap_workflow.run(load_preset("fig6"), threads=8)["report"]
    assert report.status == "OK"
    assert report.z_t == pytest.approx(29e-9, abs=6e-9)
    assert report.U_l / MHZ == pytest.approx(6.8, rel=0.3)
    assert report.U0 / MHZ == pytest.approx(8.6, rel=0.3)
    assert report.omega_x / (2 * math.pi) == pytest.approx(6e6, rel=0.3)
    assert report.omega_z / (2 * math.pi) == pytest.approx(32e6, rel=0.3)
    assert report.U_l / report.lattice_recoil == pytest.approx(118, abs=35)
