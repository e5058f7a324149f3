from .casimir_nodes import CasimirNodes
from .dressing_nodes import DressingNodes
from .dynamics_nodes import DynamicsNodes
from .optics_nodes import OpticsNodes

__all__ = ["CasimirNodes", "DressingNodes", "DynamicsNodes", "OpticsNodes"]
