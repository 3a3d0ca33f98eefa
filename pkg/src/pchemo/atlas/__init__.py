from .hamiltonian import EnergyLevel, energy, hamiltonian, turning_points
from .period import Orbit, integrate_loop, period_oracle, period_quadrature
from .steady import AtlasResult, KnSolution, PeriodTable, SteadyState, atlas, build_steady_state, find_kn, period_table

__all__ = [
    "AtlasResult", "EnergyLevel", "KnSolution", "Orbit", "PeriodTable", "SteadyState", "atlas",
    "build_steady_state", "energy", "find_kn", "hamiltonian", "integrate_loop", "period_oracle",
    "period_quadrature", "period_table", "turning_points",
]
