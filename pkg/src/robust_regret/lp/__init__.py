"""Robust LP relaxations solved by constraint generation."""
from .model import FEASIBLE, FractionalSolution, SeparationResult
from .oracles import (RegretOracle, RegretWitness, general_oracle, regret_row, rrst_oracle, rrst_oracle_zlb,
                      rrtsp_oracle, zlb_oracle)
from .separation import separate_steiner_cuts, separate_tsp_constraints
from .simplex import (LinearConstraint, LPResult, LPStatus, PivotLimitError, Provenance, Sense, simplex_solve,
                      solve_standard)
from .solve import CuttingPlaneError, cutting_plane_solve

__all__ = [
    "FEASIBLE", "CuttingPlaneError", "FractionalSolution", "LPResult", "LPStatus", "LinearConstraint",
    "PivotLimitError", "Provenance", "RegretOracle", "RegretWitness", "SeparationResult", "Sense", "cutting_plane_solve",
    "general_oracle", "regret_row", "rrst_oracle", "rrst_oracle_zlb", "rrtsp_oracle",
    "separate_steiner_cuts", "separate_tsp_constraints", "simplex_solve", "solve_standard", "zlb_oracle",
]
