"""Trochoidal path design for a three-agent swarm driven by a consensus protocol."""

__version__ = "0.1.0"

from .design import (  # noqa: E402
    EPITROCHOID,
    HYPOTROCHOID,
    AgentTrochoid,
    DesignSpec,
    SwarmDesign,
    design_beta,
    design_eigenstructure,
    eigenstructure,
    initial_positions,
    make_design,
    recompute_from_positions,
)
from .errors import *  # noqa: E402,F401,F403
from .region import classify_point, cusp_exclusion_bands, enumerate_regions, feasible_region  # noqa: E402

__all__ = [
    "EPITROCHOID",
    "HYPOTROCHOID",
    "AgentTrochoid",
    "DesignSpec",
    "SwarmDesign",
    "classify_point",
    "cusp_exclusion_bands",
    "design_beta",
    "design_eigenstructure",
    "eigenstructure",
    "enumerate_regions",
    "feasible_region",
    "initial_positions",
    "make_design",
    "recompute_from_positions",
]
