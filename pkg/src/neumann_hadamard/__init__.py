"""Hadamard-type eigenvalue perturbation toolkit for the Neumann Laplacian.

Solve the Neumann eigenproblem on a planar reference domain and on a
normal offset of it, predict the first-order eigenvalue shifts from the
boundary and volume forms, and measure the order of the remainder.
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .geometry import (  # noqa: F401
    PerturbationFamily,
    PerturbationField,
    Rectangle,
    StarDomain,
    apply_normal_offset,
    boundary_frame,
    constant_field,
    cosine_field,
    family_field,
    hausdorff_distance,
    make_star_domain,
    unit_disk,
    zero_field,
)
from .meshing import TriangleMesh, generate_mesh, rectangle_mesh, resolution_for  # noqa: F401
from .fem import EigenSolution, assemble, boundary_trace, interpolate, solve_eigs, solve_mesh  # noqa: F401
from .perturbation import (  # noqa: F401
    EigenCluster,
    PerturbationPrediction,
    find_cluster,
    kappa_boundary,
    kappa_operator_boundary,
    operator_identity,
    pair_predictions,
    tau_volume,
)
from .oracles import disk_neumann_eigs, rect_neumann_eigs  # noqa: F401
from .config import StudyConfig, parse_config  # noqa: F401
from .harness import ExperimentReport, fit_order, run_study  # noqa: F401
