"""Numerical tensor calculus and verification for momentum-space
Hamiltonian geometry on the slit cotangent bundle.

The package is organized bottom-up:

* :mod:`cartanlab.jets` -- truncated multivariate Taylor arithmetic and
  finite-difference oracles.
* :mod:`cartanlab.cartan` -- Hamiltonian structures (quadratic duals,
  Randers-type duals, expression-defined) and their fundamental tensors.
* :mod:`cartanlab.berwald` -- nonlinear connection, adapted frame,
  Berwald coefficients, Landsberg tensors, curvature arrays.
* :mod:`cartanlab.kahler` -- deformed bundle metric, almost complex
  structure, canonical two-form, integrability diagnostics.
* :mod:`cartanlab.levicivita` -- Levi-Civita connection of the bundle
  metric in closed form, a Koszul oracle, six curvature blocks, a
  curvature-definition oracle, Ricci traces and Einstein diagnostics.
* :mod:`cartanlab.operators` -- divergence, gradient and Laplacian in
  the adapted frame.
* :mod:`cartanlab.formulas` -- the anchor index tying verification
  records to formula statements.
* :mod:`cartanlab.manifest`, :mod:`cartanlab.checks`,
  :mod:`cartanlab.cli` -- the batch verification front end.
"""

from .errors import (
    CartanLabError,
    ConditioningError,
    EvaluationDomainError,
    ManifestError,
    RegularityError,
    ValenceError,
)
from .jets import ChartPoint, Jet, fd_derivative, jet_eval
from .cartan import (
    CartanStructure,
    conformal_structure,
    expression_structure,
    flat_structure,
    randers_dual,
    riemannian_dual,
    sample_points,
)
from .geometry import FrameVector, PointGeometry
from .berwald import (
    BerwaldData,
    NonlinearConnection,
    berwald_data,
    nonlinear_connection,
)
from .kahler import (
    BundleMetric,
    DeformationParams,
    bundle_metric,
    integrability_defect,
    theta_matrix,
    tube_predicate,
)
from .levicivita import (
    CURVATURE_BLOCKS,
    LCConnection,
    curvature_closed,
    curvature_defn,
    lc_closed_form,
    ricci,
)
from .operators import (
    OperatorContext,
    divergence,
    gradient,
    laplacian,
    operator_context,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "CartanLabError",
    "ConditioningError",
    "EvaluationDomainError",
    "ManifestError",
    "RegularityError",
    "ValenceError",
    "ChartPoint",
    "Jet",
    "fd_derivative",
    "jet_eval",
    "CartanStructure",
    "conformal_structure",
    "expression_structure",
    "flat_structure",
    "randers_dual",
    "riemannian_dual",
    "sample_points",
    "FrameVector",
    "PointGeometry",
    "BerwaldData",
    "NonlinearConnection",
    "berwald_data",
    "nonlinear_connection",
    "BundleMetric",
    "DeformationParams",
    "bundle_metric",
    "integrability_defect",
    "theta_matrix",
    "tube_predicate",
    "CURVATURE_BLOCKS",
    "LCConnection",
    "curvature_closed",
    "curvature_defn",
    "lc_closed_form",
    "ricci",
    "OperatorContext",
    "divergence",
    "gradient",
    "laplacian",
    "operator_context",
]
