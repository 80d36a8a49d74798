"""Quasi-interpolation of tangent vector fields on the unit sphere.

Divergence-free and curl-free matrix-valued kernels built from scaled zonal
kernels turn a single explicit weighted sum into an approximation together
with its Helmholtz-Hodge decomposition.
"""
from ._backend import BACKEND
from .errors import (
    ConfigError,
    DomainError,
    DuplicateScale,
    EmptyFile,
    MissingPointSet,
    NormError,
    NotSPD,
    ParseError,
    PoleProximity,
    SphvqiError,
    TangencyWarning,
    ZeroVector,
)
from .matrix_kernels import (
    MatrixKernelEval,
    eval_combined,
    eval_curl,
    eval_curl_series,
    eval_div,
    eval_div_series,
)
from .point_sets import PointSet, fibonacci_points, load_points, mesh_norm, random_points
from .quasi_interp import DecompositionResult, VectorFieldSamples, qi_decompose, qi_eval_point
from .sbf_baseline import InterpSystem, assemble, interp_eval, solve
from .test_fields import cubic_bspline, field1, field2
from .zonal_kernels import (
    FourierCoeffs,
    KernelFamily,
    ZonalKernel,
    cq_eval,
    fourier_coeffs,
    kappa_eval,
    kernel_for_order,
    make_combo,
    make_kernel,
    psi_eval,
)

__version__ = "0.1.0"
