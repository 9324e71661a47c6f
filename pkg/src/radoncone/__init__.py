"""Computable analysis on the cone of finite discrete measures.

The public names below are the usual entry points; the submodules hold the
rest.  ``radoncone.kernels.backend()`` reports whether the compiled kernels or
the pure-Python fallback are in use.
"""
__version__ = "0.1.0"

from radoncone.errors import (
    BoundViolated,
    ConeError,
    ConfigError,
    DuplicatePoint,
    NoAtomAt,
    NonpositiveWeight,
    NotPinpointing,
    NotSubmeasure,
    OverlappingSupports,
    PositionOccupied,
    QuadratureFailure,
    SeriesNotTruncated,
    SuiteError,
    TooManyAtoms,
)
from radoncone.functions import MarkedTestFunction, TestFunction
from radoncone.intensity import BaseMeasure, BetaIntensity, GammaIntensity, LevyIntensity, UniformIntensity
from radoncone.ktransform import (
    BoundCertificate,
    BoundedSetSpec,
    ConeFunction,
    k_bound_check,
    k_inverse,
    k_transform,
    star_convolution,
)
from radoncone.measures import (
    Box,
    FiniteDiscreteMeasure,
    MarkedConfiguration,
    Window,
    add_atom,
    from_configuration,
    pairing,
    project,
    remove_atom,
    to_configuration,
)
from radoncone.polynomials import SymmetricTestFunction, falling_factorial_pairing, p_n_pairing
from radoncone.sampling import GammaConeSampler, PoissonWindowSampler

import types as _types

__all__ = sorted(n for n, v in globals().items() if not n.startswith("_") and not isinstance(v, _types.ModuleType))
