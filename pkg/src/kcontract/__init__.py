"""Numerical toolkit for K-contractions on truncated weighted polynomial spaces."""
from .errors import *  # noqa: F401,F403
from .series import KernelSpec, build_kernel, builtin_kernel  # noqa: F401
from .space import IndexBasis, SpaceSpec, SpaceVector  # noqa: F401
from .contraction import (OperatorTuple, apply_sigma, defect_operator,  # noqa: F401
                          pureness_residuals, spectral_safety)
from .dilation import (DilationPack, InnerFunctionPoly, F_eval, build_WT,  # noqa: F401
                       canonical_dilation, compare_dilations, minimal_support, wandering_subspace)
from .realization import (RealizationQuadruple, build_W_from_quadruple,  # noqa: F401
                          check_conditions, da_multiplier_check, verify_kinner)

__version__ = "0.1.0"
