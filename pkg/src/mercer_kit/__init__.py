"""Finite-truncation toolkit for bi-Carleman integral operators.

The modules cover orthonormal bases with derivatives (``basis``), dense
operator matrices and their factorizations (``opcore``), truncated kernel
expansions (``expand``), resolvents and second-kind equations
(``resolvent``), the two-sequence decomposition (``fenyo``) and unitary
smoothing of operator families (``smoothing``).
"""
__version__ = "0.1.0"

from .basis import (OrthonormalBasis, QuadratureGrid, build_hermite_basis, build_meyer_bell,
                    enumerate_wavelet_basis, gram_matrix, synthesize_mother_wavelet)
from .errors import (CertificateError, InternalError, InvalidArgument, MercerKitError,
                     NotRegularValue, NumericalFailure, PlanInfeasible, ResolutionError,
                     UnsupportedInput)
from .expand import (KernelApprox, apply_expansion, bilinear_kernel, carleman_functions,
                     direct_kernel, eigen_expansion, mercer_diagnostics, quadrature_matrix)
from .fenyo import FenyoDecomposition, fenyo_bilinear_kernel, fenyo_decompose, fenyo_reconstruct
from .opcore import (Factorization, OperatorMatrix, membership_residual, mplus_check,
                     polar_m_factorization, riesz_factorization, svd)
from .resolvent import (regular_value, resolvent_kernel, solve_by_kernel, solve_second_kind)
from .smoothing import (build_unitary, check_flattening, make_plan, smooth_family,
                        smooth_kernel, split_operator)

__all__ = [name for name in dir() if not name.startswith("_")]
