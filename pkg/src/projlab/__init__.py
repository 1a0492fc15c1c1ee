"""Finite-dimensional laboratory for differences of spectral projections.

Submodules: ``spectral`` (eigensolver, projectors), ``gallery`` (model
operators), ``lab`` (projection differences and checks), ``hankel``,
``cayley`` (resolvent reduction), ``liaw_treil`` (spectral measures and the
rank-one transform), ``experiment`` and ``cli``.
"""
from ._backend import BACKEND
from .errors import *  # noqa: F401,F403
from .spectral import (
    EigSystem,
    Projector,
    SymOp,
    eig_sym,
    min_singular_value,
    numerical_kernel_dim,
    numerical_rank,
    spectral_projector,
)
from .gallery import OperatorPair
from .lab import ProjDiffReport, proj_diff, halmos_split, check_conditions
from .experiment import OperatorSpec, ExperimentConfig

__version__ = "0.1.0"
