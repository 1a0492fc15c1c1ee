"""Dense symmetric linear algebra: operators, eigensystems and half-line projectors."""
from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import _backend
from .errors import BadParams, EigFailure, TieAtThreshold

Kind = Literal["open_below", "closed_below"]
TiePolicy = Literal["reject", "resolve"]

EPS = sys.float_info.epsilon
TOL_EIG = 1e-10
TOL_PROJ = 1e-10
MAX_SWEEPS = 60
_SYM_TOL = 1e-12


class SymOp:
    """Real symmetric matrix of finite order: a truncated self-adjoint operator.

    The constructor accepts anything ``numpy.asarray`` understands. Inputs
    that are symmetric up to rounding (relative ``1e-12``) are symmetrized;
    anything further off is rejected, as are non-finite entries. The stored
    array is read-only, so instances can be shared freely.
    """

    __slots__ = ("entries", "_eig")

    def __init__(self, entries, *, sym_tol: float = _SYM_TOL):
        a = np.array(entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise BadParams(f"expected a nonempty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise BadParams("matrix has non-finite entries")
        asym = np.max(np.abs(a - a.T))
        if asym > sym_tol * (1.0 + np.max(np.abs(a))):
            raise BadParams(f"matrix is not symmetric (max asymmetry {asym:.3e})")
        if asym > 0.0:
            a = 0.5 * (a + a.T)
        a.setflags(write=False)
        self.entries = a
        self._eig = None

    @classmethod
    def diag(cls, values) -> "SymOp":
        return cls(np.diag(np.asarray(values, dtype=np.float64)))

    @classmethod
    def zeros(cls, order: int) -> "SymOp":
        return cls(np.zeros((order, order)))

    @property
    def order(self) -> int:
        return self.entries.shape[0]

    def norm(self) -> float:
        """Spectral norm (largest absolute eigenvalue)."""
        return spectral_radius(eig_sym(self))

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)

    def __add__(self, other):
        return SymOp(self.entries + as_array(other))

    __radd__ = __add__

    def __sub__(self, other):
        return SymOp(self.entries - as_array(other))

    def __rsub__(self, other):
        return SymOp(as_array(other) - self.entries)

    def __neg__(self):
        return SymOp(-self.entries)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return SymOp(float(scalar) * self.entries)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return self.entries @ np.asarray(other)

    def __repr__(self):
        return f"SymOp(order={self.order})"


def as_array(a) -> np.ndarray:
    if isinstance(a, SymOp):
        return a.entries
    return np.asarray(a, dtype=np.float64)


def as_symop(a) -> SymOp:
    return a if isinstance(a, SymOp) else SymOp(a)


@dataclass(frozen=True)
class EigSystem:
    """Ascending eigenvalues with the matching orthonormal eigenvectors (columns)."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def order(self) -> int:
        return self.values.shape[0]

    def residuals(self, a) -> np.ndarray:
        """Per-pair residual norms ``||A v_i - values_i v_i||``."""
        a = as_array(a)
        return np.linalg.norm(a @ self.vectors - self.vectors * self.values, axis=0)

    def gram_defect(self) -> float:
        v = self.vectors
        return float(np.max(np.abs(v.T @ v - np.eye(self.order))))

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T


@dataclass(frozen=True)
class Projector:
    matrix: SymOp
    rank: int

    def idempotency_defect(self) -> float:
        p = self.matrix.entries
        return float(np.linalg.norm(p @ p - p, 2))


def spectral_radius(e: EigSystem) -> float:
    if e.order == 0:
        return 0.0
    return float(max(abs(e.values[0]), abs(e.values[-1])))


def default_tie_tol(e: EigSystem) -> float:
    return 1e-9 * (1.0 + spectral_radius(e))


def eig_sym(a, *, max_sweeps: int = MAX_SWEEPS) -> EigSystem:
    """Eigen-decompose a symmetric operator.

    Householder tridiagonalization followed by implicit-shift QL, run by the
    compiled kernel when available. Results are cached on the (immutable)
    ``SymOp`` instance.

    Raises
    ------
    EigFailure
        If some eigenvalue needs more than ``max_sweeps`` QL sweeps.
    """
    op = as_symop(a)
    if op._eig is not None and max_sweeps == MAX_SWEEPS:
        return op._eig
    d, zt, info = _backend.eigh_kernel(op.entries, max_sweeps)
    order = np.argsort(d, kind="stable")
    values = np.ascontiguousarray(np.asarray(d)[order])
    vectors = np.ascontiguousarray(np.asarray(zt)[order].T)
    result = EigSystem(values, vectors)
    if info:
        res = float(np.max(result.residuals(op))) if op.order else 0.0
        raise EigFailure(f"QL iteration for eigenvalue {info - 1} exceeded {max_sweeps} sweeps", res)
    values.setflags(write=False)
    vectors.setflags(write=False)
    op._eig = result
    return result


def _select(e: EigSystem, lam: float, kind: Kind, tie_policy: TiePolicy, tie_tol):
    if kind not in ("open_below", "closed_below"):
        raise BadParams(f"unknown interval kind {kind!r}")
    if tie_policy not in ("reject", "resolve"):
        raise BadParams(f"unknown tie policy {tie_policy!r}")
    if tie_tol is None:
        tie_tol = default_tie_tol(e)
    if tie_policy == "reject" and e.order:
        dist = np.abs(e.values - lam)
        i = int(np.argmin(dist))
        if dist[i] <= tie_tol:
            raise TieAtThreshold(lam, float(e.values[i]), tie_tol)
    if kind == "open_below":
        return e.values < lam
    return e.values <= lam


def spectral_projector(e: EigSystem, lam: float, kind: Kind = "open_below",
                       tie_policy: TiePolicy = "reject", tie_tol: float | None = None) -> Projector:
    """Projector onto the span of eigenvectors below ``lam``.

    ``open_below`` keeps eigenvalues ``< lam``, ``closed_below`` keeps
    ``<= lam``. With ``tie_policy="reject"`` an eigenvalue within ``tie_tol``
    of ``lam`` raises ``TieAtThreshold``; ``"resolve"`` applies the strict or
    non-strict comparison as is.
    """
    mask = _select(e, lam, kind, tie_policy, tie_tol)
    rank = int(np.count_nonzero(mask))
    if rank == e.order:
        # the full eigenbasis spans everything; avoid V V^T rounding
        return Projector(SymOp(np.eye(e.order)), rank)
    v = e.vectors[:, mask]
    return Projector(SymOp(v @ v.T), rank)


def default_kernel_tol(e: EigSystem) -> float:
    return e.order * EPS * spectral_radius(e)


def numerical_kernel_dim(a, tau: float | None = None) -> int:
    """Number of eigenvalues with modulus at most ``tau``.

    The default threshold is ``order * eps * spectral_radius``.
    """
    e = eig_sym(a)
    if tau is None:
        tau = default_kernel_tol(e)
    if tau < 0:
        raise BadParams("tau must be nonnegative")
    return int(np.count_nonzero(np.abs(e.values) <= tau))


def numerical_rank(a, tau: float | None = None) -> int:
    return as_symop(a).order - numerical_kernel_dim(a, tau)


def min_singular_value(a) -> float:
    e = eig_sym(a)
    return float(np.min(np.abs(e.values)))
