"""Spectral measures of a cyclic vector, canonical unitaries and the rank-one transform.

A symmetric ``T`` with simple spectrum and cyclic unit vector ``phi`` is
unitarily a multiplication operator on ``L^2(mu)``, where ``mu`` puts mass
``<phi, v_i>^2`` on eigenvalue ``x_i``. Fixing the sign of each ``v_i`` so that
``<phi, v_i> > 0`` makes the unitary unique and sends ``phi`` to the constant 1.

For the perturbation ``T + alpha phi phi^T`` the composition ``U_alpha U^*``
acts on ``L^2(mu)`` functions by a divided-difference formula; this module
evaluates both sides.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AtomCollision, BadParams, DegenerateSpectrum, NotCyclic
from .spectral import EigSystem, SymOp, as_symop, eig_sym, spectral_radius

UNIT_TOL = 1e-12
WEIGHT_TOL = 1e-14


@dataclass(frozen=True)
class DiscreteMeasure:
    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.atoms.shape != self.weights.shape:
            raise BadParams("atoms and weights differ in length")
        if np.any(np.diff(self.atoms) <= 0):
            raise BadParams("atoms must be strictly increasing")
        if np.any(self.weights <= 0):
            raise BadParams("weights must be positive")

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def inner(self, f, g) -> float:
        return float(np.sum(self.weights * np.asarray(f) * np.asarray(g)))

    def norm(self, f) -> float:
        return float(np.sqrt(self.inner(f, f)))


@dataclass(frozen=True)
class WeightedMap:
    """Coordinates-to-``L^2(mu)`` map: ``(U x)_i = <x, v_i> / c_i``."""

    matrix: np.ndarray
    measure: DiscreteMeasure
    eig: EigSystem

    def __call__(self, x) -> np.ndarray:
        return self.matrix @ np.asarray(x, dtype=np.float64)

    def adjoint(self, f) -> np.ndarray:
        """``U^* f``, inverse of ``U`` on ``L^2(mu)``."""
        return self.matrix.T @ (self.measure.weights * np.asarray(f, dtype=np.float64))


def default_sep_tol(e: EigSystem) -> float:
    return 1e-8 * max(spectral_radius(e), 1e-300)


def _checked_phi(phi, order: int) -> np.ndarray:
    phi = np.asarray(phi, dtype=np.float64).ravel()
    if phi.shape[0] != order:
        raise BadParams("phi must match the order of T")
    if abs(np.linalg.norm(phi) - 1.0) > UNIT_TOL:
        raise BadParams("phi must be a unit vector")
    return phi


def _oriented(T, phi, sep_tol):
    e = eig_sym(T)
    phi = _checked_phi(phi, e.order)
    tol = default_sep_tol(e) if sep_tol is None else sep_tol
    gaps = np.diff(e.values)
    if gaps.size and np.min(gaps) <= tol:
        i = int(np.argmin(gaps))
        raise DegenerateSpectrum(f"eigenvalues {i} and {i + 1} are within {tol:.3g}", i)
    c = e.vectors.T @ phi
    small = np.abs(c) ** 2 <= WEIGHT_TOL
    if small.any():
        i = int(np.flatnonzero(small)[0])
        raise NotCyclic(f"phi has (numerically) no component along eigenvector {i}", i)
    sign = np.sign(c)
    return e.values, e.vectors * sign, np.abs(c), e


def spectral_measure(T, phi, sep_tol: float | None = None) -> DiscreteMeasure:
    atoms, _, c, _ = _oriented(T, phi, sep_tol)
    return DiscreteMeasure(atoms.copy(), c ** 2)


def canonical_unitary(T, phi, sep_tol: float | None = None) -> WeightedMap:
    atoms, vecs, c, e = _oriented(T, phi, sep_tol)
    return WeightedMap(vecs.T / c[:, None], DiscreteMeasure(atoms.copy(), c ** 2), e)


def divided_difference_matrix(x, t, f_coeffs, sep_tol: float) -> np.ndarray:
    """``(f(x_i) - f(t_j)) / (x_i - t_j)`` for a polynomial ``f`` (ascending coefficients).

    Uses ``(x^m - t^m)/(x - t) = sum_{r<m} x^r t^{m-1-r}``, accumulated as
    ``h_m = x h_{m-1} + t^{m-1}``, so nothing cancels catastrophically.
    """
    x = np.asarray(x, dtype=np.float64)[:, None]
    t = np.asarray(t, dtype=np.float64)[None, :]
    if np.any(np.abs(x - t) <= sep_tol):
        i, j = np.argwhere(np.abs(x - t) <= sep_tol)[0]
        raise AtomCollision(f"atom {x[i, 0]!r} of the perturbed measure meets atom {t[0, j]!r}")
    coeffs = np.asarray(f_coeffs, dtype=np.float64).ravel()
    h = np.zeros(np.broadcast(x, t).shape)
    tp = np.ones_like(t)
    out = np.zeros_like(h)
    for m in range(1, coeffs.size):
        h = x * h + tp
        tp = tp * t
        out += coeffs[m] * h
    return out


@dataclass(frozen=True)
class TransformResult:
    formula_output: np.ndarray
    oracle_output: np.ndarray
    discrepancy: float
    unitarity_defect: float


def liaw_treil_transform(T, phi, alpha: float, f_coeffs, sep_tol: float | None = None) -> TransformResult:
    """Compare the divided-difference formula for ``U_alpha U^*`` with the explicit product.

    ``f_coeffs`` are ascending polynomial coefficients; ``f`` is sampled on
    the atoms of ``mu`` and the result lives on the atoms of ``mu_alpha``.
    """
    if alpha == 0:
        raise BadParams("alpha must be nonzero")
    T = as_symop(T)
    phi = _checked_phi(phi, T.order)
    Ta = T + SymOp(alpha * np.outer(phi, phi))
    U = canonical_unitary(T, phi, sep_tol)
    Ua = canonical_unitary(Ta, phi, sep_tol)
    tol = default_sep_tol(U.eig) if sep_tol is None else sep_tol
    mu, mua = U.measure, Ua.measure
    poly = np.polynomial.polynomial
    f_mu = poly.polyval(mu.atoms, f_coeffs)
    f_x = poly.polyval(mua.atoms, f_coeffs)
    dd = divided_difference_matrix(mua.atoms, mu.atoms, f_coeffs, tol)
    formula = f_x - alpha * dd @ mu.weights
    oracle = Ua(U.adjoint(f_mu))
    discrepancy = float(np.max(np.abs(formula - oracle)))
    defect = abs(mua.norm(formula) - mu.norm(f_mu))
    return TransformResult(formula, oracle, discrepancy, float(defect))


def strictly_interlace(lower, upper) -> bool:
    """``lower_1 < upper_1 < lower_2 < upper_2 < ...`` (equal lengths)."""
    a, b = np.asarray(lower), np.asarray(upper)
    if a.shape != b.shape:
        return False
    return bool(np.all(a < b) and np.all(b[:-1] < a[1:]))


__all__ = [
    "DiscreteMeasure", "WeightedMap", "spectral_measure", "canonical_unitary",
    "divided_difference_matrix", "TransformResult", "liaw_treil_transform",
    "strictly_interlace", "default_sep_tol",
]
