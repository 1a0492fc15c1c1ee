"""Reduction of semibounded pairs to bounded ones through shifted resolvents."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadParams, OutOfRange, SingularShift
from .lab import proj_diff
from .spectral import SymOp, as_symop, eig_sym, numerical_rank, spectral_projector

DIRECTIONS = ("below", "above")


@dataclass(frozen=True)
class ReductionRecord:
    c: float
    direction: str
    T_prime: SymOp
    S_prime: SymOp
    lambda_map: str

    def mu(self, lam: float) -> float:
        return map_lambda(lam, self.c, self.direction)


def _inverse(a: SymOp) -> np.ndarray:
    e = eig_sym(a)
    if np.min(np.abs(e.values)) <= 1e-12 * max(1.0, np.max(np.abs(e.values))):
        raise SingularShift("shifted operator is numerically singular")
    return (e.vectors / e.values) @ e.vectors.T


def shift_constant(T, S, direction: str = "below") -> float:
    """Unit-slack shift ``c`` making both operators semidefinite after shifting by ``c``."""
    T, S = as_symop(T), as_symop(S)
    if direction == "below":
        lo = min(eig_sym(T).values[0], eig_sym(T + S).values[0])
        return float(max(0.0, -lo) + 1.0)
    if direction == "above":
        hi = max(eig_sym(T).values[-1], eig_sym(T + S).values[-1])
        return float(max(0.0, hi) + 1.0)
    raise BadParams(f"direction must be one of {DIRECTIONS}")


def reduce_semibounded(T, S, direction: str = "below") -> ReductionRecord:
    """Resolvents at ``-(1+c)`` (below) or ``1+c`` (above) of ``T`` and ``T+S``.

    ``T' = (T + s I)^{-1}`` and ``S' = (T + S + s I)^{-1} - T'``, which equals
    ``-(T+S+sI)^{-1} S (T+sI)^{-1}`` and keeps the rank of ``S``; ``s`` is
    ``1+c`` below and ``-(1+c)`` above.
    """
    T, S = as_symop(T), as_symop(S)
    if T.order != S.order:
        raise BadParams("T and S must have the same order")
    c = shift_constant(T, S, direction)
    s = 1.0 + c if direction == "below" else -(1.0 + c)
    eye = np.eye(T.order)
    r0 = _inverse(T + s * eye)
    r1 = _inverse(T + S + s * eye)
    s_prime = -r1 @ S.entries @ r0
    s_prime = 0.5 * (s_prime + s_prime.T)
    desc = "mu = 1/(lambda + 1 + c)" if direction == "below" else "mu = 1/(lambda - (1 + c))"
    return ReductionRecord(c, direction, SymOp(r0), SymOp(s_prime), desc)


def map_lambda(lam: float, c: float, direction: str = "below") -> float:
    if direction == "below":
        if lam < -c:
            raise OutOfRange(f"lambda={lam} lies below -c={-c}")
        return 1.0 / (lam + 1.0 + c)
    if direction == "above":
        if lam > c:
            raise OutOfRange(f"lambda={lam} lies above c={c}")
        return 1.0 / (lam - (1.0 + c))
    raise BadParams(f"direction must be one of {DIRECTIONS}")


def reduced_difference(rec: ReductionRecord, lam: float, tie_policy: str = "reject") -> np.ndarray:
    """``E(T') - E(T'+S')`` on the closed half-line up to ``mu(lam)``.

    In both directions the resolvent map is decreasing on the relevant side
    of its pole, so ``x < lam`` corresponds to ``1/(x - pole) > mu`` and the
    complements cancel in the difference.
    """
    mu = rec.mu(lam)
    e1, e2 = eig_sym(rec.T_prime), eig_sym(rec.T_prime + rec.S_prime)
    return (spectral_projector(e1, mu, "closed_below", tie_policy).matrix.entries
            - spectral_projector(e2, mu, "closed_below", tie_policy).matrix.entries)


def verify_reduction(T, S, lam: float, kind: str = "open_below", direction: str = "below",
                     tie_policy: str = "reject") -> float:
    """Entrywise deviation between ``D(lam)`` and its reduced counterpart.

    For ``lam`` outside the map's domain the reduced side is the zero
    operator.
    """
    T, S = as_symop(T), as_symop(S)
    D, _ = proj_diff(T, S, lam, kind, tie_policy)
    rec = reduce_semibounded(T, S, direction)
    try:
        R = reduced_difference(rec, lam, tie_policy)
    except OutOfRange:
        R = np.zeros_like(D.entries)
    return float(np.max(np.abs(D.entries - R)))


def rank_preserved(rec: ReductionRecord, S, rel_tol: float = 1e-8) -> bool:
    """Numerical ranks of ``S`` and ``S'``, each relative to its own norm, agree."""
    S = as_symop(S)

    def rank(a):
        n = a.norm()
        return numerical_rank(a, rel_tol * n) if n > 0 else 0

    return rank(S) == rank(rec.S_prime)


__all__ = ["ReductionRecord", "shift_constant", "reduce_semibounded", "map_lambda",
           "reduced_difference", "verify_reduction", "rank_preserved"]
