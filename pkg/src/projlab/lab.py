"""Differences of half-line spectral projectors and the checks built on them."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    BadParams,
    CorrectionInfeasible,
    GapNotEmpty,
    NotAProjectionDifference,
    NothingToCheck,
    ProbeExhausted,
)
from .gallery import krylov_basis, krylov_complement
from .spectral import (
    EigSystem,
    SymOp,
    as_array,
    as_symop,
    default_tie_tol,
    eig_sym,
    numerical_rank,
    spectral_projector,
)

TAU = 1e-9
PAIRING_TOL = 1e-8
KRYLOV_TOL = 1e-10


@dataclass(frozen=True)
class ProjDiffReport:
    """Spectral summary of one ``D(lambda)`` at one truncation order."""

    lam: float
    order: int
    interval_kind: str
    tie_policy: str
    tau: float
    tie_tol: float
    rank_S: int
    dim_ker: int
    dim_ker_minus_I: int
    dim_ker_plus_I: int
    min_abs_eig: float
    max_eig: float
    min_eig: float
    trace_norm: float
    c3_satisfied_for_N: dict
    spectrum: tuple

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        d["c3_satisfied_for_N"] = {str(k): v for k, v in self.c3_satisfied_for_N.items()}
        d["spectrum"] = list(self.spectrum)
        return d


def _eq_count(values, target, tau):
    return int(np.count_nonzero(np.abs(values - target) <= tau))


def proj_diff(T, S, lam: float, kind: str = "open_below", tie_policy: str = "reject", *,
              tau: float = TAU, tie_tol: float | None = None, rank_S: int | None = None):
    """``D = E(T+S) - E(T)`` on the half-line below ``lam``, with its report.

    ``dim_ker_minus_I`` counts eigenvalues of ``D`` at +1 (kernel of ``D - I``)
    and ``dim_ker_plus_I`` those at -1. ``tie_tol`` defaults per operator.
    """
    T, S = as_symop(T), as_symop(S)
    if T.order != S.order:
        raise BadParams("T and S must have the same order")
    if tau < 0:
        raise BadParams("tau must be nonnegative")
    TS = T + S
    eT, eTS = eig_sym(T), eig_sym(TS)
    tol_T = default_tie_tol(eT) if tie_tol is None else tie_tol
    tol_TS = default_tie_tol(eTS) if tie_tol is None else tie_tol
    Q = spectral_projector(eT, lam, kind, tie_policy, tol_T)
    P = spectral_projector(eTS, lam, kind, tie_policy, tol_TS)
    D = P.matrix - Q.matrix
    spec = eig_sym(D).values
    if rank_S is None:
        nS = S.norm()
        rank_S = numerical_rank(S, 1e-8 * nS) if nS > 0 else 0
    plus = _eq_count(spec, 1.0, tau)
    minus = _eq_count(spec, -1.0, tau)
    c3 = {N: abs(plus - minus) <= N for N in range(rank_S + 2)}
    report = ProjDiffReport(
        lam=float(lam),
        order=T.order,
        interval_kind=kind,
        tie_policy=tie_policy,
        tau=float(tau),
        tie_tol=float(max(tol_T, tol_TS)),
        rank_S=int(rank_S),
        dim_ker=_eq_count(spec, 0.0, tau),
        dim_ker_minus_I=plus,
        dim_ker_plus_I=minus,
        min_abs_eig=float(np.min(np.abs(spec))),
        max_eig=float(spec[-1]),
        min_eig=float(spec[0]),
        trace_norm=float(np.sum(np.abs(spec))),
        c3_satisfied_for_N=c3,
        spectrum=tuple(float(v) for v in spec),
    )
    return D, report


# ---------------------------------------------------------------- Halmos split

@dataclass(frozen=True)
class HalmosSplit:
    dim_ker: int
    dim_plus_one: int
    dim_minus_one: int
    generic_spectrum: tuple
    pair_defect: float

    def paired(self, tol: float = PAIRING_TOL) -> bool:
        return self.pair_defect <= tol


def _hausdorff_to_negation(values: np.ndarray) -> float:
    if values.size == 0:
        return 0.0
    s = np.sort(values)
    neg = np.sort(-s)
    idx = np.clip(np.searchsorted(neg, s), 1, len(neg) - 1) if len(neg) > 1 else np.zeros(len(s), int)
    if len(neg) == 1:
        return float(abs(s[0] - neg[0]))
    dist = np.minimum(np.abs(s - neg[idx - 1]), np.abs(s - neg[idx]))
    return float(np.max(dist))


def halmos_split(D, tau: float = TAU) -> HalmosSplit:
    """Partition the spectrum of a projection difference at 0, +1, -1 and the rest.

    The rest should be symmetric about 0; ``pair_defect`` is its Hausdorff
    distance from its own negation.
    """
    spec = eig_sym(D).values if not isinstance(D, EigSystem) else D.values
    if spec.size and (spec[0] < -1 - tau or spec[-1] > 1 + tau):
        raise NotAProjectionDifference(
            f"spectrum [{spec[0]:.6g}, {spec[-1]:.6g}] leaves [-1, 1] by more than {tau:g}")
    zero = np.abs(spec) <= tau
    plus = np.abs(spec - 1) <= tau
    minus = np.abs(spec + 1) <= tau
    generic = spec[~(zero | plus | minus)]
    return HalmosSplit(int(zero.sum()), int(plus.sum()), int(minus.sum()),
                       tuple(float(v) for v in generic), _hausdorff_to_negation(generic))


# ---------------------------------------------------------------- conditions

@dataclass(frozen=True)
class ConditionVerdict:
    c3: bool
    c2_proxy: float
    c1_proxy: tuple


def check_conditions(report: ProjDiffReport, N: int) -> ConditionVerdict:
    if N < 0:
        raise BadParams("N must be nonnegative")
    c3 = abs(report.dim_ker_minus_I - report.dim_ker_plus_I) <= N
    return ConditionVerdict(c3, report.min_abs_eig, (report.dim_ker, report.order))


# ---------------------------------------------------------------- gaps

def gap_eig_count(A, B, interval) -> int:
    """Eigenvalues of ``A + B`` inside an open interval free of eigenvalues of ``A``."""
    lo, hi = map(float, interval)
    if not lo < hi:
        raise BadParams("interval must satisfy l < r")
    a = eig_sym(A).values
    inside = (a > lo) & (a < hi)
    if inside.any():
        raise GapNotEmpty(f"{int(inside.sum())} eigenvalue(s) of A in ({lo}, {hi})")
    ab = eig_sym(as_symop(A) + as_symop(B)).values
    return int(np.count_nonzero((ab > lo) & (ab < hi)))


# ---------------------------------------------------------------- classification

VERDICTS = ("Resolvent", "DiscreteEigenvalue", "M_minus", "M_plus", "M_twosided", "Unstable")


@dataclass(frozen=True)
class PointClass:
    verdict: str
    evidence: dict


def _growing(counts) -> bool:
    c = np.asarray(counts)
    return bool(np.all(np.diff(c) >= 0) and c[-1] > c[0])


def classify_lambda(spectra: Sequence, lam: float, gap_tol: float,
                    point_tol: float | None = None) -> PointClass:
    """Where does ``lam`` sit relative to the limit spectrum of a truncation sequence?

    Counts eigenvalues in ``[lam - gap_tol, lam)`` and ``(lam, lam + gap_tol]``
    (excluding an atom within ``point_tol`` of ``lam``) at each order. A side
    whose count grows with the order accumulates; a persistent atom with
    quiet sides is a discrete eigenvalue; all-empty neighbourhoods are
    resolvent points. Anything else is reported as unstable.
    """
    if len(spectra) < 2:
        raise BadParams("need spectra at two or more orders")
    if gap_tol <= 0:
        raise BadParams("gap_tol must be positive")
    if point_tol is None:
        point_tol = 1e-9 * (1 + abs(lam))
    left, right, atom, gap_l, gap_r, orders = [], [], [], [], [], []
    for spec in spectra:
        s = np.sort(np.asarray(spec, dtype=np.float64))
        d = s - lam
        at = np.abs(d) <= point_tol
        lft = (d < -point_tol) & (d >= -gap_tol)
        rgt = (d > point_tol) & (d <= gap_tol)
        left.append(int(lft.sum()))
        right.append(int(rgt.sum()))
        atom.append(int(at.sum()))
        below, above = -d[d < -point_tol], d[d > point_tol]
        gap_l.append(float(below.min()) if below.size else math.inf)
        gap_r.append(float(above.min()) if above.size else math.inf)
        orders.append(int(s.size))
    evidence = {"orders": orders, "left_counts": left, "right_counts": right,
                "atom_counts": atom, "left_gaps": gap_l, "right_gaps": gap_r,
                "gap_tol": gap_tol, "point_tol": point_tol}
    gl, gr = _growing(left), _growing(right)
    if gl and gr:
        verdict = "M_twosided"
    elif gl and max(right) == 0:
        verdict = "M_minus"
    elif gr and max(left) == 0:
        verdict = "M_plus"
    elif max(left) == 0 and max(right) == 0 and min(atom) >= 1 and len(set(atom)) == 1:
        verdict = "DiscreteEigenvalue"
    elif max(left) == 0 and max(right) == 0 and max(atom) == 0:
        verdict = "Resolvent"
    else:
        verdict = "Unstable"
    return PointClass(verdict, evidence)


# ---------------------------------------------------------------- Weyl probe

def _orth(m: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis of the column span, dropping directions below ``tol``."""
    if m.shape[1] == 0:
        return m
    u, sv, _ = np.linalg.svd(m, full_matrices=False)
    return u[:, sv > tol * max(1.0, sv[0] if sv.size else 0.0)]


def weyl_probe(T, S_vectors, lam: float, probe_count: int = 8, seed: int = 0, *,
               alphas=None, kind: str = "open_below", tie_policy: str = "reject",
               strategy: str = "worst") -> list:
    """Norms ``||D(lam) x_n||`` along an orthonormal probe sequence.

    Each ``x_n`` is orthogonal to ``x_1..x_{n-1}`` and to ``T^j phi_k`` for
    ``j <= n-1``. ``strategy="worst"`` takes the admissible unit vector that
    maximizes ``||D x||`` (so every other admissible choice does at least as
    well); ``"random"`` draws a seeded Gaussian direction in the admissible
    subspace.
    """
    T = as_symop(T)
    n = T.order
    phi = np.zeros((0, n)) if S_vectors is None else np.array(S_vectors, dtype=np.float64, ndmin=2)
    if phi.size == 0:
        phi = np.zeros((0, n))
    if phi.shape[1] != n:
        raise BadParams("perturbation vectors must match the order of T")
    alphas = np.ones(phi.shape[0]) if alphas is None else np.asarray(alphas, dtype=np.float64)
    if alphas.shape != (phi.shape[0],):
        raise BadParams("need one coupling per vector")
    if strategy not in ("worst", "random"):
        raise BadParams(f"unknown strategy {strategy!r}")
    if probe_count < 1:
        raise BadParams("probe_count must be positive")
    S = SymOp((phi.T * alphas) @ phi) if phi.shape[0] else SymOp.zeros(n)
    D, _ = proj_diff(T, S, lam, kind, tie_policy)
    d = D.entries
    rng = np.random.default_rng(seed)
    a = T.entries
    scale = max(1.0, float(np.abs(a).max()))
    krylov = np.zeros((n, 0))
    frontier = phi.T.copy()  # latest Krylov directions, one column per phi_k
    probes = np.zeros((n, 0))
    norms = []
    for _ in range(probe_count):
        # extend the Krylov block by one power of T
        block = frontier
        for _ in range(2):
            block = block - krylov @ (krylov.T @ block)
        new = _orth(block, 1e-12 * scale)
        krylov = np.hstack([krylov, new])
        frontier = a @ new
        cons = _orth(np.hstack([krylov, probes]), 1e-12)
        if cons.shape[1] >= n:
            raise ProbeExhausted(f"no admissible direction left after {len(norms)} probes")
        free = krylov_complement(cons)
        if strategy == "worst":
            m = d @ free
            y = eig_sym(SymOp(m.T @ m)).vectors[:, -1]
        else:
            y = rng.standard_normal(free.shape[1])
        x = free @ y
        x /= np.linalg.norm(x)
        probes = np.hstack([probes, x[:, None]])
        norms.append(float(np.linalg.norm(d @ x)))
    return norms


# ---------------------------------------------------------------- Krylov complement

def krylov_kernel_check(T, phi, alpha: float, lam_grid, *, kind: str = "open_below",
                        tie_policy: str = "reject", tol: float = KRYLOV_TOL) -> float:
    """Largest ``||D(lam) w||`` over an orthonormal basis ``w`` of the Krylov complement."""
    T = as_symop(T)
    phi = np.asarray(phi, dtype=np.float64).ravel()
    if alpha == 0:
        raise BadParams("alpha must be nonzero")
    basis, dim = krylov_basis(T, phi, tol)
    if dim == T.order:
        raise NothingToCheck("phi is cyclic for T")
    W = krylov_complement(basis)
    S = SymOp(alpha * np.outer(phi, phi))
    worst = 0.0
    for lam in lam_grid:
        D, _ = proj_diff(T, S, float(lam), kind, tie_policy)
        worst = max(worst, float(np.max(np.linalg.norm(D.entries @ W, axis=0))))
    return worst


# ---------------------------------------------------------------- correction

def default_a_seq(j: int) -> float:
    """Default decay budget ``a_j = 1/(5j)``, ``j >= 1``."""
    return 1.0 / (5 * j)


def _budget(a_seq, count: int) -> np.ndarray:
    if count == 0:
        return np.zeros(0)
    if a_seq is None:
        a_seq = default_a_seq
    if callable(a_seq):
        a = np.array([float(a_seq(j)) for j in range(1, count + 1)])
    else:
        a = np.asarray(a_seq, dtype=np.float64).ravel()
        if a.size < count:
            raise CorrectionInfeasible(
                f"{count} shifts needed but the sequence has only {a.size} terms", count)
        a = a[:count]
    if np.any(a <= 0) or (a.size and a[0] >= 0.25) or np.any(np.diff(a) >= 0):
        raise BadParams("a_seq must be positive, strictly decreasing, with a_1 < 1/4")
    return a


def _magnitude_clusters(values: np.ndarray, tau: float):
    """Group indices of nonzero eigenvalues whose moduli chain within ``tau``."""
    idx = [i for i in np.argsort(-np.abs(values), kind="stable") if abs(values[i]) > tau]
    groups = []
    for i in idx:
        if groups and abs(abs(values[groups[-1][-1]]) - abs(values[i])) <= tau:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def build_correction(D, a_seq=None, tau: float = TAU) -> SymOp:
    """Finite-rank ``K``, diagonal in the eigenbasis of ``D``, balancing ``D - K``.

    Eigenvalues of ``D`` are grouped by modulus. In every group the surplus of
    the majority sign is moved toward zero by distinct shifts, the largest
    moduli receiving the largest budget terms ``a_1 > a_2 > ...``. Shifts are
    halved when they would collide with another modulus or reach zero, and
    reversed (away from zero, never past 1) as a last resort.
    """
    D = as_symop(D)
    e = eig_sym(D)
    vals = e.values
    if vals.size and (vals[0] < -1 - tau or vals[-1] > 1 + tau):
        raise NotAProjectionDifference("||D|| exceeds 1 + tau")
    surplus = []
    for g in _magnitude_clusters(vals, tau):
        pos = [i for i in g if vals[i] > 0]
        neg = [i for i in g if vals[i] < 0]
        major, minor = (pos, neg) if len(pos) > len(neg) else (neg, pos)
        surplus.extend(major[:len(major) - len(minor)])
    a = _budget(a_seq, len(surplus))
    shifts = np.zeros_like(vals)
    occupied = [abs(v) for i, v in enumerate(vals) if i not in set(surplus)]
    sep = 10 * tau
    for j, i in enumerate(surplus):
        t = abs(vals[i])
        placed = None
        for direction in (-1.0, 1.0):
            eps = a[j]
            while eps > sep:
                target = t + direction * eps
                if sep < target <= 1.0 and all(abs(target - o) > sep for o in occupied):
                    placed = direction * eps
                    break
                eps *= 0.5
            if placed is not None:
                break
        if placed is None:
            raise CorrectionInfeasible(
                f"no admissible shift for eigenvalue {vals[i]:.6g} within budget {a[j]:.3g}",
                len(surplus))
        occupied.append(t + placed)
        shifts[i] = -np.sign(vals[i]) * placed  # D - K moves |value| by `placed`
    V = e.vectors
    return SymOp((V * shifts) @ V.T)


@dataclass(frozen=True)
class CorrectionCheck:
    in_unit_interval: bool
    balanced: bool
    within_budget: bool
    kernel_preserved: bool
    worst_imbalance: int
    shifts: tuple = field(default=())

    @property
    def ok(self) -> bool:
        return self.in_unit_interval and self.balanced and self.within_budget and self.kernel_preserved


def verify_correction(D, K, a_seq=None, tau: float = TAU) -> CorrectionCheck:
    """Recheck the four properties of a correction with fresh eigensolves."""
    D, K = as_symop(D), as_symop(K)
    DK = D - K
    after = eig_sym(DK).values
    in_unit = bool(after[0] >= -1 - tau and after[-1] <= 1 + tau)
    worst = 0
    for g in _magnitude_clusters(after, tau):
        worst = max(worst, abs(int(np.sum(after[g] > 0)) - int(np.sum(after[g] < 0))))
    kv = eig_sym(K).values
    nu = np.sort(np.abs(kv))[::-1]
    nu = nu[nu > tau]
    try:
        a = _budget(a_seq, nu.size)
        within = bool(np.all(nu <= a + tau))
    except CorrectionInfeasible:
        within = False
    before_ker = eig_sym(D)
    ker_D = before_ker.vectors[:, np.abs(before_ker.values) <= tau]
    e_after = eig_sym(DK)
    ker_DK = e_after.vectors[:, np.abs(e_after.values) <= tau]
    same = ker_D.shape[1] == ker_DK.shape[1]
    if same and ker_D.shape[1]:
        # subspaces agree iff the projection of one basis onto the other is lossless
        overlap = np.linalg.svd(ker_D.T @ ker_DK, compute_uv=False)
        same = bool(np.min(overlap) > 1 - 1e-8)
    return CorrectionCheck(in_unit, worst <= 1, within, bool(same), worst, tuple(float(v) for v in nu))


__all__ = [
    "ProjDiffReport", "proj_diff", "HalmosSplit", "halmos_split", "ConditionVerdict",
    "check_conditions", "gap_eig_count", "PointClass", "classify_lambda", "VERDICTS",
    "weyl_probe", "krylov_kernel_check", "default_a_seq", "build_correction",
    "CorrectionCheck", "verify_correction",
]
