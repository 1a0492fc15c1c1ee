"""Finite truncations of the model operators, rank-N perturbations and Krylov spans."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BadParams, QuadratureFailure
from .quadrature import (
    GL_ORDER,
    Quadrature,
    adaptive_integral,
    composite_gauss_legendre,
    gauss_legendre_unit,
    laguerre_cutoff,
    laguerre_functions,
    panel_edges,
)
from .spectral import SymOp, as_array, eig_sym, numerical_rank, spectral_radius

QUAD_RTOL = 1e-9
QUAD_FAIL_RTOL = 1e-8
_DEP_TOL = 1e-10


@dataclass(frozen=True)
class OperatorPair:
    """A base operator ``T`` with a finite-rank perturbation ``S``.

    ``phi`` holds the perturbation directions as rows and ``alphas`` the
    matching couplings, so that ``S = sum_k alphas[k] * outer(phi[k], phi[k])``
    whenever both are given.
    """

    T: SymOp
    S: SymOp
    rank_S: int
    phi: np.ndarray | None = None
    alphas: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def order(self) -> int:
        return self.T.order

    @property
    def perturbed(self) -> SymOp:
        return self.T + self.S


def _pair(T, S, phi=None, alphas=(), tau=None, **meta) -> OperatorPair:
    T, S = SymOp(T), SymOp(S)
    if tau is None:
        tau = 1e-8 * max(S.norm(), 1e-300)
    return OperatorPair(T, S, numerical_rank(S, tau), phi, tuple(alphas), dict(meta))


# ---------------------------------------------------------------- diagonal

def diag_example_one(n: int, N: int) -> OperatorPair:
    """``T = diag(-1, -1/2, ..., -1/n)`` with ``S = -I`` on the first ``N`` coordinates."""
    if not (1 <= N < n):
        raise BadParams(f"need 1 <= N < n, got n={n}, N={N}")
    t = -1.0 / np.arange(1, n + 1)
    s = np.zeros(n)
    s[:N] = -1.0
    phi = np.eye(n)[:N]
    return _pair(np.diag(t), np.diag(s), phi, [-1.0] * N, family="DiagExample1", n=n, N=N)


def diag_example_two_diagonals(n: int):
    """Diagonals of ``T`` and ``S`` for the two-cluster example, truncated to ``n``.

    Clusters sit at -1 and -1/2 with widths 1/2 and 1/6. Entries are
    ``a + w/m`` in ``T`` and ``-2 w/m`` in ``S``; the first two ``m = 4`` slots
    are interleaved with the bare cluster points, then ``m = 5, 6, ...``
    alternate between the clusters.
    """
    if n < 7:
        raise BadParams(f"need n >= 7, got {n}")
    centers = (-1.0, -0.5)
    widths = (0.5, 1.0 / 6.0)
    t = [centers[0], centers[0] + widths[0] / 4, centers[1], centers[1] + widths[1] / 4]
    s = [0.0, -2 * widths[0] / 4, 0.0, -2 * widths[1] / 4]
    m = 5
    while len(t) < n:
        for c in (0, 1):
            t.append(centers[c] + widths[c] / m)
            s.append(-2 * widths[c] / m)
        m += 1
    return np.array(t[:n]), np.array(s[:n])


def diag_example_two(n: int) -> OperatorPair:
    t, s = diag_example_two_diagonals(n)
    idx = np.flatnonzero(s)
    phi = np.eye(n)[idx]
    return _pair(np.diag(t), np.diag(s), phi, s[idx], family="DiagExample2", n=n)


# ---------------------------------------------------------------- Krein pair

def _laguerre_rule(n: int, panels: int, length: float) -> Quadrature:
    return composite_gauss_legendre(length, panels, GL_ORDER, grading="sqrt")


def _krein_galerkin_once(n: int, panels: int, length: float, chunk: int = 64):
    """One pass of the Laguerre-Galerkin assembly on a fixed panel layout.

    Splits the kernel as ``(e^{-|x-y|} -+ e^{-(x+y)}) / 2``. The separable
    part is a rank-one Gram term. The convolution part is ``B + B^T`` with
    ``B_ij = 1/2 int l_i(x) c_j(x) dx`` and ``c_j(x) = int_0^x e^{-(x-y)} l_j(y) dy``,
    carried across panels by the exponential recursion and completed inside
    each panel with a sub-rule on ``[a_p, x]``.
    """
    edges = panel_edges(length, panels, "sqrt")
    u, wu = gauss_legendre_unit(GL_ORDER)
    m = u.shape[0]
    B = np.zeros((n, n))
    g = np.zeros(n)
    carry = np.zeros(n)  # c_j at the left edge of the current panel
    for start in range(0, panels, chunk):
        stop = min(start + chunk, panels)
        a = edges[start:stop]
        h = edges[start + 1:stop + 1] - a
        x = a[:, None] + h[:, None] * u[None, :]          # (P, m) outer nodes
        wx = h[:, None] * wu[None, :]
        lx = laguerre_functions(n, x.ravel()).reshape(n, -1, m)  # (n, P, m)
        g += np.einsum("jpk,pk->j", lx, wx * np.exp(-x))
        # partial integrals int_{a_p}^{x_k} e^{-(x_k-y)} l_j(y) dy
        span = x - a[:, None]                               # (P, m)
        y = a[:, None, None] + span[:, :, None] * u[None, None, :]  # (P, m, m)
        wy = span[:, :, None] * wu[None, None, :] * np.exp(-(x[:, :, None] - y))
        ly = laguerre_functions(n, y.ravel()).reshape(n, *y.shape)
        inner = np.einsum("jpkq,pkq->jpk", ly, wy)         # (n, P, m)
        # full panel increments int_{a_p}^{a_{p+1}} e^{-(a_{p+1}-y)} l_j(y) dy
        inc = np.einsum("jpk,pk->jp", lx, wx * np.exp(-(a + h)[:, None] + x))
        decay = np.exp(-h)
        left = np.empty((n, stop - start))
        for p in range(stop - start):
            left[:, p] = carry
            carry = decay[p] * carry + inc[:, p]
        c = inner + left[:, :, None] * np.exp(-span)[None, :, :]
        B += 0.5 * np.einsum("ipk,pk,jpk->ij", lx, wx, c)
    conv = B + B.T
    return conv, g


def krein_galerkin(n: int, *, length: float | None = None, max_doublings: int = 6):
    """Laguerre-Galerkin matrices of the two resolvent kernels.

    Returns ``(A0, A1, g, info)`` where ``g_j = <e^{-x}, l_j>``. Panels are
    doubled until the relative change of both matrices drops below 1e-9.
    """
    if n < 2:
        raise BadParams("basis_size must be at least 2")
    if length is None:
        length = laguerre_cutoff(n)
    panels = max(16, n // 2)
    prev = None
    change = math.inf
    for _ in range(max_doublings + 1):
        conv, g = _krein_galerkin_once(n, panels, length)
        if prev is not None:
            change = np.linalg.norm(conv - prev[0]) / np.linalg.norm(conv)
            change = max(change, np.linalg.norm(g - prev[1]) / np.linalg.norm(g))
            if change < QUAD_RTOL:
                break
        prev = (conv, g)
        panels *= 2
    else:
        if change >= QUAD_FAIL_RTOL:
            raise QuadratureFailure(f"Galerkin entries did not settle (relative change {change:.2e})")
    sep = 0.5 * np.outer(g, g)
    info = {"panels": panels, "length": length, "relative_change": float(change)}
    return conv - sep, conv + sep, g, info


def krein_nystrom(length: float, grid: int):
    """Nystrom matrices of the two kernels on ``[0, length]`` with ``grid`` nodes."""
    if length <= 0 or grid < 2:
        raise BadParams("need length > 0 and grid >= 2")
    q = _nystrom_rule(length, grid)
    x, sw = q.nodes, np.sqrt(q.weights)
    d = np.abs(x[:, None] - x[None, :])
    s = x[:, None] + x[None, :]
    w2 = np.outer(sw, sw)
    a0 = 0.5 * (np.exp(-d) - np.exp(-s)) * w2
    a1 = 0.5 * (np.exp(-d) + np.exp(-s)) * w2
    return a0, a1, sw * np.exp(-x), q


def _nystrom_rule(length: float, grid: int, grading: str = "uniform") -> Quadrature:
    m = next(k for k in (8, 6, 5, 4, 3, 2, 1) if grid % k == 0)
    return composite_gauss_legendre(length, grid // m, m, grading=grading)


def krein_pair(basis_size: int, scheme: str = "laguerre_galerkin", *, L: float | None = None,
               grid: int | None = None) -> OperatorPair:
    """Truncations of the Dirichlet and Neumann resolvents of ``1 - d^2/dx^2`` on the half-line.

    ``T`` is the Dirichlet one, ``T + S`` the Neumann one; they differ by the
    rank-one kernel ``e^{-x} e^{-y}``. ``phi`` is the discretized ``e^{-x}``
    (not normalized) with coupling 1.
    """
    if basis_size < 2:
        raise BadParams("basis_size must be at least 2")
    if scheme == "laguerre_galerkin":
        a0, a1, g, info = krein_galerkin(basis_size, length=L)
        meta = {"family": "KreinPair", "scheme": scheme, **info}
    elif scheme == "nystrom":
        L = 40.0 if L is None else float(L)
        grid = basis_size if grid is None else int(grid)
        if grid < basis_size:
            raise BadParams("nystrom grid must be at least basis_size")
        a0, a1, g, _ = krein_nystrom(L, grid)
        meta = {"family": "KreinPair", "scheme": scheme, "length": L, "grid": grid}
    else:
        raise BadParams(f"unknown scheme {scheme!r}")
    return _pair(a0, a1 - a0, g[None, :], (1.0,), **meta)


def krein_exact_galerkin(n: int):
    """Closed-form Laguerre-Galerkin matrices (tridiagonal) of the two kernels.

    Independent of any quadrature; used as a reference.
    """
    d0 = np.full(n, 0.5)
    d0[0] = 0.25
    off = np.full(n - 1, -0.25)
    a0 = np.diag(d0) + np.diag(off, 1) + np.diag(off, -1)
    a1 = a0.copy()
    a1[0, 0] += 0.5
    return a0, a1


# ---------------------------------------------------------------- Carleman

def carleman(basis_size: int, scheme: str = "laguerre_galerkin", *, L: float = 40.0,
             grid: int | None = None) -> SymOp:
    """Truncation of the integral operator with kernel ``1/(x+y)`` on the half-line.

    In the Laguerre basis the Laplace representation
    ``1/(x+y) = int_0^inf e^{-s(x+y)} ds`` turns each entry into a moment
    ``int_{-1}^{1} w^{i+j} dw``, evaluated here by Gauss-Legendre. The
    Nystrom variant samples the kernel on ``[0, L]`` with sqrt grading.
    """
    n = basis_size
    if n < 1:
        raise BadParams("basis_size must be positive")
    if scheme == "laguerre_galerkin":
        t, w = np.polynomial.legendre.leggauss(n + 1)
        powers = t[None, :] ** np.arange(2 * n - 1)[:, None]
        moments = powers @ w
        moments[1::2] = 0.0
        j = np.arange(n)
        return SymOp(moments[j[:, None] + j[None, :]])
    if scheme == "nystrom":
        grid = n if grid is None else int(grid)
        if grid < n:
            raise BadParams("nystrom grid must be at least basis_size")
        q = _nystrom_rule(L, grid, grading="sqrt")
        sw = np.sqrt(q.weights)
        return SymOp(np.outer(sw, sw) / (q.nodes[:, None] + q.nodes[None, :]))
    raise BadParams(f"unknown scheme {scheme!r}")


# ---------------------------------------------------------------- lattices

def _sample(seq, idx: np.ndarray, name: str) -> np.ndarray:
    if callable(seq):
        return np.array([float(seq(int(k))) for k in idx])
    if np.isscalar(seq):
        return np.full(idx.shape[0], float(seq))
    arr = np.asarray(seq, dtype=np.float64)
    if arr.shape != idx.shape:
        raise BadParams(f"{name} needs {idx.shape[0]} values, got {arr.shape}")
    return arr


def jacobi(a, b, m: int) -> SymOp:
    """Dirichlet truncation of a Jacobi operator to sites ``-m..m``.

    ``a`` and ``b`` may be callables of the site index, scalars, or arrays
    (``2m`` off-diagonal and ``2m+1`` diagonal values).
    """
    if m < 1:
        raise BadParams("window half-width m must be >= 1")
    sites = np.arange(-m, m + 1)
    off = _sample(a, sites[:-1], "a")
    diag = _sample(b, sites, "b")
    if np.any(off <= 0):
        raise BadParams("off-diagonal coefficients a_n must be positive")
    return SymOp(np.diag(diag) + np.diag(off, 1) + np.diag(off, -1))


def almost_mathieu(kappa: float, beta: float, theta: float, m: int) -> SymOp:
    if kappa == 0:
        raise BadParams("coupling kappa must be nonzero")
    return jacobi(1.0, lambda k: 2 * kappa * math.cos(2 * math.pi * (theta + k * beta)), m)


def schrodinger(V, m: int) -> SymOp:
    return jacobi(1.0, V, m)


def lattice_operator(family: str, m: int, **params) -> SymOp:
    """Dispatch by family name: ``jacobi(a, b)``, ``almost_mathieu(kappa, beta, theta)``
    or ``schrodinger(V)``."""
    if family == "jacobi":
        return jacobi(params["a"], params["b"], m)
    if family == "almost_mathieu":
        return almost_mathieu(params["kappa"], params["beta"], params.get("theta", 0.0), m)
    if family == "schrodinger":
        return schrodinger(params.get("V", 0.0), m)
    raise BadParams(f"unknown lattice family {family!r}")


def path_eigenvalues(order: int) -> np.ndarray:
    """Eigenvalues of the free Dirichlet path of ``order`` sites, ascending."""
    k = np.arange(order, 0, -1)
    return 2 * np.cos(k * np.pi / (order + 1))


# ---------------------------------------------------------------- perturbations

def orthonormalize(vectors, tol: float = _DEP_TOL) -> np.ndarray:
    """Modified Gram-Schmidt, applied twice. Rows in, orthonormal rows out."""
    v = np.array(vectors, dtype=np.float64, ndmin=2)
    out = np.empty_like(v)
    for k in range(v.shape[0]):
        w = v[k].copy()
        norm0 = np.linalg.norm(w)
        if norm0 == 0:
            raise BadParams(f"vector {k} is zero")
        for _ in range(2):
            for j in range(k):
                w -= (out[j] @ w) * out[j]
        norm = np.linalg.norm(w)
        if norm <= tol * norm0:
            raise BadParams(f"vector {k} is numerically dependent on the previous ones")
        out[k] = w / norm
    return out


def rank_perturbation(vectors, alphas) -> SymOp:
    """``sum_k alphas[k] phi_k phi_k^T`` over the orthonormalized ``vectors``."""
    alphas = np.asarray(alphas, dtype=np.float64).ravel()
    phi = orthonormalize(vectors)
    if phi.shape[0] != alphas.shape[0]:
        raise BadParams("need one coupling per vector")
    if np.any(alphas == 0):
        raise BadParams("couplings must be nonzero")
    return SymOp((phi.T * alphas) @ phi)


def random_pair(order: int, rank: int, seed: int, *, scale: float = 1.0) -> OperatorPair:
    """Random symmetric ``T`` (GOE-like) with a random rank-``rank`` perturbation."""
    if order < 1 or rank < 0 or rank > order:
        raise BadParams("need order >= 1 and 0 <= rank <= order")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((order, order))
    T = (g + g.T) / math.sqrt(2 * order)
    if rank == 0:
        return _pair(T, np.zeros((order, order)), None, (), family="RandomSym", seed=seed)
    phi = orthonormalize(rng.standard_normal((rank, order)))
    alphas = scale * rng.choice([-1.0, 1.0], rank) * rng.uniform(0.2, 1.5, rank)
    S = (phi.T * alphas) @ phi
    return _pair(T, S, phi, alphas, family="RandomSym", seed=seed)


# ---------------------------------------------------------------- Krylov

def krylov_basis(T, phi, tol: float = 1e-10):
    """Orthonormal basis (columns) of ``span{T^j phi}`` and its dimension.

    Lanczos-style: each new direction is ``T`` applied to the latest basis
    vector, orthogonalized twice against the whole basis. Stops when the
    remainder has norm below ``tol``.
    """
    a = as_array(T)
    v = np.asarray(phi, dtype=np.float64).ravel()
    nv = np.linalg.norm(v)
    if nv == 0:
        raise BadParams("phi must be nonzero")
    n = a.shape[0]
    Q = np.zeros((n, n))
    Q[:, 0] = v / nv
    d = 1
    while d < n:
        w = a @ Q[:, d - 1]
        for _ in range(2):
            w -= Q[:, :d] @ (Q[:, :d].T @ w)
        norm = np.linalg.norm(w)
        if norm < tol:
            break
        Q[:, d] = w / norm
        d += 1
    return Q[:, :d].copy(), d


def krylov_complement(basis: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of the orthogonal complement of ``basis``."""
    n, d = basis.shape
    if d == n:
        return np.zeros((n, 0))
    q, _ = np.linalg.qr(np.hstack([basis, np.eye(n)]))
    return q[:, d:n]


# ---------------------------------------------------------------- Laguerre check

def laguerre_closed_form(k: int, x) -> np.ndarray:
    """Closed form of the Dirichlet resolvent applied to ``x^k e^{-x}``."""
    x = np.asarray(x, dtype=np.float64)
    total = x ** (k + 1) / (k + 1)
    for ell in range(k):
        total = total + 2.0 ** (-(k + 1)) * (2 * x) ** (k - ell) * math.factorial(k) / math.factorial(k - ell)
    return 0.5 * np.exp(-x) * total


def laguerre_apply_quadrature(k: int, x: float, L: float, rtol: float = 1e-12) -> float:
    """Dirichlet resolvent applied to ``x^k e^{-x}`` by quadrature on ``[0, L]``."""
    # e^{-x} int_0^x sinh(y) y^k e^{-y} dy + sinh(x) int_x^L e^{-y} y^k e^{-y} dy,
    # rearranged so no factor overflows
    left = adaptive_integral(lambda y: 0.5 * (1 - np.exp(-2 * y)) * y ** k, 0.0, x, rtol=rtol)
    right = adaptive_integral(lambda y: y ** k * np.exp(-2 * (y - x)), x, L, rtol=rtol) if L > x else 0.0
    return math.exp(-x) * left + 0.5 * (math.exp(-x) - math.exp(-3 * x)) * right


def laguerre_reference_apply(k: int, x_grid, L: float = 40.0) -> float:
    """Largest relative deviation between quadrature and closed form over ``x_grid``."""
    if not (0 <= k <= 8):
        raise BadParams("k must lie in 0..8")
    xs = np.asarray(x_grid, dtype=np.float64).ravel()
    if xs.size == 0 or np.any(xs <= 0) or np.any(xs >= L):
        raise BadParams("grid points must lie in (0, L)")
    exact = laguerre_closed_form(k, xs)
    approx = np.array([laguerre_apply_quadrature(k, float(x), L) for x in xs])
    return float(np.max(np.abs(approx - exact) / (1 + np.abs(exact))))


__all__ = [
    "OperatorPair", "diag_example_one", "diag_example_two", "diag_example_two_diagonals",
    "krein_pair", "krein_galerkin", "krein_nystrom", "krein_exact_galerkin", "carleman",
    "jacobi", "almost_mathieu", "schrodinger", "lattice_operator", "path_eigenvalues",
    "orthonormalize", "rank_perturbation", "random_pair", "krylov_basis", "krylov_complement",
    "laguerre_closed_form", "laguerre_apply_quadrature", "laguerre_reference_apply",
]
