"""Hankel and block-Hankel matrices, and how far a matrix is from commuting with the shift."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadParams
from .spectral import SymOp, as_array


def hankel_from_symbol(symbol) -> SymOp:
    """``H[j][k] = s[j + k]``.

    A 1-d symbol of odd length ``2n - 1`` gives an ``n x n`` matrix. A stack
    of ``2n - 1`` symmetric ``N x N`` blocks gives the ``nN x nN`` block
    version.
    """
    s = np.asarray(symbol, dtype=np.float64)
    if s.ndim == 1:
        if s.size % 2 == 0 or s.size == 0:
            raise BadParams(f"scalar symbol needs odd length 2n-1, got {s.size}")
        n = (s.size + 1) // 2
        j = np.arange(n)
        return SymOp(s[j[:, None] + j[None, :]])
    if s.ndim == 3 and s.shape[1] == s.shape[2]:
        m, N, _ = s.shape
        if m % 2 == 0:
            raise BadParams(f"block symbol needs an odd number 2n-1 of blocks, got {m}")
        if np.any(s != np.swapaxes(s, 1, 2)):
            raise BadParams("blocks must be symmetric")
        n = (m + 1) // 2
        j = np.arange(n)
        blocks = s[j[:, None] + j[None, :]]            # (n, n, N, N)
        return SymOp(blocks.transpose(0, 2, 1, 3).reshape(n * N, n * N))
    raise BadParams(f"symbol must be 1-d or a stack of square blocks, got shape {s.shape}")


def forward_shift(n: int, block: int = 1) -> np.ndarray:
    """Truncated forward shift ``e_k -> e_{k+1}``, acting blockwise for ``block > 1``."""
    return np.kron(np.eye(n, k=-1), np.eye(block))


@dataclass(frozen=True)
class CommutatorDefect:
    interior_norm: float
    full_norm: float
    top_singulars: tuple


def commutator_defect(H, top: int = 5, block: int = 1) -> CommutatorDefect:
    """Norms of ``A^T H - H A`` with ``A`` the truncated forward shift.

    Truncation alone makes the last row and column nonzero even for an exact
    Hankel matrix, so the leading ``(n-1) x (n-1)`` block is reported
    separately (the leading ``(n-1) N`` block for block order ``N``).
    """
    h = as_array(H)
    if h.shape[0] % block:
        raise BadParams("order must be a multiple of the block size")
    n = h.shape[0] // block
    a = forward_shift(n, block)
    c = a.T @ h - h @ a
    sv = np.linalg.svd(c, compute_uv=False)
    k = (n - 1) * block
    inner = np.linalg.norm(c[:k, :k], 2) if k else 0.0
    return CommutatorDefect(float(inner), float(sv[0]) if sv.size else 0.0,
                            tuple(float(v) for v in sv[:top]))


def hilbert_symbol(n: int) -> np.ndarray:
    """``s_k = 1/(k+1)``, the symbol of the ``n x n`` Hilbert matrix."""
    return 1.0 / np.arange(1, 2 * n)


__all__ = ["hankel_from_symbol", "forward_shift", "CommutatorDefect", "commutator_defect", "hilbert_symbol"]
