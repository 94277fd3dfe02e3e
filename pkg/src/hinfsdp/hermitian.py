"""Hermitian matrix helpers and the complex-to-real cone embedding."""

from __future__ import annotations

import numpy as np

from .exceptions import NotPSDError

__all__ = [
    "DEFAULT_REL_TOL",
    "symmetrize",
    "psd_sqrt",
    "embed_real",
    "unembed_real",
    "numerical_rank",
    "pinv",
    "hermitian_basis",
    "inner",
]

DEFAULT_REL_TOL = 1e-9
# eigenvalues in [-CLIP_REL * ||H||, 0) are treated as zero
CLIP_REL = 1e-7


def symmetrize(M) -> np.ndarray:
    """Hermitian part ``(M + M*) / 2``."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"symmetrize needs a square matrix, got {M.shape}")
    return 0.5 * (M + M.conj().T)


def inner(X, Y) -> float:
    """Real inner product ``Re tr(X* Y)``."""
    return float(np.vdot(X, Y).real)


def psd_sqrt(H, tol=None) -> np.ndarray:
    """Factor ``S`` with ``S S* = H`` from the Hermitian eigendecomposition.

    Returns ``S = U diag(sqrt(lambda))`` which tolerates singular input.
    Eigenvalues in ``[-tol, 0)`` are clipped to zero; anything more negative
    raises :class:`NotPSDError`. ``tol`` defaults to ``1e-7 * ||H||_2``.
    """
    H = symmetrize(H)
    if H.size == 0:
        return H.copy()
    lam, U = np.linalg.eigh(H)
    if tol is None:
        tol = CLIP_REL * max(np.max(np.abs(lam)), 0.0)
    if lam[0] < -tol:
        raise NotPSDError(f"matrix is not PSD: min eigenvalue {lam[0]:.3e} < -{tol:.3e}")
    lam = np.clip(lam, 0.0, None)
    return U * np.sqrt(lam)


def embed_real(H) -> np.ndarray:
    """Real symmetric embedding ``[[P, -Q], [Q, P]]`` of ``H = P + jQ``."""
    H = np.asarray(H, dtype=complex)
    P, Q = H.real, H.imag
    return np.block([[P, -Q], [Q, P]])


def unembed_real(X) -> np.ndarray:
    """Hermitian matrix ``V`` with ``<E, V> = <embed_real(E), X> / 2``.

    Inverts :func:`embed_real` on its range and maps any real PSD matrix
    to a Hermitian PSD one.
    """
    X = np.asarray(X, dtype=float)
    k = X.shape[0] // 2
    X11, X12 = X[:k, :k], X[:k, k:]
    X21, X22 = X[k:, :k], X[k:, k:]
    V = 0.5 * (X11 + X22) + 0.5j * (X21 - X12)
    return symmetrize(V)


def numerical_rank(M, rel_tol: float = DEFAULT_REL_TOL) -> int:
    """Count singular values above ``rel_tol * sigma_max``."""
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


def pinv(M, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse with a relative singular value cutoff."""
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return np.zeros(M.shape[::-1], dtype=complex)
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    keep = s > rel_tol * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (Vh.conj().T * s_inv) @ U.conj().T


def hermitian_basis(n: int) -> np.ndarray:
    """Orthonormal basis of the ``n x n`` Hermitian matrices.

    Ordered over the upper triangle: each diagonal entry gives one real
    element; each off-diagonal pair gives a real-part and an
    imaginary-part element. Returns an array of shape ``(n*n, n, n)``.
    """
    basis = []
    r = 1.0 / np.sqrt(2.0)
    for p in range(n):
        E = np.zeros((n, n), dtype=complex)
        E[p, p] = 1.0
        basis.append(E)
        for q in range(p + 1, n):
            E = np.zeros((n, n), dtype=complex)
            E[p, q] = E[q, p] = r
            basis.append(E)
            E = np.zeros((n, n), dtype=complex)
            E[p, q] = -1j * r
            E[q, p] = 1j * r
            basis.append(E)
    if not basis:
        return np.zeros((0, n, n), dtype=complex)
    return np.array(basis)
