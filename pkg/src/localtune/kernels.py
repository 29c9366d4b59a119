"""Pairwise-distance and SVM-kernel primitives.

Two squared-distance routines exist on purpose: ``sq_dists`` (gram trick,
fast, used inside iterative fitting) and ``sq_dists_exact`` (direct
differences, bitwise-zero for identical points, used wherever tie rules or
exact-match rules are part of the contract).
"""

import numpy as np

SVM_KERNELS = ("linear", "poly", "rbf", "sigmoid")
POLY_DEGREE = 3


def gram(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B.T


def sq_norms(A: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", A, A)


def sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """||a-b||^2 via the gram trick; cheap but only accurate to ~1e-12 rel."""
    D2 = sq_norms(A)[:, None] + sq_norms(B)[None, :] - 2.0 * (A @ B.T)
    np.maximum(D2, 0.0, out=D2)
    return D2


def sq_dists_hybrid(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Gram-trick distances with near-zero entries recomputed directly.

    The gram trick leaves ~1e-12-relative noise, which would hide genuine
    zero distances (identical points). Entries small enough to possibly be
    exact matches are recomputed by direct differences, so zeros come out
    bitwise zero while everything else keeps the fast path.
    """
    A = np.atleast_2d(A)
    D2 = sq_dists(A, B)
    sqA = sq_norms(A)
    sqB = sq_norms(B)
    suspect = np.argwhere(D2 <= 1e-9 * (sqA[:, None] + sqB[None, :] + 1.0))
    for i, j in suspect:
        d = A[i] - B[j]
        D2[i, j] = float(d @ d)
    return D2


def sq_dists_exact(A: np.ndarray, B: np.ndarray,
                   budget_elements: int = 32_000_000) -> np.ndarray:
    """||a-b||^2 by direct differences, chunked over rows of A.

    The chunk size is derived from ``budget_elements`` so the (chunk, |B|, d)
    difference tensor stays around a quarter GB regardless of problem size.
    """
    A = np.atleast_2d(A)
    out = np.empty((A.shape[0], B.shape[0]))
    per_row = max(1, B.shape[0] * max(1, B.shape[1]))
    chunk = max(1, budget_elements // per_row)
    for lo in range(0, A.shape[0], chunk):
        hi = min(lo + chunk, A.shape[0])
        diff = A[lo:hi, None, :] - B[None, :, :]
        out[lo:hi] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def kernel_from_parts(kind: str, G: np.ndarray, D2, gamma: float, coef0: float) -> np.ndarray:
    """Evaluate a kernel from a precomputed gram block (and squared
    distances for rbf)."""
    if kind == "linear":
        return G.copy()
    if kind == "poly":
        return (gamma * G + coef0) ** POLY_DEGREE
    if kind == "rbf":
        return np.exp(-gamma * D2)
    if kind == "sigmoid":
        return np.tanh(gamma * G + coef0)
    raise ValueError(f"unknown kernel {kind!r}; expected one of {SVM_KERNELS}")


def kernel_matrix(kind: str, A: np.ndarray, B: np.ndarray, gamma: float, coef0: float) -> np.ndarray:
    G = gram(A, B)
    D2 = None
    if kind == "rbf":
        D2 = sq_norms(A)[:, None] + sq_norms(B)[None, :] - 2.0 * G
        np.maximum(D2, 0.0, out=D2)
    return kernel_from_parts(kind, G, D2, gamma, coef0)
