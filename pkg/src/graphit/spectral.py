"""Symmetric eigendecomposition and matrix functions.

The eigensolver is a cyclic Jacobi sweep: simple, robust for the matrix
sizes we care about (a few hundred nodes), and dependency-free. One
decomposition serves two consumers: spectral kernels f(L) and Laplacian
eigenvector coordinates.

Determinism: eigenvalues are sorted ascending with a stable sort, and each
eigenvector column is sign-fixed so its largest-magnitude entry is positive
(ties broken by the first such entry). Within a numerically degenerate
eigenvalue cluster the basis is whatever the sweep produced; it is
deterministic for a fixed input but not canonical, so comparisons across
different inputs must project onto subspaces.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

_SYM_TOL = 1e-10
_OFF_TOL = 1e-12
_MAX_SWEEPS = 100


class ConvergenceError(RuntimeError):
    """Jacobi sweeps exhausted without reaching the off-diagonal target."""


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues ascending, eigenvector i in column i of `eigenvectors`."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


def _check_symmetric_input(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if float(np.max(np.abs(m - m.T), initial=0.0)) > _SYM_TOL * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    return 0.5 * (m + m.T)


def symmetric_eig(m: np.ndarray) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Converges when the off-diagonal Frobenius norm drops below
    1e-12 * ||M||_F; raises ConvergenceError after 100 sweeps (a signal of
    ill-conditioned input, not expected for the matrices built here).
    """
    a = _check_symmetric_input(m)
    n = a.shape[0]
    v = np.eye(n)
    norm = float(np.linalg.norm(a))
    if n == 1 or norm == 0.0:
        return _finalize(np.diag(a).copy(), v)

    target = _OFF_TOL * norm
    # rotations cheaper than this cannot move the off-norm above target
    skip = target / max(n, 2)
    for _ in range(_MAX_SWEEPS):
        if _off_norm(a) <= target:
            return _finalize(np.diag(a).copy(), v)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # A <- J^T A J with the rotation in the (p,q) plane
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    off = _off_norm(a)
    if off <= target:
        return _finalize(np.diag(a).copy(), v)
    raise ConvergenceError(
        f"Jacobi did not converge in {_MAX_SWEEPS} sweeps (off-norm {off:.3e})"
    )


def _off_norm(a: np.ndarray) -> float:
    # summed directly over off-diagonal entries; the sum(A^2) - sum(diag^2)
    # form cancels catastrophically once the off-part is tiny
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.linalg.norm(off))


def _finalize(values: np.ndarray, vectors: np.ndarray) -> EigenDecomposition:
    order = np.argsort(values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]
    for j in range(vectors.shape[1]):
        col = vectors[:, j]
        i = int(np.argmax(np.abs(col)))
        if col[i] < 0:
            vectors[:, j] = -col
    values.setflags(write=False)
    vectors.setflags(write=False)
    return EigenDecomposition(values, vectors)


def matrix_function(m: np.ndarray, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply a scalar function to the spectrum: V diag(f(lambda)) V^T.

    `f` must accept a 1-D array of eigenvalues. The result is symmetrized
    to remove rotation roundoff.
    """
    eig = symmetric_eig(m)
    w = np.asarray(f(eig.eigenvalues), dtype=float)
    if w.shape != eig.eigenvalues.shape:
        raise ValueError("scalar function must map eigenvalues elementwise")
    if not np.all(np.isfinite(w)):
        bad = eig.eigenvalues[~np.isfinite(w)][0]
        raise ValueError(f"scalar function produced a non-finite value at lambda={bad}")
    v = eig.eigenvectors
    out = (v * w) @ v.T
    return 0.5 * (out + out.T)


def matrix_power(m: np.ndarray, p: int) -> np.ndarray:
    """Integer matrix power by binary exponentiation.

    p = 0 returns the identity; negative powers are rejected.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not isinstance(p, (int, np.integer)):
        raise ValueError("power must be an integer")
    if p < 0:
        raise ValueError("negative powers are not supported")
    result = np.eye(m.shape[0])
    base = m.copy()
    k = int(p)
    while k > 0:
        if k & 1:
            result = result @ base
        k >>= 1
        if k:
            base = base @ base
    return result
