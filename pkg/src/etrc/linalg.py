"""Small dense linear algebra.

Matrices are plain 2-D ``numpy.ndarray`` of float64. The routines here are
tuned for the tiny systems this package deals with (n <= ~10): symmetric
eigenvalues come from cyclic Jacobi rotations, definiteness from an explicit
Cholesky factorization, and the spectral norm from the eigenvalues of
``m.T @ m``.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import InvalidMatrix, NotSymmetric, RankDeficient, ConvergenceError


@dataclass(frozen=True)
class Tolerances:
    symmetry: float = 1e-9          # allowed asymmetry before NotSymmetric
    jacobi: float = 1e-12           # off-diagonal Frobenius / ||m||_F at convergence
    jacobi_max_sweeps: int = 100
    rank: float = 1e-12             # min eigenvalue of B^T B for full column rank
    matched: float = 1e-9           # ||(I - B B^+) dA|| below which dA is matched
    psd: float = 1e-9               # slack for PSD checks on bound matrices
    riccati_residual: float = 1e-8  # relative to 1 + ||S||_F^2
    origin: float = 1e-9            # both norms below this: no event at the origin
    diverged: float = 1e6


TOL = Tolerances()


def as_matrix(m, name="matrix"):
    """Return `m` as a finite 2-D float array (1-D input becomes a row)."""
    a = np.array(m, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2 or a.size == 0:
        raise InvalidMatrix(f"{name} must be a nonempty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidMatrix(f"{name} has non-finite entries")
    return a


def symmetrize(m, tol=None):
    """Return (m + m.T)/2, raising NotSymmetric if m is visibly asymmetric.

    The asymmetry test is relative to ``max(1, ||m||_max)``.
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise NotSymmetric(f"matrix is not square: {a.shape}")
    tol = TOL.symmetry if tol is None else tol
    scale = max(1.0, float(np.max(np.abs(a))))
    if float(np.max(np.abs(a - a.T))) > tol * scale:
        raise NotSymmetric("matrix asymmetry exceeds tolerance")
    return 0.5 * (a + a.T)


def jacobi_eigh(m):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns
    -------
    w : ndarray
        Eigenvalues in ascending order.
    v : ndarray
        Orthonormal eigenvectors as columns, ``m @ v[:, i] = w[i] * v[:, i]``.
    """
    a = symmetrize(m).copy()
    n = a.shape[0]
    v = np.eye(n)
    scale = float(np.linalg.norm(a))
    if scale == 0.0:
        return np.zeros(n), v
    for _ in range(TOL.jacobi_max_sweeps):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off < TOL.jacobi * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(diff) > 1e150 * abs(apq):
                    t = apq / diff      # theta huge: t ~ 1 / (2 theta)
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise ConvergenceError("Jacobi sweeps did not converge")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def sym_eigenvalues(m):
    """Ascending eigenvalues of a symmetric matrix."""
    return jacobi_eigh(m)[0]


def min_eigenvalue(m):
    return float(sym_eigenvalues(m)[0])


def spectral_norm(m):
    """Induced 2-norm: square root of the largest eigenvalue of ``m.T @ m``."""
    a = as_matrix(m)
    g = a.T @ a
    return math.sqrt(max(float(sym_eigenvalues(0.5 * (g + g.T))[-1]), 0.0))


def vector_norm(x):
    x = np.asarray(x, dtype=float)
    return math.sqrt(float(np.dot(x, x)))


def cholesky_pivots(m):
    """Diagonal pivots of the Cholesky factorization of a symmetric matrix.

    Stops at the first non-positive pivot and returns the pivots computed so
    far (the last one being that non-positive value).
    """
    a = symmetrize(m)
    n = a.shape[0]
    low = np.zeros_like(a)
    pivots = []
    for j in range(n):
        d = a[j, j] - float(np.dot(low[j, :j], low[j, :j]))
        pivots.append(d)
        if not d > 0.0:
            break
        low[j, j] = math.sqrt(d)
        for i in range(j + 1, n):
            low[i, j] = (a[i, j] - float(np.dot(low[i, :j], low[j, :j]))) / low[j, j]
    return pivots


def is_positive_definite(m, tol=0.0):
    """True iff the Cholesky factorization succeeds with every pivot > tol."""
    try:
        pivots = cholesky_pivots(m)
    except (NotSymmetric, InvalidMatrix):
        return False
    return len(pivots) == np.shape(m)[0] and all(p > tol for p in pivots)


def pseudo_inverse(b):
    """Moore-Penrose inverse ``(B^T B)^{-1} B^T`` of a full-column-rank matrix."""
    b = as_matrix(b, "b")
    gram = b.T @ b
    if min_eigenvalue(0.5 * (gram + gram.T)) <= TOL.rank:
        raise RankDeficient("input matrix does not have full column rank")
    return np.linalg.solve(gram, b.T)


def range_projector(b):
    """Orthogonal projector ``B B^+`` onto the range of B."""
    b = as_matrix(b, "b")
    return b @ pseudo_inverse(b)


def spectral_abscissa(m):
    """Largest real part among the eigenvalues of a general square matrix."""
    return float(np.max(np.linalg.eigvals(as_matrix(m)).real))
