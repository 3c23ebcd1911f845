"""Dense complex linear-algebra primitives shared by every flow.

Matrices are plain ``numpy`` complex arrays.  The helpers here validate
shapes and finiteness, build skew-Hermitian exponentials through a
Hermitian eigendecomposition (so the result is unitary to rounding), and
provide the C-spectrum, vectorization and Haar sampling.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

__all__ = [
    "DimensionError",
    "DomainError",
    "SizeError",
    "as_matrix",
    "as_square",
    "check_unitary",
    "unitarity_defect",
    "hs_inner",
    "fro_norm",
    "dagger",
    "commutator",
    "split_skew_herm",
    "skew_part",
    "herm_part",
    "is_skew",
    "expm_skew",
    "expm_skew_delta",
    "polar_reproject",
    "haar_random_unitary",
    "c_spectrum",
    "sort_complex",
    "vectorize",
    "devectorize",
    "PAULI",
    "J_PLUS",
    "J_MINUS",
    "J_Z",
    "J_0",
]

SKEW_TOL = 1e-10
UNITARY_TOL = 1e-10


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class DomainError(ValueError):
    """Input lies outside the mathematical domain of an operation."""


class SizeError(ValueError):
    """Problem size exceeds a hard guard."""


PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
J_0 = np.eye(2, dtype=complex)
J_Z = 0.5 * PAULI["z"]
J_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
J_MINUS = J_PLUS.T.copy()


def as_matrix(M) -> np.ndarray:
    """Return ``M`` as a finite 2-D complex array or raise."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or min(M.shape) < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DomainError("matrix contains NaN or Inf entries")
    return M


def as_square(M, n: int | None = None) -> np.ndarray:
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    if n is not None and M.shape[0] != n:
        raise DimensionError(f"expected dimension {n}, got {M.shape[0]}")
    return M


def _same_shape(A, B):
    A, B = as_matrix(A), as_matrix(B)
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch {A.shape} vs {B.shape}")
    return A, B


def dagger(M: np.ndarray) -> np.ndarray:
    return M.conj().T


def hs_inner(A, B) -> complex:
    """Hilbert-Schmidt inner product ``tr(A^dagger B)``."""
    A, B = _same_shape(A, B)
    return complex(np.vdot(A, B))


def fro_norm(M) -> float:
    return float(np.linalg.norm(M))


def commutator(A, B) -> np.ndarray:
    A, B = _same_shape(A, B)
    if A.shape[0] != A.shape[1]:
        raise DimensionError("commutator needs square matrices")
    return A @ B - B @ A


def skew_part(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M - M.conj().T)


def herm_part(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.conj().T)


def split_skew_herm(M) -> tuple[np.ndarray, np.ndarray]:
    """Split ``M`` into ``(skew, herm)`` with ``skew + herm == M``."""
    M = as_square(M)
    return skew_part(M), herm_part(M)


def is_skew(G: np.ndarray, tol: float = SKEW_TOL) -> bool:
    scale = max(1.0, fro_norm(G))
    return fro_norm(G + G.conj().T) <= tol * scale


def unitarity_defect(U: np.ndarray) -> float:
    return fro_norm(U.conj().T @ U - np.eye(U.shape[0]))


def check_unitary(U, tol: float = UNITARY_TOL) -> np.ndarray:
    """Validate ``U`` against ``||U^dagger U - 1||_F <= tol * N``."""
    U = as_square(U)
    defect = unitarity_defect(U)
    if defect > tol * U.shape[0]:
        raise DomainError(f"matrix is not unitary (defect {defect:.3e})")
    return U


def _skew_eig(G: np.ndarray):
    G = as_square(G)
    if not is_skew(G):
        raise DomainError("generator is not skew-Hermitian")
    # iG is Hermitian: G = Q diag(-i w) Q^dagger
    w, Q = np.linalg.eigh(0.5 * (1j * G + (1j * G).conj().T))
    return w, Q


def expm_skew(G, t: float = 1.0) -> np.ndarray:
    """Return ``exp(-t G)`` for skew-Hermitian ``G``."""
    w, Q = _skew_eig(G)
    return (Q * np.exp(1j * t * w)) @ Q.conj().T


def expm_skew_delta(G, t: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(V, V - 1)`` for ``V = exp(-t G)``.

    ``V - 1`` is assembled from ``expm1`` of the eigenphases so it keeps full
    relative accuracy when ``t G`` is tiny; objective increments are computed
    from it instead of subtracting two nearly equal objective values.
    """
    w, Q = _skew_eig(G)
    theta = t * w
    d = -2.0 * np.sin(0.5 * theta) ** 2 + 1j * np.sin(theta)
    Qh = Q.conj().T
    W = (Q * d) @ Qh
    V = (Q * np.exp(1j * theta)) @ Qh
    return V, W


def polar_reproject(U: np.ndarray) -> np.ndarray:
    """Nearest unitary ``U (U^dagger U)^{-1/2}``."""
    X, _, Yh = np.linalg.svd(U)
    return X @ Yh


def haar_random_unitary(N: int, seed=None) -> np.ndarray:
    """Haar-distributed ``N x N`` unitary from QR of a complex Ginibre matrix.

    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``.
    """
    if N < 1:
        raise DomainError("dimension must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    Z = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / math.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def sort_complex(z) -> np.ndarray:
    """Sort by real part, then imaginary part."""
    z = np.asarray(z, dtype=complex).ravel()
    return z[np.lexsort((z.imag, z.real))]


def _eigvals_diagonalizable(M: np.ndarray, name: str) -> np.ndarray:
    w, V = np.linalg.eig(M)
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond >= 1e8:
        raise DomainError(f"{name} is not (numerically) diagonalizable, cond={cond:.2e}")
    return w


def c_spectrum(C, A) -> np.ndarray:
    """All ``sum_i conj(gamma_i) alpha_pi(i)`` over permutations ``pi``.

    ``gamma`` and ``alpha`` are the eigenvalues of ``C`` and ``A``.  Returns
    ``N!`` points in permutation order (``itertools.permutations``).
    """
    C, A = _same_shape(C, A)
    N = A.shape[0]
    if A.shape[1] != N:
        raise DimensionError("c_spectrum needs square matrices")
    if N > 8:
        raise SizeError(f"c_spectrum enumerates N! points; N={N} exceeds the guard 8")
    gamma = np.conj(_eigvals_diagonalizable(C, "C"))
    alpha = _eigvals_diagonalizable(A, "A")
    perms = np.array(list(itertools.permutations(range(N))))
    return (alpha[perms] * gamma).sum(axis=1)


def vectorize(M) -> np.ndarray:
    """Column-stacking ``vec`` so that ``vec(XYZ) = (Z^t kron X) vec(Y)``."""
    M = as_square(M)
    return M.reshape(-1, order="F").copy()


def devectorize(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    N = math.isqrt(v.size)
    if N * N != v.size or N == 0:
        raise DomainError(f"length {v.size} is not a perfect square")
    return v.reshape((N, N), order="F").copy()
