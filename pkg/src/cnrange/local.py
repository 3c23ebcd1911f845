"""Local unitaries ``SU(2) x ... x SU(2)`` and the local C-numerical range.

The local flow keeps one explicit ``2 x 2`` factor per qubit and moves each
by its own exponential, so iterates never leave the local group.  The search
direction is the orthogonal projection of the full ascent generator onto
``su(2) + ... + su(2)`` (embedded Pauli basis ``i sigma_{k,a}``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .flows import (
    FlowConfig,
    FlowResult,
    RealTransfer,
    SquaredModulus,
    multistart,
)
from .linalg import (
    PAULI,
    DimensionError,
    DomainError,
    as_square,
    fro_norm,
    haar_random_unitary,
    polar_reproject,
)

__all__ = [
    "LocalUnitary",
    "PureState",
    "DensityMatrix",
    "qubit_count",
    "embed_pauli",
    "random_su2",
    "random_local",
    "LocalGroup",
    "local_gradient",
    "ascend_local",
    "local_support",
    "entanglement_distance",
    "sample_local_range",
    "state_psi3",
    "state_psi4",
    "W_STATE",
    "W_TILDE",
    "GHZ_PRIME",
    "PSI_PLUS_PAIR",
    "BELL_PHI",
    "partial_trace",
    "partial_trace_matrix",
    "reconstruct_product",
]

_SIGMAS = np.stack([PAULI["x"], PAULI["y"], PAULI["z"]])


def qubit_count(N: int) -> int:
    n = int(round(math.log2(N))) if N > 0 else -1
    if n < 1 or 2 ** n != N:
        raise DomainError(f"dimension {N} is not a power of two (>= 2)")
    return n


def _to_su2(M: np.ndarray) -> np.ndarray:
    M = polar_reproject(M)
    return M / np.sqrt(np.linalg.det(M))


@dataclass(frozen=True)
class LocalUnitary:
    """``K = factors[0] kron factors[1] kron ...`` with every factor in SU(2)."""

    factors: tuple

    def __post_init__(self):
        fs = tuple(np.asarray(f, dtype=complex) for f in self.factors)
        if not fs:
            raise DomainError("need at least one factor")
        for f in fs:
            if f.shape != (2, 2):
                raise DimensionError("local factors must be 2x2")
            if fro_norm(f.conj().T @ f - np.eye(2)) > 1e-10:
                raise DomainError("local factor is not unitary")
            if abs(np.linalg.det(f) - 1) > 1e-10:
                raise DomainError("local factor does not have determinant 1")
        object.__setattr__(self, "factors", fs)

    @property
    def n(self) -> int:
        return len(self.factors)

    def to_full(self) -> np.ndarray:
        K = self.factors[0]
        for f in self.factors[1:]:
            K = np.kron(K, f)
        return K

    @classmethod
    def identity(cls, n: int) -> "LocalUnitary":
        return cls(tuple(np.eye(2, dtype=complex) for _ in range(n)))


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).ravel()
        qubit_count(v.size)
        if abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise DomainError(f"state is not normalized (norm {np.linalg.norm(v):.15f})")
        object.__setattr__(self, "amplitudes", v)

    @property
    def n(self) -> int:
        return qubit_count(self.amplitudes.size)

    def projector(self) -> np.ndarray:
        v = self.amplitudes
        return np.outer(v, v.conj())

    def density(self) -> "DensityMatrix":
        return DensityMatrix(self.projector(), (2,) * self.n)


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray
    dims: tuple

    def __post_init__(self):
        M = as_square(self.matrix)
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims) or int(np.prod(dims)) != M.shape[0]:
            raise DimensionError(f"dims {dims} inconsistent with size {M.shape[0]}")
        if fro_norm(M - M.conj().T) > 1e-10:
            raise DomainError("density matrix is not Hermitian")
        if abs(np.trace(M) - 1) > 1e-10:
            raise DomainError("density matrix does not have unit trace")
        if np.linalg.eigvalsh(0.5 * (M + M.conj().T)).min() < -1e-9:
            raise DomainError("density matrix is not positive semidefinite")
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "dims", dims)


def embed_pauli(n: int, k: int, axis: str) -> np.ndarray:
    """``1 x ... x sigma_axis x ... x 1`` with the Pauli at 1-based site ``k``."""
    if not 1 <= k <= n:
        raise DomainError(f"site {k} out of range 1..{n}")
    if axis not in PAULI:
        raise DomainError(f"axis must be one of x, y, z, got {axis!r}")
    return np.kron(np.kron(np.eye(2 ** (k - 1)), PAULI[axis]), np.eye(2 ** (n - k)))


def _embedded_basis(n: int) -> np.ndarray:
    return np.stack([embed_pauli(n, k, a) for k in range(1, n + 1) for a in "xyz"])


def random_su2(rng) -> np.ndarray:
    return _to_su2(haar_random_unitary(2, rng))


def random_local(n: int, rng) -> LocalUnitary:
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    return LocalUnitary(tuple(random_su2(rng) for _ in range(n)))


def _su2_exp(g: np.ndarray, alpha: float):
    """``V = exp(-alpha i g.sigma)`` and ``V - 1`` in closed form."""
    r = float(np.linalg.norm(g))
    if r == 0.0:
        return np.eye(2, dtype=complex), np.zeros((2, 2), dtype=complex)
    th = alpha * r
    n_sigma = np.tensordot(g / r, _SIGMAS, axes=1)
    W = -2.0 * math.sin(0.5 * th) ** 2 * np.eye(2) - 1j * math.sin(th) * n_sigma
    return np.eye(2) + W, W


class LocalGroup:
    """Flow state is a tuple of SU(2) factors."""

    def __init__(self, n: int):
        self.n = n
        self.N = 2 ** n
        self.basis = _embedded_basis(n)
        self._key = None
        self._full = None

    def initial_state(self, K0):
        if isinstance(K0, LocalUnitary):
            fs = K0.factors
        elif isinstance(K0, np.ndarray) and K0.shape == (self.N, self.N):
            if not np.allclose(K0, np.eye(self.N)):
                raise DomainError("local flow needs a LocalUnitary start (or the identity)")
            fs = LocalUnitary.identity(self.n).factors
        else:
            fs = tuple(K0)
        if len(fs) != self.n:
            raise DimensionError(f"expected {self.n} factors, got {len(fs)}")
        return tuple(np.asarray(f, dtype=complex) for f in fs)

    def matrix(self, state):
        if self._key is not state:
            K = state[0]
            for f in state[1:]:
                K = np.kron(K, f)
            self._full, self._key = K, state
        return self._full

    def coefficients(self, G: np.ndarray) -> np.ndarray:
        # Re <i sigma_{k,a}, G> / ||sigma||^2 = Re(-i tr(sigma G)) / N
        t = np.einsum("kij,ji->k", self.basis, G)
        return ((-1j * t).real / self.N).reshape(self.n, 3)

    def direction(self, state, G):
        g = self.coefficients(G)
        X = 1j * np.tensordot(g.ravel(), self.basis, axes=1)
        return g, X

    def retract(self, state, g, alpha):
        new, Wfull = [], None
        for f, gk in zip(state, g):
            V, W = _su2_exp(gk, alpha)
            new.append(V @ f)
            # (1 + W') kron (1 + W) - 1 = W' kron (1 + W) + 1 kron W
            if Wfull is None:
                Wfull = W
            else:
                d = Wfull.shape[0]
                Wfull = np.kron(Wfull, V) + np.kron(np.eye(d), W)
        return tuple(new), Wfull

    def repair(self, state):
        return tuple(_to_su2(f) for f in state)

    def export(self, state):
        return LocalUnitary(tuple(_to_su2(f) for f in state))


def local_gradient(K, A, C, objective: str = "F1") -> np.ndarray:
    """Per-site ``(n, 3)`` coefficients of the projected ascent generator."""
    from .flows import gradient_F1, gradient_F2

    A = as_square(A)
    C = as_square(C, A.shape[0])
    n = qubit_count(A.shape[0])
    K = K if isinstance(K, LocalUnitary) else LocalUnitary(tuple(K))
    if K.n != n:
        raise DimensionError(f"local unitary has {K.n} factors, matrices need {n}")
    U = K.to_full()
    G = gradient_F1(U, A, C) if objective == "F1" else gradient_F2(U, A, C)
    return LocalGroup(n).coefficients(G)


def _local_starts(n: int, config: FlowConfig, identity: bool = True) -> list:
    children = np.random.SeedSequence(config.seed).spawn(config.restarts)
    starts = [LocalUnitary.identity(n)] if identity else []
    starts += [random_local(n, np.random.default_rng(c)) for c in children]
    return starts


def _make_objective(A, C, objective, phase=1.0):
    if objective == "F1":
        return lambda: RealTransfer(A, C, phase)
    if objective == "F2":
        return lambda: SquaredModulus(A, C)
    raise ValueError(f"objective must be 'F1' or 'F2', got {objective!r}")


def ascend_local(A, C, objective: str = "F1", config: FlowConfig | None = None,
                 starts: Sequence | None = None, phase: complex = 1.0) -> FlowResult:
    """Multi-start ascent restricted to ``SU_loc(2^n)``.

    ``phase`` rotates the F1 target to ``Re(phase * f)``; the result's
    ``optimum`` is a :class:`LocalUnitary`.
    """
    config = config or FlowConfig()
    A = as_square(A)
    C = as_square(C, A.shape[0])
    n = qubit_count(A.shape[0])
    starts = list(starts) if starts is not None else _local_starts(n, config)
    return multistart(starts, _make_objective(A, C, objective, phase), config,
                      manifold_factory=lambda: LocalGroup(n))


def local_support(A, C, angles, config: FlowConfig | None = None) -> np.ndarray:
    """``h(theta) = max_K Re(exp(-i theta) f(K))`` over ``SU_loc`` for each angle."""
    config = config or FlowConfig()
    return np.array([
        ascend_local(A, C, "F1", config, phase=np.exp(-1j * th)).objective for th in angles
    ])


def entanglement_distance(psi, config: FlowConfig | None = None):
    """``(Delta, Delta^2, K)`` for the distance of ``|psi><psi|`` to product states."""
    psi = psi if isinstance(psi, PureState) else PureState(psi)
    A = psi.projector()
    N = A.shape[0]
    C = np.zeros((N, N), dtype=complex)
    C[0, 0] = 1.0
    res = ascend_local(A, C, "F1", config)
    d2 = max(2.0 - 2.0 * res.objective, 0.0)
    return math.sqrt(d2), d2, res.optimum


def _batched_local(n: int, count: int, rng) -> np.ndarray:
    K = None
    for _ in range(n):
        Z = (rng.standard_normal((count, 2, 2)) + 1j * rng.standard_normal((count, 2, 2))) / math.sqrt(2)
        Q, R = np.linalg.qr(Z)
        d = np.diagonal(R, axis1=1, axis2=2)
        Q = Q * (d / np.abs(d))[:, None, :]
        Q = Q / np.sqrt(np.linalg.det(Q))[:, None, None]
        if K is None:
            K = Q
        else:
            s, a = K.shape[0], K.shape[1]
            K = np.einsum("sij,skl->sikjl", K, Q).reshape(s, 2 * a, 2 * a)
    return K


def sample_local_range(C, A, n_samples: int, seed=0, batch: int = 4096) -> np.ndarray:
    """``tr(C^dagger K A K^dagger)`` at ``n_samples`` per-site Haar local unitaries."""
    A = as_square(A)
    C = as_square(C, A.shape[0])
    n = qubit_count(A.shape[0])
    rng = np.random.default_rng(seed)
    out = []
    left = n_samples
    while left > 0:
        b = min(batch, left)
        K = _batched_local(n, b, rng)
        KA = K @ A
        B = KA @ np.conj(np.swapaxes(K, 1, 2))
        out.append(np.einsum("ij,sij->s", C.conj(), B))
        left -= b
    return np.concatenate(out) if out else np.zeros(0, dtype=complex)


# --------------------------------------------------------------------------
# worked states

W_STATE = np.array([0, 1, 1, 0, 1, 0, 0, 0], dtype=complex) / math.sqrt(3)
W_TILDE = np.array([0, 0, 0, 1, 0, 1, 1, 0], dtype=complex) / math.sqrt(3)
GHZ_PRIME = np.zeros(16, dtype=complex)
GHZ_PRIME[[3, 12]] = 1 / math.sqrt(2)
PSI_PLUS_PAIR = np.zeros(16, dtype=complex)
PSI_PLUS_PAIR[[5, 6, 9, 10]] = 0.5
BELL_PHI = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)


def _check_s(s: float):
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"s must lie in [0, 1], got {s}")


def state_psi3(s: float) -> PureState:
    """``sqrt(s)|W> + sqrt(1-s)|W~>``."""
    _check_s(s)
    return PureState(math.sqrt(s) * W_STATE + math.sqrt(1 - s) * W_TILDE)


def state_psi4(s: float) -> PureState:
    """``sqrt(s)|GHZ'> - sqrt(1-s)|psi+>|psi+>``."""
    _check_s(s)
    return PureState(math.sqrt(s) * GHZ_PRIME - math.sqrt(1 - s) * PSI_PLUS_PAIR)


# --------------------------------------------------------------------------
# partial traces


def partial_trace_matrix(M, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep`` (0-based indices)."""
    M = as_square(M)
    dims = tuple(int(d) for d in dims)
    if int(np.prod(dims)) != M.shape[0]:
        raise DimensionError(f"dims {dims} inconsistent with size {M.shape[0]}")
    keep = sorted(set(int(k) for k in keep))
    if not keep or keep[0] < 0 or keep[-1] >= len(dims):
        raise DomainError(f"bad subsystem selection {keep} for {len(dims)} subsystems")
    n = len(dims)
    T = M.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = [letters[n + i] if i in keep else row[i] for i in range(n)]
    out = [row[i] for i in keep] + [col[i] for i in keep]
    R = np.einsum("".join(row) + "".join(col) + "->" + "".join(out), T)
    d = int(np.prod([dims[i] for i in keep]))
    return R.reshape(d, d)


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    keep = sorted(set(int(k) for k in keep))
    M = partial_trace_matrix(rho.matrix, rho.dims, keep)
    return DensityMatrix(M, tuple(rho.dims[i] for i in keep))


def reconstruct_product(rho: DensityMatrix) -> DensityMatrix:
    """``tr_b(rho) kron tr_a(rho)`` for a bipartite state."""
    if len(rho.dims) != 2:
        raise DimensionError("reconstruction needs exactly two subsystems")
    ra = partial_trace(rho, [0]).matrix
    rb = partial_trace(rho, [1]).matrix
    return DensityMatrix(np.kron(ra, rb), rho.dims)
