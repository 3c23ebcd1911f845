"""Local sign reversal ``K H K^dagger = -H`` of multi-qubit Hamiltonians.

Three tools, from cheap to expensive:

* normal forms built from ladder strings ``J_nu1 x ... x J_nun`` whose
  z-rotation phases are linear in the angles, so a sign flip by ``K_z`` is a
  linear system modulo ``2 pi`` (solved exactly over the integers);
* the odd-trace obstruction: a reversible ``H`` has a spectrum symmetric
  about zero, hence ``tr H^(2k+1) = 0``;
* a multi-start local flow for ``min Re tr(H K H K^dagger)``, which reaches
  ``-||H||^2`` exactly when some local ``K`` reverses ``H``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import sympy
from sympy.matrices.normalforms import smith_normal_decomp

from .flows import FlowConfig
from .linalg import J_0, J_MINUS, J_PLUS, J_Z, DomainError, as_square, fro_norm
from .local import LocalUnitary, ascend_local, qubit_count

__all__ = [
    "LadderString",
    "HamiltonianNormalForm",
    "AngleSolution",
    "OddTraceWitness",
    "ReversalSearch",
    "kz",
    "solve_reversal_angles",
    "reversibility_obstruction",
    "search_reversal",
    "wloc_interval",
    "root_space_pairs",
    "root_space_orders",
    "solve_root_space",
]

_LADDER = {"0": J_0, "z": J_Z, "+": J_PLUS, "-": J_MINUS}
_ORDER = {"0": 0, "z": 0, "+": 1, "-": -1}
_ALIASES = {"−": "-", "Z": "z", "p": "+", "m": "-", "1": "0"}


def _normalize_symbols(nus) -> str:
    s = "".join(_ALIASES.get(ch, ch) for ch in nus)
    bad = set(s) - set(_LADDER)
    if bad or not s:
        raise DomainError(f"ladder symbols must come from '0z+-', got {nus!r}")
    return s


@dataclass(frozen=True)
class LadderString:
    """``coefficient * J_nu1 x J_nu2 x ...`` with ``nu`` in ``{0, z, +, -}``."""

    nus: str
    coefficient: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "nus", _normalize_symbols(self.nus))
        object.__setattr__(self, "coefficient", complex(self.coefficient))

    @property
    def n(self) -> int:
        return len(self.nus)

    def orders(self) -> tuple:
        return tuple(_ORDER[c] for c in self.nus)

    def matrix(self) -> np.ndarray:
        M = np.array([[1.0 + 0j]])
        for c in self.nus:
            M = np.kron(M, _LADDER[c])
        return self.coefficient * M

    def to_json(self) -> dict:
        return {"coeff": [self.coefficient.real, self.coefficient.imag], "string": self.nus}

    @classmethod
    def from_json(cls, d: dict) -> "LadderString":
        try:
            re, im = d["coeff"]
            return cls(str(d["string"]), complex(float(re), float(im)))
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"bad ladder term {d!r}: {exc}") from None


@dataclass(frozen=True)
class HamiltonianNormalForm:
    """``sum_lambda (X_lambda + X_lambda^dagger)`` over ladder strings ``X``."""

    terms: tuple

    def __post_init__(self):
        terms = tuple(t if isinstance(t, LadderString) else LadderString(*t) for t in self.terms)
        if not terms:
            raise DomainError("normal form needs at least one term")
        if len({t.n for t in terms}) != 1:
            raise DomainError("all ladder strings must act on the same number of qubits")
        object.__setattr__(self, "terms", terms)

    @property
    def n(self) -> int:
        return self.terms[0].n

    @property
    def order_matrix(self) -> np.ndarray:
        return np.array([t.orders() for t in self.terms], dtype=int)

    def matrix(self) -> np.ndarray:
        H = sum(t.matrix() for t in self.terms)
        return H + H.conj().T

    def to_json(self) -> list:
        return [t.to_json() for t in self.terms]

    @classmethod
    def from_json(cls, data) -> "HamiltonianNormalForm":
        if not isinstance(data, list):
            raise DomainError("normal form must be a JSON list of terms")
        return cls(tuple(LadderString.from_json(d) for d in data))


def kz(angles: Sequence[float]) -> LocalUnitary:
    """``exp(-i phi_1 J_z) x exp(-i phi_2 J_z) x ...``."""
    return LocalUnitary(tuple(np.diag([np.exp(-0.5j * p), np.exp(0.5j * p)]) for p in angles))


# --------------------------------------------------------------------------
# the angle system  P phi = pi (mod 2 pi)


@dataclass
class AngleSolution:
    feasible: bool
    angles: np.ndarray | None = None
    certificate: np.ndarray | None = None
    zero_row: int | None = None
    reason: str = ""

    def residual(self, P) -> float:
        """Largest ``|P phi - pi|`` reduced into ``(-pi, pi]``."""
        if self.angles is None:
            return math.inf
        r = np.asarray(P, dtype=float) @ self.angles - math.pi
        return float(np.max(np.abs(np.angle(np.exp(1j * r))), initial=0.0))


def solve_reversal_angles(order_matrix) -> AngleSolution:
    """Solve ``P phi = pi (mod 2 pi)`` for real angles ``phi``.

    With ``phi = pi psi`` the system is ``P psi = 1 + 2k`` for some integer
    ``k``.  The Smith decomposition ``D = S P T`` (``S``, ``T`` unimodular)
    turns it into ``D chi = S 1 + 2 j`` with ``chi = T^-1 psi`` and ``j``
    free: rows with a nonzero pivot are always solvable, rows with a zero
    pivot need ``(S 1)_i`` even.  Such a row ``y = S_i`` with odd sum is
    returned as the certificate: ``y^t P = 0`` while
    ``y^t (pi, ..., pi) = pi (mod 2 pi)``.
    """
    P = np.asarray(order_matrix)
    if P.ndim != 2 or P.shape[0] == 0:
        raise DomainError("order matrix must be a non-empty 2-D array")
    if not np.all(np.isin(P, (-1, 0, 1))):
        raise DomainError("order matrix entries must lie in {-1, 0, 1}")
    P = P.astype(int)
    m, n = P.shape
    zero = np.where(~P.any(axis=1))[0]
    if zero.size:
        i = int(zero[0])
        return AngleSolution(False, zero_row=i, certificate=np.eye(m, dtype=int)[i],
                             reason=f"row {i} has no +/- factor: its phase is 0, never pi")
    D, S, T = smith_normal_decomp(sympy.Matrix(P.tolist()), domain=sympy.ZZ)
    b = S * sympy.ones(m, 1)
    chi = np.zeros(n)
    for i in range(m):
        d = int(D[i, i]) if i < n else 0
        if d:
            chi[i] = int(b[i]) / d
        elif int(b[i]) % 2:
            y = np.array(S.row(i).tolist()[0], dtype=int)
            return AngleSolution(False, certificate=y,
                                 reason="left-kernel row with odd sum: y.P = 0 but y.(pi,...,pi) = pi")
    psi = np.array(T.tolist(), dtype=float) @ chi
    phi = np.mod(math.pi * psi + math.pi, 2 * math.pi) - math.pi
    sol = AngleSolution(True, angles=phi)
    if sol.residual(P) > 1e-8:  # pragma: no cover - exact arithmetic above
        raise ArithmeticError("angle solution failed verification")
    return sol


# --------------------------------------------------------------------------
# analytic obstruction and flow search


@dataclass(frozen=True)
class OddTraceWitness:
    power: int
    trace: float


def _hermitian(H) -> np.ndarray:
    H = as_square(H)
    if fro_norm(H - H.conj().T) > 1e-10 * max(1.0, fro_norm(H)):
        raise DomainError("H is not Hermitian")
    return 0.5 * (H + H.conj().T)


def reversibility_obstruction(H) -> OddTraceWitness | None:
    """Smallest odd ``p <= 2N-1`` with ``|tr H^p| > 1e-8 ||H||^p``, if any."""
    H = _hermitian(H)
    w = np.linalg.eigvalsh(H)
    scale = fro_norm(H)
    if scale == 0:
        return None
    for p in range(1, 2 * H.shape[0], 2):
        t = float(np.sum(w ** p))
        if abs(t) > 1e-8 * scale ** p:
            return OddTraceWitness(p, t)
    return None


@dataclass
class ReversalSearch:
    reversible: bool
    K: LocalUnitary | None
    floor: float
    residual: float
    scale: float
    obstruction: OddTraceWitness | None = None

    def __iter__(self):
        return iter((self.reversible, self.K, self.floor))


REVERSAL_TOL = 1e-6


def search_reversal(H, config: FlowConfig | None = None, restarts: int = 50) -> ReversalSearch:
    """Flow search for ``K`` in ``SU_loc`` with ``K H K^dagger = -H``.

    ``H`` is normalised to ``||H||_F = 1`` first (``scale`` records the
    factor).  ``floor`` is the smallest ``tr(H K H K^dagger)`` found;
    ``reversible`` iff ``floor <= -1 + 1e-6``.
    """
    H = _hermitian(H)
    qubit_count(H.shape[0])
    scale = fro_norm(H)
    if scale == 0:
        raise DomainError("H must be nonzero")
    Hn = H / scale
    config = (config or FlowConfig()).replace(restarts=max(restarts, 1))
    res = ascend_local(Hn, -Hn, "F1", config)
    floor = -res.objective
    K = res.optimum
    Kf = K.to_full()
    residual = fro_norm(Kf @ Hn @ Kf.conj().T + Hn)
    reversible = floor <= -1.0 + REVERSAL_TOL
    return ReversalSearch(reversible, K if reversible else None, floor, residual, scale,
                          reversibility_obstruction(H))


def wloc_interval(H, config: FlowConfig | None = None, restarts: int = 50) -> tuple[float, float]:
    """``(min, max)`` of ``W_loc(H, H)`` for normalised ``H``; ``max`` is 1 at ``K = 1``."""
    res = search_reversal(H, config, restarts)
    return res.floor, 1.0


# --------------------------------------------------------------------------
# root-space form in the computational basis


def root_space_pairs(H, tol: float = 1e-12) -> list:
    """``[(i, j, H_ij)]`` for ``i < j`` with ``H_ij != 0``; the diagonal must vanish.

    Each pair is the Hermitian term ``H_ij E_ij + conj(H_ij) E_ji``; there
    are at most ``N (N - 1) / 2`` of them.
    """
    H = _hermitian(H)
    scale = max(1.0, fro_norm(H))
    if np.max(np.abs(np.diag(H))) > tol * scale:
        raise DomainError("H has a nonzero diagonal; z-rotations leave it invariant")
    N = H.shape[0]
    return [(i, j, complex(H[i, j])) for i in range(N) for j in range(i + 1, N)
            if abs(H[i, j]) > tol * scale]


def _spins(index: int, n: int) -> np.ndarray:
    bits = [(index >> (n - 1 - l)) & 1 for l in range(n)]
    return 1 - 2 * np.array(bits)


def root_space_orders(H, tol: float = 1e-12) -> np.ndarray:
    """Quantum-order rows ``(s(i) - s(j)) / 2`` of the pairs of :func:`root_space_pairs`."""
    H = as_square(H)
    n = qubit_count(H.shape[0])
    pairs = root_space_pairs(H, tol)
    if not pairs:
        return np.zeros((0, n), dtype=int)
    return np.array([(_spins(i, n) - _spins(j, n)) // 2 for i, j, _ in pairs], dtype=int)


def solve_root_space(H, tol: float = 1e-12) -> AngleSolution:
    """Angles with ``K_z H K_z^dagger = -H`` via the computational-basis root spaces."""
    H = _hermitian(H)
    if np.max(np.abs(np.diag(H))) > tol * max(1.0, fro_norm(H)):
        return AngleSolution(False, reason="nonzero diagonal is invariant under z-rotations")
    P = root_space_orders(H, tol)
    if P.shape[0] == 0:
        raise DomainError("H is zero")
    return solve_reversal_angles(P)
