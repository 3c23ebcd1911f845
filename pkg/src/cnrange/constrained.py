"""Constrained transfer maximisation.

Two kinds of constraint are supported:

* invariance ``U E U^dagger = E``: the feasible set is the stabiliser group
  ``K_E`` whose Lie algebra is the kernel of ``ad_E`` inside ``su(N)``.  Either
  flow inside ``K_E`` (project the gradient on that algebra) or penalise
  ``||U E U^dagger - E||^2`` with multipliers on the full group;
* orthogonality: keep ``|tr(D^dagger U A U^dagger)|`` at its minimum ``m0``
  over ``U(N)`` while maximising ``|f_C|^2``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .flows import (
    FlowConfig,
    LambdaSchedule,
    Negated,
    SquaredModulus,
    Invariance,
    TransferTarget,
    ascend,
    ascend_from,
    lagrange_ascent,
    multistart,
    start_points,
    _map,
)
from .linalg import (
    DomainError,
    as_square,
    expm_skew,
    fro_norm,
    haar_random_unitary,
    hs_inner,
    polar_reproject,
)

__all__ = [
    "StabilizerBasis",
    "ConstrainedResult",
    "InvarianceConstraint",
    "OrthogonalityConstraint",
    "SamplingInfeasible",
    "su_basis",
    "stabilizer_algebra",
    "StabilizerGroup",
    "ascend_projected",
    "ascend_invariance_lagrange",
    "min_modulus",
    "ascend_orthogonality",
    "sample_constrained_range",
    "cloud_components",
]

FEASIBLE_TOL = 1e-4


class SamplingInfeasible(RuntimeError):
    """Rejection sampling accepted too few candidates."""


# --------------------------------------------------------------------------
# stabiliser algebra


def su_basis(N: int, traceless: bool = True) -> np.ndarray:
    """Orthonormal (under ``Re hs_inner``) skew-Hermitian basis of ``su(N)`` or ``u(N)``."""
    out = []
    for j in range(N):
        for k in range(j + 1, N):
            S = np.zeros((N, N), dtype=complex)
            S[j, k] = S[k, j] = 1j / math.sqrt(2)
            out.append(S)
            T = np.zeros((N, N), dtype=complex)
            T[j, k], T[k, j] = 1 / math.sqrt(2), -1 / math.sqrt(2)
            out.append(T)
    for l in range(1, N):
        d = np.zeros(N)
        d[:l] = 1.0
        d[l] = -l
        out.append(1j * np.diag(d / np.linalg.norm(d)))
    if not traceless:
        out.append(1j * np.eye(N) / math.sqrt(N))
    return np.array(out).reshape(-1, N, N)


def _gram_schmidt(mats, tol=1e-10):
    basis = []
    for M in mats:
        v = M.copy()
        for _ in range(2):  # second pass re-orthogonalises
            for b in basis:
                v = v - hs_inner(b, v).real * b
        n = fro_norm(v)
        if n > tol:
            basis.append(v / n)
    return basis


@dataclass
class StabilizerBasis:
    generators: list
    dimension: int = field(init=False)

    def __post_init__(self):
        self.generators = [np.asarray(g, dtype=complex) for g in self.generators]
        self.dimension = len(self.generators)

    @property
    def stack(self) -> np.ndarray:
        if not self.generators:
            return np.zeros((0, 0, 0), dtype=complex)
        return np.array(self.generators)

    def coefficients(self, G) -> np.ndarray:
        """``Re <k_j, G>`` for every generator."""
        return np.einsum("kij,ij->k", self.stack.conj(), G).real

    def project(self, G) -> np.ndarray:
        if not self.generators:
            return np.zeros_like(G)
        return np.tensordot(self.coefficients(G), self.stack, axes=1)

    def closure_residual(self) -> float:
        """Largest ``||[k_i, k_j] - proj([k_i, k_j])||_F`` over pairs."""
        worst = 0.0
        gs = self.generators
        for i in range(len(gs)):
            for j in range(i + 1, len(gs)):
                X = gs[i] @ gs[j] - gs[j] @ gs[i]
                worst = max(worst, fro_norm(X - self.project(X)))
        return worst

    def random_element(self, rng, scale: float = math.pi) -> np.ndarray:
        """``exp(sum_j c_j k_j)`` with Gaussian coefficients of width ``scale``."""
        c = rng.normal(0.0, scale, self.dimension)
        X = np.tensordot(c, self.stack, axes=1)
        return expm_skew(X, -1.0)


def stabilizer_algebra(E, traceless: bool = True, tol: float = 1e-10) -> StabilizerBasis:
    """Basis of ``{k in su(N) : [k, E] = 0}``.

    The vectorised map ``(1 x E - E^t x 1) vec(k)`` is evaluated on an
    orthonormal basis of ``su(N)`` (``u(N)`` with ``traceless=False``); its
    real null space gives the kernel, which is then Gram-Schmidt
    orthonormalised.
    """
    E = as_square(E)
    N = E.shape[0]
    base = su_basis(N, traceless)
    if base.shape[0] == 0:
        return StabilizerBasis([])
    images = np.einsum("ij,kjl->kil", E, base) - np.einsum("kij,jl->kil", base, E)
    M = images.reshape(base.shape[0], -1).T
    R = np.vstack([M.real, M.imag])
    _, s, Vh = np.linalg.svd(R)
    scale = max(1.0, fro_norm(E))
    rank = int(np.sum(s > tol * scale))
    null = Vh[rank:]
    gens = [np.tensordot(v, base, axes=1) for v in null]
    return StabilizerBasis(_gram_schmidt(gens))


class StabilizerGroup:
    """Flow manifold ``K_E``: the ascent direction is projected on the stabiliser algebra."""

    def __init__(self, basis: StabilizerBasis):
        self.basis = basis

    def initial_state(self, U0):
        return U0

    def matrix(self, state):
        return state

    def direction(self, state, G):
        X = self.basis.project(G)
        return X, X

    def retract(self, state, X, alpha):
        from .linalg import expm_skew_delta

        V, W = expm_skew_delta(X, alpha)
        return V @ state, W

    def repair(self, state):
        return polar_reproject(state)

    def export(self, state):
        return state


# --------------------------------------------------------------------------
# results


@dataclass
class ConstrainedResult:
    optimum: np.ndarray
    f_C: complex
    constraint_residual: float
    lambda_final: float
    converged: bool
    restarts_agreeing: int = 1
    diagnostic: str = ""
    m0: float | None = None
    f_D: complex | None = None
    iterations: int = 0
    paths: list | None = None
    endpoints: list = field(default_factory=list, repr=False)

    @property
    def abs_f_C(self) -> float:
        return abs(self.f_C)

    def to_record(self) -> dict:
        rec = {
            "f_C": [self.f_C.real, self.f_C.imag],
            "abs_f_C": self.abs_f_C,
            "constraint_residual": self.constraint_residual,
            "lambda_final": self.lambda_final,
            "converged": bool(self.converged),
            "restarts_agreeing": int(self.restarts_agreeing),
        }
        if self.m0 is not None:
            rec["m0"] = self.m0
        if self.f_D is not None:
            rec["f_D"] = [self.f_D.real, self.f_D.imag]
        if self.diagnostic:
            rec["diagnostic"] = self.diagnostic
        return rec


@dataclass(frozen=True)
class InvarianceConstraint:
    E: np.ndarray


@dataclass(frozen=True)
class OrthogonalityConstraint:
    D: np.ndarray
    m0: float | None = None


def _transfer(U, A, C) -> complex:
    return complex(np.vdot(C, U @ A @ U.conj().T))


def _invariance_residual(U, E) -> float:
    return fro_norm(U @ E @ U.conj().T - E)


def _default_config(config):
    return config or FlowConfig(step_rule="bb")


def _agreeing(values, best, tol) -> int:
    return int(sum(abs(v - best) <= tol for v in values))


def _is_scalar(E) -> bool:
    N = E.shape[0]
    return fro_norm(E - np.trace(E) / N * np.eye(N)) <= 1e-12 * max(1.0, fro_norm(E))


# --------------------------------------------------------------------------
# invariance


def ascend_projected(A, C, basis: StabilizerBasis, config: FlowConfig | None = None,
                     E=None, objective: str = "F2", callback=None) -> ConstrainedResult:
    """Maximise ``|f_C|^2`` (or ``Re f_C``) over the stabiliser group of ``basis``.

    Starts are the identity and ``exp`` of random algebra elements, so every
    iterate stays in the group up to exponential rounding.
    """
    config = _default_config(config)
    A = as_square(A)
    C = as_square(C, A.shape[0])
    if basis.dimension == 0:
        raise DomainError("stabiliser algebra is trivial: only phases satisfy the constraint")
    if basis.generators[0].shape != A.shape:
        raise DomainError("basis dimension does not match A")
    children = np.random.SeedSequence(config.seed).spawn(config.restarts)
    starts = [np.eye(A.shape[0], dtype=complex)]
    starts += [basis.random_element(np.random.default_rng(c)) for c in children]
    make = (lambda: SquaredModulus(A, C)) if objective == "F2" else None
    if make is None:
        from .flows import RealTransfer

        make = lambda: RealTransfer(A, C)

    def run(i, U0):
        return ascend_from(U0, make(), config, StabilizerGroup(basis), start_index=i,
                           callback=callback)

    results = _map(run, starts, config.threads)
    best = max(results, key=lambda r: (r.objective, -r.start_index))
    U = best.optimum
    f = _transfer(U, A, C)
    resid = _invariance_residual(U, as_square(E)) if E is not None else 0.0
    agree = _agreeing([r.objective for r in results], best.objective, 1e-6)
    return ConstrainedResult(U, f, resid, 0.0, best.converged, agree,
                             iterations=sum(r.iterations for r in results))


def ascend_invariance_lagrange(A, C, E, config: FlowConfig | None = None,
                               schedule: LambdaSchedule | None = None,
                               constraint_tol: float = 1e-9, record_paths: bool = False
                               ) -> ConstrainedResult:
    """Maximise ``|f_C|^2`` subject to ``U E U^dagger = E`` on the full group.

    Multiplier rounds on ``L = |f_C|^2 - Re<M, R> - lam ||R||^2`` with
    ``R = U E U^dagger - E``.  A scalar ``E`` makes the constraint vacuous; a
    warning is issued and the unconstrained flow is returned.
    """
    config = _default_config(config)
    schedule = schedule or LambdaSchedule()
    A = as_square(A)
    C = as_square(C, A.shape[0])
    E = as_square(E, A.shape[0])
    if _is_scalar(E):
        warnings.warn("E is a multiple of the identity: the invariance constraint is vacuous")
        res = ascend(A, C, "F2", config)
        return ConstrainedResult(res.optimum, res.value, 0.0, 0.0, res.converged,
                                 _agreeing(res.restart_objectives, res.objective, 1e-6),
                                 diagnostic="vacuous constraint", iterations=res.iterations)
    starts = start_points(A.shape[0], config)
    cfg = config.replace(record_trajectory=record_paths)

    def run(i, U0):
        return lagrange_ascent(U0, SquaredModulus(A, C), Invariance(E), cfg, schedule,
                               constraint_tol, start_index=i)

    outs = _map(run, starts, config.threads)
    return _pick(outs, A, C, lambda U: _invariance_residual(U, E), record_paths)


def _pick(outs, A, C, residual_of, record_paths, m0=None, D=None) -> ConstrainedResult:
    scored = []
    for o in outs:
        U = o.result.matrix
        r = residual_of(U)
        ok = r <= FEASIBLE_TOL * (10.0 if m0 is not None else 1.0)
        scored.append((ok, abs(_transfer(U, A, C)), -o.result.start_index, o, r))
    feas, val, _, best, r = max(scored, key=lambda t: t[:3])
    U = best.result.matrix
    agree = sum(1 for t in scored if t[0] and abs(t[1] - val) <= 1e-3)
    diag = best.diagnostic
    if not feas:
        diag = diag or "no restart reached the constraint set"
    paths = [o.result.trajectory for o in outs] if record_paths else None
    # per restart: (f_C, constraint residual)
    ends = [(_transfer(t[3].result.matrix, A, C), t[4]) for t in scored]
    return ConstrainedResult(
        U, _transfer(U, A, C), r, best.lam, bool(feas and best.converged), agree, diag,
        m0=m0, f_D=_transfer(U, A, D) if D is not None else None,
        iterations=sum(o.result.iterations for o in outs), paths=paths, endpoints=ends,
    )


# --------------------------------------------------------------------------
# orthogonality


def min_modulus(A, D, config: FlowConfig | None = None, restarts: int = 50):
    """``(m0, U)`` with ``m0 = min_U |tr(D^dagger U A U^dagger)|`` from a descent on ``|f_D|^2``."""
    config = _default_config(config).replace(restarts=restarts)
    A = as_square(A)
    D = as_square(D, A.shape[0])
    res = multistart(start_points(A.shape[0], config), lambda: Negated(SquaredModulus(A, D)), config)
    return math.sqrt(max(-res.objective, 0.0)), res.optimum


def _check_not_parallel(C, D):
    nc, nd = fro_norm(C), fro_norm(D)
    if not abs(hs_inner(C, D)) < (1.0 - 1e-9) * nc * nd:
        raise DomainError("C and D are scalar multiples of each other (or zero)")


def ascend_orthogonality(A, C, D, config: FlowConfig | None = None,
                         schedule: LambdaSchedule | None = None, m0: float | None = None,
                         m0_restarts: int = 50, record_paths: bool = False,
                         zero_tol: float = 1e-6) -> ConstrainedResult:
    """Maximise ``|f_C|^2`` while holding ``|f_D|`` at its minimum ``m0``.

    ``m0`` comes from :func:`min_modulus` unless given.  When ``m0`` is zero
    (to ``zero_tol``) the constraint ``f_D = 0`` is enforced with
    multipliers; otherwise the penalty ``lam |f_D|^2`` is continued up to the
    schedule cap, which pulls ``|f_D|`` down onto its minimum.
    ``paths`` (with ``record_paths``) holds, per restart, the ``f_C`` values
    of every accepted step and the matching ``f_D`` values.
    """
    config = _default_config(config)
    schedule = schedule or LambdaSchedule()
    A = as_square(A)
    C = as_square(C, A.shape[0])
    D = as_square(D, A.shape[0])
    _check_not_parallel(C, D)
    if m0 is None:
        m0, _ = min_modulus(A, D, config, m0_restarts)
    exact = m0 <= zero_tol
    starts = start_points(A.shape[0], config)

    def run(i, U0):
        fC, fD = [], []

        def rec(k, U):
            fC.append(_transfer(U, A, C))
            fD.append(_transfer(U, A, D))

        out = lagrange_ascent(U0, SquaredModulus(A, C), TransferTarget(A, D, 0.0), config,
                              schedule, constraint_tol=1e-9 if exact else 0.0, start_index=i,
                              update_multiplier=exact, callback=rec if record_paths else None)
        if record_paths:
            out.result.trajectory = (np.array(fC), np.array(fD))
        return out

    outs = _map(run, starts, config.threads)
    resid = lambda U: abs(abs(_transfer(U, A, D)) - m0)
    res = _pick(outs, A, C, resid, record_paths, m0=m0, D=D)
    if not exact:
        res.converged = res.constraint_residual <= 1e-3
    return res


# --------------------------------------------------------------------------
# sampling


def sample_constrained_range(A, C, constraint, n_samples: int, seed=0,
                             tol: float = 1e-2, max_candidates: int | None = None) -> np.ndarray:
    """Points ``tr(C^dagger U A U^dagger)`` with ``U`` satisfying ``constraint``.

    Invariance: ``U`` are exponentials of random stabiliser-algebra elements
    (exactly feasible).  Orthogonality: Haar samples kept when
    ``||f_D| - m0| <= tol``; an acceptance rate below ``1e-4`` raises
    :class:`SamplingInfeasible`.
    """
    A = as_square(A)
    C = as_square(C, A.shape[0])
    N = A.shape[0]
    rng = np.random.default_rng(seed)
    if isinstance(constraint, InvarianceConstraint):
        E = as_square(constraint.E, N)
        basis = stabilizer_algebra(E)
        if basis.dimension == 0:
            return np.full(n_samples, _transfer(np.eye(N), A, C))
        return np.array([_transfer(basis.random_element(rng), A, C) for _ in range(n_samples)])
    if isinstance(constraint, OrthogonalityConstraint):
        D = as_square(constraint.D, N)
        m0 = constraint.m0
        if m0 is None:
            m0, _ = min_modulus(A, D)
        max_candidates = max_candidates or max(10_000, 10_000 * n_samples)
        kept, tried = [], 0
        while len(kept) < n_samples and tried < max_candidates:
            U = haar_random_unitary(N, rng)
            tried += 1
            if abs(abs(_transfer(U, A, D)) - m0) <= tol:
                kept.append(_transfer(U, A, C))
            if tried >= 10_000 and len(kept) < 1e-4 * tried:
                raise SamplingInfeasible(
                    f"acceptance rate {len(kept) / tried:.1e} below 1e-4 after {tried} candidates")
        return np.array(kept)
    raise DomainError(f"unknown constraint {constraint!r}")


def cloud_components(points, factor: float = 3.0, adaptive: bool = False) -> int:
    """Connected components of an epsilon-graph on the sample cloud.

    Default: one global ``eps = factor * median`` nearest-neighbour distance.
    Sampled ranges are dense in the middle and sparse at the rim, where that
    rule leaves isolated points; ``adaptive=True`` instead joins ``i`` and
    ``j`` when ``|z_i - z_j| <= factor * max(nn_i, nn_j)``.
    """
    from scipy.sparse import coo_matrix

    P = np.asarray(points, dtype=complex).ravel()
    if P.size < 2:
        return int(P.size)
    xy = np.column_stack([P.real, P.imag])
    tree = cKDTree(xy)
    d, _ = tree.query(xy, k=2)
    nn = d[:, 1]
    if adaptive:
        rows, cols = [], []
        for i, hits in enumerate(tree.query_ball_point(xy, np.maximum(factor * nn, 1e-15))):
            rows.extend([i] * len(hits))
            cols.extend(hits)
        rows, cols = np.array(rows, dtype=int), np.array(cols, dtype=int)
    else:
        eps = factor * float(np.median(nn))
        pairs = tree.query_pairs(max(eps, 1e-15), output_type="ndarray")
        rows, cols = pairs[:, 0], pairs[:, 1]
    G = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(P), len(P)))
    return int(connected_components(G, directed=False)[0])
