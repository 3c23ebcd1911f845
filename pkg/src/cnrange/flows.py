"""Gradient ascent of trace functions on the unitary group.

The transfer function is ``f(U) = tr(C^dagger U A U^dagger)``.  Every
objective here exposes an *ascent generator*: a skew-Hermitian ``G`` such
that ``U -> exp(-a G) U`` increases the objective for small ``a > 0`` at
rate ``<G, G>``.  For ``Re f`` this is ``G1 = [UAU^dagger, C^dagger]_S``
and for ``|f|^2`` it is ``G2 = 2 (f^* [UAU^dagger, C^dagger])_S``.

Steps are accepted with an Armijo test on an objective *increment*
computed from ``exp(-a G) - 1`` directly, so line searches stay reliable
when the gradient is far below ``sqrt(eps)``.  Accepted objective values
are accumulated from those increments and are therefore exactly
non-decreasing.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .linalg import (
    as_square,
    check_unitary,
    expm_skew_delta,
    fro_norm,
    haar_random_unitary,
    polar_reproject,
    skew_part,
)

__all__ = [
    "FlowConfig",
    "FlowResult",
    "LambdaSchedule",
    "transfer",
    "gradient_F1",
    "gradient_F2",
    "RealTransfer",
    "SquaredModulus",
    "Negated",
    "ImagTransfer",
    "TransferTarget",
    "Invariance",
    "AugmentedLagrangian",
    "FullGroup",
    "ascend_from",
    "multistart",
    "start_points",
    "ascend",
    "radius",
    "lagrange_ascent",
    "REPAIR_EVERY",
]

REPAIR_EVERY = 50


@dataclass(frozen=True)
class FlowConfig:
    initial_step: float = 0.1
    gradient_tol: float = 1e-8
    max_iters: int = 10_000
    restarts: int = 20
    armijo_shrink: float = 0.5
    armijo_slope: float = 1e-4
    seed: int = 0
    record_trajectory: bool = False
    threads: int = 1
    step_rule: str = "bb"

    def __post_init__(self):
        if not self.initial_step > 0:
            raise ValueError("initial_step must be positive")
        if not self.gradient_tol > 0:
            raise ValueError("gradient_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be positive")
        if not 0 < self.armijo_shrink < 1:
            raise ValueError("armijo_shrink must lie in (0, 1)")
        if not 0 < self.armijo_slope < 1:
            raise ValueError("armijo_slope must lie in (0, 1)")
        if self.threads < 1:
            raise ValueError("threads must be positive")
        if self.step_rule not in ("doubling", "bb"):
            raise ValueError("step_rule must be 'doubling' or 'bb'")

    def replace(self, **changes) -> "FlowConfig":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class LambdaSchedule:
    """Penalty weight ``lambda`` on the squared constraint residual.

    ``value(k)`` is the per-iteration linear ramp ``initial * (1 + k * slope)``
    used by the plain penalty flow.  The multiplier flow instead grows the
    weight by ``growth`` between outer rounds.  Both are capped at ``cap``.
    """

    initial: float = 10.0
    slope: float = 1.0 / 50.0
    growth: float = 4.0
    cap: float = 1e4

    def __post_init__(self):
        if not self.initial >= 0 or not self.cap >= self.initial:
            raise ValueError("need 0 <= initial <= cap")
        if self.growth < 1:
            raise ValueError("growth must be >= 1")

    def value(self, k: int) -> float:
        return min(self.cap, self.initial * (1.0 + k * self.slope))


@dataclass
class FlowResult:
    optimum: Any
    value: complex
    objective: float
    iterations: int
    converged: bool
    gradient_norm: float
    trajectory: list | None = None
    objectives: list | None = None
    start_index: int = 0
    restart_objectives: list = field(default_factory=list)

    @property
    def matrix(self) -> np.ndarray:
        U = self.optimum
        return U.to_full() if hasattr(U, "to_full") else U


def _pair(A, C):
    A = as_square(A)
    C = as_square(C, A.shape[0])
    return A, C


def transfer(U, A, C) -> complex:
    """``tr(C^dagger U A U^dagger)``."""
    A, C = _pair(A, C)
    U = as_square(U, A.shape[0])
    return complex(np.vdot(C, U @ A @ U.conj().T))


def _comm_term(U, A, C):
    B = U @ A @ U.conj().T
    Cd = C.conj().T
    M = B @ Cd - Cd @ B
    return complex(np.vdot(C, B)), M


def gradient_F1(U, A, C) -> np.ndarray:
    A, C = _pair(A, C)
    U = as_square(U, A.shape[0])
    _, M = _comm_term(U, A, C)
    return skew_part(M)


def gradient_F2(U, A, C) -> np.ndarray:
    A, C = _pair(A, C)
    U = as_square(U, A.shape[0])
    f, M = _comm_term(U, A, C)
    return M * np.conj(f) - M.conj().T * f


# --------------------------------------------------------------------------
# objectives and constraints


class _Orbit:
    """Caches ``B = U X U^dagger`` for the most recent ``U``."""

    def __init__(self, X):
        self.X = X
        self._key = None
        self._B = None

    def at(self, U):
        if self._key is not U:
            self._B = U @ self.X @ U.conj().T
            self._key = U
        return self._B

    def delta(self, U, W):
        # (1+W) B (1+W)^dagger - B
        B = self.at(U)
        WB = W @ B
        return WB + B @ W.conj().T + WB @ W.conj().T


class _Transfer:
    def __init__(self, A, C):
        self.A, self.C = _pair(A, C)
        self.Cd = self.C.conj().T
        self.orbit = _Orbit(self.A)

    def f(self, U) -> complex:
        return complex(np.vdot(self.C, self.orbit.at(U)))

    def comm(self, U):
        B = self.orbit.at(U)
        return B @ self.Cd - self.Cd @ B

    def df(self, U, W) -> complex:
        return complex(np.vdot(self.C, self.orbit.delta(U, W)))


class RealTransfer:
    """``Re(phase * f(U))``."""

    def __init__(self, A, C, phase: complex = 1.0):
        self.t = _Transfer(A, C)
        self.phase = complex(phase)

    def evaluate(self, U):
        f = self.t.f(U)
        return (self.phase * f).real, skew_part(self.phase * self.t.comm(U)), f

    def increment(self, U, W) -> float:
        return (self.phase * self.t.df(U, W)).real


class SquaredModulus:
    """``|f(U)|^2``."""

    def __init__(self, A, C):
        self.t = _Transfer(A, C)

    def evaluate(self, U):
        f = self.t.f(U)
        return abs(f) ** 2, 2.0 * skew_part(np.conj(f) * self.t.comm(U)), f

    def increment(self, U, W) -> float:
        f = self.t.f(U)
        d = self.t.df(U, W)
        return 2.0 * (np.conj(f) * d).real + abs(d) ** 2


class Negated:
    def __init__(self, objective):
        self.inner = objective

    def evaluate(self, U):
        v, G, f = self.inner.evaluate(U)
        return -v, -G, f

    def increment(self, U, W) -> float:
        return -self.inner.increment(U, W)


class ImagTransfer:
    """Real residual ``Im f(U)`` (shape ``(1,)``)."""

    def __init__(self, A, C):
        self.t = _Transfer(A, C)

    def residual(self, U):
        return np.array([self.t.f(U).imag + 0j])

    def residual_increment(self, U, W):
        return np.array([self.t.df(U, W).imag + 0j])

    def generator(self, U, weight):
        # Re(w * Im f) = Re(-i w f)
        w = float(np.real(weight[0]))
        return skew_part(-1j * w * self.t.comm(U))


class TransferTarget:
    """Complex residual ``f_D(U) - target``."""

    def __init__(self, A, D, target: complex = 0.0):
        self.t = _Transfer(A, D)
        self.target = complex(target)

    def residual(self, U):
        return np.array([self.t.f(U) - self.target])

    def residual_increment(self, U, W):
        return np.array([self.t.df(U, W)])

    def generator(self, U, weight):
        return skew_part(np.conj(weight[0]) * self.t.comm(U))


class Invariance:
    """Matrix residual ``U E U^dagger - E``."""

    def __init__(self, E):
        self.E = as_square(E)
        self.orbit = _Orbit(self.E)

    def residual(self, U):
        return self.orbit.at(U) - self.E

    def residual_increment(self, U, W):
        return self.orbit.delta(U, W)

    def generator(self, U, weight):
        B = self.orbit.at(U)
        Wd = weight.conj().T
        return skew_part(B @ Wd - Wd @ B)


class AugmentedLagrangian:
    """``F - Re<mult, c> - lam * ||c||^2`` for objective ``F``, residual ``c``.

    With ``mult = 0`` this is the plain penalty Lagrangian ``F - lam c^2``.
    """

    def __init__(self, objective, constraint, multiplier, lam: float):
        self.objective = objective
        self.constraint = constraint
        self.multiplier = multiplier
        self.lam = float(lam)

    def evaluate(self, U):
        v, G, f = self.objective.evaluate(U)
        c = self.constraint.residual(U)
        weight = self.multiplier + 2.0 * self.lam * c
        value = v - np.vdot(self.multiplier, c).real - self.lam * np.vdot(c, c).real
        return value, G - self.constraint.generator(U, weight), f

    def increment(self, U, W) -> float:
        dv = self.objective.increment(U, W)
        c = self.constraint.residual(U)
        dc = self.constraint.residual_increment(U, W)
        return (
            dv
            - np.vdot(self.multiplier, dc).real
            - self.lam * (2.0 * np.vdot(c, dc).real + np.vdot(dc, dc).real)
        )


# --------------------------------------------------------------------------
# manifolds


class FullGroup:
    """Unrestricted flow on ``U(N)``: the search direction is ``G`` itself."""

    def initial_state(self, U0):
        return check_unitary(U0)

    def matrix(self, state):
        return state

    def direction(self, state, G):
        return G, G

    def retract(self, state, X, alpha):
        V, W = expm_skew_delta(X, alpha)
        return V @ state, W

    def repair(self, state):
        return polar_reproject(state)

    def export(self, state):
        return state


# --------------------------------------------------------------------------
# single-start ascent


def ascend_from(U0, objective, config: FlowConfig, manifold=None, start_index: int = 0,
                callback: Callable | None = None) -> FlowResult:
    """Monotone Armijo ascent from one start point.

    ``callback(k, U)`` is called after every accepted step with the full
    matrix of the new iterate.
    """
    manifold = manifold or FullGroup()
    state = manifold.initial_state(U0)
    U = manifold.matrix(state)
    value, G, f = objective.evaluate(U)
    X, Xfull = manifold.direction(state, G)
    gnorm = fro_norm(Xfull)
    record = config.record_trajectory
    traj = [f] if record else None
    objs = [value] if record else None
    running = value
    alpha = config.initial_step
    alpha_max = 1e6 * config.initial_step
    alpha_min = 1e-6 * config.initial_step
    bb = config.step_rule == "bb"
    streak = 0
    k = 0
    while gnorm > config.gradient_tol and k < config.max_iters:
        slope = float(np.vdot(G, Xfull).real)
        if slope <= 0:
            break
        trial = alpha
        accepted = False
        first_try = True
        for _ in range(80):
            new_state, W = manifold.retract(state, X, trial)
            delta = objective.increment(U, W)
            if delta >= config.armijo_slope * trial * slope:
                accepted = True
                break
            trial *= config.armijo_shrink
            first_try = False
        if not accepted:
            break
        k += 1
        streak = streak + 1 if first_try else 0
        alpha = trial
        if streak >= 5:
            alpha = min(2.0 * alpha, alpha_max)
            streak = 0
        state = new_state
        if k % REPAIR_EVERY == 0:
            state = manifold.repair(state)
        running = running + delta
        U = manifold.matrix(state)
        if callback is not None:
            callback(k, U)
        value, G, f = objective.evaluate(U)
        X_old = X
        X, Xfull = manifold.direction(state, G)
        gnorm = fro_norm(Xfull)
        if bb:
            # Barzilai-Borwein trial step in algebra coordinates
            y = X - X_old
            sy = -trial * float(np.vdot(X_old, y).real)
            if sy > 0:
                ss = trial * trial * float(np.vdot(X_old, X_old).real)
                alpha = min(max(ss / sy, alpha_min), alpha_max)
        if record:
            traj.append(f)
            objs.append(running)
    return FlowResult(
        optimum=manifold.export(state),
        value=f,
        objective=value,
        iterations=k,
        converged=gnorm <= config.gradient_tol,
        gradient_norm=gnorm,
        trajectory=traj,
        objectives=objs,
        start_index=start_index,
    )


def start_points(N: int, config: FlowConfig, identity: bool = True,
                 sampler: Callable | None = None) -> list:
    """Identity (optionally) followed by ``config.restarts`` random starts.

    Each random start uses its own stream spawned from ``config.seed`` so the
    set of starts does not depend on how restarts are scheduled.
    """
    sampler = sampler or (lambda rng: haar_random_unitary(N, rng))
    children = np.random.SeedSequence(config.seed).spawn(config.restarts)
    starts = [np.eye(N, dtype=complex)] if identity else []
    starts += [sampler(np.random.default_rng(c)) for c in children]
    return starts


def _map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(i, x) for i, x in enumerate(items)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ix: fn(*ix), enumerate(items)))


def multistart(starts: Sequence, make_objective: Callable[[], Any], config: FlowConfig,
               manifold_factory: Callable[[], Any] | None = None) -> FlowResult:
    """Best result (largest objective, earliest start on ties) over ``starts``.

    ``make_objective`` builds a fresh objective per start; objectives cache
    per-iterate data and are not shared between threads.
    """
    def run(i, U0):
        manifold = manifold_factory() if manifold_factory else None
        return ascend_from(U0, make_objective(), config, manifold, start_index=i)

    results = _map(run, list(starts), config.threads)
    best = max(results, key=lambda r: (r.objective, -r.start_index))
    best.restart_objectives = [r.objective for r in results]
    return best


def _objective_factory(A, C, objective: str):
    A, C = _pair(A, C)
    if objective == "F1":
        return lambda: RealTransfer(A, C)
    if objective == "F2":
        return lambda: SquaredModulus(A, C)
    raise ValueError(f"objective must be 'F1' or 'F2', got {objective!r}")


def ascend(A, C, objective: str = "F2", config: FlowConfig | None = None) -> FlowResult:
    """Multi-start ascent of ``F1 = Re f`` or ``F2 = |f|^2`` over ``U(N)``."""
    config = config or FlowConfig()
    A, C = _pair(A, C)
    make = _objective_factory(A, C, objective)
    return multistart(start_points(A.shape[0], config), make, config)


def radius(A, C, config: FlowConfig | None = None) -> float:
    """C-numerical radius ``max_U |tr(C^dagger U A U^dagger)|``."""
    return math.sqrt(max(ascend(A, C, "F2", config).objective, 0.0))


# --------------------------------------------------------------------------
# constrained ascent by multipliers


@dataclass
class LagrangeOutcome:
    result: FlowResult
    residual: float
    lam: float
    multiplier: Any
    rounds: int
    converged: bool
    diagnostic: str = ""


def lagrange_ascent(U0, objective, constraint, config: FlowConfig,
                    schedule: LambdaSchedule | None = None, constraint_tol: float = 1e-8,
                    multiplier=None, manifold=None, max_rounds: int = 40,
                    start_index: int = 0, update_multiplier: bool = True,
                    callback: Callable | None = None) -> LagrangeOutcome:
    """Method-of-multipliers ascent of ``objective`` subject to ``constraint == 0``.

    Each round runs a monotone ascent of the augmented Lagrangian, then
    updates ``multiplier += 2 lam c`` and grows ``lam`` (up to the cap) when
    the residual did not shrink by at least a factor 4.  With
    ``update_multiplier=False`` the multiplier stays at its initial value and
    ``lam`` grows every round until the cap (plain penalty continuation); the
    loop then stops once the capped round has converged.
    """
    schedule = schedule or LambdaSchedule()
    manifold = manifold or FullGroup()
    U = U0
    c0 = constraint.residual(manifold.matrix(manifold.initial_state(U0)))
    mult = np.zeros_like(c0) if multiplier is None else np.array(multiplier, dtype=complex)
    lam = schedule.initial
    prev = math.inf
    trajectory, objectives = [], []
    total = 0
    res = None
    viol = math.inf
    diagnostic = ""
    for rnd in range(1, max_rounds + 1):
        L = AugmentedLagrangian(objective, constraint, mult, lam)
        res = ascend_from(U, L, config, manifold, start_index=start_index, callback=callback)
        total += res.iterations
        if config.record_trajectory:
            trajectory.extend(res.trajectory)
            objectives.extend(res.objectives)
        U = res.optimum
        Ufull = res.matrix
        c = constraint.residual(Ufull)
        viol = float(np.linalg.norm(c))
        if viol <= constraint_tol and res.converged:
            break
        if not update_multiplier:
            if lam >= schedule.cap and res.converged:
                break
            lam = min(schedule.cap, lam * max(schedule.growth, 1.0 + 1e-9))
            continue
        mult = mult + 2.0 * lam * c
        if viol > 0.25 * prev:
            lam = min(schedule.cap, lam * schedule.growth)
        prev = viol
    else:
        diagnostic = f"no convergence after {max_rounds} multiplier rounds (residual {viol:.2e})"
    Ufull = res.matrix
    v, _, f = objective.evaluate(Ufull)
    out = FlowResult(
        optimum=res.optimum,
        value=f,
        objective=v,
        iterations=total,
        converged=res.converged and viol <= constraint_tol,
        gradient_norm=res.gradient_norm,
        trajectory=trajectory or None,
        objectives=objectives or None,
        start_index=start_index,
    )
    return LagrangeOutcome(out, viol, lam, mult, rnd, out.converged, diagnostic)
