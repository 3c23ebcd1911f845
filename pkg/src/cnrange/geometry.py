"""Shape of the C-numerical range: star centre, boundary tracing, distances.

Boundary tracing follows the rotate-and-intersect scheme: shift ``A`` so the
star centre sits at the origin, rotate the range by a phase on ``A``, and
drive the flow to the point where the rotated boundary crosses the positive
real axis (maximise ``Re f`` while holding ``Im f`` at zero).  Star-shapedness
makes that crossing unique, so the angle sweep traces the whole boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .flows import (
    AugmentedLagrangian,
    FlowConfig,
    FlowResult,
    FullGroup,
    ImagTransfer,
    LambdaSchedule,
    RealTransfer,
    ascend,
    lagrange_ascent,
    multistart,
    start_points,
)
from .linalg import (
    DomainError,
    as_square,
    expm_skew,
    fro_norm,
    herm_part,
    skew_part,
)

__all__ = [
    "BoundaryCurve",
    "star_center",
    "boundary_exponent",
    "lagrange_boundary_step",
    "trace_boundary",
    "min_distance",
    "min_angle",
    "polygon_distance",
    "polygon_contains",
    "detect_corners",
    "refine_corners",
]

TRACE_IMAG_TOL = 1e-4


def _pair(A, C):
    A = as_square(A)
    C = as_square(C, A.shape[0])
    return A, C


def star_center(A, C) -> complex:
    """``tr(A) tr(C^dagger) / N``."""
    A, C = _pair(A, C)
    return complex(np.trace(A) * np.conj(np.trace(C)) / A.shape[0])


def boundary_exponent(U, A, C, lam: float) -> np.ndarray:
    """Skew exponent ``[UAU^dagger, C^dagger]_S + 2i lam Im f [.,.]_H``."""
    A, C = _pair(A, C)
    B = U @ A @ U.conj().T
    Cd = C.conj().T
    M = B @ Cd - Cd @ B
    im_f = np.vdot(C, B).imag
    return skew_part(M) + 2j * lam * im_f * herm_part(M)


def lagrange_boundary_step(U, A, C, lam: float, alpha: float) -> np.ndarray:
    """One step ``U -> exp(-alpha X) U`` of the penalised boundary flow.

    ``A`` must already be shifted to zero trace.
    """
    A, C = _pair(A, C)
    if abs(np.trace(A)) > 1e-10:
        raise DomainError("boundary step expects a traceless A (shift to the star centre first)")
    return expm_skew(boundary_exponent(U, A, C, lam), alpha) @ U


@dataclass
class BoundaryCurve:
    center: complex
    angles: np.ndarray
    points: np.ndarray
    converged: np.ndarray
    residuals: np.ndarray
    objectives: np.ndarray
    m: int
    degenerate: bool = False
    iterations: int = 0
    unitaries: list = field(default_factory=list, repr=False)
    A: np.ndarray | None = field(default=None, repr=False)
    C: np.ndarray | None = field(default=None, repr=False)

    @property
    def coverage(self) -> float:
        return float(np.mean(self.converged))

    @property
    def fully_converged(self) -> bool:
        return bool(np.all(self.converged))

    def corners(self, threshold_deg: float = 10.0, refine: bool = True,
                config: FlowConfig | None = None) -> np.ndarray:
        """Detected corners; flow-polished when the curve knows ``A`` and ``C``."""
        if refine and self.A is not None and not self.degenerate:
            return refine_corners(self, self.A, self.C, threshold_deg, config)
        return detect_corners(self.points, threshold_deg)

    def to_rows(self):
        return [(float(a), complex(p), bool(c))
                for a, p, c in zip(self.angles, self.points, self.converged)]


def _penalty_angle(U0, A_rot, C, config: FlowConfig, schedule: LambdaSchedule):
    """Plain penalty flow with the per-iteration ``lambda`` ramp."""
    group = FullGroup()
    obj, con = RealTransfer(A_rot, C), ImagTransfer(A_rot, C)
    U = U0
    alpha = config.initial_step
    lam = schedule.value(0)
    k = 0
    gnorm = math.inf
    while k < config.max_iters:
        lam = schedule.value(k)
        L = AugmentedLagrangian(obj, con, np.zeros(1, complex), lam)
        _, G, _ = L.evaluate(U)
        gnorm = fro_norm(G)
        if gnorm <= config.gradient_tol:
            break
        slope = gnorm ** 2
        trial = alpha
        for _ in range(80):
            U_new, W = group.retract(U, G, trial)
            if L.increment(U, W) >= config.armijo_slope * trial * slope:
                break
            trial *= config.armijo_shrink
        else:
            break
        alpha = min(2.0 * trial, 1e6 * config.initial_step)
        U = U_new
        k += 1
    v, _, f = obj.evaluate(U)
    return FlowResult(U, f, v, k, gnorm <= config.gradient_tol, gnorm), lam


def _solve_angle(U0, A_rot, C, config, schedule, method, constraint_tol, multiplier):
    if method == "penalty":
        res, lam = _penalty_angle(U0, A_rot, C, config, schedule)
        return res, None
    out = lagrange_ascent(U0, RealTransfer(A_rot, C), ImagTransfer(A_rot, C), config,
                          schedule, constraint_tol, multiplier=multiplier)
    return out.result, out.multiplier


def trace_boundary(A, C, m: int = 64, config: FlowConfig | None = None,
                   schedule: LambdaSchedule | None = None, method: str = "multiplier",
                   warm_start: bool = True, constraint_tol: float = 1e-9,
                   first_restarts: int | None = None) -> BoundaryCurve:
    """Trace ``dW(C,A)`` along ``m`` equally spaced rays from the star centre.

    ``angles[l] = 2 pi l / m`` is the ray direction in the original frame; the
    flow for that ray runs on ``exp(-i angles[l]) (A - tr(A)/N)``.
    ``method='multiplier'`` (default) adds a multiplier update to the
    penalised Lagrangian so ``Im f`` is driven to ``constraint_tol`` without
    an unbounded penalty; ``method='penalty'`` runs the bare penalty flow with
    the linear ``lambda`` ramp of ``schedule``.  Each ray is solved with
    ``A`` divided by ``||A0|| ||C||``, so ``lambda`` acts on a unit-scale
    problem whatever the size of the inputs.
    """
    if m < 8:
        raise ValueError("need at least 8 angles")
    if method not in ("multiplier", "penalty"):
        raise ValueError(f"unknown method {method!r}")
    A, C = _pair(A, C)
    config = config or FlowConfig(step_rule="bb")
    schedule = schedule or LambdaSchedule()
    N = A.shape[0]
    center = star_center(A, C)
    A0 = A - np.trace(A) / N * np.eye(N)
    C0 = C - np.trace(C) / N * np.eye(N)
    angles = 2.0 * np.pi * np.arange(m) / m
    scale = max(1.0, fro_norm(A) * fro_norm(C))
    if fro_norm(A0) * fro_norm(C0) <= 1e-12 * scale:
        pts = np.full(m, center, dtype=complex)
        return BoundaryCurve(center, angles, pts, np.ones(m, bool), np.zeros(m), np.zeros(m),
                             m, degenerate=True)

    cfg0 = config if first_restarts is None else config.replace(restarts=first_restarts)
    # each angle is solved on the unit-scale problem so the penalty weight is
    # dimensionless; f is scaled back afterwards
    unit = fro_norm(A0) * fro_norm(C)
    sols: list = [None] * m
    total = 0

    def solve(l, U0, mult):
        nonlocal total
        A_rot = np.exp(-1j * angles[l]) * A0 / unit
        res, mu = _solve_angle(U0, A_rot, C, config, schedule, method, constraint_tol, mult)
        total += res.iterations
        return res, mu

    def better(new, old):
        if old is None:
            return True
        key = lambda r: (abs(r.value.imag) * unit <= TRACE_IMAG_TOL, r.objective)
        return key(new[0]) > key(old[0])

    def cold(l):
        for U0 in start_points(N, cfg0):
            cand = solve(l, U0, None)
            if better(cand, sols[l]):
                sols[l] = cand

    cold(0)
    if warm_start:
        # forward then backward sweep; each angle keeps the better feasible
        # point, which escapes branches that a one-way continuation follows
        # into the interior (fold curves) or past a corner
        for l in range(1, m):
            prev = sols[l - 1]
            cand = solve(l, prev[0].matrix, prev[1])
            if better(cand, sols[l]):
                sols[l] = cand
        for l in range(m - 1, 0, -1):
            nxt = sols[(l + 1) % m]
            cand = solve(l, nxt[0].matrix, nxt[1])
            if better(cand, sols[l]):
                sols[l] = cand
        # a warm start sitting on a common critical point of Re f and Im f
        # (e.g. a vertex of a polygonal range) cannot move; re-solve cold.
        # The penalty flow never meets the residual band, so it is skipped.
        for l in range(1, m if method == "multiplier" else 1):
            res = sols[l][0]
            if not (res.converged and abs(res.value.imag) * unit <= TRACE_IMAG_TOL):
                cold(l)
    else:
        for l in range(1, m):
            cold(l)

    pts = np.empty(m, dtype=complex)
    conv = np.zeros(m, dtype=bool)
    resid = np.empty(m)
    objs = np.empty(m)
    unitaries = []
    for l, (res, _) in enumerate(sols):
        f_rot = res.value * unit
        pts[l] = np.exp(1j * angles[l]) * f_rot + center
        resid[l] = abs(f_rot.imag)
        objs[l] = f_rot.real
        conv[l] = res.converged and resid[l] <= TRACE_IMAG_TOL
        unitaries.append(res.matrix)
    return BoundaryCurve(center, angles, pts, conv, resid, objs, m, iterations=total,
                         unitaries=unitaries, A=A, C=C)


def min_distance(A, C, config: FlowConfig | None = None) -> float:
    """``min_U ||C - U A U^dagger||_F`` via the maximum of ``Re f``."""
    A, C = _pair(A, C)
    best = ascend(A, C, "F1", config).objective
    d2 = fro_norm(A) ** 2 + fro_norm(C) ** 2 - 2.0 * best
    return math.sqrt(max(d2, 0.0))


def min_angle(A, C, config: FlowConfig | None = None) -> float:
    """Smallest angle (mod pi) between ``C`` and the unitary orbit of ``A``."""
    from .flows import radius

    A, C = _pair(A, C)
    na, nc = fro_norm(A), fro_norm(C)
    if na == 0 or nc == 0:
        raise DomainError("angle undefined for a zero matrix")
    r = radius(A, C, config)
    return math.acos(min(1.0, r / (na * nc)))


# --------------------------------------------------------------------------
# planar helpers


def _segments(poly):
    P = np.asarray(poly, dtype=complex).ravel()
    return P, np.roll(P, -1)


def polygon_distance(poly, pts) -> np.ndarray:
    """Distance from each point to the closed polyline ``poly``."""
    a, b = _segments(poly)
    z = np.asarray(pts, dtype=complex).ravel()[:, None]
    d = b - a
    dd = np.abs(d) ** 2
    t = np.where(dd > 0, ((z - a) * np.conj(d)).real / np.where(dd > 0, dd, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    return np.min(np.abs(z - (a + t * d)), axis=1)


def polygon_contains(poly, pts, tol: float = 0.0) -> np.ndarray:
    """Even-odd containment; points within ``tol`` of an edge count as inside."""
    a, b = _segments(poly)
    z = np.asarray(pts, dtype=complex).ravel()[:, None]
    ya, yb = a.imag, b.imag
    straddle = (ya > z.imag) != (yb > z.imag)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = a.real + (z.imag - ya) * (b.real - a.real) / (yb - ya)
    inside = np.count_nonzero(straddle & (z.real < xcross), axis=1) % 2 == 1
    if tol > 0:
        inside |= polygon_distance(poly, pts) <= tol
    return inside


def _dedupe(points, eps=1e-9):
    P = np.asarray(points, dtype=complex).ravel()
    keep = [0]
    for i in range(1, len(P)):
        if abs(P[i] - P[keep[-1]]) > eps:
            keep.append(i)
    if len(keep) > 1 and abs(P[keep[-1]] - P[keep[0]]) <= eps:
        keep.pop()
    return P[keep]


def _line_intersection(p1, p2, q1, q2):
    d1, d2 = p2 - p1, q2 - q1
    den = (np.conj(d1) * d2).imag
    if abs(den) < 1e-14:
        return None
    t = (np.conj(q1 - p1) * d2).imag / den
    return p1 + t * d1


def _corner_runs(points, threshold_deg: float):
    """``(estimate, incoming edge, outgoing edge)`` for every sharp run."""
    P = _dedupe(points)
    n = len(P)
    if n < 5:
        return []
    e_in = P - np.roll(P, 1)
    e_out = np.roll(P, -1) - P
    turn = np.abs(np.angle(e_out / e_in))
    sharp = turn > math.radians(threshold_deg)
    if sharp.all():
        return []
    # runs of consecutive sharp vertices on the cyclic polyline
    start = int(np.argmin(sharp))
    runs = []
    i = 0
    while i < n:
        j = (start + i) % n
        if sharp[j]:
            run = [j]
            while i + 1 < n and sharp[(start + i + 1) % n]:
                i += 1
                run.append((start + i) % n)
            first, last = run[0], run[-1]
            p1, p2 = P[(first - 2) % n], P[(first - 1) % n]
            q1, q2 = P[(last + 1) % n], P[(last + 2) % n]
            x = _line_intersection(p1, p2, q1, q2)
            cand = P[run]
            spread = max(abs(P[(first - 1) % n] - P[(last + 1) % n]), 1e-12)
            if x is None or min(abs(cand - x)) > 2.0 * spread:
                x = cand[len(cand) // 2]
            runs.append((complex(x), p2 - p1, q2 - q1))
        i += 1
    return runs


def detect_corners(points, threshold_deg: float = 10.0) -> np.ndarray:
    """Corner positions of a closed polyline.

    Vertices whose exterior (turning) angle exceeds ``threshold_deg`` are
    grouped into runs; each run is located at the intersection of the two
    edges flanking it, which recovers a true corner lying between samples.
    """
    return np.array([r[0] for r in _corner_runs(points, threshold_deg)], dtype=complex)


def refine_corners(curve: BoundaryCurve, A, C, threshold_deg: float = 10.0,
                   config: FlowConfig | None = None) -> np.ndarray:
    """Corners of a counter-clockwise traced curve, polished by the flow.

    A convex corner is an exposed point of the range: it is the unique
    maximiser of ``Re(conj(n) f)`` for directions ``n`` inside its normal
    cone.  Each convex corner is re-solved with the unconstrained flow along
    the bisector of the flanking edge normals, warm-started from the nearest
    traced unitary.  Reflex corners and solves that land far from the
    polyline estimate keep the estimate.
    """
    A, C = _pair(A, C)
    config = config or FlowConfig(restarts=3, step_rule="bb")
    pts = curve.points
    width = float(np.ptp(pts.real) + np.ptp(pts.imag)) or 1.0
    out = []
    for x, d_in, d_out in _corner_runs(pts, threshold_deg):
        if (np.conj(d_in) * d_out).imag <= 0:
            out.append(x)
            continue
        n_in, n_out = -1j * d_in / abs(d_in), -1j * d_out / abs(d_out)
        nrm = n_in + n_out
        nrm /= abs(nrm)
        near = int(np.argmin(np.abs(pts - x)))
        starts = start_points(A.shape[0], config, identity=False)
        if curve.unitaries:
            starts = [curve.unitaries[near]] + starts
        best = multistart(starts, lambda: RealTransfer(A, C, np.conj(nrm)), config)
        z = complex(best.value)
        out.append(z if abs(z - x) <= 0.05 * width else x)
    return np.array(out, dtype=complex)


