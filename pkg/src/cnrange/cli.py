"""``cnrange`` command line.

Exit codes: 0 success, 1 bad input or arguments, 2 finished with some
unconverged flows.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .constrained import (
    InvarianceConstraint,
    OrthogonalityConstraint,
    SamplingInfeasible,
    ascend_invariance_lagrange,
    ascend_orthogonality,
    ascend_projected,
    sample_constrained_range,
    stabilizer_algebra,
)
from .flows import FlowConfig, ascend
from .geometry import trace_boundary
from .io import InputError, dumps, load_matrix, load_normal_form, load_state, matrix_to_json, write_csv, write_json
from .linalg import DimensionError, DomainError, SizeError, c_spectrum, haar_random_unitary
from .local import ascend_local, entanglement_distance, qubit_count, sample_local_range, state_psi3, state_psi4
from .reversal import reversibility_obstruction, search_reversal, solve_reversal_angles
from .svg import Series, render

EXIT_OK, EXIT_INPUT, EXIT_PARTIAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 means "partial convergence" here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


@dataclass
class RunManifest:
    command: str
    inputs: dict
    config: dict
    seed: int
    output_dir: str
    version: str = __version__
    duration_s: float = 0.0
    notes: list = field(default_factory=list)


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("CNRANGE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"CNRANGE_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _config(args, **extra) -> FlowConfig:
    kw = dict(seed=args.seed, threads=_threads(args))
    if getattr(args, "restarts", None) is not None:
        kw["restarts"] = args.restarts
    if getattr(args, "step_rule", None):
        kw["step_rule"] = args.step_rule
    if getattr(args, "max_iters", None):
        kw["max_iters"] = args.max_iters
    kw.update(extra)
    return FlowConfig(**kw)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(args, inputs, out: Path | None, t0: float, notes=()):
    cfg = {k: v for k, v in vars(args).items()
           if k not in ("func", "out", "seed") and not k.startswith("_")}
    if out is None:
        return
    m = RunManifest(args.command, inputs, cfg, args.seed, str(out),
                    duration_s=time.perf_counter() - t0, notes=list(notes))
    write_json(out / "manifest.json", asdict(m))


def _pair(args):
    A = load_matrix(args.A)
    C = load_matrix(args.C)
    if A.shape != C.shape or A.shape[0] != A.shape[1]:
        raise DimensionError(f"A {A.shape} and C {C.shape} must be square of equal size")
    return A, C


# --------------------------------------------------------------------------
# commands


def cmd_boundary(args) -> int:
    t0 = time.perf_counter()
    if args.m < 8:
        raise UsageError("--m must be at least 8")
    A, C = _pair(args)
    cfg = _config(args)
    curve = trace_boundary(A, C, m=args.m, config=cfg, method=args.method)
    out = _outdir(args)
    corners = curve.corners(config=cfg.replace(restarts=3)) if not curve.degenerate else np.array([])
    write_csv(out / "boundary.csv", ["angle", "re", "im", "converged"],
              [(a, p.real, p.imag, c) for a, p, c in zip(curve.angles, curve.points, curve.converged)])
    spec = c_spectrum(C, A) if A.shape[0] <= 8 else None
    record = {
        "center": curve.center,
        "m": curve.m,
        "degenerate": curve.degenerate,
        "angles": curve.angles,
        "points": curve.points,
        "converged": curve.converged.tolist(),
        "residuals": curve.residuals,
        "objectives": curve.objectives,
        "coverage": curve.coverage,
        "corners": corners,
    }
    if spec is not None:
        record["c_spectrum"] = spec
    write_json(out / "boundary.json", record)
    if args.svg:
        series = [Series(curve.points, "closed", "boundary"),
                  Series([curve.center], "dots", "star centre", "#000000", 3.0)]
        if spec is not None:
            series.append(Series(spec, "dots", "C-spectrum", "#d62728", 3.0))
        (out / "boundary.svg").write_text(render(series, "W(C,A)"))
    _manifest(args, {"A": args.A, "C": args.C}, out, t0)
    print(f"traced {curve.m} angles, coverage {curve.coverage:.6g}, corners {len(corners)}")
    return EXIT_OK if curve.fully_converged else EXIT_PARTIAL


def _radius_record(res, local: bool) -> dict:
    r = float(np.sqrt(max(res.objective, 0.0)))
    rec = {"radius": r, "value": res.value, "converged": bool(res.converged)}
    if local:
        rec["factors"] = [matrix_to_json(f) for f in res.optimum.factors]
    else:
        rec["U"] = matrix_to_json(res.optimum)
    return rec


def cmd_radius(args) -> int:
    t0 = time.perf_counter()
    A, C = _pair(args)
    cfg = _config(args)
    if args.local:
        qubit_count(A.shape[0])
        res = ascend_local(A, C, "F2", cfg)
    else:
        res = ascend(A, C, "F2", cfg)
    rec = _radius_record(res, args.local)
    text = dumps(rec)
    sys.stdout.write(text)
    if args.out:
        out = _outdir(args)
        (out / "radius.json").write_text(text)
        _manifest(args, {"A": args.A, "C": args.C}, out, t0)
    return EXIT_OK if res.converged else EXIT_PARTIAL


def cmd_local_radius(args) -> int:
    args.local = True
    return cmd_radius(args)


def _family_states(args):
    if args.family == "psi3":
        grid = np.linspace(0.0, 1.0, args.grid)
        return [(s, state_psi3(s)) for s in grid]
    if args.family == "psi4":
        grid = np.linspace(0.0, 1.0, args.grid)
        return [(s, state_psi4(s)) for s in grid]
    if not args.state:
        raise UsageError("--family file needs --state FILE [FILE ...]")
    # file family: the s column is the file index
    return [(float(i), load_state(p)) for i, p in enumerate(args.state)]


def cmd_entanglement_scan(args) -> int:
    t0 = time.perf_counter()
    if args.grid < 2:
        raise UsageError("--grid must be at least 2")
    states = _family_states(args)
    cfg = _config(args)
    rows = []
    for s, psi in states:
        _, d2, _ = entanglement_distance(psi, cfg)
        rows.append((s, d2, 1.0 - d2 / 2.0))
    out = _outdir(args)
    write_csv(out / "entanglement.csv", ["s", "delta_sq", "max_transfer"], rows)
    if args.svg:
        s = np.array([r[0] for r in rows])
        series = [Series(s + 1j * np.array([r[1] for r in rows]), "line", "delta^2"),
                  Series(s + 1j * np.array([r[2] for r in rows]), "line", "max. local transfer")]
        (out / "entanglement.svg").write_text(
            render(series, f"entanglement scan ({args.family})", xlabel="s", ylabel="", equal=False))
    _manifest(args, {"state": args.state or []}, out, t0)
    for r in rows:
        print(f"{r[0]:.6g},{r[1]:.6g},{r[2]:.6g}")
    return EXIT_OK


def cmd_reversal(args) -> int:
    t0 = time.perf_counter()
    if bool(args.H) == bool(args.normal_form):
        raise UsageError("give exactly one of --H and --normal-form")
    if args.normal_form:
        nf = load_normal_form(args.normal_form)
        sol = solve_reversal_angles(nf.order_matrix)
        rec = {"reversible": sol.feasible, "method": "angles",
               "angles": sol.angles, "witness": None}
        if not sol.feasible:
            rec["witness"] = {"certificate": sol.certificate, "zero_row": sol.zero_row,
                              "reason": sol.reason}
        inputs = {"normal_form": args.normal_form}
    else:
        H = load_matrix(args.H)
        wit = reversibility_obstruction(H)
        if wit is not None:
            rec = {"reversible": False, "method": "obstruction",
                   "witness": {"power": wit.power, "trace": wit.trace}}
        else:
            res = search_reversal(H, _config(args), restarts=args.restarts or 50)
            rec = {"reversible": res.reversible, "method": "flow", "floor": res.floor,
                   "residual": res.residual, "scale": res.scale, "witness": None}
            if res.K is not None:
                rec["factors"] = [matrix_to_json(f) for f in res.K.factors]
        inputs = {"H": args.H}
    text = dumps(rec)
    sys.stdout.write(text)
    if args.out:
        out = _outdir(args)
        (out / "reversal.json").write_text(text)
        _manifest(args, inputs, out, t0)
    return EXIT_OK


def cmd_constrained(args) -> int:
    t0 = time.perf_counter()
    if args.D and args.E:
        raise UsageError("one constraint per run: give --D or --E, not both")
    if not args.D and not args.E:
        raise UsageError("give a constraint: --D or --E")
    if args.method == "projected" and args.D:
        raise UsageError("--method projected applies to invariance (--E) only")
    A, C = _pair(args)
    cfg = _config(args)
    notes = []
    if args.E:
        E = load_matrix(args.E)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            if args.method == "projected":
                basis = stabilizer_algebra(E)
                if basis.dimension == 0:
                    raise DomainError("stabiliser algebra of E is trivial")
                res = ascend_projected(A, C, basis, cfg, E=E)
            else:
                res = ascend_invariance_lagrange(A, C, E, cfg, record_paths=args.trajectories)
        for w in caught:
            notes.append(str(w.message))
            print(f"warning: {w.message}", file=sys.stderr)
        inputs = {"A": args.A, "C": args.C, "E": args.E}
    else:
        D = load_matrix(args.D)
        res = ascend_orthogonality(A, C, D, cfg, record_paths=args.trajectories)
        inputs = {"A": args.A, "C": args.C, "D": args.D}
    out = _outdir(args)
    rec = res.to_record()
    write_json(out / "constrained.json", rec)
    if args.trajectories and res.paths:
        rows = []
        for i, path in enumerate(res.paths):
            if path is None:
                continue
            if isinstance(path, tuple):
                fC, fD = path
            else:
                fC, fD = np.asarray(path), np.full(len(path), np.nan)
            for k, (a, b) in enumerate(zip(fC, fD)):
                rows.append((i, k, a.real, a.imag, b.real, b.imag))
        write_csv(out / "trajectories.csv", ["restart", "step", "re_fC", "im_fC", "re_fD", "im_fD"], rows)
    _manifest(args, inputs, out, t0, notes)
    sys.stdout.write(dumps(rec))
    return EXIT_OK if res.converged else EXIT_PARTIAL


def cmd_sample_range(args) -> int:
    t0 = time.perf_counter()
    if args.D and args.E:
        raise UsageError("give at most one of --D and --E")
    A, C = _pair(args)
    if args.local:
        pts = sample_local_range(C, A, args.n, args.seed)
    elif args.E:
        pts = sample_constrained_range(A, C, InvarianceConstraint(load_matrix(args.E)), args.n, args.seed)
    elif args.D:
        pts = sample_constrained_range(A, C, OrthogonalityConstraint(load_matrix(args.D)), args.n, args.seed)
    else:
        rng = np.random.default_rng(args.seed)
        pts = np.array([np.vdot(C, U @ A @ U.conj().T) for U in
                        (haar_random_unitary(A.shape[0], rng) for _ in range(args.n))])
    out = _outdir(args)
    write_csv(out / "samples.csv", ["re", "im"], [(z.real, z.imag) for z in pts])
    if args.svg:
        (out / "samples.svg").write_text(render([Series(pts, "dots", "samples", radius=1.2)], "sampled range"))
    _manifest(args, {"A": args.A, "C": args.C, "D": args.D, "E": args.E}, out, t0)
    print(f"{len(pts)} samples written to {out / 'samples.csv'}")
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cnrange", description="C-numerical ranges by gradient flows on unitary groups.")
    p.add_argument("--version", action="version", version=f"cnrange {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out_default=None, restarts=True):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=None,
                        help="parallel restarts (default: $CNRANGE_THREADS or CPU count)")
        sp.add_argument("--out", default=out_default, help="output directory")
        if restarts:
            sp.add_argument("--restarts", type=int, default=None)
        sp.add_argument("--max-iters", dest="max_iters", type=int, default=None)

    b = sub.add_parser("boundary", help="trace the boundary of W(C,A)")
    b.add_argument("--A", required=True)
    b.add_argument("--C", required=True)
    b.add_argument("--m", type=int, default=64)
    b.add_argument("--svg", action="store_true")
    b.add_argument("--method", choices=["multiplier", "penalty"], default="multiplier")
    b.add_argument("--step-rule", dest="step_rule", choices=["bb", "doubling"], default="bb")
    common(b, ".")
    b.set_defaults(func=cmd_boundary)

    for name, local in (("radius", False), ("local-radius", True)):
        r = sub.add_parser(name, help="C-numerical radius" + (" over local unitaries" if local else ""))
        r.add_argument("--A", required=True)
        r.add_argument("--C", required=True)
        if not local:
            r.add_argument("--local", action="store_true")
        r.add_argument("--step-rule", dest="step_rule", choices=["bb", "doubling"], default="bb")
        common(r)
        r.set_defaults(func=cmd_local_radius if local else cmd_radius)

    e = sub.add_parser("entanglement-scan", help="distance to product states along a state family")
    e.add_argument("--family", choices=["psi3", "psi4", "file"], required=True)
    e.add_argument("--state", nargs="+", default=None, help="state JSON file(s) for --family file")
    e.add_argument("--grid", type=int, default=21)
    e.add_argument("--svg", action="store_true")
    e.add_argument("--step-rule", dest="step_rule", choices=["bb", "doubling"], default="bb")
    common(e, ".")
    e.set_defaults(func=cmd_entanglement_scan)

    v = sub.add_parser("reversal", help="local sign reversibility of a Hamiltonian")
    v.add_argument("--H", default=None)
    v.add_argument("--normal-form", dest="normal_form", default=None)
    v.add_argument("--step-rule", dest="step_rule", choices=["bb", "doubling"], default="bb")
    common(v)
    v.set_defaults(func=cmd_reversal)

    c = sub.add_parser("constrained", help="constrained transfer maximisation")
    c.add_argument("--A", required=True)
    c.add_argument("--C", required=True)
    c.add_argument("--D", default=None)
    c.add_argument("--E", default=None)
    c.add_argument("--method", choices=["lagrange", "projected"], default="lagrange")
    c.add_argument("--trajectories", action="store_true")
    c.add_argument("--step-rule", dest="step_rule", choices=["bb", "doubling"], default="bb")
    common(c, ".")
    c.set_defaults(func=cmd_constrained)

    s = sub.add_parser("sample-range", help="random samples of W(C,A) or a restricted range")
    s.add_argument("--A", required=True)
    s.add_argument("--C", required=True)
    s.add_argument("--n", type=int, default=2000)
    s.add_argument("--local", action="store_true")
    s.add_argument("--D", default=None)
    s.add_argument("--E", default=None)
    s.add_argument("--svg", action="store_true")
    common(s, ".", restarts=False)
    s.set_defaults(func=cmd_sample_range)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, DomainError, DimensionError, SizeError, UsageError, SamplingInfeasible) as exc:
        print(f"cnrange {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"cnrange {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
