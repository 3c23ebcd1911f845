"""Orthogonality-constrained maxima of |f_C| for WCAD3 against W(C,A).

    python3 scripts/fig3_wcad3_constrained.py --restarts 100 --out results/fig3
"""
import argparse
from pathlib import Path

import numpy as np

from cnrange.constrained import OrthogonalityConstraint, ascend_orthogonality, sample_constrained_range
from cnrange.flows import FlowConfig
from cnrange.geometry import polygon_contains, polygon_distance, trace_boundary
from cnrange.io import load_matrix, write_csv, write_json
from cnrange.svg import Series, render

DATA = Path(__file__).resolve().parent.parent / "data"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--restarts", type=int, default=100)
    ap.add_argument("--m", type=int, default=256)
    ap.add_argument("--samples", type=int, default=500)
    ap.add_argument("--out", default="results/fig3")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    A, C, D = (load_matrix(DATA / f"wcad3_{x}.json") for x in "ACD")

    res = ascend_orthogonality(A, C, D, FlowConfig(restarts=args.restarts - 1), record_paths=True)
    curve = trace_boundary(A, C, m=args.m)
    cloud = sample_constrained_range(A, C, OrthogonalityConstraint(D, m0=res.m0), args.samples)
    ends = np.array([z for z, _ in res.endpoints])

    clusters = []
    for z in ends:
        for c in clusters:
            if abs(z - c["f_C"]) <= 1e-3:
                c["count"] += 1
                break
        else:
            clusters.append({"f_C": z, "count": 1})
    for c in clusters:
        c["distance_to_boundary"] = float(polygon_distance(curve.points, [c["f_C"]])[0])
        c["interior"] = bool(polygon_contains(curve.points, [c["f_C"]])[0]) and c["distance_to_boundary"] > 1e-2
    write_json(out / "summary.json", {"m0": res.m0, "best": res.to_record(), "clusters": clusters})
    rows = [(i, k, z.real, z.imag) for i, (fC, _) in enumerate(res.paths) for k, z in enumerate(fC)]
    write_csv(out / "paths.csv", ["restart", "step", "re_fC", "im_fC"], rows)

    series = [Series(cloud, "dots", "|f_D| = m0 samples", "#bbbbbb", 1.2),
              Series(curve.points, "closed", "boundary of W(C,A)")]
    for fC, _ in res.paths[:10]:
        if len(fC):
            series.append(Series(fC, "line", color="#ff7f0e"))
    series.append(Series([c["f_C"] for c in clusters], "dots", "constrained maxima", "#d62728", 4.0))
    (out / "fig3.svg").write_text(render(series, "WCAD3: maxima of |f_C| with f_D = 0"))
    print(f"m0 = {res.m0:.2e}; {len(clusters)} clusters")
    for c in clusters:
        print(f"  f_C = {c['f_C']:.6f}  x{c['count']}  distance {c['distance_to_boundary']:.2e}"
              + ("  interior" if c["interior"] else ""))


if __name__ == "__main__":
    main()
