"""Distance to product states along the psi3 and psi4 families.

    python3 scripts/fig2_entanglement_scan.py --grid 21 --out results/fig2
"""
import argparse
from pathlib import Path

import numpy as np

from cnrange.local import entanglement_distance, state_psi3, state_psi4
from cnrange.io import write_csv
from cnrange.svg import Series, render


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, default=21)
    ap.add_argument("--out", default="results/fig2")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    s = np.linspace(0.0, 1.0, args.grid)
    curves = {}
    for name, family in (("psi3", state_psi3), ("psi4", state_psi4)):
        d2 = np.array([entanglement_distance(family(float(x)))[1] for x in s])
        curves[name] = d2
        print(name, " ".join(f"{v:.6f}" for v in d2))
    write_csv(out / "entanglement.csv", ["s", "delta_sq_psi3", "delta_sq_psi4"],
              list(zip(s, curves["psi3"], curves["psi4"])))
    svg = render([Series(s + 1j * curves["psi3"], "line", "psi3"),
                  Series(s + 1j * curves["psi4"], "line", "psi4")],
                 "squared distance to product states", xlabel="s", ylabel="Delta^2", equal=False)
    (out / "fig2.svg").write_text(svg)


if __name__ == "__main__":
    main()
