"""Construct the reference fixtures, run every check and write one JSON report each."""
import argparse
import json
import os
import time

from hcmu.classify import AngleSpec, Role, classify
from hcmu.curvature import build_metric
from hcmu.oneform import GaugeSpec, build_form
from hcmu.validate import Thresholds, verify_model

FIXTURES = [
    ("football-2", 2.0, None, 0, 1, Role.ABSENT),
    ("saddle-2-21", 2.0, None, 2, 1, Role.ABSENT),
    ("saddle-4-32", 4.0, None, 3, 2, Role.ABSENT),
    ("mixed-3-2-21", 3.0, 2.0, 2, 1, Role.MAX),
    ("mixed-5-1.5-32", 5.0, 1.5, 3, 2, Role.MAX),
    ("football-0.5", 0.5, None, 1, 0, Role.ABSENT),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="results/fixtures")
    ap.add_argument("--grid", type=int, default=256)
    ap.add_argument("--tol", type=float, default=1e-4)
    args = ap.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    for name, a, b, i1, i2, role2 in FIXTURES:
        p = [p for p in classify(AngleSpec(a, b)) if p.i1 == i1 and p.i2 == i2 and p.role2 == role2][0]
        start = time.perf_counter()
        model = build_metric(build_form(p, gauge=GaugeSpec(-1, 2)))
        rep = verify_model(model, thresholds=Thresholds(quad_tol=args.tol), curvature_grid=args.grid)
        dt = time.perf_counter() - start
        print(f"== {name}  ({dt:.1f} s)\n{rep.table()}\n")
        with open(os.path.join(args.out_dir, f"{name}.json"), "w") as fh:
            json.dump({"model": model.to_json(), "report": rep.to_json(), "seconds": dt}, fh, indent=2, default=float)


if __name__ == "__main__":
    main()
