#!/usr/bin/env python3
"""Regenerate data/wdbc.csv from scikit-learn's bundled copy of the UCI
Breast Cancer Wisconsin (Diagnostic) dataset.

The exported layout matches the canonical file: id, diagnosis (M/B), then the
30 numeric features. Sequential ids are synthesized (the loader ignores the
id column). Needs scikit-learn, which is a tooling dependency only; the
committed CSV is what the package and tests consume.
"""

import csv
import sys
from pathlib import Path

from sklearn.datasets import load_breast_cancer

MEASURES = (
    "radius", "texture", "perimeter", "area", "smoothness",
    "compactness", "concavity", "concave_points", "symmetry", "fractal_dimension",
)
FEATURE_NAMES = [f"{m}_{suffix}" for suffix in ("mean", "se", "worst") for m in MEASURES]


def main() -> int:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("data/wdbc.csv")
    bunch = load_breast_cancer()
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "diagnosis", *FEATURE_NAMES])
        for i, (row, target) in enumerate(zip(bunch.data, bunch.target), start=1):
            diagnosis = "M" if target == 0 else "B"
            writer.writerow([i, diagnosis, *[repr(float(v)) for v in row]])
    print(f"wrote {out} ({len(bunch.target)} rows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
