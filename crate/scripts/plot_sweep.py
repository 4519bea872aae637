#!/usr/bin/env python3
"""Plot sqrt(n_th) against the asymmetry a from `pciclone sweep` CSV.

    pciclone sweep 8 9 16 32 64 --a-steps 1000 --out sweep.csv
    python3 scripts/plot_sweep.py sweep.csv sweep.png
"""

import csv
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def main(src, dst):
    curves = defaultdict(list)
    with open(src, newline="") as f:
        for row in csv.DictReader(f):
            curves[float(row["M"])].append((float(row["a"]), float(row["sqrt_n_th"])))

    fig, ax = plt.subplots(figsize=(5, 4))
    for m, pts in sorted(curves.items()):
        a, s = zip(*sorted(pts))
        ax.plot(a, s, label=f"M = {m:g}")
    ax.set_xlabel("a = N'/n")
    ax.set_ylabel(r"$\sqrt{n_{th}}$")
    ax.legend()
    fig.tight_layout()
    fig.savefig(dst, dpi=150)


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    main(sys.argv[1], sys.argv[2])
