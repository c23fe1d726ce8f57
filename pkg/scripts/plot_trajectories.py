"""Plot paths and error traces from a CSV written by ``se2track run``.

    python scripts/plot_trajectories.py example5.csv [-o example5.png]
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv", type=Path)
    ap.add_argument("-o", "--out", type=Path)
    args = ap.parse_args(argv)

    data = np.genfromtxt(args.csv, delimiter=",", names=True)
    nodes = np.unique(data["node"]).astype(int)

    fig, (ax_xy, ax_err) = plt.subplots(1, 2, figsize=(11, 4.5))
    for i in nodes:
        d = data[data["node"] == i]
        label = "leader" if i == 0 else f"robot {i}"
        color = f"C{i % 10}"
        ax_xy.plot(d["x"], d["y"], lw=1.2, color=color, label=label)
        ax_xy.plot(d["x"][0], d["y"][0], "o", ms=4, color=color)
        if i:
            ax_err.semilogy(d["t"], np.maximum(d["err_pose"], 1e-12), lw=1.2, color=color, label=label)
    ax_xy.set_xlabel("x [m]")
    ax_xy.set_ylabel("y [m]")
    ax_xy.set_aspect("equal", adjustable="datalim")
    ax_xy.legend(fontsize=8)
    ax_err.set_xlabel("t [s]")
    ax_err.set_ylabel("pose error")
    ax_err.legend(fontsize=8)
    fig.tight_layout()

    out = args.out or args.csv.with_suffix(".png")
    fig.savefig(out, dpi=120)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
