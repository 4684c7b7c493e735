#!/usr/bin/env python3
"""Render atlas / verify-linear / residual-check / snapshot outputs with matplotlib.

    plot.py atlas OUT_DIR [--n-axis]
    plot.py convergence OUT_DIR
    plot.py residual OUT_DIR
    plot.py snapshot OUT_DIR
"""
import argparse
import glob
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

COLORS = {"plus": "tab:blue", "minus": "tab:red", "trivial": "0.5"}


def atlas(out, n_axis):
    df = pd.read_csv(os.path.join(out, "branches.csv"))
    x = "n [1]" if n_axis else "alpha [1]"
    fig, ax = plt.subplots(figsize=(7, 4))
    for bid, branch in df.groupby("branch_id"):
        ax.plot(branch[x], branch["norm_sq [1]"], color="0.8", lw=0.8, zorder=1)
        for cls, part in branch.groupby("class"):
            ax.scatter(part[x], part["norm_sq [1]"], s=4, color=COLORS.get(cls, "k"), label=cls, zorder=2)
    folds = os.path.join(out, "folds.csv")
    if os.path.exists(folds):
        f = pd.read_csv(folds)
        if len(f):
            ax.axvline(f[x].iloc[0], ls=":", color="k", lw=0.8)
    handles, labels = ax.get_legend_handles_labels()
    uniq = dict(zip(labels, handles))
    ax.legend(uniq.values(), uniq.keys())
    ax.set_xlabel("n" if n_axis else "alpha")
    ax.set_ylabel("||v||_2^2")
    fig.tight_layout()
    fig.savefig(os.path.join(out, "atlas.png"), dpi=150)


def convergence(out):
    df = pd.read_csv(os.path.join(out, "verify_linear.csv"))
    fig, ax = plt.subplots(figsize=(5, 4))
    for n, part in df.groupby("n [1]"):
        ax.semilogy(part["N [1]"], part["error [1]"], "o-", label=f"n = {n}")
    ax.set_xlabel("N")
    ax.set_ylabel("max grid error")
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(out, "convergence.png"), dpi=150)


def residual(out):
    df = pd.read_csv(os.path.join(out, "residual.csv"))
    fig, ax = plt.subplots(figsize=(6, 4))
    t = df.columns[0]
    for col in df.columns[1:]:
        ax.plot(df[t], df[col], label=col.replace(" [1]", ""))
    ax.set_xlabel("t")
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(out, "residual.png"), dpi=150)


def snapshot(out):
    for path in sorted(glob.glob(os.path.join(out, "snapshot_*_*.csv"))):
        df = pd.read_csv(path)
        fig, ax = plt.subplots(figsize=(5, 3))
        ax.plot(df.iloc[:, 0], df.iloc[:, 1])
        ax.set_xlim(0, 30)
        ax.set_xlabel("t")
        ax.set_title(os.path.basename(path)[:-4])
        fig.tight_layout()
        fig.savefig(path[:-4] + ".png", dpi=120)
        plt.close(fig)


def main():
    p = argparse.ArgumentParser()
    p.add_argument("kind", choices=["atlas", "convergence", "residual", "snapshot"])
    p.add_argument("out")
    p.add_argument("--n-axis", action="store_true", help="plot against n = log 2 / log alpha")
    a = p.parse_args()
    if a.kind == "atlas":
        atlas(a.out, a.n_axis)
    elif a.kind == "convergence":
        convergence(a.out)
    elif a.kind == "residual":
        residual(a.out)
    else:
        snapshot(a.out)


if __name__ == "__main__":
    main()
