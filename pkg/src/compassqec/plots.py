"""SVG figures: logical error rate curves and gap histograms."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # fixed ids and no timestamp keep the SVG bytes reproducible
    plt.rcParams["svg.hashsalt"] = "compassqec"
    return plt


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9.]+", "_", text).strip("_")


def rate_plots(points, fits: dict, out: Path) -> list[str]:
    """One SVG per (ell, deformation, eta, decoder): rate vs p per distance, fitted p_th marked."""
    plt = _pyplot()
    groups: dict[tuple, list] = {}
    for pt in points:
        groups.setdefault((pt.ell, pt.deformation, pt.eta, pt.decoder), []).append(pt)
    names = []
    for (ell, deformation, eta, decoder), pts in sorted(groups.items(), key=lambda kv: repr(kv[0])):
        fig, ax = plt.subplots(figsize=(5, 4))
        for d in sorted({pt.d for pt in pts}):
            row = sorted((pt for pt in pts if pt.d == d), key=lambda pt: pt.p)
            p = np.array([pt.p for pt in row])
            y = np.array([pt.rate for pt in row])
            err = np.array([[pt.rate - pt.ci_low for pt in row], [pt.ci_high - pt.rate for pt in row]])
            ax.errorbar(p, y, yerr=err, marker="o", ms=3, capsize=2, label=f"d={d}")
        fit = fits.get(f"ell={ell}|def={deformation}|eta={eta!r}", {}).get(decoder, {})
        if "p_th" in fit:
            ax.axvline(fit["p_th"], color="k", ls="--", lw=1, label=f"p_th={fit['p_th']:.4g}")
        ax.set_xlabel("p")
        ax.set_ylabel("logical error rate")
        ax.set_title(f"{decoder}, ell={ell}, {deformation}, eta={eta:g}")
        ax.legend(fontsize=8)
        fig.tight_layout()
        name = _slug(f"rates_ell{ell}_{deformation}_eta{eta:g}_{decoder}") + ".svg"
        fig.savefig(out / name, format="svg", metadata={"Date": None})
        plt.close(fig)
        names.append(name)
    return names


def gap_histogram(gaps_db: dict[str, np.ndarray], path: Path, bins: int = 60) -> None:
    """Log-count histogram of signed gaps in dB, one step series per label."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    finite = [np.asarray(g)[np.isfinite(g)] for g in gaps_db.values()]
    allv = np.concatenate(finite) if finite else np.zeros(0)
    lo, hi = (float(allv.min()), float(allv.max())) if allv.size else (-1.0, 1.0)
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    for label, g in gaps_db.items():
        counts, _ = np.histogram(np.asarray(g)[np.isfinite(g)], bins=edges)
        ax.stairs(counts, edges, label=label)
    ax.axvline(0.0, color="k", lw=0.8)
    ax.set_yscale("log")
    ax.set_xlabel("signed gap (dB)")
    ax.set_ylabel("shots")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
