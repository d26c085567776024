"""Aggregate harness CSV rows into per-scheme curves and render them.

The three families share one recipe: group the sum-rate column by scheme
and by the family's x column, then draw the across-trial mean with a
standard-error band. Everything here works from the CSV alone.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

# family -> (x column, default x label)
FAMILIES = {
    "convergence": ("iteration", "outer iteration"),
    "region": ("sweep_value", "normalized region size A/lambda"),
    "power": ("sweep_value", "transmit power (dBm)"),
}

REQUIRED = ("scheme", "trial", "sweep_value", "iteration", "sum_rate")


@dataclass
class FigureSpec:
    input_path: str
    family: str
    out_path: str
    schemes: tuple = None   # None keeps every scheme, in file order
    xlabel: str = None
    ylabel: str = "sum rate (bit/s/Hz)"


def load_rows(path):
    """CSV rows as dicts with numeric fields converted; schema-checked."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED if c not in header]
        if missing:
            raise ValueError(f"input is missing required columns: {', '.join(missing)}")
        rows = []
        for rec in reader:
            rows.append({
                "scheme": rec["scheme"],
                "trial": int(rec["trial"]),
                "sweep_value": float(rec["sweep_value"]),
                "iteration": int(rec["iteration"]),
                "sum_rate": float(rec["sum_rate"]),
            })
    return rows


def family_curves(rows, family, schemes=None):
    """Per-scheme (x, mean, stderr, count) arrays for one figure family."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family '{family}' (have: {', '.join(FAMILIES)})")
    xcol = FAMILIES[family][0]
    if schemes is None:
        seen = []
        for r in rows:
            if r["scheme"] not in seen:
                seen.append(r["scheme"])
        schemes = tuple(seen)
    curves = {}
    for scheme in schemes:
        groups = {}
        for r in rows:
            if r["scheme"] == scheme:
                groups.setdefault(r[xcol], []).append(r["sum_rate"])
        if not groups:
            raise ValueError(f"no rows for scheme '{scheme}'")
        xs = np.array(sorted(groups))
        means = np.empty_like(xs, dtype=float)
        errs = np.empty_like(xs, dtype=float)
        counts = np.empty_like(xs, dtype=int)
        for i, x in enumerate(xs):
            vals = np.array(groups[x])
            means[i] = vals.mean()
            errs[i] = vals.std(ddof=1) / math.sqrt(vals.size) if vals.size > 1 else 0.0
            counts[i] = vals.size
        curves[scheme] = (xs, means, errs, counts)
    return curves


def render_family(spec):
    """Build the figure without saving; returns (figure, curves drawn)."""
    rows = load_rows(spec.input_path)
    curves = family_curves(rows, spec.family, spec.schemes)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for scheme, (xs, means, errs, _) in curves.items():
        ax.plot(xs, means, marker="o", markersize=3, label=scheme)
        ax.fill_between(xs, means - errs, means + errs, alpha=0.2)
    ax.set_xlabel(spec.xlabel or FAMILIES[spec.family][1])
    ax.set_ylabel(spec.ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return fig, curves


def plot_family(spec):
    """Render one family figure to spec.out_path; returns the curves drawn."""
    fig, curves = render_family(spec)
    fig.savefig(spec.out_path, dpi=150)
    plt.close(fig)
    return curves
