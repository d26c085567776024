"""Standalone figure rendering for the beamforming experiment CSVs."""

from .figures import (
    FAMILIES,
    FigureSpec,
    family_curves,
    load_rows,
    plot_family,
    render_family,
)

__all__ = [
    "FAMILIES",
    "FigureSpec",
    "family_curves",
    "load_rows",
    "plot_family",
    "render_family",
]
