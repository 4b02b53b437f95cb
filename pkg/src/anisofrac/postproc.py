"""Quantitative extraction from converged damage fields.

Crack paths are summarised by a total-least-squares line through the
heavily damaged nodes; the band width is the mean transverse extent of the
half-damaged region about that line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .mesh import Mesh

__all__ = ["CrackPath", "NoCrackError", "crack_path_fit", "band_width"]


class NoCrackError(RuntimeError):
    """Not enough damaged nodes to identify a crack."""


@dataclass
class CrackPath:
    points: np.ndarray      # selected node coordinates (k, 2)
    centroid: np.ndarray
    direction: np.ndarray   # unit vector of the fitted line
    angle_deg: float        # in (-90, 90]
    rms: float              # RMS perpendicular deviation


def _exclusion_mask(pts: np.ndarray, exclude) -> np.ndarray:
    """True where a point is excluded from the fit."""
    if exclude is None:
        return np.zeros(len(pts), dtype=bool)
    if callable(exclude):
        return np.asarray(exclude(pts), dtype=bool)
    center, radius = exclude
    return np.linalg.norm(pts - np.asarray(center, float), axis=1) < radius


def _line_angle_deg(direction: np.ndarray) -> float:
    ang = math.degrees(math.atan2(direction[1], direction[0]))
    if ang <= -90.0:
        ang += 180.0
    elif ang > 90.0:
        ang -= 180.0
    return ang


def crack_path_fit(mesh: Mesh, d: np.ndarray, d_cut: float = 0.95,
                   exclude=None) -> CrackPath:
    """Total-least-squares line through nodes with d >= d_cut.

    `exclude` masks the initial notch region: None, a (center, radius)
    disk, or a callable on point arrays.  Raises NoCrackError with fewer
    than 5 selected nodes.
    """
    sel = np.asarray(d) >= d_cut
    pts = mesh.nodes[sel]
    pts = pts[~_exclusion_mask(pts, exclude)]
    if len(pts) < 5:
        raise NoCrackError(f"only {len(pts)} nodes above d = {d_cut}")
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    direction = vt[0]
    perp = centered @ np.array([-direction[1], direction[0]])
    return CrackPath(points=pts, centroid=centroid, direction=direction,
                     angle_deg=_line_angle_deg(direction),
                     rms=float(np.sqrt(np.mean(perp ** 2))))


def band_width(mesh: Mesh, d: np.ndarray, path: CrackPath,
               level: float = 0.5, exclude=None) -> float:
    """Mean transverse extent of the d >= level region about the crack line.

    Nodes are binned by their coordinate along the fitted line (bin size of
    one element); each bin contributes the spread of its perpendicular
    offsets plus one node spacing, and the widths are averaged.
    """
    sel = np.asarray(d) >= level
    pts = mesh.nodes[sel]
    pts = pts[~_exclusion_mask(pts, exclude)]
    if len(pts) < 2:
        raise NoCrackError(f"no band at level d = {level}")
    h = mesh.char_length()
    rel = pts - path.centroid
    along = rel @ path.direction
    perp = rel @ np.array([-path.direction[1], path.direction[0]])
    bins = np.round(along / h).astype(int)
    widths = []
    for b in np.unique(bins):
        p = perp[bins == b]
        if len(p) >= 2:
            widths.append(float(p.max() - p.min()) + h)
    if not widths:
        raise NoCrackError("band too sparse to measure")
    return float(np.mean(widths))
