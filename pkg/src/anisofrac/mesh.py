"""Structured quadrilateral meshes for the benchmark geometries.

Meshes are axis-aligned tensor grids with three extensions the benchmarks
need: an edge notch realised as a geometric slit (duplicated nodes), a
kinked mid-row so an inclined cohesive plane can coincide with element
edges, and optional vertical grading to concentrate resolution in the
expected damage band.  A Mesh is treated as immutable once built.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "Mesh", "InterfaceElement", "MeshError",
    "HalfPlane", "Band", "Polygon", "Everywhere",
    "generate_sent", "generate_three_point_bending",
    "assign_regions", "insert_interface", "boundary_dofs",
]

_GAUSS = 1.0 / math.sqrt(3.0)
_GP = np.array([[-_GAUSS, -_GAUSS], [_GAUSS, -_GAUSS],
                [_GAUSS, _GAUSS], [-_GAUSS, _GAUSS]])


class MeshError(ValueError):
    """Invalid mesh geometry or topology."""


@dataclass(frozen=True)
class InterfaceElement:
    """Zero-thickness 4-node interface element.

    `lower` holds the node pair on the negative side of the interface
    normal, `upper` the initially coincident pair on the positive side.
    Equal ids within a pair are allowed at a closed crack tip.
    """

    lower: tuple[int, int]
    upper: tuple[int, int]
    tangent: np.ndarray   # unit vector along the interface
    normal: np.ndarray    # unit vector, lower -> upper side
    length: float


@dataclass
class Mesh:
    nodes: np.ndarray                    # (n_nodes, 2)
    quads: np.ndarray                    # (n_elements, 4), counter-clockwise
    region_id: np.ndarray                # (n_elements,)
    boundary_sets: dict[str, np.ndarray] = field(default_factory=dict)
    interfaces: list[InterfaceElement] = field(default_factory=list)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.quads.shape[0]

    def element_areas(self) -> np.ndarray:
        """Areas via the shoelace formula (exact for straight-edged quads)."""
        x = self.nodes[self.quads, 0]
        y = self.nodes[self.quads, 1]
        return 0.5 * np.abs(
            np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y, axis=1))

    def jacobians(self) -> np.ndarray:
        """det J at the 2x2 Gauss points, shape (n_elements, 4)."""
        xy = self.nodes[self.quads]          # (ne, 4, 2)
        out = np.empty((self.n_elements, 4))
        for g, (xi, eta) in enumerate(_GP):
            dn = _dshape(xi, eta)            # (4, 2)
            j = np.einsum("ki,ekj->eij", dn, xy)
            out[:, g] = j[:, 0, 0] * j[:, 1, 1] - j[:, 0, 1] * j[:, 1, 0]
        return out

    def char_length(self) -> float:
        return float(np.sqrt(np.median(self.element_areas())))


def _dshape(xi: float, eta: float) -> np.ndarray:
    # bilinear shape function derivatives w.r.t. (xi, eta)
    return 0.25 * np.array([
        [-(1 - eta), -(1 - xi)],
        [(1 - eta), -(1 + xi)],
        [(1 + eta), (1 + xi)],
        [-(1 + eta), (1 - xi)],
    ])


# ---------------------------------------------------------------------------
# Region shapes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HalfPlane:
    """Points with (p - point) . normal >= 0."""

    point: tuple[float, float]
    normal: tuple[float, float]

    def contains(self, pts: np.ndarray) -> np.ndarray:
        n = np.asarray(self.normal, float)
        return (pts - np.asarray(self.point)) @ n >= 0.0


@dataclass(frozen=True)
class Band:
    """Strip of given width about a line through `point` at angle `angle`."""

    point: tuple[float, float]
    angle: float   # [rad]
    width: float

    def contains(self, pts: np.ndarray) -> np.ndarray:
        n = np.array([-math.sin(self.angle), math.cos(self.angle)])
        dist = np.abs((pts - np.asarray(self.point)) @ n)
        return dist <= 0.5 * self.width


@dataclass(frozen=True)
class Polygon:
    vertices: tuple[tuple[float, float], ...]

    def contains(self, pts: np.ndarray) -> np.ndarray:
        # even-odd ray casting
        v = np.asarray(self.vertices, float)
        x, y = pts[:, 0], pts[:, 1]
        inside = np.zeros(len(pts), dtype=bool)
        j = len(v) - 1
        for i in range(len(v)):
            xi, yi = v[i]
            xj, yj = v[j]
            cross = (yi > y) != (yj > y)
            xint = (xj - xi) * (y - yi) / (yj - yi + 1e-300) + xi
            inside ^= cross & (x < xint)
            j = i
        return inside


@dataclass(frozen=True)
class Everywhere:
    def contains(self, pts: np.ndarray) -> np.ndarray:
        return np.ones(len(pts), dtype=bool)


# ---------------------------------------------------------------------------
# Grid construction helpers
# ---------------------------------------------------------------------------

def _axis(total: float, h: float) -> np.ndarray:
    n = max(int(round(total / h)), 1)
    return np.linspace(0.0, total, n + 1)


def _graded_axis(total: float, center: float, half_band: float, h: float,
                 h_coarse: float, ratio: float = 1.25) -> np.ndarray:
    """Node coordinates: spacing h inside |y - center| <= half_band, growing
    geometrically up to h_coarse outside, rescaled to hit 0 and `total`."""
    if not 0.0 < center < total:
        raise MeshError("refinement band center must be interior")
    lo = max(center - half_band, 0.0)
    hi = min(center + half_band, total)

    def grade(gap: float) -> np.ndarray:
        if gap <= h * 1e-12:
            return np.array([])
        steps = []
        s, acc = h, 0.0
        while acc < gap:
            s = min(s * ratio, h_coarse)
            steps.append(s)
            acc += s
        steps = np.array(steps)
        return steps * (gap / steps.sum())

    # integer number of h-steps each side of the center so that the center
    # itself is a node
    n_half = max(int(round((center - lo) / h)), 1), \
        max(int(round((hi - center) / h)), 1)
    band = np.concatenate([center - h * np.arange(n_half[0], 0, -1),
                           [center],
                           center + h * np.arange(1, n_half[1] + 1)])
    lo, hi = band[0], band[-1]
    below = lo - np.cumsum(grade(lo))[::-1] if lo > h * 1e-9 else np.array([])
    above = hi + np.cumsum(grade(total - hi)) if hi < total - h * 1e-9 \
        else np.array([])
    ys = np.concatenate([below, band, above])
    ys[0], ys[-1] = 0.0, total
    return ys


def _build_grid(xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    nx, ny = len(xs) - 1, len(ys) - 1
    xg, yg = np.meshgrid(xs, ys)                  # row-major: j * (nx+1) + i
    nodes = np.column_stack([xg.ravel(), yg.ravel()])
    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i, j = i.ravel(), j.ravel()
    n0 = j * (nx + 1) + i
    quads = np.column_stack([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1])
    return nodes, quads


def _coord_set(nodes: np.ndarray, axis: int, value: float, tol: float) -> np.ndarray:
    return np.flatnonzero(np.abs(nodes[:, axis] - value) < tol)


def _insert_slit(nodes: np.ndarray, quads: np.ndarray, y_slit: float,
                 x_end: float, tol: float) -> tuple[np.ndarray, np.ndarray, int]:
    """Duplicate nodes on y = y_slit with x < x_end; elements above the slit
    line take the duplicates.  Returns (nodes, quads, n_duplicated)."""
    on_line = np.abs(nodes[:, 1] - y_slit) < tol
    to_dup = np.flatnonzero(on_line & (nodes[:, 0] < x_end - tol))
    if len(to_dup) == 0:
        return nodes, quads, 0
    new_ids = np.arange(len(nodes), len(nodes) + len(to_dup))
    nodes = np.vstack([nodes, nodes[to_dup]])
    remap = dict(zip(to_dup.tolist(), new_ids.tolist()))

    cy = nodes[quads, 1].mean(axis=1)
    above = cy > y_slit
    quads = quads.copy()
    for e in np.flatnonzero(above):
        for k in range(4):
            quads[e, k] = remap.get(quads[e, k], quads[e, k])
    return nodes, quads, len(to_dup)


def _validate(mesh: Mesh) -> Mesh:
    if mesh.quads.min() < 0 or mesh.quads.max() >= mesh.n_nodes:
        raise MeshError("connectivity index out of range")
    if mesh.jacobians().min() <= 0.0:
        raise MeshError("non-positive Jacobian in generated mesh")
    return mesh


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def generate_sent(lx: float, ly: float, l0: float, h: float, *,
                  refine_half_band: Optional[float] = None,
                  h_coarse: Optional[float] = None,
                  path_angle: float = 0.0) -> Mesh:
    """Single-edge-notched rectangle [0,lx] x [0,ly].

    The notch is a horizontal slit at mid-height from x = 0 to x = l0,
    realised by node duplication; the node at the tip stays shared.

    Parameters
    ----------
    lx, ly, l0 : float
        Plate dimensions and notch length (0 <= l0 < lx).
    h : float
        Target element size.
    refine_half_band : float, optional
        If given, rows are spaced h only within that distance of the slit
        line and graded geometrically outside (up to ``h_coarse``,
        default 6 h).
    path_angle : float, optional
        Kinks the mid grid-line upward at this angle [rad] beyond the notch
        tip, so an inclined cohesive plane starting at the tip lies on
        element edges.  Rows morph linearly back to horizontal at the top
        and bottom boundaries.
    """
    if not (0.0 <= l0 < lx):
        raise MeshError("need 0 <= l0 < lx")
    if h > min(lx, ly) / 4.0:
        raise MeshError("element size too coarse for the geometry")
    xs = _axis(lx, h)
    yc = 0.5 * ly
    if refine_half_band is None:
        ys = _axis(ly, h)
        if len(ys) % 2 == 0:              # ensure a node row at mid-height
            ys = _axis(ly, ly / (len(ys)))
    else:
        ys = _graded_axis(ly, yc, refine_half_band, h, h_coarse or 6.0 * h)
    if not np.any(np.abs(ys - yc) < 1e-9 * ly):
        raise MeshError("mid-height must coincide with a node row")

    nodes, quads = _build_grid(xs, ys)

    if path_angle != 0.0:
        # shift rows so the mid line follows the kinked path beyond the tip
        shift = np.maximum(nodes[:, 0] - l0, 0.0) * math.tan(path_angle)
        scale = 1.0 - np.abs(nodes[:, 1] - yc) / yc
        nodes = nodes.copy()
        nodes[:, 1] += shift * np.clip(scale, 0.0, 1.0)

    tol = 1e-9 * max(lx, ly)
    if l0 > 0.0:
        i_tip = int(round(l0 / (xs[1] - xs[0])))
        if abs(xs[i_tip] - l0) > 0.25 * h:
            warnings.warn("notch length snapped to the nearest grid line")
        nodes, quads, _ = _insert_slit(nodes, quads, yc, xs[i_tip], tol)

    sets = {
        "bottom": _coord_set(nodes, 1, 0.0, tol),
        "top": _coord_set(nodes, 1, ly, tol),
        "left": _coord_set(nodes, 0, 0.0, tol),
        "right": _coord_set(nodes, 0, lx, tol),
    }
    mesh = Mesh(nodes=nodes, quads=quads,
                region_id=np.zeros(len(quads), dtype=int),
                boundary_sets=sets)
    return _validate(mesh)


def generate_three_point_bending(span: float, height: float, h: float) -> Mesh:
    """Rectangular beam with corner supports and a top-centre load point."""
    if span <= 0 or height <= 0:
        raise MeshError("dimensions must be positive")
    if h > min(span, height) / 4.0:
        raise MeshError("element size too coarse for the geometry")
    xs = _axis(span, h)
    if len(xs) % 2 == 0:                  # node column at midspan
        xs = _axis(span, span / len(xs))
    ys = _axis(height, h)
    nodes, quads = _build_grid(xs, ys)
    tol = 1e-9 * max(span, height)
    bottom = _coord_set(nodes, 1, 0.0, tol)
    top = _coord_set(nodes, 1, height, tol)
    supports = np.array([
        bottom[np.argmin(nodes[bottom, 0])],
        bottom[np.argmax(nodes[bottom, 0])],
    ])
    load = top[np.abs(nodes[top, 0] - 0.5 * span) < 0.5 * h]
    sets = {
        "bottom": bottom, "top": top,
        "left": _coord_set(nodes, 0, 0.0, tol),
        "right": _coord_set(nodes, 0, span, tol),
        "supports": supports,
        "load_point": load,
    }
    mesh = Mesh(nodes=nodes, quads=quads,
                region_id=np.zeros(len(quads), dtype=int),
                boundary_sets=sets)
    return _validate(mesh)


def assign_regions(mesh: Mesh, regions: Sequence[tuple[object, int]]) -> Mesh:
    """Set per-element region ids by centroid membership, first match wins.

    The last entry should cover everything (e.g. ``Everywhere()``);
    unassigned centroids raise.
    """
    centroids = mesh.nodes[mesh.quads].mean(axis=1)
    rid = np.full(mesh.n_elements, -1, dtype=int)
    for shape, region in regions:
        mask = (rid < 0) & np.asarray(shape.contains(centroids), dtype=bool)
        rid[mask] = region
    if np.any(rid < 0):
        raise MeshError("regions do not cover all element centroids")
    return replace(mesh, region_id=rid)


# ---------------------------------------------------------------------------
# Interface insertion
# ---------------------------------------------------------------------------

def _edges_of(quads: np.ndarray) -> set[tuple[int, int]]:
    e = set()
    for q in quads:
        for k in range(4):
            a, b = int(q[k]), int(q[(k + 1) % 4])
            e.add((min(a, b), max(a, b)))
    return e


def insert_interface(mesh: Mesh, p0, p1) -> Mesh:
    """Insert zero-thickness interface elements along the segment p0 -> p1.

    The segment must coincide with a chain of element edges.  Nodes along
    it are duplicated (segment endpoints only when they lie on the domain
    boundary); elements on the positive-normal side are rewired to the
    duplicates and one InterfaceElement is created per edge.
    """
    p0 = np.asarray(p0, float)
    p1 = np.asarray(p1, float)
    direction = p1 - p0
    length = float(np.hypot(*direction))
    if length <= 0.0:
        raise MeshError("degenerate interface segment")
    t_hat = direction / length
    n_hat = np.array([-t_hat[1], t_hat[0]])

    tol = mesh.char_length() * 1e-6
    rel = mesh.nodes - p0
    s = rel @ t_hat
    dist = np.abs(rel @ n_hat)
    on_seg = (dist < tol) & (s > -tol) & (s < length + tol)
    chain = np.flatnonzero(on_seg)
    if len(chain) < 2:
        raise MeshError("interface segment does not follow mesh nodes")
    chain = chain[np.argsort(s[chain])]

    edges = _edges_of(mesh.quads)
    for a, b in zip(chain[:-1], chain[1:]):
        if (min(a, b), max(a, b)) not in edges:
            raise MeshError("interface segment is not edge-aligned")

    centroids = mesh.nodes[mesh.quads].mean(axis=1)
    side = (centroids - p0) @ n_hat

    # adjacency: which elements touch each chain node, split by side
    touching = {int(c): [] for c in chain}
    for e, q in enumerate(mesh.quads):
        for nid in q:
            if int(nid) in touching:
                touching[int(nid)].append(e)
    pos_elems, neg_elems = set(), set()
    for elems in touching.values():
        for e in elems:
            (pos_elems if side[e] > 0 else neg_elems).add(e)
    if not pos_elems or not neg_elems:
        raise MeshError("interface lies on the domain boundary")

    xmin, ymin = mesh.nodes.min(axis=0)
    xmax, ymax = mesh.nodes.max(axis=0)

    def on_boundary(p) -> bool:
        return (abs(p[0] - xmin) < tol or abs(p[0] - xmax) < tol
                or abs(p[1] - ymin) < tol or abs(p[1] - ymax) < tol)

    nodes = mesh.nodes
    quads = mesh.quads.copy()
    twin = {}
    for k, nid in enumerate(chain):
        interior_end = (k == 0 or k == len(chain) - 1) \
            and not on_boundary(nodes[nid])
        if interior_end:
            twin[int(nid)] = int(nid)      # closed tip: shared node
            continue
        twin[int(nid)] = len(nodes)
        nodes = np.vstack([nodes, nodes[nid]])

    for e in pos_elems:
        for k in range(4):
            nid = int(quads[e, k])
            if nid in twin:
                quads[e, k] = twin[nid]

    interfaces = list(mesh.interfaces)
    for a, b in zip(chain[:-1], chain[1:]):
        seg_len = float(np.hypot(*(mesh.nodes[b] - mesh.nodes[a])))
        interfaces.append(InterfaceElement(
            lower=(int(a), int(b)),
            upper=(twin[int(a)], twin[int(b)]),
            tangent=t_hat.copy(), normal=n_hat.copy(), length=seg_len))

    sets = {}
    for name, ids in mesh.boundary_sets.items():
        extra = [twin[int(i)] for i in ids if int(i) in twin and twin[int(i)] != int(i)]
        sets[name] = np.unique(np.concatenate([ids, np.array(extra, dtype=int)])) \
            if extra else ids

    out = Mesh(nodes=nodes, quads=quads, region_id=mesh.region_id.copy(),
               boundary_sets=sets, interfaces=interfaces)
    return _validate(out)


def boundary_dofs(mesh: Mesh, set_name: str, component: str) -> np.ndarray:
    """Global displacement DOF indices of a named boundary set."""
    if set_name not in mesh.boundary_sets:
        raise KeyError(f"unknown boundary set '{set_name}'")
    ids = mesh.boundary_sets[set_name]
    if component == "x":
        dofs = 2 * ids
    elif component == "y":
        dofs = 2 * ids + 1
    elif component == "both":
        dofs = np.concatenate([2 * ids, 2 * ids + 1])
    else:
        raise ValueError("component must be 'x', 'y' or 'both'")
    return np.unique(dofs)
