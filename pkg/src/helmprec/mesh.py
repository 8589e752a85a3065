"""Structured meshes: uniform intervals and triangulated rectangles.

Only two mesh families are supported: uniform 1D interval meshes and
rectangles split into right triangles (two per grid cell). Boundary
facets (endpoints in 1D, edges in 2D) carry one of three tags that
decide the boundary treatment during assembly:

* DIRICHLET  - dof eliminated,
* IMPEDANCE  - lower-order boundary term assembled,
* NEUMANN    - natural condition, no boundary term.

Node ordering is lexicographic by coordinate, so mesh construction is
deterministic and suitable for golden tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidArgumentError


class BoundaryTag(Enum):
    DIRICHLET = "dirichlet"
    IMPEDANCE = "impedance"
    NEUMANN = "neumann"


@dataclass(frozen=True)
class Facet:
    """One boundary facet: its node indices, owning element, and tag."""

    nodes: tuple[int, ...]
    element: int
    tag: BoundaryTag


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable simplicial mesh (1D segments or 2D triangles).

    ``coords`` has shape (n_nodes, dim), ``elements`` shape
    (n_elements, dim + 1). ``h`` is the maximum element diameter and is
    recomputable from the coordinates.
    """

    dimension: int
    coords: np.ndarray
    elements: np.ndarray
    facets: tuple[Facet, ...]
    h: float

    def __post_init__(self):
        self.coords.setflags(write=False)
        self.elements.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return self.coords.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    def element_coords(self, e: int) -> np.ndarray:
        return self.coords[self.elements[e]]

    def element_measures(self) -> np.ndarray:
        """Lengths (1D) or areas (2D) of all elements."""
        pts = self.coords[self.elements]
        if self.dimension == 1:
            return np.abs(pts[:, 1, 0] - pts[:, 0, 0])
        d1 = pts[:, 1] - pts[:, 0]
        d2 = pts[:, 2] - pts[:, 0]
        return 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def element_centroids(self) -> np.ndarray:
        return self.coords[self.elements].mean(axis=1)

    def element_diameters(self) -> np.ndarray:
        pts = self.coords[self.elements]
        if self.dimension == 1:
            return np.abs(pts[:, 1, 0] - pts[:, 0, 0])
        # Triangle diameter equals its longest edge.
        e01 = np.linalg.norm(pts[:, 1] - pts[:, 0], axis=1)
        e12 = np.linalg.norm(pts[:, 2] - pts[:, 1], axis=1)
        e20 = np.linalg.norm(pts[:, 0] - pts[:, 2], axis=1)
        return np.max(np.stack([e01, e12, e20]), axis=0)

    def nodes_with_tag(self, tag: BoundaryTag) -> np.ndarray:
        """Sorted indices of all nodes lying on facets with the given tag."""
        idx: set[int] = set()
        for f in self.facets:
            if f.tag == tag:
                idx.update(f.nodes)
        return np.array(sorted(idx), dtype=int)

    def locate_elements(self, points: np.ndarray) -> np.ndarray:
        """Element index containing each query point (ties broken low).

        Used to re-sample piecewise-constant data onto a refined mesh.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.dimension == 1:
            ends = np.sort(np.unique(self.coords[:, 0]))
            idx = np.searchsorted(ends, points[:, 0], side="right") - 1
            return np.clip(idx, 0, self.n_elements - 1)
        pts = self.coords[self.elements]
        out = np.full(points.shape[0], -1, dtype=int)
        tol = 1e-12 * max(self.h, 1.0)
        for e in range(self.n_elements):
            if np.all(out >= 0):
                break
            a, b, c = pts[e]
            det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
            rel = points - a
            l1 = ((c[1] - a[1]) * rel[:, 0] - (c[0] - a[0]) * rel[:, 1]) / det
            l2 = (-(b[1] - a[1]) * rel[:, 0] + (b[0] - a[0]) * rel[:, 1]) / det
            inside = (l1 >= -tol) & (l2 >= -tol) & (l1 + l2 <= 1 + tol) & (out < 0)
            out[inside] = e
        if np.any(out < 0):
            raise InvalidArgumentError("point outside mesh in locate_elements")
        return out


def build_interval_mesh(
    a: float,
    b: float,
    n: int,
    left_tag: BoundaryTag,
    right_tag: BoundaryTag,
) -> Mesh:
    """Uniform mesh of [a, b] with n elements and tagged endpoints."""
    if n < 1:
        raise InvalidArgumentError(f"element count must be >= 1, got {n}")
    if not a < b:
        raise InvalidArgumentError(f"need a < b, got a={a}, b={b}")
    coords = np.linspace(a, b, n + 1).reshape(-1, 1)
    elements = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    facets = (
        Facet(nodes=(0,), element=0, tag=left_tag),
        Facet(nodes=(n,), element=n - 1, tag=right_tag),
    )
    return Mesh(1, coords, elements, facets, h=(b - a) / n)


def build_rect_mesh(
    width: float,
    height: float,
    nx: int,
    ny: int,
    tags: BoundaryTag | dict[str, BoundaryTag],
) -> Mesh:
    """Triangulated [0,width] x [0,height], two right triangles per cell.

    ``tags`` is a single tag for all four sides or a dict with keys
    'left', 'right', 'bottom', 'top'.
    """
    if width <= 0 or height <= 0:
        raise InvalidArgumentError("width and height must be positive")
    if nx < 1 or ny < 1:
        raise InvalidArgumentError("nx and ny must be >= 1")
    if isinstance(tags, BoundaryTag):
        side_tags = {s: tags for s in ("left", "right", "bottom", "top")}
    else:
        missing = {"left", "right", "bottom", "top"} - set(tags)
        if missing:
            raise InvalidArgumentError(f"missing side tags: {sorted(missing)}")
        side_tags = dict(tags)

    dx, dy = width / nx, height / ny

    # Lexicographic by (x, y): node (ix, iy) -> ix*(ny+1) + iy.
    def nid(ix, iy):
        return ix * (ny + 1) + iy

    xs = np.repeat(np.arange(nx + 1) * dx, ny + 1)
    ys = np.tile(np.arange(ny + 1) * dy, nx + 1)
    coords = np.column_stack([xs, ys])

    elements = []
    facets = []
    for ix in range(nx):
        for iy in range(ny):
            ll, lr = nid(ix, iy), nid(ix + 1, iy)
            ul, ur = nid(ix, iy + 1), nid(ix + 1, iy + 1)
            lower = len(elements)
            elements.append((ll, lr, ur))  # lower-right triangle, CCW
            upper = len(elements)
            elements.append((ll, ur, ul))  # upper-left triangle, CCW
            if iy == 0:
                facets.append(Facet((ll, lr), lower, side_tags["bottom"]))
            if ix == nx - 1:
                facets.append(Facet((lr, ur), lower, side_tags["right"]))
            if iy == ny - 1:
                facets.append(Facet((ur, ul), upper, side_tags["top"]))
            if ix == 0:
                facets.append(Facet((ul, ll), upper, side_tags["left"]))

    h = math.hypot(dx, dy)
    return Mesh(2, coords, np.array(elements, dtype=int), tuple(facets), h=h)
