import math

import numpy as np
import pytest

from helmprec.errors import InvalidArgumentError
from helmprec.mesh import BoundaryTag, build_interval_mesh, build_rect_mesh

IMP = BoundaryTag.IMPEDANCE
DIR = BoundaryTag.DIRICHLET


def test_interval_single_element():
    m = build_interval_mesh(0, 1, 1, IMP, IMP)
    assert m.n_nodes == 2
    assert m.n_elements == 1
    assert m.h == 1.0
    assert np.allclose(m.coords[:, 0], [0.0, 1.0])


def test_interval_uniform_subdivision():
    m = build_interval_mesh(0, 1, 4, DIR, IMP)
    assert m.n_nodes == 5
    assert m.h == 0.25
    left = [f for f in m.facets if 0 in f.nodes][0]
    assert left.tag == DIR
    right = [f for f in m.facets if 4 in f.nodes][0]
    assert right.tag == IMP


def test_interval_h_arithmetic():
    m = build_interval_mesh(0, 2, 8, IMP, IMP)
    assert m.h == pytest.approx(0.25, rel=1e-15)


def test_interval_errors():
    with pytest.raises(InvalidArgumentError):
        build_interval_mesh(0, 1, 0, IMP, IMP)
    with pytest.raises(InvalidArgumentError):
        build_interval_mesh(1, 1, 4, IMP, IMP)


def test_rect_unit_square_split():
    m = build_rect_mesh(1, 1, 1, 1, IMP)
    assert m.n_nodes == 4
    assert m.n_elements == 2
    assert m.h == pytest.approx(math.sqrt(2), rel=1e-15)


def test_rect_counting():
    m = build_rect_mesh(1, 1, 2, 2, IMP)
    assert m.n_nodes == 9
    assert m.n_elements == 8
    assert len(m.facets) == 2 * (2 + 2)


def test_rect_h_recomputed_from_coords():
    m = build_rect_mesh(2, 1, 4, 2, IMP)
    # independent recomputation: max pairwise node distance within elements
    diam = 0.0
    for el in m.elements:
        pts = m.coords[el]
        for i in range(3):
            for j in range(i + 1, 3):
                diam = max(diam, float(np.linalg.norm(pts[i] - pts[j])))
    assert m.h == pytest.approx(diam, rel=1e-15)
    assert m.h == pytest.approx(math.sqrt(2) * 0.5, rel=1e-15)


def test_rect_errors():
    with pytest.raises(InvalidArgumentError):
        build_rect_mesh(0, 1, 2, 2, IMP)
    with pytest.raises(InvalidArgumentError):
        build_rect_mesh(1, 1, 0, 2, IMP)
    with pytest.raises(InvalidArgumentError):
        build_rect_mesh(1, 1, 2, 2, {"left": IMP})


@pytest.mark.parametrize("a,b,n", [(0, 1, 7), (-2, 3.5, 13), (0.25, 0.75, 2)])
def test_interval_measure_sum(a, b, n):
    m = build_interval_mesh(a, b, n, IMP, IMP)
    assert m.element_measures().sum() == pytest.approx(b - a, rel=1e-12)
    assert np.all(m.element_measures() > 0)
    assert len(m.facets) == 2


@pytest.mark.parametrize("w,h,nx,ny", [(1, 1, 3, 5), (2.5, 0.5, 4, 2)])
def test_rect_measure_sum_and_facets(w, h, nx, ny):
    m = build_rect_mesh(w, h, nx, ny, IMP)
    assert m.element_measures().sum() == pytest.approx(w * h, rel=1e-12)
    assert np.all(m.element_measures() > 0)
    assert len(m.facets) == 2 * (nx + ny)
    assert m.h == pytest.approx(m.element_diameters().max(), rel=1e-15)


def test_facet_belongs_to_its_element():
    for m in (build_interval_mesh(0, 1, 5, IMP, DIR), build_rect_mesh(1, 2, 3, 4, IMP)):
        for f in m.facets:
            assert set(f.nodes) <= set(m.elements[f.element].tolist())


def test_rect_per_side_tags():
    tags = {"left": DIR, "right": IMP, "bottom": BoundaryTag.NEUMANN, "top": IMP}
    m = build_rect_mesh(1, 1, 2, 3, tags)
    for f in m.facets:
        pts = m.coords[list(f.nodes)]
        if np.all(pts[:, 0] == 0):
            assert f.tag == DIR
        elif np.all(pts[:, 1] == 0):
            assert f.tag == BoundaryTag.NEUMANN


def test_locate_elements_roundtrip():
    m1 = build_interval_mesh(0, 1, 4, IMP, IMP)
    cents = m1.element_centroids()
    assert np.array_equal(m1.locate_elements(cents), np.arange(4))
    m2 = build_rect_mesh(1, 1, 2, 2, IMP)
    assert np.array_equal(
        m2.locate_elements(m2.element_centroids()), np.arange(m2.n_elements)
    )
