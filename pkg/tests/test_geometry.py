import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from whirls.geometry import (GRID_LEVELS, Annulus, BoundaryPart, boundary_part, grad_y, hess_y,
                             lap_y, plane_frame, radial_coords, random_points, sample_grid,
                             sphere_points)
from whirls.numerics import fd_jacobian


@pytest.mark.parametrize("n, a, b", [(1, 1, 2), (2.5, 1, 2), (3, 0, 1), (3, 2, 1), (3, 1, 1)])
def test_annulus_validation(n, a, b):
    with pytest.raises(ValueError):
        Annulus(n, a, b)


@pytest.mark.parametrize("n, d, N", [(2, 1, 1), (3, 1, 2), (4, 2, 2), (5, 2, 3), (6, 3, 3)])
def test_counts(n, d, N):
    ann = Annulus(n, 1.0, 2.0)
    assert (ann.d, ann.N, ann.even) == (d, N, n % 2 == 0)


def test_volume_matches_formula():
    assert Annulus(2, 1.0, 2.0).volume() == pytest.approx(3 * math.pi)
    assert Annulus(3, 1.0, 2.0).volume() == pytest.approx(4 / 3 * math.pi * 7)


def test_radial_coords_odd_keeps_sign():
    ann = Annulus(3, 1.0, 2.0)
    y, z = radial_coords(np.array([3.0, 4.0, -1.0]), ann)
    assert np.allclose(y, [5.0, -1.0]) and z == pytest.approx(math.sqrt(26))


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 7), st.integers(0, 10_000))
def test_radial_norm_identity(n, seed):
    ann = Annulus(n, 1.0, 2.0)
    x = random_points(ann, 6, np.random.default_rng(seed))
    y, z = radial_coords(x, ann)
    assert np.allclose(np.linalg.norm(y, axis=1), z, rtol=1e-14)
    assert np.all(y[:, : ann.d] >= 0)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_grad_and_hess_against_fd(n, rng):
    ann = Annulus(n, 1.0, 2.0)
    x = random_points(ann, 5, rng)
    g = grad_y(x, ann)
    fd = fd_jacobian(lambda p: radial_coords(p, ann)[0], x)
    assert np.max(np.abs(g - fd)) < 1e-8
    H = hess_y(x, ann)
    fdh = fd_jacobian(lambda p: grad_y(p, ann).reshape(len(p), -1), x, )
    assert np.max(np.abs(H.reshape(len(x), -1, n) - fdh)) < 1e-6
    # the Laplacian of a planar radius is 1 / y
    assert np.allclose(np.trace(H, axis1=-2, axis2=-1), lap_y(x, ann), atol=1e-12)


def test_plane_frame_quarter_turn(rng):
    ann = Annulus(5, 1.0, 2.0)
    x = random_points(ann, 4, rng)
    fr = plane_frame(x, ann)
    assert np.allclose(fr.w.sum(axis=1), x)
    assert np.allclose(np.einsum("pin,pin->pi", fr.w, fr.wperp), 0)
    # w^perp = J w on each plane with J = [[0,-1],[1,0]]
    assert np.allclose(fr.wperp[:, 0, 1], x[:, 0]) and np.allclose(fr.wperp[:, 0, 0], -x[:, 1])
    assert np.allclose(fr.wperp[:, -1], 0)


@pytest.mark.parametrize("y, part", [
    ([1.5, 0.3], BoundaryPart.INTERIOR),
    ([1.0, 0.0], BoundaryPart.DIRICHLET_INNER),
    ([0.0, 2.0], BoundaryPart.DIRICHLET_OUTER),
    ([0.0, 1.5], BoundaryPart.NEUMANN),
    ([-0.1, 1.5], BoundaryPart.OUTSIDE),
    ([0.2, 0.2], BoundaryPart.OUTSIDE),
])
def test_boundary_part(y, part):
    assert boundary_part(y, Annulus(4, 1.0, 2.0)) == part


def test_boundary_part_odd_axis_may_be_negative():
    assert boundary_part([1.2, -0.5], Annulus(3, 1.0, 2.0)) == BoundaryPart.INTERIOR
    with pytest.raises(ValueError):
        boundary_part([1.2], Annulus(3, 1.0, 2.0))


def test_sample_grid_shape_and_determinism():
    ann = Annulus(4, 1.0, 2.0)
    g1 = sample_grid(ann, "coarse", seed=3)
    g2 = sample_grid(ann, "COARSE", seed=3)
    shells, dirs = GRID_LEVELS["COARSE"]
    assert g1.shape == (shells * dirs, 4) and np.array_equal(g1, g2)
    y, z = radial_coords(g1, ann)
    assert np.all((z > ann.a) & (z < ann.b))
    assert np.all(y >= ann.delta_axis)
    with pytest.raises(ValueError):
        sample_grid(ann, "HUGE")


def test_sphere_points_radius():
    ann = Annulus(3, 1.0, 2.0)
    p = sphere_points(ann, 1.7, 10, seed=1)
    assert np.allclose(np.linalg.norm(p, axis=1), 1.7)
