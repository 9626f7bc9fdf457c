import math

import numpy as np
import pytest

from whirls.coeff import ValidityBox, from_expr
from whirls.geometry import Annulus, random_points
from whirls.reduced import bvp_spec
from whirls.variation import (EnergyGrid, StoredEnergy, det_along_flow, energy, energy_change,
                              first_variation, quadrature, random_divfree, zero_field)
from whirls.whirl import WhirlSpec


def test_induced_coefficients():
    F = from_expr("xi / 2 + r * s", "F")
    W = StoredEnergy.from_coefficient(F, Annulus(3, 1.0, 2.0))
    assert W.A(1.3, 2.0, 5.0) == pytest.approx(0.5)
    assert W.B(1.3, 2.0, 5.0) == pytest.approx(-1.3)
    assert W.A.xi_free
    assert W.variational_defect(ValidityBox.for_annulus(3, 1.0, 2.0)) == 0.0


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_quadrature_volume(n):
    ann = Annulus(n, 1.0, 2.0)
    grid = EnergyGrid(radial=16, polar=8, planar=16) if n < 5 else EnergyGrid(12, 16, 8)
    _, w = quadrature(ann, grid)
    assert w.sum() == pytest.approx(ann.volume(), rel=1e-10 if n < 5 else 1e-9)


def test_identity_energy():
    ann = Annulus(3, 1.0, 2.0)
    W = StoredEnergy.from_coefficient(from_expr("xi / 2", "F"), ann)
    E = energy(WhirlSpec.identity(ann), W, EnergyGrid(radial=16, polar=8, planar=16))
    assert E.value == pytest.approx(1.5 * ann.volume(), rel=1e-10)


def test_whirl_energy_closed_form():
    # n = 2, G' = c/r^3: xi = 2 + c^2/r^4, E = pi int_1^2 (2 + c^2 r^-4) r dr = 3 pi + 3 pi c^2 / 8
    ann = Annulus(2, 1.0, 2.0)
    W = StoredEnergy.from_coefficient(from_expr("xi / 2", "F"), ann)
    E = energy(bvp_spec(W.A, ann, (1,)), W)
    c = 16 * math.pi / 3
    assert E.value == pytest.approx(3 * math.pi + 3 * math.pi * c * c / 8, rel=1e-9)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_field_is_divergence_free_and_compact(n, rng):
    ann = Annulus(n, 1.0, 2.0)
    v = random_divfree(ann, rng)
    y = v.c + v.R * rng.uniform(-1, 1, size=(50, n)) / math.sqrt(n)
    assert np.max(np.abs(v.divergence(y))) < 1e-12
    far = v.c + 1.01 * v.R * np.eye(n)
    assert np.all(v(far) == 0) and not np.any(v.in_support(far))
    # support stays inside the annulus
    assert np.linalg.norm(v.c) - v.R > ann.a and np.linalg.norm(v.c) + v.R < ann.b


def test_flow_preserves_volume_and_reverses(rng):
    ann = Annulus(3, 1.0, 2.0)
    v = random_divfree(ann, rng)
    y0 = v.c + 0.4 * v.R * rng.normal(size=(10, 3)) / 3
    y1, F = v.flow(y0, 0.05)
    assert np.max(np.abs(np.linalg.det(F) - 1)) < 1e-10
    back, _ = v.flow(y1, -0.05)
    assert np.max(np.abs(back - y0)) < 1e-11


def test_det_along_flow(rng):
    ann = Annulus(2, 1.0, 2.0)
    spec = bvp_spec(from_expr("1", "H"), ann, (1,))
    v = random_divfree(ann, rng)
    x = random_points(ann, 40, rng)
    assert np.max(np.abs(det_along_flow(spec, v, x, 0.03) - 1)) < 1e-10


def test_zero_field_has_zero_variation():
    ann = Annulus(2, 1.0, 2.0)
    W = StoredEnergy.from_coefficient(from_expr("xi / 2", "F"), ann)
    spec = WhirlSpec.linear(ann, (1,))
    fv = first_variation(spec, W, zero_field(2))
    assert fv.derivative == 0.0 and fv.passed
    assert energy_change(spec, W, zero_field(2), 0.1) == 0.0


def test_central_difference_converges_at_second_order(rng):
    ann = Annulus(2, 1.0, 2.0)
    W = StoredEnergy.from_coefficient(from_expr("xi / 2", "F"), ann)
    spec = WhirlSpec.linear(ann, (1,))
    v = random_divfree(ann, rng)
    d = [first_variation(spec, W, v, delta=h).derivative for h in (4e-3, 2e-3, 1e-3)]
    # the delta^2 truncation term shrinks by 4 per halving
    assert (d[0] - d[1]) / (d[1] - d[2]) == pytest.approx(4.0, rel=0.05)
