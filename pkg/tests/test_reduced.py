import math

import numpy as np
import pytest

from whirls.coeff import from_expr, p_growth
from whirls.geometry import Annulus, random_points, radial_coords
from whirls.numerics import NumericsConfig
from whirls.reduced import (SolverError, WindingError, bvp_spec, closed_form_profile,
                            closed_form_spec, reduced_residual, slope_from_flux, solve_bvp,
                            uniqueness_crosscheck)
from whirls.whirl import WhirlSpec

ONE = from_expr("1", "H")


def test_running_example_closed_form():
    ann = Annulus(2, 1.0, 2.0)
    prof = closed_form_profile(ONE, ann, 1)
    # Hc(b) = int_1^2 z^-3 dz = 3/8, c = 2 pi / Hc(b)
    assert prof.flux == pytest.approx(16 * math.pi / 3, rel=1e-14)
    r = np.linspace(1, 2, 11)
    exact = 2 * math.pi * (1 - r ** -2) / 2 / (3 / 8)
    assert np.max(np.abs(prof.G(r) - exact)) < 1e-12
    assert abs(prof.G(2.0) - 2 * math.pi) < 1e-13


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_boundary_and_winding(n):
    ann = Annulus(n, 1.0, 2.0)
    prof = solve_bvp(p_growth(4.0), ann, 2)
    assert abs(prof.G(ann.a)) < 1e-13
    assert abs(prof.G(ann.b) - 4 * math.pi) < 1e-9
    assert abs(prof.meta["winding_simpson"] - 4 * math.pi) < 1e-8
    neg = solve_bvp(p_growth(4.0), ann, -2)
    assert np.allclose(neg.G(np.linspace(1, 2, 9)), -prof.G(np.linspace(1, 2, 9)), atol=1e-12)


def test_zero_winding_is_identity():
    ann = Annulus(4, 1.0, 2.0)
    spec = bvp_spec(p_growth(3.0), ann, (0, 0))
    x = random_points(ann, 4, np.random.default_rng(0))
    assert np.allclose(spec.u(x), x)
    assert solve_bvp(ONE, ann, 0).flux == 0.0


def test_slope_from_flux_inverts():
    A = p_growth(4.0)
    r = np.linspace(1, 2, 7)
    g = slope_from_flux(A, 3, r, 5.0)
    # r^{n+1} xi g = 5 with xi = n + r^2 g^2
    assert np.allclose(r ** 4 * (3 + (r * g) ** 2) * g, 5.0, rtol=1e-12)
    assert np.allclose(slope_from_flux(A, 3, r, -5.0), -g)


def test_unequal_windings_rejected_for_xi_dependent():
    with pytest.raises(WindingError):
        bvp_spec(p_growth(4.0), Annulus(4, 1.0, 2.0), (1, 2))
    # fine for xi-independent coefficients
    bvp_spec(ONE, Annulus(4, 1.0, 2.0), (1, 2))


def test_solver_failure_surfaces():
    cfg = NumericsConfig(max_iter=2)
    with pytest.raises(SolverError):
        solve_bvp(p_growth(4.0), Annulus(3, 1.0, 2.0), 3, cfg, bracket=(0.0, 1e-6))


@pytest.mark.parametrize("A", [ONE, p_growth(4.0), from_expr("(1 + 0.1*r) * xi^0.5", "A")])
def test_uniqueness_from_many_brackets(A):
    rep = uniqueness_crosscheck(A, Annulus(3, 1.0, 2.0), 1)
    assert rep.passed and rep.max_diff < 1e-9
    assert len(rep.routes) == (9 if A.xi_free else 8)


@pytest.mark.parametrize("n", [2, 3, 4, 6])
def test_reduced_residual_solution_vs_control(n, rng):
    # odd n: the radial profile solves the reduced system only for xi-free A
    ann = Annulus(n, 1.0, 2.0)
    A = p_growth(4.0) if ann.even else from_expr("1 + 0.2*r", "H")
    x = random_points(ann, 40, rng)
    y = radial_coords(x, ann)[0]
    sol = bvp_spec(A, ann, (1,) * ann.d)
    assert reduced_residual(sol, A, y).max_rel < 1e-9
    assert reduced_residual(WhirlSpec.linear(ann, (1,) * ann.d), A, y).max_rel > 1e-2


def test_closed_form_spec_scales_per_component():
    ann = Annulus(4, 1.0, 2.0)
    spec = closed_form_spec(ONE, ann, (1, -3))
    assert np.allclose(spec.weights, [1, -3])
    assert spec.boundary_values_ok()
