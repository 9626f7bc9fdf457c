import math

import numpy as np
import pytest

from whirls.coeff import from_expr, p_growth, zero_discriminant_pair
from whirls.geometry import Annulus, sample_grid
from whirls.pressure import (NotClosedError, path_independence, path_potential, pde_residual,
                             radial_pressure, radial_pressure_for)
from whirls.reduced import bvp_spec
from whirls.whirl import WhirlSpec

ONE = from_expr("1", "H")
ZERO = from_expr("0", "B")


def test_running_example_pressure_profile():
    ann = Annulus(2, 1.0, 2.0)
    P = radial_pressure_for(bvp_spec(ONE, ann, (1,)), ONE, ZERO)
    c = 16 * math.pi / 3
    r = np.linspace(1, 2, 9)
    # G' = -r (c/r^3)^2, so G = c^2 (r^-4 - 1) / 4
    assert np.allclose(P.radial.G(r), c * c * (r ** -4 - 1) / 4, rtol=1e-12, atol=1e-12)
    # P = H + G at a point
    x = np.array([[1.5, 0.2]])
    assert P(x)[0] == pytest.approx(1 + c * c * (np.linalg.norm(x) ** -4 - 1) / 4, rel=1e-12)


def test_shift_is_a_constant():
    ann = Annulus(2, 1.0, 2.0)
    P = radial_pressure_for(bvp_spec(ONE, ann, (1,)), ONE, ZERO)
    x = sample_grid(ann, "COARSE")
    assert np.allclose(P.shifted(3.5)(x) - P(x), 3.5)


def test_radial_pressure_refuses_unequal_weights():
    ann = Annulus(4, 1.0, 2.0)
    spec = bvp_spec(ONE, ann, (1, 2))
    with pytest.raises(ValueError):
        radial_pressure_for(spec, ONE, ZERO)
    P = radial_pressure_for(spec, ONE, ZERO, best_effort=True)
    assert P.meta["best_effort"]
    # the forced field does not balance the operator
    assert pde_residual(spec, ONE, ZERO, P, sample_grid(ann, "COARSE")).max_rel > 1e-3


@pytest.mark.parametrize("n, m", [(2, (2,)), (4, (1, -1)), (6, (1, 1, 1))])
def test_radial_residual_xi_dependent(n, m):
    ann = Annulus(n, 1.0, 2.0)
    A = p_growth(4.0)
    B = from_expr("0.2 * xi", "B")
    spec = bvp_spec(A, ann, m)
    rep = pde_residual(spec, A, B, radial_pressure_for(spec, A, B), sample_grid(ann, "COARSE"))
    assert rep.max_rel < 1e-6 and rep.det_error < 1e-11 and rep.boundary_error < 1e-11


@pytest.mark.parametrize("n, m", [(3, (2,)), (4, (1, 3)), (5, (1, -2))])
def test_path_potential_balances(n, m):
    ann = Annulus(n, 1.0, 2.0)
    H, B = zero_discriminant_pair(n)
    spec = bvp_spec(H, ann, m)
    P = path_potential(H, B, m, ann)
    x = sample_grid(ann, "COARSE")
    assert path_independence(P, x).max_gap < 1e-9
    assert pde_residual(spec, H, B, P, x).max_rel < 1e-6


def test_path_potential_refuses_non_closed_form():
    with pytest.raises(NotClosedError):
        path_potential(ONE, ZERO, (1, 2), Annulus(4, 1.0, 2.0))


def test_negative_control_linear_profile():
    ann = Annulus(2, 1.0, 2.0)
    spec = WhirlSpec.linear(ann, (1,))
    P = radial_pressure_for(spec, ONE, ZERO, best_effort=True)
    assert pde_residual(spec, ONE, ZERO, P, sample_grid(ann, "COARSE")).max_rel > 1e-2


def test_to_rows_matches_nodes():
    ann = Annulus(2, 1.0, 2.0)
    spec = bvp_spec(ONE, ann, (1,))
    P = radial_pressure(ONE, ZERO, spec.profile, ann, count=17)
    rows = P.to_rows()
    assert len(rows) == 17 and rows[0] == (1.0, 0.0)
