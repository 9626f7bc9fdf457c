"""Compiled and pure-numpy kernels must agree; the switch is WHIRLS_DISABLE_NUMBA."""

import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import smooth_field
from whirls import _kernels
from whirls.geometry import Annulus, random_points
from whirls.variation import random_divfree
from whirls.whirl import WhirlSpec

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")


@needs_numba
@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_whirl_jet_backends_agree(n, rng):
    ann = Annulus(n, 1.0, 2.0)
    spec = WhirlSpec(ann, (0,) * ann.d, smooth_field(ann.N, ann.d, rng))
    x = random_points(ann, 50, rng)
    from whirls.geometry import radial_coords
    f, df, d2f = spec.angles.jet(radial_coords(x, ann)[0])
    a = _kernels.whirl_jet_numpy(x, f, df, d2f, n, ann.d, ann.N)
    b = _kernels._jet_numba(x, f, df, d2f, n, ann.d, ann.N)
    for u, v in zip(a, b):
        assert np.allclose(u, v, rtol=1e-13, atol=1e-13)


@needs_numba
@pytest.mark.parametrize("n", [2, 3, 4])
def test_flow_backends_agree(n, rng):
    ann = Annulus(n, 1.0, 2.0)
    v = random_divfree(ann, rng)
    y0 = v.c + 0.5 * v.R * rng.uniform(-1, 1, size=(20, n)) / np.sqrt(n)
    a = _kernels.flow_numpy(y0, 0.05, 16, v.c, v.R, v.amp, v.K, v.L)
    b = _kernels.flow_numba(y0, 0.05, 16, v.c, v.R, v.amp, v.K, v.L)
    assert np.allclose(a[0], b[0], atol=1e-13) and np.allclose(a[1], b[1], atol=1e-12)


def test_environment_switch_selects_numpy():
    code = "from whirls import _kernels; print(_kernels.backend())"
    env = dict(os.environ, WHIRLS_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_disabled_backend_reproduces_reference(tmp_path):
    """Run the det check in a numpy-only subprocess and compare to this process."""
    code = (
        "import numpy as np, sys\n"
        "from whirls.geometry import Annulus, random_points\n"
        "from whirls.whirl import WhirlSpec, map_jet\n"
        "ann = Annulus(5, 1.0, 2.0)\n"
        "x = random_points(ann, 30, np.random.default_rng(1))\n"
        "np.save(sys.argv[1], map_jet(WhirlSpec.linear(ann, (2, -1)), x).grad_u)\n"
    )
    path = tmp_path / "g.npy"
    env = dict(os.environ, WHIRLS_DISABLE_NUMBA="1")
    subprocess.run([sys.executable, "-c", code, str(path)], env=env, check=True)
    from whirls.whirl import map_jet
    ann = Annulus(5, 1.0, 2.0)
    x = random_points(ann, 30, np.random.default_rng(1))
    here = map_jet(WhirlSpec.linear(ann, (2, -1)), x).grad_u
    assert np.allclose(np.load(path), here, rtol=1e-13, atol=1e-13)
