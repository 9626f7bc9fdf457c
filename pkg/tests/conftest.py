import numpy as np
import pytest

from whirls.coeff import from_expr
from whirls.whirl import CallableAngleField


def smooth_field(N, d, rng, scale=0.7):
    """Random non-radial C^2 angle field with an exact jet."""
    C = rng.normal(size=(d, N)) * scale
    D = rng.normal(size=(d, N, N)) * 0.2
    D = D + D.transpose(0, 2, 1)

    def fn(y):
        f = y @ C.T + 0.5 * np.einsum("pk,ikl,pl->pi", y, D, y) + np.sin(y).sum(1)[:, None]
        df = C[None] + np.einsum("ikl,pl->pik", D, y) + np.cos(y)[:, None, :]
        d2f = np.broadcast_to(D, (len(y), d, N, N)).copy()
        for k in range(N):
            d2f[:, :, k, k] -= np.sin(y[:, k])[:, None]
        return f, df, d2f

    return CallableAngleField(fn, d)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def coeffs():
    return {
        "one": from_expr("1", "H"),
        "zero": from_expr("0", "B"),
        "A_general": from_expr("(1 + 0.1*r + 0.05*s) * xi^0.5", "A"),
        "B_general": from_expr("0.3*r*xi + s", "B"),
    }


_CRITERIA: dict = {}


@pytest.fixture
def criterion():
    """record(number, ok, detail) prints a pass/fail line and keeps it for the summary."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _CRITERIA[number] = line
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[k])
