import numpy as np
import pytest

from tnvqc.gradcheck import REL_FLOOR, TOLERANCES, parameter_shift, relative_error, run_all
from tnvqc.vqc import init_params, vqc_backward


def test_relative_error_floor():
    assert relative_error([2.0], [1.0])[0] == pytest.approx(0.5)
    assert relative_error([1e-9], [0.0])[0] == pytest.approx(1e-9 / REL_FLOOR)


def test_parameter_shift_is_exact(rng):
    x, p, g = rng.standard_normal(4), init_params(seed=9), rng.standard_normal(2)
    np.testing.assert_allclose(parameter_shift(x, p, g), vqc_backward(x, p, g)[0], atol=1e-12)


def test_suite_within_tolerance():
    report = run_all(trials=2, seed=1)
    assert report.ok
    assert {r.name for r in report.results} == set(TOLERANCES)
    assert all(r.probes > 0 for r in report.results)
    assert len(report.lines()) == len(TOLERANCES)
