import numpy as np
import pytest

from etpype.nodes.fitting import FitResult, fit_model, gaussian, lorentzian
from etpype.utils.errors import (
    FitFailureError,
    InsufficientDataError,
    InvalidArgumentError,
)


def test_gaussian_fit():
    x = np.linspace(-3000, 3000, 121)
    y = gaussian(x, 12.8, 150.0, 700.0)
    result = fit_model("gaussian", x, y)
    assert result.converged
    assert result.params["amplitude"] == pytest.approx(12.8, rel=1e-6)
    assert result.params["center"] == pytest.approx(150.0, abs=1e-3)
    assert result.params["sigma"] == pytest.approx(700.0, rel=1e-6)
    np.testing.assert_allclose(result(x), y, atol=1e-9)


def test_lorentzian_fit():
    x = np.linspace(-1000, 1000, 201)
    y = lorentzian(x, 2.0, -300.0, 120.0)
    result = fit_model("lorentzian", x, y)
    assert result.params["center"] == pytest.approx(-300.0, abs=1e-3)
    assert result.params["gamma"] == pytest.approx(120.0, rel=1e-6)


def test_linear_fit():
    x = np.array([-1.0, 0.0, 1.0])
    result = fit_model("linear", x, 2926.0 * x + 5.0)
    assert result.params["slope"] == pytest.approx(2926.0)
    assert result.params["intercept"] == pytest.approx(5.0)
    assert result.residual_rms == pytest.approx(0.0, abs=1e-9)


def test_summary_keys():
    x = np.linspace(0, 1, 10)
    summary = fit_model("linear", x, x).summary(prefix="quantum_")
    assert summary["quantum_model"] == "linear"
    assert {"quantum_slope", "quantum_slope_err"} <= set(summary)


def test_constant_data_do_not_fit():
    with pytest.raises(FitFailureError) as excinfo:
        fit_model("gaussian", np.arange(10.0), np.ones(10))
    assert set(excinfo.value.last_iterate) == {"amplitude", "center", "sigma"}


def test_fit_needs_points():
    with pytest.raises(InsufficientDataError):
        fit_model("gaussian", [0.0, 1.0, 2.0], [0.0, 1.0, 0.0])


@pytest.mark.parametrize(
    "kind, x, y",
    [
        ("voigt", [0, 1, 2, 3, 4], [0, 1, 2, 1, 0]),
        ("gaussian", [0, 1, 2, 3, 4], [0, 1, np.nan, 1, 0]),
        ("gaussian", [0, 1, 2, 3], [0, 1, 2, 1, 0]),
    ],
)
def test_invalid_fit_input(kind, x, y):
    with pytest.raises(InvalidArgumentError):
        fit_model(kind, x, y)


def test_result_without_model_function():
    result = FitResult(
        model="pixel-map",
        params={"grating_period": 0.665},
        errors={"grating_period": 1e-6},
        residual_rms=0.0,
    )
    with pytest.raises(InvalidArgumentError, match="pixel-map"):
        result(np.arange(3.0))
    assert result.summary()["grating_period"] == 0.665
