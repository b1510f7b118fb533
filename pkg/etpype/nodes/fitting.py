"""Least-squares models shared by the calibration and scan analyses."""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from etpype.definitions import VALID_FIT_MODELS
from etpype.utils.errors import (
    FitFailureError,
    InsufficientDataError,
    InvalidArgumentError,
)

log = logging.getLogger("nipype.workflow")


def gaussian(x, amplitude, center, sigma):
    return amplitude * np.exp(-((x - center) ** 2) / (2 * sigma**2))


def lorentzian(x, amplitude, center, gamma):
    return amplitude / (1 + ((x - center) / gamma) ** 2)


def linear(x, slope, intercept):
    return slope * x + intercept


def quadratic_through_origin(x, curvature):
    return curvature * x**2


MODELS = {
    "gaussian": (gaussian, ("amplitude", "center", "sigma")),
    "lorentzian": (lorentzian, ("amplitude", "center", "gamma")),
    "linear": (linear, ("slope", "intercept")),
    "quadratic-through-origin": (quadratic_through_origin, ("curvature",)),
}


@dataclass
class FitResult:
    """Fitted parameters with their 1σ uncertainties.

    Args:
        model (str): Model name.
        params (dict): Parameter values.
        errors (dict): 1σ uncertainties, same keys as `params`.
        residual_rms (float): Root mean square of the residuals.
        converged (bool): Whether the optimiser reported convergence.
        iterations (int): Number of function evaluations.
    """

    model: str
    params: dict
    errors: dict
    residual_rms: float
    converged: bool = True
    iterations: int = 0
    residuals: np.ndarray = field(default=None, repr=False)

    def __call__(self, x):
        if self.model not in MODELS:
            raise InvalidArgumentError(
                f"A {self.model} fit cannot be evaluated as a function of x."
            )
        function, names = MODELS[self.model]
        params = [self.params[n] for n in names]
        return function(np.asarray(x, dtype=float), *params)

    def summary(self, prefix=""):
        """Flat dict of values and errors, e.g. for a metadata header."""
        out = {f"{prefix}model": self.model}
        for name, value in self.params.items():
            out[f"{prefix}{name}"] = value
            out[f"{prefix}{name}_err"] = self.errors[name]
        out[f"{prefix}residual_rms"] = self.residual_rms
        return out


def _moments(x, y):
    weights = np.clip(y - np.min(y), 0, None)
    if weights.sum() == 0:
        weights = np.ones_like(y)
    center = np.sum(weights * x) / np.sum(weights)
    variance = np.sum(weights * (x - center) ** 2) / np.sum(weights)
    return np.max(y), center, np.sqrt(max(variance, 0.0))


def initial_guess(kind, x, y):
    """Moment-based starting point of a peak fit."""
    amplitude, center, spread = _moments(x, y)
    if kind == "gaussian":
        return [amplitude, center, spread]
    # half width at half maximum from the samples above half maximum
    above = x[y >= np.min(y) + (amplitude - np.min(y)) / 2]
    hwhm = (above.max() - above.min()) / 2 if above.size > 1 else spread
    return [amplitude, x[np.argmax(y)], hwhm or spread]


def _linear_fit(kind, x, y):
    if kind == "linear":
        design = np.column_stack([x, np.ones_like(x)])
    else:
        design = x[:, None] ** 2
    coeffs, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise FitFailureError(f"Degenerate design matrix for a {kind} fit.")
    residuals = y - design @ coeffs
    dof = max(x.size - design.shape[1], 1)
    cov = np.linalg.inv(design.T @ design) * np.sum(residuals**2) / dof
    return coeffs, cov, residuals, 1


def fit_model(kind, x, y, p0=None, maxfev=5000):
    """Fit one of the supported models to (x, y) data.

    Peak models (gaussian, lorentzian) use Levenberg-Marquardt starting
    from the data moments unless `p0` is given. Linear models are solved
    exactly.

    Args:
        kind (str): Model name, see ``VALID_FIT_MODELS``.
        x (array): Abscissa.
        y (array): Data.
        p0 (list, optional): Initial parameters of a peak fit.
        maxfev (int): Maximum function evaluations of a peak fit.

    Returns:
        FitResult
    """
    if kind not in VALID_FIT_MODELS:
        raise InvalidArgumentError(
            f"Unknown fit model '{kind}'. Valid models are {VALID_FIT_MODELS}."
        )
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    function, names = MODELS[kind]
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidArgumentError("x and y must be 1-D arrays of equal size.")
    if x.size < len(names) + 1:
        raise InsufficientDataError(
            f"A {kind} fit needs at least {len(names) + 1} points, "
            f"got {x.size}."
        )
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidArgumentError("Fit data contain NaN or Inf values.")

    if kind in ("linear", "quadratic-through-origin"):
        popt, pcov, residuals, nfev = _linear_fit(kind, x, y)
        converged = True
    else:
        guess = list(p0) if p0 is not None else initial_guess(kind, x, y)
        last = dict(zip(names, map(float, guess)))
        if np.ptp(y) == 0:
            raise FitFailureError(
                f"Cannot fit a {kind} peak to constant data.",
                last_iterate=last,
            )
        try:
            popt, pcov, info, _, ier = curve_fit(
                function,
                x,
                y,
                p0=guess,
                method="lm",
                maxfev=maxfev,
                full_output=True,
            )
        except RuntimeError as e:
            raise FitFailureError(
                f"{kind} fit did not converge: {e}", last_iterate=last
            )
        popt = np.array(popt, dtype=float)
        popt[2] = abs(popt[2])
        residuals = y - function(x, *popt)
        nfev = int(info["nfev"])
        converged = ier in (1, 2, 3, 4)
        if not np.all(np.isfinite(popt)):
            raise FitFailureError(
                f"{kind} fit returned non-finite parameters.",
                last_iterate=dict(zip(names, map(float, popt))),
            )

    if np.all(np.isfinite(pcov)):
        errors = np.sqrt(np.abs(np.diag(pcov)))
    else:
        errors = np.full(len(names), np.inf)
    result = FitResult(
        model=kind,
        params=dict(zip(names, map(float, popt))),
        errors=dict(zip(names, map(float, errors))),
        residual_rms=float(np.sqrt(np.mean(residuals**2))),
        converged=converged,
        iterations=nfev,
        residuals=residuals,
    )
    log.debug(f"{kind} fit: {result.params} ({nfev} evaluations).")
    return result
