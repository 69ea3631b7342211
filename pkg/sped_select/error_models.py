"""Measurement-error densities, described through their characteristic functions."""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError

logger = logging.getLogger(__name__)


class ErrorKind(str, Enum):
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class ErrorModel:
    """
    Zero-mean noise density g.

    Only Gaussian noise is supported, which keeps the analytic quadrature tail
    bounds of the frequency grid valid.

    Attributes:
        sd (float): Standard deviation of the noise, in data units. Zero is only
            allowed for calibration edge cases and is rejected by deconvolution.
        kind (ErrorKind): Noise family.
    """

    sd: float
    kind: ErrorKind = ErrorKind.GAUSSIAN

    def __post_init__(self):
        if not math.isfinite(self.sd) or self.sd < 0:
            raise DomainError(f"noise sd must be finite and >= 0, got {self.sd}")
        if self.kind is not ErrorKind.GAUSSIAN:
            raise DomainError(f"unsupported error kind: {self.kind}")

    @property
    def variance(self):
        return self.sd**2

    def require_deconvolvable(self):
        """
        Raises:
            DomainError: If the model represents "no noise".
        """
        if self.sd <= 0:
            raise DomainError("deconvolution needs a noise sd > 0")


def char_fn(model, t):
    """
    Characteristic function g̃(t) = exp(-sd² t² / 2) of a zero-mean Gaussian.

    Args:
        model (ErrorModel): Noise model.
        t (float | numpy.ndarray): Frequencies.

    Returns:
        complex | numpy.ndarray: g̃(t) with an exactly zero imaginary part.
    """
    t = np.asarray(t, dtype=float)
    value = np.exp(-0.5 * model.variance * t * t).astype(complex)
    if value.ndim == 0:
        return complex(value)
    return value


def abs_char_fn_sq(model, t):
    """|g̃(t)|² as a real array; the quantity every spectral formula consumes."""
    t = np.asarray(t, dtype=float)
    return np.exp(-model.variance * t * t)


def calibrate_noise_sd(var_x, p):
    """
    Noise sd giving a target share p = Var(E) / Var(Y) of the observed variance.

    X and E are independent, so Var(Y) = Var(X) + Var(E) and
    σ_E = sqrt(p · Var(X) / (1 - p)).

    Args:
        var_x (float): Variance of the target X.
        p (float): Share of the variance of Y due to noise, in [0, 1).

    Returns:
        float: Noise standard deviation.

    Raises:
        DomainError: If p is outside [0, 1) or var_x is not positive.
    """
    if not (0 <= p < 1):
        raise DomainError(f"noise share p must lie in [0, 1), got {p}")
    if not var_x > 0:
        raise DomainError(f"target variance must be positive, got {var_x}")
    return math.sqrt(p * var_x / (1 - p))


def sample_error(model, rng, count):
    """
    Draw i.i.d. noise values.

    Args:
        model (ErrorModel): Noise model.
        rng (numpy.random.Generator): Generator, advanced by the call.
        count (int): Number of draws.

    Returns:
        numpy.ndarray: ``count`` draws from g.
    """
    if count < 0:
        raise DomainError(f"count must be >= 0, got {count}")
    return rng.normal(0.0, model.sd, size=count)
