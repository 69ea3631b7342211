"""Choice of the penalty α: small-n risk rule, cross-validation and the oracle."""

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import DataError, DomainError, PreconditionError
from .risk import (
    CurveKind,
    RiskCurve,
    cv_criterion,
    empirical_spectrum,
    estimated_risk_curve,
    true_risk,
)
from .sped import (
    DEFAULT_MAX_NODES,
    DEFAULT_TOLERANCE,
    PenaltyKernel,
    build_frequency_grid,
)

logger = logging.getLogger(__name__)


class Method(str, Enum):
    SMALL_N = "small-n"
    CROSS_VALIDATION = "cv"
    ORACLE = "oracle"


class N1Rule(str, Enum):
    SQRT_N = "sqrt-n"


@dataclass(frozen=True)
class RateModel:
    """
    Rate sequences for Gaussian noise and a target with ``k`` square-integrable
    derivatives.

    Attributes:
        k (int): Smoothness order, >= 1.
    """

    k: int = 1

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise DomainError(f"k must be an integer >= 1, got {self.k}")


@dataclass(frozen=True)
class GridConfig:
    """Quadrature settings shared by every frequency grid of a run."""

    tolerance: float = DEFAULT_TOLERANCE
    max_nodes: int = DEFAULT_MAX_NODES

    def __post_init__(self):
        if not self.tolerance > 0:
            raise DomainError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_nodes < 3:
            raise DomainError(f"max_nodes must be >= 3, got {self.max_nodes}")


@dataclass(frozen=True)
class SelectionConfig:
    """
    Search settings for every selection method.

    Attributes:
        rate (RateModel): Rate sequences.
        iota (float): Lower grid factor ι.
        lambda_ (float): Upper grid factor λ.
        grid_size (int): Number of log-spaced α values.
        n1_rule (N1Rule): How n₁ is derived from n.
        m (int): Penalty order.
        quad_tolerance (float): Tail tolerance of the frequency grid.
        max_nodes (int): Node limit of the frequency grid.
    """

    rate: RateModel = field(default_factory=RateModel)
    iota: float = 1e-3
    lambda_: float = 1e3
    grid_size: int = 100
    n1_rule: N1Rule = N1Rule.SQRT_N
    m: int = 1
    quad_tolerance: float = DEFAULT_TOLERANCE
    max_nodes: int = DEFAULT_MAX_NODES

    def __post_init__(self):
        if not (0 < self.iota < self.lambda_) or not math.isfinite(self.lambda_):
            raise DomainError(
                f"need 0 < iota < lambda, got iota={self.iota}, lambda={self.lambda_}"
            )
        if self.grid_size < 2:
            raise DomainError(f"grid_size must be >= 2, got {self.grid_size}")
        if int(self.m) != self.m or self.m < 1:
            raise DomainError(f"m must be an integer >= 1, got {self.m}")
        GridConfig(self.quad_tolerance, self.max_nodes)

    def with_overrides(self, **fields):
        """
        Copy with some fields replaced; ``None`` values are ignored.

        ``k`` is accepted as a shortcut for ``rate=RateModel(k)``.

        Returns:
            SelectionConfig: The validated copy.
        """
        fields = {key: value for key, value in fields.items() if value is not None}
        if "k" in fields:
            fields["rate"] = RateModel(fields.pop("k"))
        return replace(self, **fields)

    @property
    def grid(self):
        return GridConfig(self.quad_tolerance, self.max_nodes)

    def as_dict(self):
        data = asdict(self)
        data["n1_rule"] = self.n1_rule.value
        return data


@dataclass(frozen=True)
class SelectionResult:
    """
    Outcome of one selection.

    Attributes:
        alpha_hat (float): Penalty for the full sample size n.
        alpha_prime (float): Minimiser at n₁ (equal to alpha_hat unless rescaled).
        curve (RiskCurve): The minimised criterion.
        method (Method): Which rule produced the choice.
        n1 (int): Sample size the minimised criterion refers to.
    """

    alpha_hat: float
    alpha_prime: float
    curve: RiskCurve = field(repr=False)
    method: Method
    n1: int

    @property
    def on_boundary(self):
        return self.alpha_prime in (self.curve.alphas[0], self.curve.alphas[-1])


def rate_b(n, k=1):
    """
    Penalty scale b_n = (k log n)^k / n.

    Args:
        n (int): Sample size, >= 2.
        k (int): Smoothness order, >= 1.

    Returns:
        float: b_n.
    """
    if n < 2:
        raise DomainError(f"rate needs n >= 2, got {n}")
    return (k * math.log(n)) ** k / n


def rate_r(n, k=1):
    """Risk rate r_n = (log n)^{-k}."""
    if n < 2:
        raise DomainError(f"rate needs n >= 2, got {n}")
    return math.log(n) ** (-k)


def make_alpha_grid(n_ref, config):
    """
    ``config.grid_size`` log-spaced penalties on [ι b_{n_ref}, λ b_{n_ref}].

    Args:
        n_ref (int): Sample size fixing the scale, >= 2.
        config (SelectionConfig): Search settings.

    Returns:
        numpy.ndarray: Strictly increasing penalties; the endpoints are exact.
    """
    scale = rate_b(n_ref, config.rate.k)
    lo, hi = config.iota * scale, config.lambda_ * scale
    alphas = np.geomspace(lo, hi, config.grid_size)
    alphas[0], alphas[-1] = lo, hi
    return alphas


def n1_for(n, rule=N1Rule.SQRT_N):
    """n₁ = ceil(√n)."""
    if rule is not N1Rule.SQRT_N:
        raise DomainError(f"unknown n1 rule: {rule}")
    return math.isqrt(n - 1) + 1 if n > 0 else 0


def argmin_on_grid(curve):
    """
    The α with the smallest criterion value; ties go to the largest α.

    Raises:
        DataError: If any value is NaN or infinite.
    """
    values = curve.values
    if not np.all(np.isfinite(values)):
        raise DataError(f"{curve.kind.value} curve has non-finite values")
    last = values.size - 1 - int(np.argmin(values[::-1]))
    return float(curve.alphas[last])


MIN_SAMPLE_SIZE = {Method.SMALL_N: 4, Method.CROSS_VALIDATION: 2, Method.ORACLE: 2}


def check_sample_size(method, n):
    """
    Raises:
        PreconditionError: If ``n`` is below the smallest size ``method`` accepts.
    """
    method = Method(method)
    needed = MIN_SAMPLE_SIZE[method]
    if n < needed:
        if method is Method.SMALL_N:
            raise PreconditionError(
                f"sample too small for n1 rule (n={n}, need n >= {needed})"
            )
        raise PreconditionError(f"{method.value} needs n >= {needed}, got {n}")


def build_grid_for(alphas, error, config, oscillation_scale, target=None):
    """Frequency grid valid for every penalty in ``alphas``."""
    kernel = PenaltyKernel(float(np.min(alphas)), config.m, error)
    return build_frequency_grid(
        kernel,
        tolerance=config.quad_tolerance,
        oscillation_scale=oscillation_scale,
        target=target,
        max_nodes=config.max_nodes,
        alpha_max=float(np.max(alphas)),
    )


def _covers(grid, alphas, scale, m):
    return (
        grid is not None
        and grid.m == m
        and grid.alpha <= np.min(alphas) * (1 + 1e-12)
        and grid.alpha_max >= np.max(alphas) * (1 - 1e-12)
        and grid.oscillation_scale >= scale
    )


def select_small_n(sample, error, config, grid=None, n1=None, spectrum=None):
    """
    Small-n rule: minimise R̂(α, n₁) on the b_{n₁} scale, then rescale the
    minimiser by b_n / b_{n₁}.

    Args:
        sample (Sample): Observations, n >= 4.
        error (ErrorModel): Noise model.
        config (SelectionConfig): Search settings.
        grid (FrequencyGrid, optional): Reused when it covers the search grid.
        n1 (int, optional): Override of the n₁ rule.
        spectrum (EmpiricalSpectrum, optional): Reused per-sample pass on ``grid``.

    Returns:
        SelectionResult: The choice.

    Raises:
        PreconditionError: If n < 4.
    """
    n = sample.n
    check_sample_size(Method.SMALL_N, n)
    if n1 is None:
        n1 = n1_for(n, config.n1_rule)
    elif not 2 <= n1 <= n:
        raise DomainError(f"n1 must lie in [2, n], got {n1}")
    alphas = make_alpha_grid(n1, config)
    if not _covers(grid, alphas, sample.max_abs, config.m):
        grid, spectrum = build_grid_for(alphas, error, config, sample.max_abs), None
    if spectrum is None:
        spectrum = empirical_spectrum(sample, grid)
    curve = estimated_risk_curve(sample, alphas, n1, error, config.m, grid, spectrum)
    alpha_prime = argmin_on_grid(curve)
    k = config.rate.k
    alpha_hat = alpha_prime * rate_b(n, k) / rate_b(n1, k)
    result = SelectionResult(alpha_hat, alpha_prime, curve, Method.SMALL_N, n1)
    if result.on_boundary:
        logger.warning(
            "small-n criterion minimised at the grid boundary "
            f"(alpha'={alpha_prime:.4g})"
        )
    logger.info(f"small-n: n={n} n1={n1} alpha_hat={alpha_hat:.6g}")
    return result


def select_cv(sample, error, config, grid=None, spectrum=None):
    """
    Cross-validation: minimise L̂(α) on the b_n scale.

    Returns:
        SelectionResult: The choice, with alpha_prime == alpha_hat.
    """
    n = sample.n
    check_sample_size(Method.CROSS_VALIDATION, n)
    alphas = make_alpha_grid(n, config)
    if not _covers(grid, alphas, sample.max_abs, config.m):
        grid, spectrum = build_grid_for(alphas, error, config, sample.max_abs), None
    if spectrum is None:
        spectrum = empirical_spectrum(sample, grid)
    curve = cv_criterion(sample, alphas, error, config.m, grid, spectrum)
    alpha_hat = argmin_on_grid(curve)
    result = SelectionResult(alpha_hat, alpha_hat, curve, Method.CROSS_VALIDATION, n)
    if result.on_boundary:
        logger.warning(
            f"cv criterion minimised at the grid boundary (alpha={alpha_hat:.4g})"
        )
    logger.info(f"cv: n={n} alpha_hat={alpha_hat:.6g}")
    return result


def _oracle_scale(target):
    return max(1.0, 2.0 * target.max_abs_mean)


def oracle_grid(target, error, n, config):
    """Frequency grid on which ``select_oracle`` evaluates R(α, n)."""
    alphas = make_alpha_grid(n, config)
    return build_grid_for(alphas, error, config, _oracle_scale(target), target=target)


def select_oracle(target, error, n, config, grid=None):
    """
    Oracle choice α*_n: minimiser of the true risk R(α, n) on the b_n scale.

    Args:
        target (NormalMixture): True density.
        error (ErrorModel): Noise model.
        n (int): Sample size, >= 2 (the grid scale needs log n > 0).
        config (SelectionConfig): Search settings.
        grid (FrequencyGrid, optional): Reused when it covers the search grid.

    Returns:
        SelectionResult: The choice.
    """
    check_sample_size(Method.ORACLE, n)
    alphas = make_alpha_grid(n, config)
    if not _covers(grid, alphas, _oracle_scale(target), config.m):
        grid = oracle_grid(target, error, n, config)
    values = true_risk(alphas, n, target, error, config.m, grid)
    curve = RiskCurve(alphas, values, n, CurveKind.TRUE_RISK)
    alpha_hat = argmin_on_grid(curve)
    logger.info(f"oracle: n={n} alpha*={alpha_hat:.6g}")
    return SelectionResult(alpha_hat, alpha_hat, curve, Method.ORACLE, n)


SELECTORS = {
    Method.SMALL_N: select_small_n,
    Method.CROSS_VALIDATION: select_cv,
}
