"""
Loss and risk functionals of the SPeD estimator and their data-driven estimates.

All criteria are reported on the surrogate scale R = 2π(𝓡 - ‖f‖²), which has the
same minimiser as the mean integrated squared error 𝓡. Every function here works
on a shared FrequencyGrid; the ``alphas`` arguments broadcast so that a whole
curve costs one pass over the nodes per α after the per-sample spectral pass.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .error_models import abs_char_fn_sq
from .errors import DomainError, PreconditionError
from .sped import (
    _check_resolution,
    cosine_tail,
    empirical_char_fn,
    filter_denominator,
    spectral_integral,
)
from .targets import mixture_char_fn

logger = logging.getLogger(__name__)

DEFAULT_USTAT_MAX_N = 200


class CurveKind(str, Enum):
    TRUE_RISK = "true-risk"
    ESTIMATED_RISK = "estimated-risk"
    CROSS_VALIDATION = "cross-validation"
    TRUE_LOSS = "true-loss"


@dataclass(frozen=True)
class RiskCurve:
    """
    A criterion evaluated along an ascending α grid.

    Attributes:
        alphas (numpy.ndarray): Strictly increasing positive penalties.
        values (numpy.ndarray): Criterion values.
        n1 (int): Sample size the risk refers to.
        kind (CurveKind): Which criterion.
    """

    alphas: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    n1: int
    kind: CurveKind

    def __post_init__(self):
        alphas = _check_alphas(self.alphas)
        values = np.asarray(self.values, dtype=float).ravel()
        if values.shape != alphas.shape:
            raise DomainError("curve needs one value per alpha")
        if self.kind in (CurveKind.ESTIMATED_RISK, CurveKind.CROSS_VALIDATION):
            if self.n1 < 2:
                raise DomainError(f"estimated curves need n1 >= 2, got {self.n1}")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class RiskDecomposition:
    """R̂(α, n₁) = B̂(α, n₁) + V(α) / n₁."""

    b_hat: float
    v_over_n1: float

    @property
    def total(self):
        return self.b_hat + self.v_over_n1


@dataclass(frozen=True)
class EmpiricalSpectrum:
    """
    Per-sample quantities shared by every empirical criterion.

    Attributes:
        n (int): Sample size.
        power (numpy.ndarray): |P̃_n(t)|² at the grid nodes.
        h_squared (numpy.ndarray): H̃_n(t) at the grid nodes.
        pair_tail (float): Average over ordered pairs j != k of
            ∫_{|t|>T} t^{-2m} cos(t (Y_j - Y_k)) dt, the analytic tail of the
            slowly decaying term ∫ φ̃_α / conj(g̃) · H̃_n once multiplied by 1/α.
    """

    n: int
    power: np.ndarray = field(repr=False)
    h_squared: np.ndarray = field(repr=False)
    pair_tail: float


def _check_alphas(alphas):
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    if alphas.ndim != 1 or alphas.size == 0:
        raise DomainError("alphas must be a non-empty 1-d sequence")
    if np.any(~np.isfinite(alphas)) or np.any(alphas <= 0):
        raise DomainError("alphas must be finite and positive")
    if np.any(np.diff(alphas) <= 0):
        raise DomainError("alphas must be strictly increasing")
    return alphas


def _check_grid_covers(grid, alphas, m):
    if grid.m != m:
        raise PreconditionError(f"grid built for m={grid.m}, criterion uses m={m}")
    if np.min(alphas) < grid.alpha * (1 - 1e-12):
        raise PreconditionError(
            f"grid built for alpha >= {grid.alpha:.4g}, asked for {np.min(alphas):.4g}"
        )
    if np.max(alphas) > grid.alpha_max * (1 + 1e-12):
        raise PreconditionError(
            f"grid built for alpha <= {grid.alpha_max:.4g}, "
            f"asked for {np.max(alphas):.4g}"
        )


def _filter_parts(error, alphas, m, grid):
    """|g̃|² at the nodes and the filter denominator, shape (len(alphas), K+1)."""
    gsq = abs_char_fn_sq(error, grid.nodes)
    return gsq, filter_denominator(error, np.atleast_1d(alphas), m, grid.nodes)


def _slow_tail(grid, m):
    """∫_{|t|>T} t^{-2m} dt."""
    return 2.0 * float(cosine_tail(grid.cutoff, 0.0, 2 * m))


def _unwrap(values, alpha):
    return float(values[0]) if np.ndim(alpha) == 0 else values


def pair_cosine_tail(values, grid, m):
    """
    Σ_{j<k} ∫_{|t|>T} t^{-2m} cos(t (Y_j - Y_k)) dt.

    Args:
        values (numpy.ndarray): Observations.
        grid (FrequencyGrid): Supplies the cutoff T.
        m (int): Penalty order.

    Returns:
        float: The pairwise sum.
    """
    total = 0.0
    for j in range(values.size - 1):
        diffs = values[j + 1 :] - values[j]
        total += 2.0 * cosine_tail(grid.cutoff, diffs, 2 * m).sum()
    return total


def empirical_spectrum(sample, grid):
    """
    The shared per-sample pass: |P̃_n|², H̃_n and the pairwise cosine tail.

    Args:
        sample (Sample): Observations, n >= 2.
        grid (FrequencyGrid): Quadrature rule.

    Returns:
        EmpiricalSpectrum: The per-sample quantities.
    """
    n = sample.n
    if n < 2:
        raise DomainError(f"risk estimation needs n >= 2, got {n}")
    _check_resolution(grid, sample.max_abs)
    power = np.abs(empirical_char_fn(sample, grid)) ** 2
    h_squared = (n * power - 1.0) / (n - 1)
    pairs = pair_cosine_tail(sample.values, grid, grid.m)
    return EmpiricalSpectrum(n, power, h_squared, 2.0 * pairs / (n * (n - 1)))


def h_squared_hat(sample, grid):
    """
    Unbiased estimate H̃_n(t) = n/(n-1) (|P̃_n(t)|² - 1/n) of |h̃(t)|².

    Values can be negative; H̃_n(0) = 1.

    Args:
        sample (Sample): Observations, n >= 2.
        grid (FrequencyGrid): Nodes to evaluate at.

    Returns:
        numpy.ndarray: H̃_n at the grid nodes.
    """
    n = sample.n
    if n < 2:
        raise DomainError(f"H_n needs n >= 2, got {n}")
    power = np.abs(empirical_char_fn(sample, grid)) ** 2
    return (n * power - 1.0) / (n - 1)


def penalty_variance(alphas, error, m, grid):
    """V(α) = ∫ |φ̃_α(t)|² dt."""
    gsq, den = _filter_parts(error, alphas, m, grid)
    return _unwrap(spectral_integral(grid, gsq / den**2), alphas)


def filter_over_noise(alphas, error, m, grid):
    """∫ φ̃_α(t) / conj(g̃(t)) dt, including the analytic tail past T."""
    _, den = _filter_parts(error, alphas, m, grid)
    values = spectral_integral(grid, 1.0 / den) + _slow_tail(grid, m) / np.atleast_1d(
        alphas
    )
    return _unwrap(values, alphas)


def _empirical_terms(spectrum, alphas, error, m, grid):
    """(∫|φ̃|² H̃_n, ∫ φ̃/conj(g̃) H̃_n, V) for every α."""
    gsq, den = _filter_parts(error, alphas, m, grid)
    phi_sq = gsq / den**2
    smooth = spectral_integral(grid, phi_sq * spectrum.h_squared)
    cross = spectral_integral(grid, spectrum.h_squared / den) + spectrum.pair_tail / (
        np.atleast_1d(alphas)
    )
    return smooth, cross, spectral_integral(grid, phi_sq)


def spectral_norm_sq(target, grid):
    """‖f‖² = (1/2π) ∫ |f̃|² on the grid."""
    return spectral_integral(grid, np.abs(mixture_char_fn(target, grid.nodes)) ** 2) / (
        2 * np.pi
    )


def true_risk(alpha, n, target, error, m, grid):
    """
    Surrogate risk R(α, n) = 2π(𝓡(α, n) - ‖f‖²):

        R = (n-1)/n ∫|φ̃|²|h̃|² - 2 ∫ φ̃/conj(g̃) |h̃|² + (1/n) ∫|φ̃|²,  h̃ = g̃ f̃.

    Args:
        alpha (float | numpy.ndarray): Penalties.
        n (int): Sample size, >= 1.
        target (NormalMixture): True density.
        error (ErrorModel): Noise model.
        m (int): Penalty order.
        grid (FrequencyGrid): Quadrature rule.

    Returns:
        float | numpy.ndarray: R(α, n); negative values are normal.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    gsq, den = _filter_parts(error, alpha, m, grid)
    h_sq = gsq * np.abs(mixture_char_fn(target, grid.nodes)) ** 2
    phi_sq = gsq / den**2
    values = (
        (n - 1) / n * spectral_integral(grid, phi_sq * h_sq)
        - 2.0 * spectral_integral(grid, h_sq / den)
        + spectral_integral(grid, phi_sq) / n
    )
    return _unwrap(values, alpha)


def true_bias_var(alpha, target, error, m, n, grid):
    """
    Integrated squared bias and integrated variance of f_n^α.

        bias² = (1/2π) ∫ |φ̃ g̃ - 1|² |f̃|²
        var   = (2πn)^{-1} [∫ |φ̃|² - ∫ |φ̃ g̃ f̃|²]

    Returns:
        tuple[float, float]: (bias_sq, int_var), or arrays when ``alpha`` is one.
    """
    gsq, den = _filter_parts(error, alpha, m, grid)
    f_sq = np.abs(mixture_char_fn(target, grid.nodes)) ** 2
    # φ̃ g̃ = |g̃|² / den is real for Gaussian noise
    phi_g = gsq / den
    bias_sq = spectral_integral(grid, (phi_g - 1.0) ** 2 * f_sq) / (2 * np.pi)
    int_var = (
        spectral_integral(grid, gsq / den**2) - spectral_integral(grid, phi_g**2 * f_sq)
    ) / (2 * np.pi * n)
    return _unwrap(bias_sq, alpha), _unwrap(int_var, alpha)


def true_loss_ise(sample, alpha, target, error, m, grid, ecf=None):
    """
    Realised integrated squared error ℒ(α) = (1/2π) ∫ |φ̃_α P̃_n - f̃|².

    Args:
        sample (Sample): Observations, n >= 1.
        alpha (float | numpy.ndarray): Penalties.
        target (NormalMixture): True density.
        error (ErrorModel): Noise model.
        m (int): Penalty order.
        grid (FrequencyGrid): Quadrature rule.
        ecf (numpy.ndarray, optional): Precomputed P̃_n at the nodes.

    Returns:
        float | numpy.ndarray: ℒ(α) >= 0.
    """
    _check_resolution(grid, max(sample.max_abs, target.max_abs_mean))
    if ecf is None:
        ecf = empirical_char_fn(sample, grid)
    gsq, den = _filter_parts(error, alpha, m, grid)
    # φ̃ = g̃ / den for real, positive g̃
    phi = np.sqrt(gsq) / den
    diff = phi * ecf - mixture_char_fn(target, grid.nodes)
    values = spectral_integral(grid, np.abs(diff) ** 2) / (2 * np.pi)
    return _unwrap(np.maximum(values, 0.0), alpha)


def estimated_risk_curve(sample, alphas, n1, error, m, grid, spectrum=None):
    """
    Small-n risk criterion

        R̂(α, n₁) = (n₁-1)/n₁ ∫|φ̃|² H̃_n - 2 ∫ φ̃/conj(g̃) H̃_n + (1/n₁) ∫|φ̃|²,

    an unbiased estimate of R(α, n₁) from a sample of any size n >= 2.

    Args:
        sample (Sample): Observations.
        alphas (Sequence[float]): Ascending penalties.
        n1 (int): Sample size whose risk is estimated, >= 2.
        error (ErrorModel): Noise model.
        m (int): Penalty order.
        grid (FrequencyGrid): Grid valid for min(alphas).
        spectrum (EmpiricalSpectrum, optional): Reused per-sample pass.

    Returns:
        RiskCurve: Criterion values, kind ESTIMATED_RISK.
    """
    if n1 < 2:
        raise DomainError(f"n1 must be >= 2, got {n1}")
    alphas = _check_alphas(alphas)
    _check_grid_covers(grid, alphas, m)
    if spectrum is None:
        spectrum = empirical_spectrum(sample, grid)
    smooth, cross, variance = _empirical_terms(spectrum, alphas, error, m, grid)
    values = (n1 - 1) / n1 * smooth - 2.0 * cross + variance / n1
    return RiskCurve(alphas, values, n1, CurveKind.ESTIMATED_RISK)


def cv_criterion(sample, alphas, error, m, grid, spectrum=None):
    """
    Cross-validation criterion L̂(α) = ‖f̃_n^α‖² - 2 ∫ φ̃/conj(g̃) H̃_n.

    Identical to ``estimated_risk_curve`` with n₁ = n, computed along its own
    algebraic path.

    Returns:
        RiskCurve: Criterion values, kind CROSS_VALIDATION.
    """
    alphas = _check_alphas(alphas)
    _check_grid_covers(grid, alphas, m)
    if spectrum is None:
        spectrum = empirical_spectrum(sample, grid)
    gsq, den = _filter_parts(error, alphas, m, grid)
    norm_sq = spectral_integral(grid, gsq / den**2 * spectrum.power)
    cross = spectral_integral(grid, spectrum.h_squared / den) + spectrum.pair_tail / (
        alphas
    )
    values = norm_sq - 2.0 * cross
    return RiskCurve(alphas, values, spectrum.n, CurveKind.CROSS_VALIDATION)


def decompose_risk_estimate(sample, alpha, n1, error, m, grid, spectrum=None):
    """
    Split R̂(α, n₁) into the squared-bias estimate
    B̂(α, n₁) = (n₁-1)/n₁ ∫|φ̃|² H̃_n - 2 ∫ φ̃/conj(g̃) H̃_n and V(α)/n₁.

    Returns:
        RiskDecomposition: The two parts.
    """
    if n1 < 2:
        raise DomainError(f"n1 must be >= 2, got {n1}")
    alphas = _check_alphas(alpha)
    _check_grid_covers(grid, alphas, m)
    if spectrum is None:
        spectrum = empirical_spectrum(sample, grid)
    smooth, cross, variance = _empirical_terms(spectrum, alphas, error, m, grid)
    b_hat = (n1 - 1) / n1 * smooth - 2.0 * cross
    return RiskDecomposition(float(b_hat[0]), float(variance[0] / n1))


def expected_decomposition(alpha, n1, target, error, m, grid):
    """
    Expectations matching ``decompose_risk_estimate``.

    Returns:
        tuple[float, float]: (E B̂(α, n₁), R(α, n₁)).
    """
    risk = true_risk(alpha, n1, target, error, m, grid)
    return risk - penalty_variance(alpha, error, m, grid) / n1, risk


def _theta_tilde(alpha, n, n1, error, m, grid):
    gsq, den = _filter_parts(error, alpha, m, grid)
    lead = n * (n1 - 1) / (n1 * (n - 1))
    return lead * gsq / den[0] ** 2 - 2.0 * n / (n - 1) / den[0]


def _theta_transform(x_points, alpha, n, n1, error, m, grid):
    """Θ(x) = ∫ e^{itx} θ̃_α(t) dt = 2π θ_α(x), tail included."""
    x_points = np.atleast_1d(np.asarray(x_points, dtype=float))
    weighted = _theta_tilde(alpha, n, n1, error, m, grid) * grid.weights
    values = np.empty(x_points.size)
    for start in range(0, x_points.size, 2048):
        block = x_points[start : start + 2048]
        values[start : start + 2048] = np.cos(np.outer(block, grid.nodes)) @ weighted
    # past T the kernel is -2n/(n-1) / (α t^{2m})
    tail = 2.0 * cosine_tail(grid.cutoff, x_points, 2 * m)
    return values - 2.0 * n / (n - 1) / alpha * tail


def theta_kernel(x_points, alpha, n, n1, error, m, grid):
    """
    U-statistic kernel θ_α(x) = (1/2π) ∫ e^{itx} θ̃_α(t) dt with
    θ̃_α = n(n₁-1)/(n₁(n-1)) |φ̃_α|² - 2n/(n-1) φ̃_α / conj(g̃).

    Real and even in x.
    """
    return _theta_transform(x_points, alpha, n, n1, error, m, grid) / (2 * np.pi)


def ustat_constant(alpha, n, n1, error, m, grid):
    """
    Constant C of R̂(α, n₁) = C + (1/C(n,2)) Σ_{j<k} κ(Y_j - Y_k), where
    κ = 2π (n-1)/n · θ_α.

    Built up as
        C₂ = V/n₁ - (n₁-1)/(n₁(n-1)) V + 2/(n-1) ∫ φ̃/conj(g̃)
        C  = C₂ + 2π θ_α(0) / n
    """
    variance = penalty_variance(alpha, error, m, grid)
    c2 = (
        variance / n1
        - (n1 - 1) / (n1 * (n - 1)) * variance
        + 2.0 / (n - 1) * filter_over_noise(alpha, error, m, grid)
    )
    return c2 + float(_theta_transform(0.0, alpha, n, n1, error, m, grid)[0]) / n


def estimated_risk_ustat(
    sample, alpha, n1, error, m, grid, max_n=DEFAULT_USTAT_MAX_N
):
    """
    R̂(α, n₁) through its U-statistic representation, an O(n²) path that is
    independent of ``estimated_risk_curve``.

    Args:
        sample (Sample): Observations, 2 <= n <= max_n.
        alpha (float): Penalty.
        n1 (int): Sample size whose risk is estimated, >= 2.
        error (ErrorModel): Noise model.
        m (int): Penalty order.
        grid (FrequencyGrid): Quadrature rule.
        max_n (int): Largest sample accepted by the quadratic path.

    Returns:
        float: R̂(α, n₁).
    """
    n = sample.n
    if n < 2:
        raise DomainError(f"risk estimation needs n >= 2, got {n}")
    if n > max_n:
        raise PreconditionError(
            f"U-statistic path refuses n={n} (limit {max_n}); use the spectral path"
        )
    if n1 < 2:
        raise DomainError(f"n1 must be >= 2, got {n1}")
    _check_grid_covers(grid, _check_alphas(alpha), m)
    _check_resolution(grid, sample.max_abs)
    j, k = np.triu_indices(n, k=1)
    diffs = sample.values[j] - sample.values[k]
    kernel = _theta_transform(diffs, alpha, n, n1, error, m, grid)
    pair_mean = (n - 1) / n * kernel.mean()
    return ustat_constant(alpha, n, n1, error, m, grid) + float(pair_mean)
