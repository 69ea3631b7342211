"""
Smoothness-penalized deconvolution (SPeD) estimator.

The estimator is evaluated in the Fourier domain,

    f̃_n^α(t) = φ̃_α(t) P̃_n(t),   φ̃_α(t) = conj(g̃(t)) / (|g̃(t)|² + α |t|^{2m}),

and every integral over t is discretised on a shared FrequencyGrid.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import log_ndtr, sici

from .error_models import ErrorModel, abs_char_fn_sq, char_fn
from .errors import DataError, DomainError, PreconditionError

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-10
DEFAULT_MAX_NODES = 400_000

# Values processed per block when forming exp(-i t Y) matrices.
_CHUNK = 2048


@dataclass(frozen=True)
class PenaltyKernel:
    """
    Spectral filter parameters.

    Attributes:
        alpha (float): Penalty parameter, > 0.
        m (int): Order of the penalized derivative, >= 1.
        error (ErrorModel): Known noise model.
    """

    alpha: float
    m: int
    error: ErrorModel

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if int(self.m) != self.m or self.m < 1:
            raise DomainError(f"m must be an integer >= 1, got {self.m}")
        self.error.require_deconvolvable()

    def with_alpha(self, alpha):
        return PenaltyKernel(alpha, self.m, self.error)


@dataclass(frozen=True)
class Sample:
    """Observed values Y_1..Y_n."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(values)):
            raise DataError("sample contains non-finite values")
        object.__setattr__(self, "values", values)

    @property
    def n(self):
        return int(self.values.size)

    @property
    def max_abs(self):
        return float(np.max(np.abs(self.values))) if self.n else 0.0

    def shifted(self, c):
        return Sample(self.values + c)


@dataclass(frozen=True)
class FrequencyGrid:
    """
    Uniform composite trapezoid rule on [0, T] standing for symmetric integration
    over [-T, T]; every integrand used here is even (or Hermitian, in which case
    the real part is integrated), so the t = 0 node carries weight Δt and every
    other interior node 2Δt.

    Attributes:
        nodes (numpy.ndarray): 0 = t_0 < t_1 < ... < t_K = T.
        weights (numpy.ndarray): Quadrature weights for ∫_{-T}^{T}.
        spacing (float): Node spacing Δt.
        cutoff (float): T.
        tail_bound (float): Bound on the neglected tail mass of the worst-case
            integrand for every α >= ``alpha``.
        m (int): Penalty order the bound was computed for.
        alpha (float): Smallest penalty the grid is valid for.
        oscillation_scale (float): Largest |Y| or |x| the spacing resolves.
        alpha_max (float): Largest penalty whose near-origin peak the spacing
            resolves.
    """

    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    spacing: float
    cutoff: float
    tail_bound: float
    m: int
    alpha: float
    oscillation_scale: float
    alpha_max: float = math.inf

    @classmethod
    def uniform(cls, cutoff, count, **attributes):
        """
        Build the trapezoid rule with ``count`` intervals on [0, cutoff].

        Args:
            cutoff (float): T.
            count (int): Number of intervals K.
            **attributes: Remaining FrequencyGrid fields.

        Returns:
            FrequencyGrid: The grid.
        """
        nodes = np.linspace(0.0, cutoff, count + 1)
        spacing = cutoff / count
        weights = np.full(count + 1, 2.0 * spacing)
        weights[0] = spacing
        weights[-1] = spacing
        return cls(nodes, weights, spacing, cutoff, **attributes)

    @property
    def size(self):
        return int(self.nodes.size)

    def refined(self, factor=2):
        """Same cutoff, spacing divided by ``factor``."""
        return FrequencyGrid.uniform(
            self.cutoff,
            (self.size - 1) * factor,
            tail_bound=self.tail_bound,
            m=self.m,
            alpha=self.alpha,
            oscillation_scale=self.oscillation_scale * factor,
            alpha_max=self.alpha_max,
        )

    def full_nodes(self):
        """Nodes and trapezoid weights of the same rule laid out on [-T, T]."""
        nodes = np.concatenate((-self.nodes[:0:-1], self.nodes))
        weights = np.full(nodes.size, self.spacing)
        weights[0] = weights[-1] = 0.5 * self.spacing
        return nodes, weights

    def describe(self):
        """Quadrature settings echoed into run manifests."""
        return {
            "cutoff": self.cutoff,
            "spacing": self.spacing,
            "nodes": self.size,
            "tail_bound": self.tail_bound,
            "alpha_min": self.alpha,
            "alpha_max": self.alpha_max,
            "m": self.m,
            "oscillation_scale": self.oscillation_scale,
        }


def filter_denominator(error, alpha, m, t):
    """|g̃(t)|² + α |t|^{2m}; broadcasts ``alpha`` against ``t``."""
    return abs_char_fn_sq(error, t) + np.multiply.outer(alpha, np.abs(t) ** (2 * m))


def phi_tilde(kernel, t):
    """
    The SPeD filter φ̃_α(t) = conj(g̃(t)) / (|g̃(t)|² + α |t|^{2m}).

    Args:
        kernel (PenaltyKernel): Filter parameters.
        t (float | numpy.ndarray): Frequencies.

    Returns:
        complex | numpy.ndarray: φ̃_α(t); real-valued for Gaussian noise.
    """
    t_arr = np.asarray(t, dtype=float)
    value = np.conj(np.asarray(char_fn(kernel.error, t_arr))) / filter_denominator(
        kernel.error, kernel.alpha, kernel.m, t_arr
    )
    if value.ndim == 0:
        return complex(value)
    return value


def spectral_integral(grid, values):
    """
    ∫_{-T}^{T} of an even integrand sampled at ``grid.nodes`` (last axis).

    Args:
        grid (FrequencyGrid): Quadrature rule.
        values (numpy.ndarray): Integrand at the nodes, shape (..., K + 1).

    Returns:
        float | numpy.ndarray: The integral(s).
    """
    return np.real(np.asarray(values) @ grid.weights)


def cosine_tail(cutoff, d, power):
    """
    Closed form of ∫_T^∞ cos(d t) t^{-power} dt for integer power >= 2.

    Uses C_1(a) = -Ci(a), S_1(a) = π/2 - Si(a) and the integration-by-parts
    recursion
        C_q(a) = (cos(a) a^{1-q} - S_{q-1}(a)) / (q - 1)
        S_q(a) = (sin(a) a^{1-q} + C_{q-1}(a)) / (q - 1)
    for C_q(a) = ∫_a^∞ cos(u) u^{-q} du, then rescales by |d|^{power-1}.

    Args:
        cutoff (float): T > 0.
        d (float | numpy.ndarray): Frequencies of the cosine.
        power (int): Decay exponent, >= 2.

    Returns:
        numpy.ndarray: The tail integrals, elementwise in ``d``.
    """
    if power < 2:
        raise DomainError(f"power must be >= 2, got {power}")
    d = np.abs(np.asarray(d, dtype=float))
    a = d * cutoff
    flat = cutoff ** (1 - power) / (power - 1)
    out = np.full(a.shape, flat)
    # a ~ 0: the cosine is flat over the whole tail
    moving = a > 1e-8
    if np.any(moving):
        am = a[moving]
        si, ci = sici(am)
        c_q, s_q = -ci, 0.5 * np.pi - si
        cos_a, sin_a = np.cos(am), np.sin(am)
        for q in range(2, power + 1):
            c_q, s_q = (
                (cos_a * am ** (1 - q) - s_q) / (q - 1),
                (sin_a * am ** (1 - q) + c_q) / (q - 1),
            )
        out[moving] = d[moving] ** (power - 1) * c_q
    return out


def _log_tail_bound(error, alpha, m, cutoff, target_sd):
    """log of the worst tail mass neglected beyond ``cutoff``."""
    s2 = error.variance
    log_t = math.log(cutoff)
    # |φ̃|² |H̃| and the replacement of φ̃/conj(g̃) by 1/(α t^{2m}) past T
    squared = (
        math.log(2.0)
        - s2 * cutoff**2
        + (1 - 4 * m) * log_t
        - 2 * math.log(alpha)
        - math.log(4 * m - 1)
    )
    # |φ̃ P̃|, the inversion integrand
    linear = (
        math.log(2.0)
        - 0.5 * s2 * cutoff**2
        + (1 - 2 * m) * log_t
        - math.log(alpha)
        - math.log(2 * m - 1)
    )
    terms = [squared, linear]
    if target_sd is not None:
        # ∫_T^∞ exp(-σ² t²) dt = √π / (2σ) erfc(σT), erfc(x) = 2 Φ(-x√2)
        terms.append(
            math.log(math.sqrt(math.pi) / target_sd)
            + float(log_ndtr(-target_sd * cutoff * math.sqrt(2.0)))
        )
    return max(terms)


def origin_pole_distance(alpha, m):
    """Distance from the real axis of the poles of 1 / (1 + α t^{2m}) nearest t = 0."""
    return alpha ** (-1.0 / (2 * m)) * math.sin(math.pi / (2 * m))


def crossover_frequency(error, alpha, m):
    """
    Frequency t_c > 0 where |g̃(t_c)|² = α t_c^{2m}, i.e. where the penalty takes
    over from the noise in the filter denominator.
    """

    def gap(log_t):
        t = math.exp(log_t)
        return error.variance * t * t + 2 * m * log_t + math.log(alpha)

    lo, hi = -30.0, 1.0
    while gap(hi) < 0:
        hi *= 2
    return math.exp(brentq(gap, lo, hi, xtol=1e-12))


def build_frequency_grid(
    kernel,
    tolerance=DEFAULT_TOLERANCE,
    oscillation_scale=1.0,
    target=None,
    max_nodes=DEFAULT_MAX_NODES,
    alpha_max=None,
):
    """
    Choose the cutoff T and spacing Δt of the trapezoid rule.

    T is the smallest value >= 1 whose analytic tail bound is below
    ``tolerance`` (the bound is decreasing in α, so the grid is valid for every
    penalty >= ``kernel.alpha``). Δt resolves e^{-itY} oscillations up to
    ``oscillation_scale`` (Δt <= π / (4 · scale)) and stays below a quarter of the
    distance of the filter's complex poles from the real axis, which governs the
    trapezoid error of these analytic integrands. Large penalties move poles
    towards t = 0, so the spacing also resolves those of ``alpha_max``.

    Args:
        kernel (PenaltyKernel): Filter at the smallest α of interest.
        tolerance (float): Allowed tail mass, > 0.
        oscillation_scale (float): Largest |Y_j| or |x| the grid must resolve.
        target (NormalMixture, optional): True density; when given, T also
            covers the tail of |f̃|².
        max_nodes (int): Refuse grids with more nodes than this.
        alpha_max (float, optional): Largest α the grid must serve; defaults to
            ``kernel.alpha``.

    Returns:
        FrequencyGrid: The grid.

    Raises:
        DomainError: If tolerance <= 0, alpha_max < kernel.alpha or the grid would
            be too large.
    """
    if not tolerance > 0:
        raise DomainError(f"tolerance must be positive, got {tolerance}")
    if alpha_max is None:
        alpha_max = kernel.alpha
    if not alpha_max >= kernel.alpha:
        raise DomainError(f"alpha_max {alpha_max} is below alpha {kernel.alpha}")
    if not oscillation_scale > 0:
        oscillation_scale = 1.0
    error, alpha, m = kernel.error, kernel.alpha, kernel.m
    target_sd = target.min_sd if target is not None else None
    log_tol = math.log(tolerance)

    def excess(log_t):
        return _log_tail_bound(error, alpha, m, math.exp(log_t), target_sd) - log_tol

    if excess(0.0) <= 0:
        cutoff = 1.0
    else:
        hi = 1.0
        while excess(hi) > 0:
            hi *= 2
        # step just past the root so the reported bound is strictly below tolerance
        cutoff = math.exp(brentq(excess, 0.0, hi, xtol=1e-10) + 1e-6)

    t_c = crossover_frequency(error, alpha, m)
    spacing = min(
        math.pi / (4 * oscillation_scale),
        math.pi / (8 * error.variance * t_c),
        0.25 * origin_pole_distance(alpha_max, m),
    )
    count = max(int(math.ceil(cutoff / spacing)), 2)
    if count + 1 > max_nodes:
        raise DomainError(
            f"frequency grid would need {count + 1} nodes (> {max_nodes}); "
            "rescale the data or raise the node limit"
        )
    grid = FrequencyGrid.uniform(
        cutoff,
        count,
        tail_bound=math.exp(_log_tail_bound(error, alpha, m, cutoff, target_sd)),
        m=m,
        alpha=alpha,
        oscillation_scale=oscillation_scale,
        alpha_max=alpha_max,
    )
    logger.debug(
        f"Frequency grid: T={grid.cutoff:.4g}, dt={grid.spacing:.4g}, "
        f"{grid.size} nodes, tail bound {grid.tail_bound:.3g} (alpha={alpha:.3g})"
    )
    return grid


def empirical_char_fn(sample, grid):
    """
    P̃_n(t) = (1/n) Σ_j e^{-i t Y_j} at every grid node.

    Args:
        sample (Sample): Observations.
        grid (FrequencyGrid): Nodes to evaluate at.

    Returns:
        numpy.ndarray: Complex values, P̃_n(0) = 1.

    Raises:
        DomainError: If the sample is empty.
    """
    if sample.n < 1:
        raise DomainError("empirical characteristic function needs n >= 1")
    total = np.zeros(grid.size, dtype=complex)
    for start in range(0, sample.n, _CHUNK):
        block = sample.values[start : start + _CHUNK]
        total += np.exp(-1j * np.outer(grid.nodes, block)).sum(axis=1)
    return total / sample.n


def _check_resolution(grid, scale):
    if scale > grid.oscillation_scale * (1 + 1e-12):
        raise PreconditionError(
            f"grid resolves |y| <= {grid.oscillation_scale:.4g} but the data or "
            f"evaluation points reach {scale:.4g}; rebuild the grid"
        )


def inverse_transform(grid, spectrum, x_points):
    """
    (1/2π) ∫ e^{itx} s(t) dt for a Hermitian spectrum s given on the half grid.

    The integral is formed with complex arithmetic on the symmetric node set;
    the imaginary residue must vanish up to rounding and is dropped after the
    check.

    Args:
        grid (FrequencyGrid): Quadrature rule.
        spectrum (numpy.ndarray): s(t_k) for t_k >= 0; s(-t) = conj(s(t)).
        x_points (numpy.ndarray): Evaluation points.

    Returns:
        numpy.ndarray: Real values at ``x_points``.
    """
    nodes, weights = grid.full_nodes()
    full = np.concatenate((np.conj(spectrum[:0:-1]), spectrum)) * weights
    x_points = np.atleast_1d(np.asarray(x_points, dtype=float))
    values = np.empty(x_points.size, dtype=complex)
    for start in range(0, x_points.size, _CHUNK):
        block = x_points[start : start + _CHUNK]
        values[start : start + _CHUNK] = np.exp(1j * np.outer(block, nodes)) @ full
    values /= 2 * np.pi
    residue = np.abs(values.imag)
    if np.any(residue >= 1e-8 * (1 + np.abs(values.real))):
        raise DataError(
            f"inverse transform left an imaginary residue of {residue.max():.3g}"
        )
    return values.real


def estimate_density(sample, kernel, x_points, grid):
    """
    SPeD estimate f_n^α(x) = (1/2π) ∫ e^{itx} φ̃_α(t) P̃_n(t) dt.

    Args:
        sample (Sample): Observations, n >= 1.
        kernel (PenaltyKernel): Filter.
        x_points (Sequence[float]): Evaluation points.
        grid (FrequencyGrid): Grid built with an oscillation scale covering
            max(|Y_j|, |x|).

    Returns:
        numpy.ndarray: Estimated density values (not clipped, not renormalised).

    Raises:
        PreconditionError: If the grid does not resolve the data or the points.
    """
    x_points = np.atleast_1d(np.asarray(x_points, dtype=float))
    scale = max(sample.max_abs, float(np.max(np.abs(x_points), initial=0.0)))
    _check_resolution(grid, scale)
    spectrum = phi_tilde(kernel, grid.nodes) * empirical_char_fn(sample, grid)
    return inverse_transform(grid, spectrum, x_points)
