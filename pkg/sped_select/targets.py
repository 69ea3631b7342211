"""Marron-Wand normal mixture target densities 1-8."""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import DomainError

logger = logging.getLogger(__name__)

# Transcribed from Marron & Wand (1992), "Exact mean integrated squared error",
# Annals of Statistics 20(2). Each entry is (weight, mean, sd).
# Density 3 is the 8-component sum over j = 0..7 of
# 1/8 N(3((2/3)^j - 1), (2/3)^(2j)).
MARRON_WAND = {
    1: ("Gaussian", ((1.0, 0.0, 1.0),)),
    2: (
        "Skewed unimodal",
        ((1 / 5, 0.0, 1.0), (1 / 5, 1 / 2, 2 / 3), (3 / 5, 13 / 12, 5 / 9)),
    ),
    3: (
        "Strongly skewed",
        tuple((1 / 8, 3 * ((2 / 3) ** j - 1), (2 / 3) ** j) for j in range(8)),
    ),
    4: ("Kurtotic unimodal", ((2 / 3, 0.0, 1.0), (1 / 3, 0.0, 1 / 10))),
    5: ("Outlier", ((1 / 10, 0.0, 1.0), (9 / 10, 0.0, 1 / 10))),
    6: ("Bimodal", ((1 / 2, -1.0, 2 / 3), (1 / 2, 1.0, 2 / 3))),
    7: ("Separated bimodal", ((1 / 2, -3 / 2, 1 / 2), (1 / 2, 3 / 2, 1 / 2))),
    8: ("Skewed bimodal", ((3 / 4, 0.0, 1.0), (1 / 4, 3 / 2, 1 / 3))),
}


@dataclass(frozen=True)
class NormalMixture:
    """
    Finite normal mixture f = Σ w_j N(μ_j, σ_j²).

    Attributes:
        weights (tuple[float, ...]): Component weights in (0, 1], summing to 1.
        means (tuple[float, ...]): Component means.
        sds (tuple[float, ...]): Component standard deviations, all > 0.
    """

    weights: tuple
    means: tuple
    sds: tuple

    def __post_init__(self):
        if not (len(self.weights) == len(self.means) == len(self.sds) > 0):
            raise DomainError("mixture needs matching, non-empty component lists")
        if any(not (0 < w <= 1) for w in self.weights):
            raise DomainError("mixture weights must lie in (0, 1]")
        if abs(math.fsum(self.weights) - 1) > 1e-12:
            raise DomainError("mixture weights must sum to 1")
        if any(not s > 0 for s in self.sds):
            raise DomainError("mixture sds must be positive")

    @classmethod
    def from_components(cls, components):
        """
        Build a mixture from (weight, mean, sd) triples.

        Args:
            components (Iterable[tuple[float, float, float]]): Components.

        Returns:
            NormalMixture: The mixture.
        """
        weights, means, sds = zip(*components)
        return cls(tuple(weights), tuple(means), tuple(sds))

    @property
    def components(self):
        return list(zip(self.weights, self.means, self.sds))

    def _arrays(self):
        return np.array(self.weights), np.array(self.means), np.array(self.sds)

    @property
    def min_sd(self):
        return min(self.sds)

    @property
    def max_abs_mean(self):
        return max(abs(m) for m in self.means)


def mw_density(index):
    """
    Marron-Wand density by number.

    Args:
        index (int): Density number, 1..8.

    Returns:
        NormalMixture: The transcribed mixture.

    Raises:
        DomainError: If index is outside 1..8.
    """
    if index not in MARRON_WAND:
        raise DomainError(f"density index must be in 1..8, got {index}")
    return NormalMixture.from_components(MARRON_WAND[index][1])


def mixture_name(index):
    if index not in MARRON_WAND:
        raise DomainError(f"density index must be in 1..8, got {index}")
    return MARRON_WAND[index][0]


def mixture_pdf(mix, x):
    """Σ w_j N(x; μ_j, σ_j²), evaluated elementwise."""
    w, mu, sd = mix._arrays()
    x = np.asarray(x, dtype=float)
    return np.sum(w * norm.pdf(x[..., None], loc=mu, scale=sd), axis=-1)


def mixture_cdf(mix, x):
    """Σ w_j Φ((x - μ_j) / σ_j), evaluated elementwise."""
    w, mu, sd = mix._arrays()
    x = np.asarray(x, dtype=float)
    return np.sum(w * norm.cdf(x[..., None], loc=mu, scale=sd), axis=-1)


def mixture_char_fn(mix, t):
    """
    Characteristic function f̃(t) = Σ w_j exp(-i t μ_j - σ_j² t² / 2).

    Args:
        mix (NormalMixture): Target density.
        t (float | numpy.ndarray): Frequencies.

    Returns:
        complex | numpy.ndarray: f̃(t).
    """
    w, mu, sd = mix._arrays()
    t = np.asarray(t, dtype=float)
    tt = t[..., None]
    value = np.sum(w * np.exp(-1j * tt * mu - 0.5 * (sd * tt) ** 2), axis=-1)
    if value.ndim == 0:
        return complex(value)
    return value


def mixture_variance(mix):
    """Σ w_j (σ_j² + μ_j²) - (Σ w_j μ_j)²."""
    w, mu, sd = mix._arrays()
    mean = np.sum(w * mu)
    return float(np.sum(w * (sd**2 + mu**2)) - mean**2)


def mixture_l2_norm_sq(mix):
    """
    Exact ‖f‖² = Σ_j Σ_k w_j w_k N(μ_j - μ_k; 0, σ_j² + σ_k²).

    Returns:
        float: The squared L2 norm of the density.
    """
    w, mu, sd = mix._arrays()
    scale = np.sqrt(sd[:, None] ** 2 + sd[None, :] ** 2)
    pair = norm.pdf(mu[:, None] - mu[None, :], scale=scale)
    return float(w @ pair @ w)


def sample_mixture(mix, rng, n):
    """
    Draw i.i.d. values: a component by weight, then a normal from it.

    Args:
        mix (NormalMixture): Target density.
        rng (numpy.random.Generator): Generator, advanced by the call.
        n (int): Sample size.

    Returns:
        numpy.ndarray: ``n`` draws from the mixture.
    """
    if n < 0:
        raise DomainError(f"sample size must be >= 0, got {n}")
    w, mu, sd = mix._arrays()
    component = rng.choice(len(w), size=n, p=w)
    return rng.normal(mu[component], sd[component])
