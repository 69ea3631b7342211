"""
Monte Carlo harness for the factorial study: target density × sample size ×
noise share, with every replicate reproducible from (seed, replicate index).
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from multiprocessing import Pool

import numpy as np

from . import log_setup
from .error_models import ErrorModel, calibrate_noise_sd, sample_error
from .errors import DataError, DomainError, ReplicateError
from .risk import empirical_spectrum, true_loss_ise
from .selection import (
    Method,
    SelectionConfig,
    build_grid_for,
    make_alpha_grid,
    n1_for,
    oracle_grid,
    select_cv,
    select_oracle,
    select_small_n,
)
from .sped import Sample, empirical_char_fn
from .targets import mixture_variance, mw_density, sample_mixture

logger = logging.getLogger(__name__)

METHOD_ORDER = {method: index for index, method in enumerate(Method)}


@dataclass(frozen=True)
class SimSetting:
    """
    One cell of the study.

    Attributes:
        density_index (int): Marron-Wand density, 1..8.
        n (int): Sample size, >= 4.
        p (float): Noise share Var(E) / Var(Y), in (0, 1).
        n_sim (int): Number of replicates, >= 1.
        seed (int): Root seed, 0 <= seed < 2**64.
        methods (tuple[Method, ...]): Methods to run on every replicate.
        config (SelectionConfig): Search settings.
    """

    density_index: int
    n: int
    p: float
    n_sim: int
    seed: int
    methods: tuple = tuple(Method)
    config: SelectionConfig = field(default_factory=SelectionConfig)

    def __post_init__(self):
        mw_density(self.density_index)
        if self.n < 4:
            raise DomainError(f"simulation needs n >= 4, got {self.n}")
        if not 0 < self.p < 1:
            raise DomainError(f"noise share p must lie in (0, 1), got {self.p}")
        if self.n_sim < 1:
            raise DomainError(f"nsim must be >= 1, got {self.n_sim}")
        if not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must lie in [0, 2**64), got {self.seed}")
        methods = sorted({Method(m) for m in self.methods}, key=METHOD_ORDER.get)
        methods = tuple(methods)
        if not methods:
            raise DomainError("at least one method is required")
        object.__setattr__(self, "methods", methods)

    @property
    def target(self):
        return mw_density(self.density_index)

    @property
    def error(self):
        return ErrorModel(calibrate_noise_sd(mixture_variance(self.target), self.p))

    def as_dict(self):
        data = asdict(self)
        data["methods"] = [method.value for method in self.methods]
        data["config"] = self.config.as_dict()
        data["noise_sd"] = self.error.sd
        return data


@dataclass(frozen=True)
class SimRecord:
    """
    Outcome of one method on one replicate.

    Attributes:
        replicate (int): Replicate index.
        method (Method): Selection method.
        alpha_hat (float): Chosen penalty.
        ise (float): Realised loss at ``alpha_hat``.
        ise_oracle (float): Realised loss at α*_n on the same sample.
        loss_ratio (float): ise / ise_oracle.
    """

    replicate: int
    method: Method
    alpha_hat: float
    ise: float
    ise_oracle: float
    loss_ratio: float

    @classmethod
    def from_losses(cls, replicate, method, alpha_hat, ise, ise_oracle):
        if not ise_oracle > 0:
            raise DataError(f"oracle loss must be positive, got {ise_oracle}")
        return cls(replicate, method, alpha_hat, ise, ise_oracle, ise / ise_oracle)

    def as_row(self):
        return {
            "replicate": self.replicate,
            "method": self.method.value,
            "alpha_hat": self.alpha_hat,
            "ise": self.ise,
            "ise_oracle": self.ise_oracle,
            "loss_ratio": self.loss_ratio,
        }


def replicate_rng(seed, replicate_index):
    """Child generator of replicate ``replicate_index``; independent of scheduling."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(replicate_index,))
    return np.random.default_rng(sequence)


@dataclass
class SimulationRun:
    """
    Outcome of every replicate of one setting.

    Attributes:
        setting (SimSetting): The study cell.
        oracle (SelectionResult): α*_n shared by all replicates.
        oracle_grid (FrequencyGrid): Grid the oracle risk curve was evaluated on.
        records (list[SimRecord]): Sorted by (replicate, method).
        replicate_grids (dict): Range [min, max] of every per-replicate grid
            setting, keyed like ``FrequencyGrid.describe``.
    """

    setting: SimSetting
    oracle: object = field(repr=False)
    oracle_grid: object = field(repr=False)
    records: list = field(repr=False)
    replicate_grids: dict = field(default_factory=dict)


def oracle_alpha(setting, grid=None):
    """
    α*_n of a setting; it does not depend on the sample, so it is computed once.

    Returns:
        SelectionResult: The oracle choice.
    """
    return select_oracle(
        setting.target, setting.error, setting.n, setting.config, grid=grid
    )


def draw_sample(setting, rng):
    """Y = X + E, X drawn before E."""
    x = sample_mixture(setting.target, rng, setting.n)
    e = sample_error(setting.error, rng, setting.n)
    return Sample(x + e)


def run_replicate(setting, replicate_index, oracle=None):
    """
    Run every requested method on one simulated sample.

    Args:
        setting (SimSetting): The study cell.
        replicate_index (int): Replicate index, selects the RNG stream.
        oracle (SelectionResult, optional): Precomputed ``oracle_alpha(setting)``.

    Returns:
        list[SimRecord]: One record per method, in method order.

    Raises:
        ReplicateError: Wrapping any failure, with the replicate index attached.
    """
    return _guarded_replicate(setting, replicate_index, oracle)[0]


def _guarded_replicate(setting, replicate_index, oracle):
    try:
        return _replicate_records(setting, replicate_index, oracle)
    except ReplicateError:
        raise
    except Exception as exc:
        raise ReplicateError(replicate_index, exc) from exc


def _replicate_records(setting, replicate_index, oracle):
    if oracle is None:
        oracle = oracle_alpha(setting)
    target, error, config = setting.target, setting.error, setting.config
    sample = draw_sample(setting, replicate_rng(setting.seed, replicate_index))

    # one grid for every criterion and loss, spanning the b_n and b_n1 scales
    n1 = n1_for(setting.n, config.n1_rule)
    alphas = np.concatenate(
        (make_alpha_grid(setting.n, config), make_alpha_grid(n1, config))
    )
    grid = build_grid_for(
        alphas,
        error,
        config,
        max(sample.max_abs, target.max_abs_mean, 1.0),
        target=target,
    )
    ecf = empirical_char_fn(sample, grid)
    spectrum = None
    if Method.SMALL_N in setting.methods or Method.CROSS_VALIDATION in setting.methods:
        spectrum = empirical_spectrum(sample, grid)

    ise_oracle = true_loss_ise(
        sample, oracle.alpha_hat, target, error, config.m, grid, ecf
    )
    records = []
    for method in setting.methods:
        if method is Method.SMALL_N:
            alpha_hat = select_small_n(
                sample, error, config, grid=grid, spectrum=spectrum
            ).alpha_hat
        elif method is Method.CROSS_VALIDATION:
            alpha_hat = select_cv(
                sample, error, config, grid=grid, spectrum=spectrum
            ).alpha_hat
        else:
            alpha_hat = oracle.alpha_hat
        if method is Method.ORACLE:
            ise = ise_oracle
        else:
            ise = true_loss_ise(sample, alpha_hat, target, error, config.m, grid, ecf)
        records.append(
            SimRecord.from_losses(replicate_index, method, alpha_hat, ise, ise_oracle)
        )
    return records, grid


def _replicate_task(task):
    setting, replicate_index, oracle = task
    try:
        records, grid = _guarded_replicate(setting, replicate_index, oracle)
        return replicate_index, records, grid.describe(), None
    except ReplicateError as exc:
        return replicate_index, None, None, exc


def _grid_ranges(described):
    if not described:
        return {}
    return {
        key: [min(d[key] for d in described), max(d[key] for d in described)]
        for key in described[0]
    }


def simulate_setting(setting, threads=1, progress=True):
    """
    All replicates of a setting, serially or on a process pool.

    The records are sorted by (replicate, method) and do not depend on
    ``threads``.

    Args:
        setting (SimSetting): The study cell.
        threads (int): Worker processes; 1 runs in-process.
        progress (bool): Show a tqdm progress bar.

    Returns:
        SimulationRun: Records, the oracle choice and the quadrature used.

    Raises:
        ReplicateError: The failure of the lowest failing replicate, after every
            replicate has been attempted.
    """
    if threads < 1:
        raise DomainError(f"threads must be >= 1, got {threads}")
    logger.info(
        f"Simulating density {setting.density_index}, n={setting.n}, "
        f"p={setting.p:g}: {setting.n_sim} replicates on {threads} worker(s)"
    )
    target, error, config = setting.target, setting.error, setting.config
    grid = oracle_grid(target, error, setting.n, config)
    oracle = oracle_alpha(setting, grid)
    tasks = [(setting, r, oracle) for r in range(setting.n_sim)]
    bar = log_setup.progress_bar(
        setting.n_sim,
        f"d{setting.density_index} n={setting.n} p={setting.p:g}",
        enabled=progress,
    )
    outcomes = []
    with bar:
        if threads == 1:
            for task in tasks:
                outcomes.append(_replicate_task(task))
                bar.update(1)
        else:
            workers = min(threads, setting.n_sim)
            level = log_setup.current_level()
            with Pool(workers, log_setup.init_worker, (level,)) as pool:
                for outcome in pool.imap_unordered(_replicate_task, tasks):
                    outcomes.append(outcome)
                    bar.update(1)

    failures = sorted((r, exc) for r, _, _, exc in outcomes if exc is not None)
    for _, exc in failures:
        logger.error(str(exc))
    if failures:
        raise failures[0][1]

    outcomes.sort(key=lambda outcome: outcome[0])
    records = [record for _, batch, _, _ in outcomes for record in batch]
    records.sort(key=lambda rec: (rec.replicate, METHOD_ORDER[rec.method]))
    logger.info(f"Simulation finished: {len(records)} records")
    return SimulationRun(
        setting, oracle, grid, records, _grid_ranges([o[2] for o in outcomes])
    )


def run_simulation(setting, threads=1, progress=True):
    """Records of ``simulate_setting``."""
    return simulate_setting(setting, threads, progress).records


def run_study(settings, threads=1, progress=True):
    """
    Run several settings one after the other.

    Returns:
        list[SimulationRun]: One run per setting, in input order.
    """
    return [simulate_setting(s, threads, progress) for s in settings]


def _ratios(records):
    if not records:
        raise DomainError("metric needs at least one record")
    methods = {record.method for record in records}
    if len(methods) > 1:
        raise DomainError("metric needs the records of a single method")
    return np.array([record.loss_ratio for record in records])


def records_for(records, method):
    """Records of one method."""
    method = Method(method)
    return [record for record in records if record.method is method]


def metric_catastrophic(records, threshold=10.0):
    """Fraction of replicates whose loss ratio exceeds ``threshold``."""
    return float(np.mean(_ratios(records) > threshold))


def metric_quantile(records, q=0.99):
    """
    Empirical q-quantile of the loss ratio, by linear interpolation between
    order statistics.
    """
    if not 0 <= q <= 1:
        raise DomainError(f"quantile level must lie in [0, 1], got {q}")
    return float(np.quantile(_ratios(records), q, method="linear"))


def metric_mean_ratio(records):
    """
    Mean loss ratio and its standard error.

    Returns:
        tuple[float, float]: (mean, sd / sqrt(count)); the error is 0 for one record.
    """
    ratios = _ratios(records)
    if ratios.size == 1:
        return float(ratios[0]), 0.0
    return float(ratios.mean()), float(ratios.std(ddof=1) / math.sqrt(ratios.size))


def metric_mise_ratio(records_a, records_b):
    """
    mean(ise of a) / mean(ise of b) over the same replicates.

    Raises:
        DomainError: If either list is empty or the replicate sets differ.
    """
    if not records_a or not records_b:
        raise DomainError("metric needs at least one record")
    replicates_a = sorted(record.replicate for record in records_a)
    replicates_b = sorted(record.replicate for record in records_b)
    if replicates_a != replicates_b:
        raise DomainError("MISE ratio needs the same replicate set on both sides")
    mise_a = np.mean([record.ise for record in records_a])
    mise_b = np.mean([record.ise for record in records_b])
    return float(mise_a / mise_b)
