"""Empirical CDF, bootstrap means and descriptive statistics for delay samples."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dexfrag.errors import DegenerateVarianceError, ParameterError


def _as_array(samples) -> np.ndarray:
    arr = np.asarray(samples, dtype=float).ravel()
    if arr.size == 0:
        raise ParameterError("empty sample")
    return arr


@dataclass(frozen=True, eq=False)
class EmpiricalCdf:
    """Step function F(x) = #{obs < x} / n.

    The strict inequality makes F left-continuous at the observations; ties
    are measure-zero for continuous delay data.
    """

    sorted_values: np.ndarray

    def __post_init__(self):
        if self.sorted_values.size == 0:
            raise ParameterError("empty sample")

    @property
    def n(self) -> int:
        return int(self.sorted_values.size)

    def __call__(self, x):
        counts = np.searchsorted(self.sorted_values, x, side="left")
        out = counts / self.n
        return float(out) if np.ndim(out) == 0 else out

    def quantile(self, q):
        return np.quantile(self.sorted_values, q)


def empirical_cdf(samples) -> EmpiricalCdf:
    return EmpiricalCdf(np.sort(_as_array(samples)))


def inverse_sample(cdf: EmpiricalCdf, rng: np.random.Generator, size=None):
    """Draw from the empirical distribution (uniform resampling of the values)."""
    idx = rng.integers(0, cdf.n, size=size)
    if size is None:
        return float(cdf.sorted_values[idx])
    return cdf.sorted_values[idx]


@dataclass(frozen=True)
class BootstrapResult:
    subsample_means: np.ndarray
    grand_mean: float
    std_of_means: float


def bootstrap_mean(samples, n_sub: int = 1000, sub_size: int = 5000, seed=0) -> BootstrapResult:
    """Average of ``n_sub`` means of with-replacement subsamples of size ``sub_size``."""
    arr = _as_array(samples)
    if n_sub < 1 or sub_size < 1:
        raise ParameterError("n_sub and sub_size must be >= 1")
    rng = np.random.default_rng(seed)
    means = np.empty(n_sub)
    # chunked so a 1000 x 5000 index matrix never sits in memory at once
    chunk = max(1, 2_000_000 // sub_size)
    for start in range(0, n_sub, chunk):
        stop = min(n_sub, start + chunk)
        idx = rng.integers(0, arr.size, size=(stop - start, sub_size))
        means[start:stop] = arr[idx].mean(axis=1)
    std = float(means.std(ddof=1)) if n_sub > 1 else 0.0
    return BootstrapResult(subsample_means=means, grand_mean=float(means.mean()), std_of_means=std)


MAX_FD_BINS = 2000


def fd_bin_count(arr: np.ndarray) -> int:
    """Freedman-Diaconis bin count, capped at ``MAX_FD_BINS``.

    A tiny interquartile range with far outliers would otherwise ask for
    billions of bins. Zero IQR falls back to Sturges, as numpy does.
    """
    q75, q25 = np.percentile(arr, [75, 25])
    span = float(arr.max() - arr.min())
    width = 2.0 * (q75 - q25) / arr.size ** (1 / 3)
    if width <= 0 or span <= 0:
        return int(np.ceil(np.log2(arr.size))) + 1
    return int(min(MAX_FD_BINS, max(1, np.ceil(span / width))))


def histogram(samples, bin_count: int | None = None):
    """Arrays (centers, density, widths) with sum(density * widths) == 1.

    ``bin_count=None`` picks the bin count by the Freedman-Diaconis rule.
    """
    arr = _as_array(samples)
    if bin_count is not None and bin_count < 1:
        raise ParameterError("bin_count must be >= 1")
    lo, hi = float(arr.min()), float(arr.max())
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    if bin_count is None:
        bin_count = fd_bin_count(arr)
    edges = np.linspace(lo, hi, bin_count + 1)
    counts, edges = np.histogram(arr, bins=edges)
    widths = np.diff(edges)
    density = counts / (arr.size * widths)
    return 0.5 * (edges[:-1] + edges[1:]), density, widths


def histogram_density(samples, bin_count: int | None = None) -> list[tuple[float, float]]:
    centers, density, _ = histogram(samples, bin_count)
    return list(zip(centers.tolist(), density.tolist()))


def sample_skewness(samples) -> float:
    """Adjusted Fisher-Pearson standardized third moment, G1."""
    arr = _as_array(samples)
    n = arr.size
    if n < 3:
        raise ParameterError("skewness needs at least 3 observations")
    dev = arr - arr.mean()
    m2 = np.mean(dev**2)
    if m2 <= 1e-14 * max(1.0, float(np.mean(arr**2))):
        raise DegenerateVarianceError("zero variance")
    g1 = np.mean(dev**3) / m2**1.5
    return float(g1 * np.sqrt(n * (n - 1)) / (n - 2))


def tail_probability(cdf: EmpiricalCdf, threshold: float) -> float:
    return 1.0 - cdf(threshold)
