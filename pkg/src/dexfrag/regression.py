"""Linear model of win probabilities on inter-cluster delay and asymmetry.

    y = b0 + b1 Delay + b2 Asym + b3 Delay x Asym + error

with Asym = eta_A / eta_B standardized to mean 0 and unit sample standard
deviation. Inference uses heteroskedasticity-robust sandwich covariances
and asymptotic normal z statistics.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from dexfrag.errors import CoverageError, DegenerateVarianceError, ParameterError, SingularDesignError

log = logging.getLogger(__name__)

TERMS = ("intercept", "delay", "asymmetry", "delay_x_asymmetry")
OUTCOMES = ("p_cluster_a", "p_node_a", "p_node_b", "ratio_a_over_b")


@dataclass(frozen=True)
class RegressionData:
    outcomes: np.ndarray
    delay: np.ndarray
    asymmetry: np.ndarray

    def __post_init__(self):
        n = len(self.outcomes)
        if len(self.delay) != n or len(self.asymmetry) != n:
            raise ParameterError("outcome, delay and asymmetry vectors differ in length")
        if n <= len(TERMS):
            raise ParameterError(f"need more than {len(TERMS)} rows, got {n}")

    @property
    def n_rows(self) -> int:
        return len(self.outcomes)


@dataclass(frozen=True, eq=False)
class RegressionFit:
    coefficients: np.ndarray
    robust_se: np.ndarray
    z_stats: np.ndarray
    r_squared: float
    significance_stars: tuple
    covariance: np.ndarray
    residuals: np.ndarray
    n_obs: int
    cov_type: str = "HC1"

    def term(self, name: str) -> dict:
        k = TERMS.index(name)
        return {
            "coefficient": float(self.coefficients[k]),
            "robust_se": float(self.robust_se[k]),
            "z": float(self.z_stats[k]),
            "stars": self.significance_stars[k],
        }


def standardize(values) -> np.ndarray:
    """Zero mean, unit sample (n - 1) standard deviation."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise DegenerateVarianceError("need at least two values")
    sd = v.std(ddof=1)
    if not sd > 1e-12 * max(1.0, float(np.abs(v).max())):
        raise DegenerateVarianceError("constant input cannot be standardized")
    return (v - v.mean()) / sd


def build_design(data: RegressionData, standardize_delay: bool = True) -> np.ndarray:
    """Columns [1, Delay, Asym, Delay * Asym].

    Asym is always standardized. Delay is standardized too unless
    ``standardize_delay`` is False, in which case it enters in raw ms.
    """
    asym = standardize(data.asymmetry)
    delay = np.asarray(data.delay, dtype=float)
    if standardize_delay:
        delay = standardize(delay)
    return np.column_stack([np.ones(data.n_rows), delay, asym, delay * asym])


def stars(p_value: float) -> str:
    if p_value < 0.01:
        return "***"
    if p_value < 0.05:
        return "**"
    if p_value < 0.1:
        return "*"
    return ""


def ols_fit(X, y, cov_type: str = "HC1") -> RegressionFit:
    """Least squares via QR with HC0/HC1 sandwich standard errors."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    if y.shape != (n,):
        raise ParameterError("y must be a vector with one entry per design row")
    if cov_type not in ("HC0", "HC1"):
        raise ParameterError(f"unsupported cov_type {cov_type!r}")
    if n <= k:
        raise SingularDesignError(f"{n} rows cannot identify {k} coefficients")

    q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    if diag.min() <= 1e-10 * diag.max():
        raise SingularDesignError("design matrix is rank deficient")
    coef = np.linalg.solve(r, q.T @ y)
    resid = y - X @ coef

    r_inv = np.linalg.solve(r, np.eye(k))
    bread = r_inv @ r_inv.T  # (X'X)^-1
    meat = (X * resid[:, None] ** 2).T @ X
    cov = bread @ meat @ bread
    if cov_type == "HC1":
        cov *= n / (n - k)
    cov = 0.5 * (cov + cov.T)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = coef / se
    pvals = 2.0 * stats.norm.sf(np.abs(z))

    sst = float(np.sum((y - y.mean()) ** 2))
    ssr = float(resid @ resid)
    r2 = 1.0 - ssr / sst if sst > 0 else 1.0
    return RegressionFit(
        coefficients=coef,
        robust_se=se,
        z_stats=z,
        r_squared=min(1.0, max(0.0, r2)),
        significance_stars=tuple(stars(p) if math.isfinite(p) else "" for p in pvals),
        covariance=cov,
        residuals=resid,
        n_obs=n,
        cov_type=cov_type,
    )


def check_coverage(delay, asymmetry) -> None:
    """Every (delay, asymmetry) combination of the observed levels, exactly once."""
    pairs = list(zip(np.round(delay, 9), np.round(asymmetry, 9)))
    d_levels = sorted(set(p[0] for p in pairs))
    a_levels = sorted(set(p[1] for p in pairs))
    if len(d_levels) < 2 or len(a_levels) < 2:
        raise CoverageError("sweep needs at least two delay and two asymmetry levels")
    want = {(d, a) for d in d_levels for a in a_levels}
    have = set(pairs)
    if have != want or len(pairs) != len(want):
        missing = sorted(want - have)
        raise CoverageError(f"incomplete or duplicated grid; missing cells {missing[:5]}")


def reproduce_table(
    rows: list[dict],
    standardize_delay: bool = True,
    cov_type: str = "HC1",
    percent: bool = True,
) -> dict[str, RegressionFit]:
    """Fit each outcome of a win-probability sweep.

    ``rows`` need keys eta_a, eta_b, slow_mean_ms and the four outcome
    columns (p_cluster_a, p_node_a, p_node_b, ratio_a_over_b). With
    ``percent`` the probability outcomes are scaled by 100.
    """
    if not rows:
        raise CoverageError("empty sweep")
    delay = np.array([float(r["slow_mean_ms"]) for r in rows])
    asym = np.array([float(r["eta_a"]) / float(r["eta_b"]) for r in rows])
    check_coverage(delay, asym)

    fits = {}
    for name in OUTCOMES:
        y = np.array([float(r[name]) for r in rows])
        if percent and name != "ratio_a_over_b":
            y = 100.0 * y
        ok = np.isfinite(y)
        if not ok.all():
            log.warning("%s: dropping %d non-finite rows", name, int((~ok).sum()))
        data = RegressionData(outcomes=y[ok], delay=delay[ok], asymmetry=asym[ok])
        fits[name] = ols_fit(build_design(data, standardize_delay), data.outcomes, cov_type)
    return fits


def table_rows(fits: dict[str, RegressionFit]) -> list[dict]:
    """Long format: one row per (outcome, term)."""
    out = []
    for name, fit in fits.items():
        for term in TERMS:
            t = fit.term(term)
            out.append({"outcome": name, "term": term, **t, "r_squared": fit.r_squared})
    return out


def format_table(fits: dict[str, RegressionFit]) -> str:
    """Plain-text layout with coefficients over z statistics, one column per outcome."""
    names = list(fits)
    width = 16
    lines = ["".ljust(22) + "".join(n.rjust(width) for n in names)]
    for k, term in enumerate(TERMS):
        coef = "".join(
            f"{fits[n].coefficients[k]:.2f}{fits[n].significance_stars[k]}".rjust(width) for n in names
        )
        zs = "".join(f"({fits[n].z_stats[k]:.2f})".rjust(width) for n in names)
        lines.append(term.ljust(22) + coef)
        lines.append("".ljust(22) + zs)
    lines.append("R^2".ljust(22) + "".join(f"{100 * fits[n].r_squared:.0f}%".rjust(width) for n in names))
    lines.append(f"z statistics in parentheses; {fits[names[0]].cov_type} robust standard errors.")
    return "\n".join(lines)
