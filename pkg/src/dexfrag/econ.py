"""Closed-form miner economics for a DEX spanning two regions.

Region A holds a fraction ``beta >= 1/2`` of the traders, region B the rest.
Each region hosts ``n_miners`` miners. Local trades are processed at rate
``lam``, long-distance trades at ``pi * lam``; the first miner to process a
trade earns the fee. Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from dexfrag.errors import ParameterError, SubadditivityError


class Region(str, Enum):
    A = "A"
    B = "B"

    @classmethod
    def coerce(cls, value) -> "Region":
        if isinstance(value, Region):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ParameterError(f"unknown region {value!r}") from None


@dataclass(frozen=True)
class EconParams:
    """Model parameters.

    ``pi`` must lie in (0, 1]. Set ``pi_limit=True`` to allow ``pi=0``,
    which is then read as the limit pi -> 0 (all formulas are continuous
    there).
    """

    beta: float = 0.75
    n_miners: int = 4
    fee: float = 1.0
    pi: float = 1.0
    delta: float = 0.0
    theta: float = 0.0
    lam: float = 1.0
    xi: float = 0.0
    pi_limit: bool = False

    def __post_init__(self):
        if not 0.5 <= self.beta <= 1.0:
            raise ParameterError(f"beta must be in [1/2, 1], got {self.beta}")
        if int(self.n_miners) != self.n_miners or self.n_miners < 2:
            raise ParameterError(f"n_miners must be an integer >= 2, got {self.n_miners}")
        if self.fee < 0:
            raise ParameterError(f"fee must be >= 0, got {self.fee}")
        lo_ok = self.pi >= 0 if self.pi_limit else self.pi > 0
        if not (lo_ok and self.pi <= 1.0):
            raise ParameterError(f"pi must be in (0, 1], got {self.pi}")
        if self.delta < 0:
            raise ParameterError(f"delta must be >= 0, got {self.delta}")
        if self.theta < 0:
            raise ParameterError(f"theta must be >= 0, got {self.theta}")
        if self.lam <= 0:
            raise ParameterError(f"lam must be > 0, got {self.lam}")
        if self.xi < 0:
            raise ParameterError(f"xi must be >= 0, got {self.xi}")

    def with_pi(self, pi: float) -> "EconParams":
        return replace(self, pi=pi)


@dataclass(frozen=True)
class ThresholdResult:
    """Largest speed ratio at which region-A miners still adopt a single DEX.

    ``always_adopt`` marks the vacuous case where no pi in (0, 1] blocks
    adoption; ``pi_bar`` is then 1.0 and carries no information.
    """

    pi_bar: float
    always_adopt: bool
    raw: float


def win_prob_local(params: EconParams) -> float:
    """Probability that a given miner is first on a local trade."""
    return 1.0 / (params.n_miners * (1.0 + params.pi))


def win_prob_long_distance(params: EconParams) -> float:
    return params.pi / (params.n_miners * (1.0 + params.pi))


def expected_profit_single(params: EconParams, region) -> float:
    """Expected fee income of one miner when both regions share one chain."""
    region = Region.coerce(region)
    local = win_prob_local(params)
    remote = win_prob_long_distance(params)
    own = params.beta if region is Region.A else 1.0 - params.beta
    return (own * local + (1.0 - own) * remote) * params.fee


def expected_profit_fragmented(params: EconParams, region) -> float:
    region = Region.coerce(region)
    own = params.beta if region is Region.A else 1.0 - params.beta
    return own * params.fee / params.n_miners


def profit_gap_single(params: EconParams) -> float:
    """Profit of an A miner minus a B miner under a single chain."""
    p, b, n = params.pi, params.beta, params.n_miners
    return (1.0 - p) * (2.0 * b - 1.0) * params.fee / (n * (1.0 + p))


def cost_savings(cost_at_x: float, cost_at_2x: float, n_miners: int) -> float:
    """Per-miner saving from running one chain at volume 2x instead of two at x.

    The caller evaluates the cost function; see :func:`power_cost` for a
    concave reference family.
    """
    if cost_at_x < 0 or cost_at_2x < 0:
        raise ParameterError("costs must be non-negative")
    if n_miners < 1:
        raise ParameterError("n_miners must be >= 1")
    saving = cost_at_x / n_miners - cost_at_2x / (2.0 * n_miners)
    if saving < 0:
        raise SubadditivityError(
            f"C(2x)={cost_at_2x} exceeds 2*C(x)={2 * cost_at_x}; savings would be negative"
        )
    return saving


def power_cost(x: float, scale: float = 1.0, gamma: float = 0.5) -> float:
    """Concave cost ``scale * x**gamma``; subadditive for gamma in (0, 1)."""
    if not 0.0 < gamma < 1.0:
        raise ParameterError(f"gamma must be in (0, 1), got {gamma}")
    if x < 0 or scale < 0:
        raise ParameterError("x and scale must be non-negative")
    return scale * x**gamma


def adoption_threshold(params: EconParams) -> ThresholdResult:
    skew = 2.0 * params.beta - 1.0
    saving = params.n_miners * params.delta
    if skew > saving:
        raw = saving / (skew - saving)
        if raw > 1.0:
            return ThresholdResult(pi_bar=1.0, always_adopt=True, raw=raw)
        return ThresholdResult(pi_bar=raw, always_adopt=False, raw=raw)
    if saving == 0.0:
        # beta = 1/2 and no savings: indifferent everywhere, never strictly adopts
        return ThresholdResult(pi_bar=0.0, always_adopt=False, raw=0.0)
    return ThresholdResult(pi_bar=1.0, always_adopt=True, raw=math.inf)


def adopts_single_dex(params: EconParams, region) -> bool:
    """Whether miners of ``region`` prefer a single chain to fragmentation.

    B miners always do. A miners adopt iff their fragmentation premium,
    pi (2 beta - 1) / (N (1 + pi)), is strictly below the saving ``delta``.
    """
    region = Region.coerce(region)
    if region is Region.B:
        return True
    p = params.pi
    premium = p * (2.0 * params.beta - 1.0) / (params.n_miners * (1.0 + p))
    return premium < params.delta


def pi_from_latency(theta: float, lam: float) -> float:
    """Speed ratio implied by a fixed extra latency on long-distance trades."""
    if theta < 0:
        raise ParameterError(f"theta must be >= 0, got {theta}")
    if lam <= 0:
        raise ParameterError(f"lam must be > 0, got {lam}")
    return 1.0 / (1.0 + theta * lam)


def total_processing_time(xi: float, tau: float) -> float:
    """Half the round trip out, the consensus computation, half back."""
    if xi < 0 or tau < 0:
        raise ParameterError("xi and tau must be non-negative")
    return 0.5 * tau + xi + 0.5 * tau


def econ_sweep(params: EconParams, pis) -> list[dict]:
    """One row per pi: single/fragmented profits, A-B gap, A's adoption."""
    rows = []
    for p in pis:
        q = params.with_pi(float(p))
        rows.append(
            {
                "pi": float(p),
                "profit_A_single": expected_profit_single(q, Region.A),
                "profit_B_single": expected_profit_single(q, Region.B),
                "profit_A_frag": expected_profit_fragmented(q, Region.A),
                "profit_B_frag": expected_profit_fragmented(q, Region.B),
                "gap": profit_gap_single(q),
                "adopts_A": adopts_single_dex(q, Region.A),
            }
        )
    return rows
