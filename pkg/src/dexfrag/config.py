"""Experiment configuration: TOML file, desk-scale profile, CLI overrides."""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from dexfrag.econ import EconParams
from dexfrag.errors import ConfigError, DexfragError
from dexfrag.montecarlo import MonteCarloParams
from dexfrag.seeding import fingerprint
from dexfrag.topology import ClusterConfig, LinkDelayModel, RouteParams

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_CLUSTERS = ((5, 5), (6, 4), (7, 3), (8, 2), (9, 1))
DEFAULT_SLOW_MEANS = (50.0, 100.0, 150.0, 200.0, 250.0, 300.0)


@dataclass(frozen=True)
class LinksSection:
    fast_low: float = 10.0
    fast_high: float = 30.0
    slow_means: tuple = DEFAULT_SLOW_MEANS
    slow_half_width: float = 20.0


@dataclass(frozen=True)
class BootstrapSection:
    n_sub: int = 1000
    sub_size: int = 5000


@dataclass(frozen=True)
class DistributionsSection:
    bins: int | None = None  # None: Freedman-Diaconis
    cdf_points: int = 200
    tail_quantile: float = 0.95


@dataclass(frozen=True)
class ProtocolSection:
    f_faulty: int = 3
    rounds: int = 2
    n_runs: int = 10_000
    xi: float = 0.0
    initiators: tuple = ("A0", "B0")


@dataclass(frozen=True)
class RegressionSection:
    standardize_delay: bool = True
    cov_type: str = "HC1"
    percent: bool = True


@dataclass(frozen=True)
class EconSection:
    beta: float = 0.75
    n_miners: int = 4
    fee: float = 1.0
    delta: float = 0.02
    theta: float = 0.0
    lam: float = 1.0
    xi: float = 0.0
    pi_points: int = 100


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 2020
    clusters: tuple = DEFAULT_CLUSTERS
    total_nodes: int = 10
    links: LinksSection = field(default_factory=LinksSection)
    max_intermediate: int | None = None
    n_delays: int = 100_000
    bootstrap: BootstrapSection = field(default_factory=BootstrapSection)
    distributions: DistributionsSection = field(default_factory=DistributionsSection)
    montecarlo: MonteCarloParams = field(default_factory=MonteCarloParams)
    regression: RegressionSection = field(default_factory=RegressionSection)
    econ: EconSection = field(default_factory=EconSection)
    protocol: ProtocolSection = field(default_factory=ProtocolSection)

    def __post_init__(self):
        # validate eagerly so a bad file fails before any simulation starts
        if not self.clusters:
            raise ConfigError("at least one cluster configuration required", key="clusters.configs")
        if not self.links.slow_means:
            raise ConfigError("at least one slow mean required", key="links.slow_means")
        try:
            self.cluster_configs()
            self.link_models()
            self.route.resolve(self.total_nodes)
            self.econ_params()
        except DexfragError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc
        if self.n_delays < 1:
            raise ConfigError("must be >= 1", key="delays.n")
        if self.bootstrap.n_sub < 1 or self.bootstrap.sub_size < 1:
            raise ConfigError("must be >= 1", key="bootstrap")
        if self.regression.cov_type not in ("HC0", "HC1"):
            raise ConfigError("HC0 or HC1", key="regression.cov_type")

    def cluster_configs(self) -> list[ClusterConfig]:
        return [ClusterConfig(int(a), int(b), self.total_nodes) for a, b in self.clusters]

    def link_models(self) -> list[LinkDelayModel]:
        return [
            LinkDelayModel(self.links.fast_low, self.links.fast_high, float(m), self.links.slow_half_width)
            for m in self.links.slow_means
        ]

    def grid(self) -> list[tuple[ClusterConfig, LinkDelayModel]]:
        """Slow mean outer, cluster structure inner."""
        return [(c, l) for l in self.link_models() for c in self.cluster_configs()]

    @property
    def route(self) -> RouteParams:
        return RouteParams(self.max_intermediate)

    def econ_params(self) -> EconParams:
        e = self.econ
        return EconParams(beta=e.beta, n_miners=e.n_miners, fee=e.fee, delta=e.delta,
                          theta=e.theta, lam=e.lam, xi=e.xi)

    def fingerprint(self) -> str:
        return fingerprint(asdict(self))


DESK_SCALE = {
    "n_delays": 10_000,
    "montecarlo": MonteCarloParams(n_draws=1_000, n_sim=100),
    "protocol.n_runs": 500,
}

# TOML section/key -> (config attribute, section field)
_FLAT = {
    ("experiment", "seed"): ("seed", None),
    ("clusters", "configs"): ("clusters", None),
    ("clusters", "total"): ("total_nodes", None),
    ("route", "max_intermediate"): ("max_intermediate", None),
    ("delays", "n"): ("n_delays", None),
}
_SECTIONS = {
    "links": ("links", LinksSection),
    "bootstrap": ("bootstrap", BootstrapSection),
    "distributions": ("distributions", DistributionsSection),
    "montecarlo": ("montecarlo", MonteCarloParams),
    "regression": ("regression", RegressionSection),
    "econ": ("econ", EconSection),
    "protocol": ("protocol", ProtocolSection),
}


def _coerce(value):
    if isinstance(value, list):
        return tuple(_coerce(v) for v in value)
    return value


def from_mapping(data: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Apply a nested mapping (as parsed from TOML) on top of ``base``."""
    cfg = base or ExperimentConfig()
    updates = {}
    section_updates: dict[str, dict] = {}
    for section, body in data.items():
        if not isinstance(body, dict):
            raise ConfigError("expected a [section]", key=section)
        for key, value in body.items():
            value = _coerce(value)
            if (section, key) in _FLAT:
                attr, _ = _FLAT[(section, key)]
                if attr == "max_intermediate" and value == "all":
                    value = None
                updates[attr] = value
            elif section in _SECTIONS:
                attr, cls = _SECTIONS[section]
                if key not in {f.name for f in fields(cls)}:
                    raise ConfigError("unknown key", key=f"{section}.{key}")
                if section == "distributions" and key == "bins" and value == "fd":
                    value = None
                section_updates.setdefault(attr, {})[key] = value
            else:
                raise ConfigError("unknown key", key=f"{section}.{key}")
    for attr, vals in section_updates.items():
        try:
            updates[attr] = replace(getattr(cfg, attr), **vals)
        except (TypeError, DexfragError) as exc:
            raise ConfigError(str(exc), key=attr) from exc
    try:
        return replace(cfg, **updates)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def apply_desk_scale(cfg: ExperimentConfig) -> ExperimentConfig:
    return replace(
        cfg,
        n_delays=DESK_SCALE["n_delays"],
        montecarlo=DESK_SCALE["montecarlo"],
        protocol=replace(cfg.protocol, n_runs=DESK_SCALE["protocol.n_runs"]),
    )


def load_config(path=None, desk_scale: bool = False, seed: int | None = None) -> ExperimentConfig:
    """Defaults, then the TOML file, then the desk profile, then ``seed``."""
    cfg = ExperimentConfig()
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}", key="--config")
        raw = p.read_bytes()
        try:
            data = tomllib.loads(raw.decode("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse {p}: {exc}") from exc
        cfg = from_mapping(data, cfg)
    if desk_scale:
        cfg = apply_desk_scale(cfg)
    if seed is not None:
        cfg = replace(cfg, seed=int(seed))
    return cfg
