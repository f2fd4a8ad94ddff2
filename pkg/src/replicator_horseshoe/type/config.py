from typing import TypedDict, Literal, Optional


class LoggingConfig(TypedDict, total=False):
    level: Literal["DEBUG", "INFO", "WARNING", "ERROR"]


class OrbitsConfig(TypedDict, total=False):
    transient: int
    max_period: int
    grid_per_period: int
    samples: int
    lyapunov_steps: int


class HorseshoeConfig(TypedDict, total=False):
    depth: int
    margin_threshold: float


class CacheConfig(TypedDict, total=False):
    enabled: bool
    path: str


class AppConfig(TypedDict, total=False):
    orbits: OrbitsConfig
    horseshoe: HorseshoeConfig
    logging: LoggingConfig
    cache: CacheConfig
    progress: bool


class RunConfig(TypedDict, total=False):
    command: str
    a: float
    b: float
    x0: float
    n: int
    grid: Optional[int]
    transient: int
    max_period: int
    depth: int
    word: str
    y: float
    a_lo: float
    a_hi: float
    steps: int
    samples: int
    tol: float
    family: Literal["replicator", "ricker", "arctan", "probit"]
    format: Literal["csv", "json"]
    out: Optional[str]
    cache: Optional[str]
    settings: AppConfig
