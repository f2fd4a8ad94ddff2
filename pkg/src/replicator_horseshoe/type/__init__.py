from .config import LoggingConfig, OrbitsConfig, HorseshoeConfig, CacheConfig, AppConfig, RunConfig
from .records import CertificateRecord, ScanRow, OrbitRow

__all__ = [
    "LoggingConfig",
    "OrbitsConfig",
    "HorseshoeConfig",
    "CacheConfig",
    "AppConfig",
    "RunConfig",
    "CertificateRecord",
    "ScanRow",
    "OrbitRow",
]
