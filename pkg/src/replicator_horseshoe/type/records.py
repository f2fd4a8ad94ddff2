from typing import TypedDict, Literal, Optional


class CertificateRecord(TypedDict):
    a: str
    b: str
    label: str
    # mirrored: landmarks are negated from the reflected map, so y1_plus < y1_minus and y2_plus < y2_minus
    orientation: Literal["standard", "mirrored"]
    y_max: str
    y_min: str
    g_min: str
    g_max: str
    y1_minus: str
    y1_plus: str
    y2_minus: str
    y2_plus: str
    margin1: str
    margin2: str
    margin3: str
    covering_margin: str
    expansion: str
    threshold: str
    valid: bool
    failure: Optional[str]


class ScanRow(TypedDict):
    a: float
    branch: int
    x: float
    period: int | Literal["aperiodic"]
    lyapunov: float


class OrbitRow(TypedDict):
    orbit: int
    period: int
    x: float
    multiplier: float
    mean: float
    stability: Literal["attracting", "repelling", "neutral"]
