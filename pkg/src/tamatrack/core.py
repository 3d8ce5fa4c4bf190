"""Domain types and tracker configuration shared by every other module."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

PATCH_SHAPE = (128, 64, 3)

LIKELIHOOD_MODES = ("ctama", "deep_tama", "baseline_linear", "baseline_select", "iou_only")
INIT_MODES = ("hierarchical", "iou_only", "distance_only")


class TrackingError(Exception):
    """Base class for every error raised by the package."""


class DimensionMismatch(TrackingError, ValueError):
    pass


class EmptyTrackAppearance(TrackingError):
    pass


class UntaggedDescriptor(TrackingError):
    pass


class NonMonotoneFrame(TrackingError):
    pass


class InvalidValue(TrackingError, ValueError):
    pass


class ConfigError(TrackingError, ValueError):
    """A configuration field violates its documented range."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class NonPositiveCueLimit(ConfigError):
    pass


class LambdaBelowOne(ConfigError):
    pass


class UnknownMode(ConfigError):
    pass


class NonPositiveFps(ConfigError):
    pass


@dataclass(frozen=True)
class BoundingBox:
    left: float
    top: float
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise InvalidValue(f"box width/height must be positive, got {self.width}x{self.height}")

    @property
    def center_x(self) -> float:
        return self.left + self.width / 2.0

    @property
    def center_y(self) -> float:
        return self.top + self.height / 2.0

    @property
    def center(self) -> tuple[float, float]:
        return (self.center_x, self.center_y)

    @classmethod
    def from_center(cls, cx: float, cy: float, width: float, height: float) -> "BoundingBox":
        return cls(cx - width / 2.0, cy - height / 2.0, width, height)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.left, self.top, self.width, self.height)


@dataclass(frozen=True, eq=False)
class AppearanceDescriptor:
    """Appearance carried by a detection: a 128x64x3 patch or a feature vector.

    ``tag`` is an identity label used only by the oracle scorer; it may ride
    along with a vector (the synthetic generator emits both).
    """

    patch: Optional[np.ndarray] = None
    vector: Optional[np.ndarray] = None
    tag: Optional[int] = None

    def __post_init__(self):
        if self.patch is not None and self.vector is not None:
            raise InvalidValue("descriptor holds either a patch or a vector, not both")
        if self.patch is None and self.vector is None and self.tag is None:
            raise InvalidValue("descriptor is empty")
        if self.patch is not None:
            patch = np.asarray(self.patch, dtype=np.float64)
            if patch.shape != PATCH_SHAPE:
                raise DimensionMismatch(f"patch must be {PATCH_SHAPE}, got {patch.shape}")
            object.__setattr__(self, "patch", patch)
        if self.vector is not None:
            vec = np.asarray(self.vector, dtype=np.float64).reshape(-1)
            object.__setattr__(self, "vector", vec)


@dataclass(frozen=True, eq=False)
class Detection:
    frame: int
    box: BoundingBox
    confidence: float
    descriptor: Optional[AppearanceDescriptor] = None
    raw_confidence: Optional[float] = None
    index: int = 0  # position within its frame in the source file

    def __post_init__(self):
        if self.frame < 1:
            raise InvalidValue(f"frame must be >= 1, got {self.frame}")
        raw = self.confidence if self.raw_confidence is None else self.raw_confidence
        object.__setattr__(self, "raw_confidence", float(raw))
        object.__setattr__(self, "confidence", min(1.0, max(0.0, float(self.confidence))))


@dataclass
class CueEntry:
    confidence: float
    descriptor: AppearanceDescriptor
    frame: int
    box: BoundingBox


@dataclass
class Track:
    id: int
    state: np.ndarray  # (cx, cy, vx, vy)
    cov: np.ndarray  # 4x4
    shape: tuple[float, float]  # (w, h)
    recent_appearance: Optional[AppearanceDescriptor]
    recent_confidence: float
    recent_box: BoundingBox
    cue: list = field(default_factory=list)
    miss_count: int = 0
    birth_frame: int = 0
    last_matched_frame: int = 0
    status: str = "active"
    model_appearance: Optional[AppearanceDescriptor] = None  # baseline feature-update modes

    def __post_init__(self):
        if self.id < 1:
            raise InvalidValue("track id must be positive")
        if not 0.0 <= self.recent_confidence <= 1.0:
            raise InvalidValue("recent confidence must lie in [0, 1]")
        if not (self.shape[0] > 0 and self.shape[1] > 0):
            raise InvalidValue("track shape must be positive")

    @property
    def box(self) -> BoundingBox:
        """Current state as a box (Kalman center, smoothed shape)."""
        return BoundingBox.from_center(self.state[0], self.state[1], self.shape[0], self.shape[1])

    def copy(self) -> "Track":
        return replace(self, state=self.state.copy(), cov=self.cov.copy(), cue=list(self.cue))


@dataclass(frozen=True)
class TrackerConfig:
    # association / cue management
    beta_age: float = 2.0
    beta_intv: float = 0.2
    tau_hist: float = 0.6
    tau_match: float = 0.4
    tau_cue: int = 8
    lambda_c: float = 3.0
    lambda_f: Optional[float] = None  # None: scorer default (histogram 2, embedding 4)
    tau_a: float = 0.6
    # initialization / termination
    tau_iou: float = 0.5
    beta_dist: float = 0.8
    tau_shp: float = 0.8
    tau_init: int = 4
    beta_term: float = 2.0
    fps: int = 30
    likelihood_mode: str = "ctama"
    init_mode: str = "hierarchical"
    # geometry
    eta: float = 0.5
    xi: float = 4.0
    sigma_xx: float = 1.0 / 70.0**2
    sigma_xy: float = 0.0
    sigma_yy: float = 1.0 / 70.0**2
    q_pos: float = 1.0
    q_vel: float = 0.5
    r_meas: float = 10.0
    p0_pos: float = 10.0
    p0_vel: float = 100.0
    gamma_shape: float = 0.5
    # preprocessing / plumbing
    nms_iou: float = 0.6
    conf_min: float = -math.inf
    oracle_same: float = 0.9
    oracle_diff: float = 0.1
    oracle_noise: float = 0.0
    workers: int = 1

    @property
    def sigma(self) -> np.ndarray:
        return np.array([[self.sigma_xx, self.sigma_xy], [self.sigma_xy, self.sigma_yy]])

    @property
    def min_interval(self) -> int:
        return round_half_up(self.fps * self.beta_intv)

    @property
    def max_age(self) -> float:
        return self.fps * self.beta_age

    @property
    def tau_term(self) -> int:
        return round_half_up(self.fps * self.beta_term)

    def with_(self, **changes) -> "TrackerConfig":
        return replace(self, **changes)


CONFIG_FIELDS = {f.name: f for f in fields(TrackerConfig)}


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _unit(cfg, name):
    value = getattr(cfg, name)
    if not 0.0 <= value <= 1.0:
        raise ConfigError(name, f"must lie in [0, 1], got {value}")


def _positive(cfg, name):
    value = getattr(cfg, name)
    if not value > 0:
        raise ConfigError(name, f"must be positive, got {value}")


def validate_config(cfg: TrackerConfig) -> TrackerConfig:
    """Return ``cfg`` unchanged if every field is in range, else raise."""
    if cfg.tau_cue < 1:
        raise NonPositiveCueLimit("tau_cue", f"must be >= 1, got {cfg.tau_cue}")
    if cfg.lambda_c < 1:
        raise LambdaBelowOne("lambda_c", f"must be >= 1 so c_rcnt/lambda_c stays <= 1, got {cfg.lambda_c}")
    if cfg.lambda_f is not None and cfg.lambda_f < 1:
        raise LambdaBelowOne("lambda_f", f"must be >= 1, got {cfg.lambda_f}")
    if cfg.fps < 1:
        raise NonPositiveFps("fps", f"must be >= 1, got {cfg.fps}")
    if cfg.likelihood_mode not in LIKELIHOOD_MODES:
        raise UnknownMode("likelihood_mode", f"{cfg.likelihood_mode!r} not in {LIKELIHOOD_MODES}")
    if cfg.init_mode not in INIT_MODES:
        raise UnknownMode("init_mode", f"{cfg.init_mode!r} not in {INIT_MODES}")
    for name in ("tau_hist", "tau_match", "tau_a", "tau_iou", "tau_shp", "oracle_same", "oracle_diff", "oracle_noise"):
        _unit(cfg, name)
    for name in ("beta_age", "beta_intv", "beta_dist", "beta_term", "eta", "xi",
                 "q_pos", "q_vel", "r_meas", "p0_pos", "p0_vel"):
        _positive(cfg, name)
    if cfg.tau_init < 0:
        raise ConfigError("tau_init", f"must be >= 0, got {cfg.tau_init}")
    if not 0.0 < cfg.gamma_shape <= 1.0:
        raise ConfigError("gamma_shape", f"must lie in (0, 1], got {cfg.gamma_shape}")
    if not 0.0 < cfg.nms_iou <= 1.0:
        raise ConfigError("nms_iou", f"must lie in (0, 1], got {cfg.nms_iou}")
    if cfg.workers < 1:
        raise ConfigError("workers", f"must be >= 1, got {cfg.workers}")
    sig = cfg.sigma
    if cfg.sigma_xx <= 0 or np.linalg.det(sig) <= 0:
        raise ConfigError("sigma", "motion weighting matrix must be positive definite")
    return cfg
