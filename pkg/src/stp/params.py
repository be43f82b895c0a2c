"""Tracker parameters and the flat ``key=value`` parameter file format."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError

ABLATIONS = ("s", "sw", "full")


@dataclass(frozen=True)
class ParameterSet:
    delta: int = 25                  # search half-width around the previous center
    T_update: int = 10               # frames between update phases
    t_d: float = 1.4                 # discriminativeness ratio gate
    p_plus: float = 0.2              # promotion reliability
    p_minus: float = 0.1             # removal reliability
    n_max: int = 200                 # reliable+gold parts per size class
    t_v: float = 0.3                 # vote threshold per voting reliable/gold part
    sigma_smooth: float = 2.0
    agree_radius: int = 5
    lambda_scale: float = 1e-2       # ridge weight = lambda_scale * descriptor length
    grid_stride: int = 2
    small_side: int = 17
    medium_side: int = 27
    full_box_max: int = 40           # full-box patches are subsampled to at most this side
    neg_ratio: int = 3               # negatives per positive
    max_samples: int = 512           # rows per training solve
    weak_response: float = 0.5       # own-location response below which a region needs parts
    normalize: bool = True           # mean-center descriptors per channel block
    gold_streak: int = 2             # consecutive passed reviews before Reliable -> Gold
    ablation: str = "full"

    def __post_init__(self):
        positive = ("delta", "T_update", "t_d", "p_plus", "p_minus", "n_max", "t_v",
                    "sigma_smooth", "agree_radius", "lambda_scale", "grid_stride",
                    "small_side", "medium_side", "full_box_max", "neg_ratio",
                    "max_samples", "gold_streak")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)!r}")
        if not self.p_minus < self.p_plus:
            raise ConfigError("p_minus must be smaller than p_plus")
        if self.ablation not in ABLATIONS:
            raise ConfigError(f"ablation must be one of {ABLATIONS}, got {self.ablation!r}")
        if self.max_samples < 1 + self.neg_ratio:
            raise ConfigError("max_samples too small for one positive and its negatives")

    def ridge_lambda(self, length: int) -> float:
        return self.lambda_scale * length

    def replace(self, **changes) -> "ParameterSet":
        return replace(self, **changes)

    def to_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in asdict(self).items())

    @classmethod
    def from_text(cls, text: str) -> "ParameterSet":
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in types:
                raise ConfigError(f"line {lineno}: unknown parameter {key!r}")
            values[key] = _parse_value(key, types[key], value, lineno)
        return cls(**values)

    @classmethod
    def from_file(cls, path) -> "ParameterSet":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read parameter file {path}: {exc}") from exc
        return cls.from_text(text)


def _parse_value(key, typ, value, lineno):
    try:
        if typ in ("bool", bool):
            low = value.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if typ in ("int", int):
            return int(value)
        if typ in ("float", float):
            return float(value)
        return value
    except ValueError:
        raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from None
