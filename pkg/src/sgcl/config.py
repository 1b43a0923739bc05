"""Run configuration: INI file plus command-line overrides, validated up front."""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, fields, replace

from sgcl.augment import KINDS, AugmentationConfig
from sgcl.encoder import EncoderConfig
from sgcl.losses import OBJECTIVES, LossConfig
from sgcl.trainer import TrainConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    # data
    dataset: str = "synth"  # "synth", "ml100k", or a path to a delimited file
    cache_dir: str = "data"
    sep: str = ""  # empty -> any whitespace
    rating_col: int = -1  # -1 -> no rating column
    rating_threshold: float = 4.0
    synth_users: int = 200
    synth_items: int = 100
    synth_clusters: int = 2
    synth_density: float = 0.15
    data_seed: int = 0
    test_ratio: float = 0.2
    # training
    lr: float = 0.001
    batch_size: int = 4096
    epochs: int = 100
    seed: int = 0
    eval_every: int = 0
    patience: int = 0
    # encoder
    layers: int = 2
    dim: int = 64
    # loss
    tau: float = 0.2
    lam: float = 0.01
    p: float = 0.01
    beta: float = 0.01
    alpha: float = 1e-4
    objective: str = "scl"
    # augmentation
    aug_kind: str = "edge_dropout"
    aug_ratio: float = 0.1
    # output
    out_dir: str = "runs/latest"

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            lr=self.lr, batch_size=self.batch_size, epochs=self.epochs, seed=self.seed,
            encoder=EncoderConfig(self.layers, self.dim),
            loss=LossConfig(self.tau, self.lam, self.p, self.beta, self.alpha, self.objective),
            augment=AugmentationConfig(self.aug_kind, self.aug_ratio, 0),
            eval_every=self.eval_every, patience=self.patience,
        )

    def to_dict(self) -> dict:
        return asdict(self)


# (field, predicate, message)
_RULES = [
    ("test_ratio", lambda v: 0 < v < 1, "must lie in (0, 1)"),
    ("lr", lambda v: v >= 0, "must be >= 0"),
    ("batch_size", lambda v: v >= 2, "must be >= 2"),
    ("epochs", lambda v: v >= 0, "must be >= 0"),
    ("eval_every", lambda v: v >= 0, "must be >= 0"),
    ("patience", lambda v: v >= 0, "must be >= 0"),
    ("layers", lambda v: v >= 0, "must be >= 0"),
    ("dim", lambda v: v >= 1, "must be >= 1"),
    ("tau", lambda v: v > 0, "must be > 0"),
    ("lam", lambda v: 0 < v <= 1, "must lie in (0, 1]"),
    ("p", lambda v: 0 < v <= 1, "must lie in (0, 1]"),
    ("beta", lambda v: v >= 0, "must be >= 0"),
    ("alpha", lambda v: v >= 0, "must be >= 0"),
    ("objective", lambda v: v in OBJECTIVES, f"must be one of {OBJECTIVES}"),
    ("aug_kind", lambda v: v in KINDS, f"must be one of {KINDS}"),
    ("aug_ratio", lambda v: 0 <= v <= 1, "must lie in [0, 1]"),
    ("synth_users", lambda v: v >= 1, "must be >= 1"),
    ("synth_items", lambda v: v >= 1, "must be >= 1"),
    ("synth_clusters", lambda v: v >= 1, "must be >= 1"),
    ("synth_density", lambda v: 0 <= v <= 1, "must lie in [0, 1]"),
]

_FIELDS = {f.name: f for f in fields(RunConfig)}


def validate(cfg: RunConfig) -> RunConfig:
    errors = [f"{name}={getattr(cfg, name)!r}: {msg}"
              for name, ok, msg in _RULES if not ok(getattr(cfg, name))]
    if errors:
        raise ConfigError("; ".join(errors))
    return cfg


def _coerce(name: str, raw):
    if name not in _FIELDS:
        raise ConfigError(f"unknown config key {name!r}")
    kind = type(getattr(RunConfig, name))
    if isinstance(raw, kind):
        return raw
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return str(raw)
    except ValueError:
        raise ConfigError(f"{name}={raw!r}: expected {kind.__name__}") from None


def load(path=None, overrides: dict | None = None) -> RunConfig:
    """Read an INI file (any section names; keys must be RunConfig fields), apply overrides."""
    values = {}
    if path:
        parser = configparser.ConfigParser()
        if not parser.read(path):
            raise ConfigError(f"cannot read config file {path}")
        for section in parser.sections():
            for key, raw in parser.items(section):
                values[key] = _coerce(key, raw)
    for key, raw in (overrides or {}).items():
        if raw is not None:
            values[key] = _coerce(key, raw)
    return validate(replace(RunConfig(), **values))


def dump_ini(cfg: RunConfig) -> str:
    parser = configparser.ConfigParser()
    parser["run"] = {k: str(v) for k, v in cfg.to_dict().items()}
    from io import StringIO

    buf = StringIO()
    parser.write(buf)
    return buf.getvalue()
