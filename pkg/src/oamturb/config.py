"""Run configuration: defaults, profiles, and the flat key-value format.

A config file is plain text, one ``key = value`` per line, ``#`` comments
and blank lines ignored.  Unknown keys are rejected so typos fail fast
(exit code 2 from the CLI).  The two built-in profiles:

* ``paper``: the full-scale geometry (128-point grid at 0.4 mm, 40 cn2
  labels, 700 correction iterations, 10 trials per sweep point).
* ``desk``: a reduced configuration sized for laptops and CI (64-point
  grid at 0.8 mm so the window still spans six waists, every 4th label,
  100 train / 20 test images per label, 300 iterations, 20 channels per
  sweep point).  The desk training settings use smaller batches, a
  larger step with geometric decay, and more epochs, which the small
  training pool needs in order to converge; see the README notes.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError


@dataclass(frozen=True)
class Config:
    profile: str = "paper"
    # grid / optics
    grid_n: int = 128
    grid_dx: float = 4e-4
    wavelength: float = 1550e-9
    waist: float = 7e-3
    z_slm_tx: float = 1.0
    z_tx_rx: float = 25.0
    # turbulence
    l_min: float = 1e-3
    l_max: float = 25.0
    cn2_min: float = 0.5e-11
    cn2_max: float = 9e-11
    # classifier
    label_stride: int = 1
    per_label_train: int = 200
    per_label_test: int = 50
    train_epochs: int = 30
    train_batch: int = 32
    train_step: float = 0.01
    train_step_final: float = 0.0
    train_nf: int = 8
    # correction
    eta: float = 275.0
    max_iter: int = 700
    record_stride: int = 10
    eps_angle: float = 1e-12
    # experiments
    ell: int = 5
    trials: int = 10
    sweep_channels: int = 100
    strength_sets: int = 10
    sweep_cn2: float = 3e-11
    eta_grid: tuple[float, ...] = (25.0, 275.0, 450.0, 600.0)
    petal_threshold: float = 0.2
    base_seed: int = 20240917
    threads: int = 1


_DESK_OVERRIDES = dict(
    profile="desk",
    grid_n=64,
    grid_dx=8e-4,
    label_stride=4,
    per_label_train=100,
    per_label_test=20,
    train_epochs=120,
    train_batch=8,
    train_step=0.1,
    train_step_final=0.01,
    eta=5.0,
    max_iter=300,
    sweep_channels=20,
    strength_sets=6,
    eta_grid=(0.5, 1.0, 2.0, 5.0, 10.0),
)


def default_config(profile: str = "paper") -> Config:
    if profile == "paper":
        return Config()
    if profile == "desk":
        return Config(**_DESK_OVERRIDES)
    raise ConfigError(f"unknown profile {profile!r} (expected paper or desk)")


_FIELDS = {f.name: f for f in dataclasses.fields(Config)}


def _parse_value(name: str, text: str) -> object:
    f = _FIELDS[name]
    text = text.strip()
    try:
        if f.type in ("int",):
            return int(text)
        if f.type in ("float",):
            return float(text)
        if f.type in ("bool",):
            if text.lower() in ("true", "1", "yes"):
                return True
            if text.lower() in ("false", "0", "no"):
                return False
            raise ValueError(text)
        if f.type.startswith("tuple"):
            return tuple(float(v) for v in text.split())
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {text!r}") from exc


def parse_config(text: str, base: Config | None = None) -> Config:
    """Apply key = value lines on top of a base config.

    A ``profile`` line switches the base before other keys are applied,
    so a desk file only has to list its deviations.
    """
    pairs: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        pairs.append((key, value))

    for key, value in pairs:
        if key == "profile":
            base = default_config(value)
    if base is None:
        base = default_config()
    updates = {k: _parse_value(k, v) for k, v in pairs if k != "profile"}
    return dataclasses.replace(base, **updates)


def load_config(path: str | Path, base: Config | None = None) -> Config:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(), base)


def dump_config(cfg: Config) -> str:
    """Echo the effective configuration in the same flat format."""
    lines = []
    for f in dataclasses.fields(Config):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = " ".join(repr(x) for x in v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def validate_config(cfg: Config) -> None:
    if cfg.grid_n < 8 or cfg.grid_n % 2:
        raise ConfigError(f"grid_n must be even and >= 8, got {cfg.grid_n}")
    if cfg.grid_n * cfg.grid_dx < 6 * cfg.waist:
        raise ConfigError(
            "window must span at least six beam waists: "
            f"n*dx = {cfg.grid_n * cfg.grid_dx:.4f} < {6 * cfg.waist:.4f}"
        )
    if not (0 < cfg.cn2_min < cfg.cn2_max):
        raise ConfigError("need 0 < cn2_min < cn2_max")
    if not (0 < cfg.l_min < cfg.l_max):
        raise ConfigError("need 0 < l_min < l_max")
    if cfg.label_stride < 1 or 40 % cfg.label_stride:
        raise ConfigError("label_stride must divide 40")
    if cfg.max_iter < 1 or cfg.record_stride < 1:
        raise ConfigError("max_iter and record_stride must be >= 1")
    if cfg.trials < 1 or cfg.sweep_channels < 1:
        raise ConfigError("trials and sweep_channels must be >= 1")
