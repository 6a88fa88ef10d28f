"""Run configuration: line-oriented key-value text with sections.

Unknown sections or keys are rejected.  Paths are resolved relative to
the config file's directory.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .inference import InferenceConfig
from .simulation import PhantomSpec

_KNOWN = {
    "phantom": {"rows", "cols", "coils", "seed", "noise_sigma"},
    "scheme": {"b"},
    "mask": {"r", "acs"},
    "inference": {"t_m", "t_u", "g", "predictor", "endpoint", "use_anchor"},
    "seeds": {"noise_seed"},
    "output": {"dir"},
}


@dataclass(frozen=True)
class RunConfig:
    phantom: PhantomSpec
    b: int
    r: int
    acs: int
    inference: InferenceConfig
    noise_seed: int
    out_dir: Path


def _get(parser: configparser.ConfigParser, section: str, key: str, default):
    if parser.has_option(section, key):
        raw = parser.get(section, key)
        if isinstance(default, bool):
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ConfigError(f"[{section}] {key}: expected a boolean, got {raw!r}")
            return raw.lower() in ("true", "1", "yes")
        try:
            return type(default)(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from exc
    return default


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    for section in parser.sections():
        if section not in _KNOWN:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key in parser.options(section):
            if key not in _KNOWN[section]:
                raise ConfigError(f"{path}: unknown key [{section}] {key}")

    b = _get(parser, "scheme", "b", 3)
    phantom = PhantomSpec(
        rows=_get(parser, "phantom", "rows", 96),
        cols=_get(parser, "phantom", "cols", 96),
        b=b,
        coils=_get(parser, "phantom", "coils", 4),
        seed=_get(parser, "phantom", "seed", 0),
        noise_sigma=_get(parser, "phantom", "noise_sigma", 0.0),
    )
    endpoint = _get(parser, "inference", "endpoint", "")
    inference = InferenceConfig(
        t_m=_get(parser, "inference", "t_m", 10),
        t_u=_get(parser, "inference", "t_u", 10),
        guidance_interval=_get(parser, "inference", "g", 2),
        use_anchor=_get(parser, "inference", "use_anchor", True),
        predictor=_get(parser, "inference", "predictor", "oracle"),
        endpoint=endpoint or None,
    )
    out_dir = Path(_get(parser, "output", "dir", "out"))
    if not out_dir.is_absolute():
        out_dir = path.parent / out_dir
    return RunConfig(
        phantom=phantom,
        b=b,
        r=_get(parser, "mask", "r", 2),
        acs=_get(parser, "mask", "acs", 32),
        inference=inference,
        noise_seed=_get(parser, "seeds", "noise_seed", 0),
        out_dir=out_dir,
    )
