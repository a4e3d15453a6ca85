"""Run configuration: YAML file, environment variables and packaged fixtures."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import yaml

ENV_PREFIX = "TWEIS_"


class ConfigError(ValueError):
    pass


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("twisted_eisenstein") / "data" / name))


@dataclass
class RunConfig:
    curve: tuple[int, ...] = (0, -1, 1, -10, -20)
    level: int = 11
    fricke_sign: int = 1
    bad_primes: dict = field(default_factory=lambda: {11: 1})
    tolerance: float = 1e-13
    bound: int = 200
    max_terms: int = 6000
    tail_constant: float = 10.0
    workers: int = 1
    eigen_data: str | None = None
    table: str | None = None

    NUMERIC = ("level", "fricke_sign", "tolerance", "bound", "max_terms", "tail_constant", "workers")

    def validate(self) -> "RunConfig":
        if self.tolerance <= 0:
            raise ConfigError("tolerance must be positive")
        if self.tail_constant <= 0:
            raise ConfigError("tail_constant must be positive")
        if self.bound < 1:
            raise ConfigError("bound must be >= 1")
        if self.level < 1:
            raise ConfigError("level must be >= 1")
        if self.fricke_sign not in (1, -1):
            raise ConfigError("fricke_sign must be +1 or -1")
        if self.max_terms < 1 or self.workers < 1:
            raise ConfigError("max_terms and workers must be >= 1")
        if len(self.curve) != 5:
            raise ConfigError("curve needs the five coefficients a1 a2 a3 a4 a6")
        return self

    @classmethod
    def load(cls, path=None, env=None) -> "RunConfig":
        """Defaults, then the YAML file, then TWEIS_* environment variables."""
        cfg = cls()
        if path is not None:
            try:
                data = yaml.safe_load(Path(path).read_text()) or {}
            except (OSError, yaml.YAMLError) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            known = {f.name for f in fields(cls)}
            for key, value in data.items():
                if key == "name":
                    continue
                if key not in known:
                    raise ConfigError(f"unknown config key {key!r}")
                setattr(cfg, key, value)
            cfg.curve = tuple(int(x) for x in cfg.curve)
            cfg.bad_primes = {int(k): int(v) for k, v in (cfg.bad_primes or {}).items()}
        env = os.environ if env is None else env
        for name in cls.NUMERIC:
            raw = env.get(ENV_PREFIX + name.upper())
            if raw is None:
                continue
            kind = type(getattr(cls(), name))
            try:
                setattr(cfg, name, kind(raw))
            except ValueError as exc:
                raise ConfigError(f"bad value for {ENV_PREFIX}{name.upper()}: {raw!r}") from exc
        return cfg.validate()

    def form(self):
        from .periods import EllipticCurveQ, curve_coefficients
        E = EllipticCurveQ(*self.curve, conductor=self.level)
        return curve_coefficients(E, self.max_terms, self.bad_primes, self.fricke_sign)

    def curve_obj(self):
        from .periods import EllipticCurveQ
        return EllipticCurveQ(*self.curve, conductor=self.level)
