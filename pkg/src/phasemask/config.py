"""Run configuration for the command line front end.

Defaults describe a 200 THz carrier observed for 100 ns
(10 MHz resolution) over a 1 GHz band with N = 97 and N' = 9700 for the
waveform, and R = 45, C_E = 15 Mebit/s with D = 1 for the error curves.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .error_analysis import DEFAULT_TABLE_N


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Rates(_Section):
    R: float = Field(45e6, gt=0)
    C_E: float = Field(15e6, ge=0)
    D: float = Field(1.0, ge=1.0)


class Grid(_Section):
    T: Optional[float] = Field(None, gt=0)
    T_range: tuple[float, float] = (5e-9, 1.5e-6)
    points: int = Field(300, ge=1)
    f_c: float = Field(200e12, gt=0)
    resolution: float = Field(10e6, gt=0)
    bandwidth: float = Field(1e9, gt=0)
    samples: Optional[int] = Field(None, ge=2)

    @model_validator(mode="after")
    def _range_order(self):
        lo, hi = self.T_range
        if not 0 < lo <= hi:
            raise ValueError("T_range must satisfy 0 < lo <= hi")
        return self


class Ppm(_Section):
    N: int = Field(97, ge=1)
    N_range: list[int] = Field(default_factory=lambda: list(DEFAULT_TABLE_N))
    S: float = Field(1.5, ge=0)


class Mask(_Section):
    Nprime: Optional[int] = Field(None, ge=1)
    key_hex: str = "00"
    counter: int = Field(0, ge=0)
    identity: bool = False

    def resolve_nprime(self, N: int) -> int:
        return self.Nprime if self.Nprime is not None else 100 * N


class Sim(_Section):
    trials: int = Field(100_000, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    mode: Literal["reduced", "conditional", "full-pipeline", "photon-count"] = "reduced"
    N: Optional[int] = Field(None, ge=1)
    A: Optional[float] = Field(None, ge=0)
    ell: Optional[int] = Field(None, ge=1)
    lobes: int = Field(40, ge=1)
    j_c: Optional[int] = Field(None, ge=1)

    def resolve_N(self, ppm_N: int) -> int:
        if self.N is not None:
            return self.N
        return 11 if self.mode == "full-pipeline" else ppm_N


class Output(_Section):
    path: Optional[str] = None
    format: Literal["csv", "json"] = "csv"


class RunConfig(_Section):
    rates: Rates = Field(default_factory=Rates)
    grid: Grid = Field(default_factory=Grid)
    ppm: Ppm = Field(default_factory=Ppm)
    mask: Mask = Field(default_factory=Mask)
    sim: Sim = Field(default_factory=Sim)
    output: Output = Field(default_factory=Output)


class ConfigError(ValueError):
    pass


def format_validation_error(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        where = ".".join(str(p) for p in err["loc"]) or "<root>"
        if err["type"] == "extra_forbidden":
            lines.append(f"{where}: unknown key")
        else:
            lines.append(f"{where}: {err['msg']}")
    return "; ".join(lines)


def parse_config(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(format_validation_error(exc)) from None


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    return parse_config(data)
