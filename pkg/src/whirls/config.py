"""Run configuration: one JSON document per run."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .coeff import Coefficient, CoefficientError, ExprSyntaxError, from_config
from .geometry import GRID_LEVELS, Annulus
from .numerics import NumericsConfig

DEFAULT_TOLERANCES = {
    "det": 1e-11,
    "boundary": 1e-11,
    "route": 1e-8,
    "simplified": 1e-7,
    "curl": 1e-8,
    "residual": 1e-6,
    "flux": 1e-9,
    "path": 1e-9,
    "variation": 1e-4,
}

KNOWN_KEYS = {"annulus", "A", "H", "B", "F", "m", "m_list", "bound", "grid", "seed",
              "tolerances", "numerics", "variation", "profile", "output"}


class ConfigError(ValueError):
    """Invalid run configuration (exit code 2)."""


@dataclass
class RunConfig:
    ann: Annulus
    A: Coefficient
    B: Coefficient
    F: Optional[Coefficient] = None
    m: Optional[tuple] = None
    m_list: list = field(default_factory=list)
    bound: Optional[int] = None
    grid: str = "DEFAULT"
    seed: int = 0
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    variation_fields: int = 5
    profile: str = "solve"
    raw: dict = field(default_factory=dict)

    @property
    def H(self) -> Coefficient:
        """The coefficient as an xi-independent H (raises when it is not)."""
        if not self.A.xi_free:
            raise ConfigError("classification needs a xi-independent coefficient A")
        return self.A if self.A.kind == "H" else self.A.as_kind("H")

    def echo(self) -> dict:
        out = dict(self.raw)
        out["grid"] = self.grid
        out["seed"] = self.seed
        out["profile"] = self.profile
        return out


def _winding(v, d: int, what: str) -> tuple:
    if not isinstance(v, (list, tuple)) or not all(isinstance(t, int) and not isinstance(t, bool) for t in v):
        raise ConfigError(f"{what} must be a list of integers")
    if len(v) != d:
        raise ConfigError(f"{what} has {len(v)} entries but the annulus needs d = {d}")
    return tuple(v)


def _coeff(spec: Any, kind: str, what: str) -> Coefficient:
    try:
        return from_config(spec, kind)
    except (CoefficientError, ExprSyntaxError, ValueError) as e:
        raise ConfigError(f"{what}: {e}") from None


def parse_config(raw: dict, seed: Optional[int] = None, grid: Optional[str] = None,
                 profile: Optional[str] = None) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    an = raw.get("annulus")
    if not isinstance(an, dict) or not {"n", "a", "b"} <= set(an):
        raise ConfigError("annulus must give n, a and b")
    try:
        ann = Annulus(int(an["n"]), float(an["a"]), float(an["b"]))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"annulus: {e}") from None
    if "A" in raw and "H" in raw:
        raise ConfigError("give either A or H, not both")
    F = _coeff(raw["F"], "F", "F") if "F" in raw else None
    if "A" in raw or "H" in raw:
        key = "A" if "A" in raw else "H"
        A = _coeff(raw[key], "A", key)
        if key == "H" and not A.xi_free:
            raise ConfigError("H must not depend on xi")
        B = _coeff(raw.get("B", "0"), "B", "B")
    elif F is not None:
        from .variation import StoredEnergy

        W = StoredEnergy.from_coefficient(F, ann)
        A, B = W.A, W.B
        if "B" in raw:
            raise ConfigError("B is induced by F; do not give both")
    else:
        raise ConfigError("config needs A (or H) or a stored energy F")
    m = _winding(raw["m"], ann.d, "m") if "m" in raw else None
    m_list = [_winding(v, ann.d, "m_list entry") for v in raw.get("m_list", [])]
    bound = raw.get("bound")
    if bound is not None and (not isinstance(bound, int) or bound < 0):
        raise ConfigError("bound must be a non-negative integer")
    level = (grid or raw.get("grid", "DEFAULT")).upper()
    if level not in GRID_LEVELS:
        raise ConfigError(f"grid must be one of {sorted(GRID_LEVELS)}")
    s = raw.get("seed", 0) if seed is None else seed
    if not isinstance(s, int):
        raise ConfigError("seed must be an integer")
    tol = dict(DEFAULT_TOLERANCES)
    extra = raw.get("tolerances", {})
    if not isinstance(extra, dict) or set(extra) - set(tol):
        raise ConfigError(f"tolerances may only override {sorted(tol)}")
    tol.update({k: float(v) for k, v in extra.items()})
    try:
        num = NumericsConfig.from_dict(raw.get("numerics"))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"numerics: {e}") from None
    var = raw.get("variation", {})
    fields = int(var.get("fields", 5)) if isinstance(var, dict) else 5
    prof = profile or raw.get("profile", "solve")
    if prof not in ("solve", "linear"):
        raise ConfigError("profile must be 'solve' or 'linear'")
    return RunConfig(ann, A, B, F, m, m_list, bound, level, s, tol, num, fields, prof, dict(raw))


def load_config(path, **overrides) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from None
    return parse_config(raw, **overrides)
