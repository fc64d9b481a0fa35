"""Run configuration: defaults, flat key=value files, seed splitting.

A run is reproducible from its effective config alone, so the resolved
configuration is serialized next to the other artifacts. CLI flags
override file values, which override defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

from .errors import ConfigError

_SEED_STREAMS = {"kmeans": 0, "cv": 1, "mutation": 2, "multifault": 3}


def component_seed(master: int, component: str, index: int = 0) -> int:
    """Derive a component seed from the master seed.

    Each randomized component draws from its own fixed stream index so
    adding a component never shifts the others. ``index`` separates
    repeated uses inside one component (one per subject, say).
    """
    seq = np.random.SeedSequence([master, _SEED_STREAMS[component], index])
    return int(seq.generate_state(1)[0])


@dataclass(frozen=True)
class RunConfig:
    program: Optional[str] = None
    suite: Optional[str] = None
    spectrum: Optional[str] = None
    fpl_import: Optional[str] = None
    out: str = "out"
    seed: int = 0
    theta: float = 1.75
    theta_low: float = 3.5
    theta_high: float = 0.3
    p: float = 0.02
    q: float = 0.25
    tau_d: float = 0.5
    rho_min: float = 0.9
    eps: float = 0.05
    theta1: float = 0.5
    theta2: float = 0.5
    cv_folds: int = 10
    step_limit: int = 100000
    uniform_delta: bool = False
    # ridge share fixed at an equal mix by default: cross-validating it
    # degenerates to pure lasso whenever a correlated column cluster
    # separates the classes, losing the grouping the ranking depends on
    alpha_grid: tuple[float, ...] = (0.5,)
    s_grid: tuple[float, ...] = (0.1, 0.3, 0.5, 0.7, 0.9)
    irls_tol: float = 1e-7
    solver_tol: float = 1e-6
    max_irls: int = 50
    max_sweeps: int = 1000
    versions: int = 30
    multi_fault: int = 0
    max_fail_rate: float = 0.35
    prone_only: bool = False
    ablation: bool = False

    def validate(self) -> "RunConfig":
        checks = [
            (0.0 < self.p < 1.0, "p must lie in (0,1)"),
            (0.0 < self.q <= 1.0, "q must lie in (0,1]"),
            (0.0 < self.tau_d < 1.0, "tau_d must lie in (0,1)"),
            (1.0 < self.theta <= 2.0, "theta must lie in (1,2]"),
            (3.0 <= self.theta_low <= 4.0, "theta_low must lie in [3,4]"),
            (self.theta_high > 0.0, "theta_high must be positive"),
            (0.0 <= self.theta1 <= 1.0, "theta1 must lie in [0,1]"),
            (0.0 <= self.theta2 <= 1.0, "theta2 must lie in [0,1]"),
            (0.0 <= self.rho_min <= 1.0, "rho_min must lie in [0,1]"),
            (self.eps > 0.0, "eps must be positive"),
            (self.cv_folds >= 2, "cv_folds must be at least 2"),
            (self.step_limit > 0, "step_limit must be positive"),
            (len(self.alpha_grid) > 0, "alpha_grid must be non-empty"),
            (len(self.s_grid) > 0, "s_grid must be non-empty"),
            (all(0.0 <= a <= 1.0 for a in self.alpha_grid), "alpha values in [0,1]"),
            (all(0.0 < s < 1.0 for s in self.s_grid), "s values in (0,1)"),
            (self.versions >= 1, "versions must be at least 1"),
            (self.multi_fault in (0,) or self.multi_fault >= 2,
             "multi_fault must be 0 or >= 2"),
            (0.0 < self.max_fail_rate <= 1.0,
             "max_fail_rate must lie in (0,1]"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        return self

    def require_single_input(self) -> "RunConfig":
        have_program = self.program is not None and self.suite is not None
        have_spectrum = self.spectrum is not None
        if have_program == have_spectrum:
            raise ConfigError(
                "provide exactly one input: program+suite, or an external spectrum"
            )
        return self

    def require_program_suite(self) -> "RunConfig":
        if self.program is None or self.suite is None:
            raise ConfigError("this command needs --program and --suite")
        return self


_BOOL_FIELDS = {"uniform_delta", "prone_only", "ablation"}
_INT_FIELDS = {"seed", "cv_folds", "step_limit", "max_irls", "max_sweeps",
               "versions", "multi_fault"}
_FLOAT_FIELDS = {"theta", "theta_low", "theta_high", "p", "q", "tau_d",
                 "rho_min", "eps", "theta1", "theta2", "irls_tol", "solver_tol",
                 "max_fail_rate"}
_GRID_FIELDS = {"alpha_grid", "s_grid"}
_PATH_FIELDS = {"program", "suite", "spectrum", "fpl_import", "out"}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in _BOOL_FIELDS:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if key in _INT_FIELDS:
            return int(raw)
        if key in _FLOAT_FIELDS:
            return float(raw)
        if key in _GRID_FIELDS:
            return tuple(float(tok) for tok in raw.split(",") if tok.strip())
        if key in _PATH_FIELDS:
            return raw or None
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    raise ConfigError(f"unknown config key: {key}")


def parse_config_text(text: str) -> dict:
    """Flat `key = value` lines; # starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, _, value = line.partition("=")
        key = key.strip()
        out[key] = _parse_value(key, value)
    return out


def load_config(path: str | None, overrides: dict) -> RunConfig:
    """Defaults, then file values, then explicit overrides."""
    cfg = RunConfig()
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                file_values = parse_config_text(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        cfg = replace(cfg, **file_values)
    known = {f.name for f in fields(RunConfig)}
    unknown = set(overrides) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = replace(cfg, **overrides)
    return cfg


def serialize_config(cfg: RunConfig) -> str:
    """Effective config as key=value text; parsing it back reproduces the
    run exactly."""
    lines = []
    for f in fields(RunConfig):
        value = getattr(cfg, f.name)
        if f.name in _GRID_FIELDS:
            text = ",".join(f"{v:g}" for v in value)
        elif f.name in _BOOL_FIELDS:
            text = "true" if value else "false"
        elif value is None:
            text = ""
        else:
            text = str(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"
