"""Simulation configuration, INI (de)serialization and named presets.

Config files are INI with the sections ``[params]``, ``[control]``,
``[grid]``, ``[kfield]`` and ``[run]``. A missing ``[control]`` section
means an uncontrolled run. Unknown sections or keys are errors.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .params import BioParams, ControlParams, ParameterError
from .pde import GridSpec, KFieldParams

MASK_KINDS = ("whole", "square", "off")
INITIAL_KINDS = ("equilibrium", "fraction")

# alpha values offered for local releases; the first is the preset default
LOCAL_ALPHAS = (0.001, 0.0001, 0.0025)


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


@dataclass(frozen=True)
class MaskSpec:
    kind: str = "whole"
    center: tuple[float, float] = (2.5, 2.5)
    half_width: float = 1.0

    def __post_init__(self):
        if self.kind not in MASK_KINDS:
            raise ConfigError(f"mask must be one of {MASK_KINDS}, got {self.kind!r}")
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        if len(self.center) != 2:
            raise ConfigError("mask_center needs two coordinates")
        if self.half_width < 0:
            raise ConfigError("mask_half_width must be >= 0")

    def build(self, g: GridSpec) -> np.ndarray:
        """0/1 array of cells whose centers lie in the release region."""
        if self.kind == "whole":
            return np.ones(g.shape)
        if self.kind == "off":
            return np.zeros(g.shape)
        X, Y = g.centers()
        # sup-norm ball; the tolerance keeps centers exactly on the edge inside
        tol = 1e-9 * max(g.lx, g.ly)
        inside = np.maximum(np.abs(X - self.center[0]), np.abs(Y - self.center[1])) <= self.half_width + tol
        return inside.astype(float)


@dataclass(frozen=True)
class SimConfig:
    params: BioParams = field(default_factory=BioParams)
    ctrl: Optional[ControlParams] = None
    grid: GridSpec = field(default_factory=GridSpec)
    kfield: KFieldParams = field(default_factory=KFieldParams)
    t_max: float = 400.0
    output_interval: float = 1.0
    snapshot_times: tuple[float, ...] = ()
    mask: MaskSpec = field(default_factory=MaskSpec)
    stop_on_convergence: bool = False
    cfl_safety: float = 0.9
    initial: str = "equilibrium"
    initial_fraction: float = 0.5
    initial_ms_ratio: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "snapshot_times", tuple(float(t) for t in self.snapshot_times))
        if self.t_max < 0:
            raise ConfigError(f"t_max must be >= 0, got {self.t_max}")
        if not self.output_interval > 0:
            raise ConfigError(f"output_interval must be > 0, got {self.output_interval}")
        bad = [t for t in self.snapshot_times if not 0 <= t <= self.t_max]
        if bad:
            raise ConfigError(f"snapshot times outside [0, t_max]: {bad}")
        if not 0 < self.cfl_safety <= 1:
            raise ConfigError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if self.initial not in INITIAL_KINDS:
            raise ConfigError(f"initial must be one of {INITIAL_KINDS}, got {self.initial!r}")
        if self.initial_fraction < 0 or self.initial_ms_ratio < 0:
            raise ConfigError("initial_fraction and initial_ms_ratio must be >= 0")

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)


# --- INI serialization ---------------------------------------------------

_RUN_KEYS = {
    "t_max": float,
    "output_interval": float,
    "snapshot_times": "floats",
    "mask": str,
    "mask_center": "floats",
    "mask_half_width": float,
    "stop_on_convergence": bool,
    "cfl_safety": float,
    "initial": str,
    "initial_fraction": float,
    "initial_ms_ratio": float,
}
_GRID_KEYS = {"nx": int, "ny": int, "lx": float, "ly": float}
_KFIELD_KEYS = {"zeta": float, "lam": "floats", "mu": "floats", "xi": "floats", "sigma": "floats"}
SECTIONS = ("params", "control", "grid", "kfield", "run")


def _floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(v) for v in text.split(","))


def _parse_value(kind, raw: str, where: str):
    try:
        if kind == "floats":
            return _floats(raw)
        if kind is bool:
            low = raw.strip().lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if kind is int:
            v = float(raw)
            if v != int(v):
                raise ValueError(raw)
            return int(v)
        return kind(raw.strip())
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r}") from None


def _typed_section(values: dict, schema: dict, section: str) -> dict:
    unknown = set(values) - set(schema)
    if unknown:
        raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")
    return {k: _parse_value(schema[k], v, f"{section}.{k}") for k, v in values.items()}


def config_from_sections(sections: dict[str, dict[str, str]]) -> SimConfig:
    unknown = set(sections) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    try:
        params = BioParams.from_mapping(sections.get("params", {}))
        ctrl = ControlParams.from_mapping(sections["control"]) if "control" in sections else None
        grid = GridSpec(**_typed_section(sections.get("grid", {}), _GRID_KEYS, "grid"))
        kfield = KFieldParams(**_typed_section(sections.get("kfield", {}), _KFIELD_KEYS, "kfield"))
        run = _typed_section(sections.get("run", {}), _RUN_KEYS, "run")
        mask_kw = {}
        for src, dst in (("mask", "kind"), ("mask_center", "center"), ("mask_half_width", "half_width")):
            if src in run:
                mask_kw[dst] = run.pop(src)
        return SimConfig(params=params, ctrl=ctrl, grid=grid, kfield=kfield, mask=MaskSpec(**mask_kw), **run)
    except ParameterError as e:
        raise ConfigError(str(e)) from None


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def config_to_sections(cfg: SimConfig) -> dict[str, dict[str, str]]:
    out = {"params": {k: _fmt(v) for k, v in cfg.params.to_dict().items()}}
    if cfg.ctrl is not None:
        out["control"] = {k: _fmt(v) for k, v in cfg.ctrl.to_dict().items()}
    out["grid"] = {k: _fmt(getattr(cfg.grid, k)) for k in _GRID_KEYS}
    out["kfield"] = {k: _fmt(getattr(cfg.kfield, k)) for k in _KFIELD_KEYS}
    run = {
        "t_max": cfg.t_max,
        "output_interval": cfg.output_interval,
        "snapshot_times": cfg.snapshot_times,
        "mask": cfg.mask.kind,
        "mask_center": cfg.mask.center,
        "mask_half_width": cfg.mask.half_width,
        "stop_on_convergence": cfg.stop_on_convergence,
        "cfl_safety": cfg.cfl_safety,
        "initial": cfg.initial,
        "initial_fraction": cfg.initial_fraction,
        "initial_ms_ratio": cfg.initial_ms_ratio,
    }
    out["run"] = {k: _fmt(v) for k, v in run.items()}
    return out


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keys are case sensitive (beta_E, delta_M, ...)
    return cp


def loads(text: str) -> SimConfig:
    cp = _parser()
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(str(e)) from None
    return config_from_sections({s: dict(cp[s]) for s in cp.sections()})


def dumps(cfg: SimConfig) -> str:
    cp = _parser()
    cp.read_dict(config_to_sections(cfg))
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def load(path) -> SimConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return loads(text)


def apply_overrides(cfg: SimConfig, overrides: list[str]) -> SimConfig:
    """Apply ``section.key=value`` (or unambiguous ``key=value``) assignments.

    Setting any ``control.*`` key on an uncontrolled config enables control
    with default theta/alpha for the keys not given.
    """
    sections = config_to_sections(cfg)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        if "." in key:
            section, name = key.split(".", 1)
        else:
            section, name = _find_section(key), key
        if section not in SECTIONS:
            raise ConfigError(f"unknown section {section!r} in override {item!r}")
        if section == "control" and "control" not in sections:
            sections["control"] = {k: _fmt(v) for k, v in ControlParams().to_dict().items()}
        sections.setdefault(section, {})[name] = value
    return config_from_sections(sections)


def _find_section(key: str) -> str:
    owners = [s for s, keys in _section_keys().items() if key in keys]
    if len(owners) != 1:
        raise ConfigError(f"key {key!r} is unknown or ambiguous; use section.key")
    return owners[0]


def _section_keys() -> dict[str, set]:
    return {
        "params": {f.name for f in dataclasses.fields(BioParams)},
        "control": {f.name for f in dataclasses.fields(ControlParams)},
        "grid": set(_GRID_KEYS),
        "kfield": set(_KFIELD_KEYS),
        "run": set(_RUN_KEYS),
    }


# --- presets ---------------------------------------------------------------

PRESETS = ("paper-k-field", "paper-uncontrolled", "paper-global", "paper-local", "ode-bifurcation")


def preset(name: str) -> SimConfig:
    """Named configurations for the reference experiments.

    ``ode-bifurcation`` is a single homogeneous cell with constant K = 500
    and no diffusion, i.e. the explicit-Euler discretization of the ODE.
    """
    defaults = BioParams()
    if name == "paper-k-field":
        return SimConfig(params=defaults, t_max=0.0, mask=MaskSpec("off"))
    if name == "paper-uncontrolled":
        return SimConfig(params=defaults, t_max=400.0, mask=MaskSpec("off"))
    if name == "paper-global":
        return SimConfig(
            params=defaults,
            ctrl=ControlParams(theta=75.0, alpha=0.25),
            t_max=400.0,
            snapshot_times=(10.0, 200.0),
            mask=MaskSpec("whole"),
        )
    if name == "paper-local":
        return SimConfig(
            params=defaults.replace(d3=0.01),
            ctrl=ControlParams(theta=75.0, alpha=LOCAL_ALPHAS[0]),
            t_max=200.0,
            snapshot_times=(200.0,),
            mask=MaskSpec("square", center=(2.5, 2.5), half_width=1.0),
        )
    if name == "ode-bifurcation":
        return SimConfig(
            params=defaults.replace(d1=0.0, d2=0.0, d3=0.0),
            grid=GridSpec(nx=1, ny=1, lx=1.0, ly=1.0),
            kfield=KFieldParams.uniform(500.0),
            t_max=400.0,
            mask=MaskSpec("off"),
        )
    raise ConfigError(f"unknown preset {name!r}; choose from {PRESETS}")
