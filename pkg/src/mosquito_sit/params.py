"""Model constants and the scalar quantities derived from them.

All rates are per day, densities per km^2, diffusion coefficients in km^2/day.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Mapping, Optional


class ParameterError(ValueError):
    """Raised for invalid parameter values or undefined derived quantities."""


@dataclass(frozen=True)
class BioParams:
    """Biological rates and diffusion coefficients of the mosquito model."""

    beta_E: float = 8.0
    nu_E: float = 0.05
    delta_E: float = 0.03
    delta_F: float = 0.04
    delta_M: float = 0.1
    delta_s: float = 0.12
    nu: float = 0.49
    eta: float = 0.7
    gamma: float = 1.0
    d1: float = 0.1
    d2: float = 0.1
    d3: float = 0.05

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ParameterError(f"{f.name} must be a finite number, got {v!r}")
        # beta_E = 0 is allowed: it is the degenerate no-reproduction case
        if self.beta_E < 0:
            raise ParameterError(f"beta_E must be >= 0, got {self.beta_E}")
        for name in ("nu_E", "delta_E", "delta_F", "delta_M", "delta_s", "eta", "gamma"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be > 0, got {getattr(self, name)}")
        if not 0.0 < self.nu < 1.0:
            raise ParameterError(f"nu must lie in (0, 1), got {self.nu}")
        for name in ("d1", "d2", "d3"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0, got {getattr(self, name)}")

    @classmethod
    def from_mapping(cls, values: Mapping[str, object]) -> "BioParams":
        """Build from a key/value mapping; unknown keys are rejected."""
        return cls(**_coerce(cls, values))

    def to_dict(self) -> dict:
        return asdict(self)

    def replace(self, **changes) -> "BioParams":
        return type(self)(**{**asdict(self), **changes})


@dataclass(frozen=True)
class ControlParams:
    """Target sterile/wild ratio ``theta`` and penalty weight ``alpha``."""

    theta: float = 75.0
    alpha: float = 0.25

    def __post_init__(self):
        if not (math.isfinite(self.theta) and self.theta >= 0):
            raise ParameterError(f"theta must be >= 0, got {self.theta}")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ParameterError(f"alpha must be > 0, got {self.alpha}")

    @classmethod
    def from_mapping(cls, values: Mapping[str, object]) -> "ControlParams":
        return cls(**_coerce(cls, values))

    def to_dict(self) -> dict:
        return asdict(self)

    def replace(self, **changes) -> "ControlParams":
        return type(self)(**{**asdict(self), **changes})


def _coerce(cls, values: Mapping[str, object]) -> dict:
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ParameterError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    out = {}
    for k, v in values.items():
        try:
            out[k] = float(v)
        except (TypeError, ValueError):
            raise ParameterError(f"{cls.__name__}.{k}: not a number: {v!r}") from None
    return out


@dataclass(frozen=True)
class DerivedRates:
    R: float
    r_plus: Optional[float]
    r_minus: Optional[float]
    R_theta: Optional[float]
    kappa: float
    psi: Optional[float]
    sigma: Optional[float]
    c0: Optional[float]
    c_theta: Optional[float]


@dataclass(frozen=True)
class ConditionReport:
    """Advisory checks for the closed-loop stabilization result.

    ``sigma`` uses the denominator ``nu*nu_E + delta_E`` without the factor 2;
    ``sigma_half`` is the variant with the factor 2 in the denominator.
    """

    R_theta: float
    r_theta_ok: bool
    sigma: float
    sigma_half: float
    sigma_ok: bool
    deltas_ok: bool

    @property
    def all_ok(self) -> bool:
        return self.r_theta_ok and self.sigma_ok and self.deltas_ok

    def messages(self) -> list[str]:
        out = []
        if not self.r_theta_ok:
            out.append(f"R(theta) = {self.R_theta:.6g} >= 1: reduced system not stabilized by theta")
        if not self.sigma_ok:
            out.append(
                f"sigma = {self.sigma:.6g} <= 0 (factor-2 variant {self.sigma_half:.6g}): "
                "alpha too large for the Lyapunov decay estimate"
            )
        if not self.deltas_ok:
            out.append("delta_s < delta_M: feedback may go negative and will be clamped at 0")
        return out


def basic_offspring_number(p: BioParams) -> float:
    return p.beta_E * p.nu * p.nu_E / (p.delta_F * (p.nu_E + p.delta_E))


def threshold_rates(p: BioParams, K: float) -> tuple[float, float]:
    """Return ``(r_minus, r_plus)``, the two roots of the discriminant in R.

    With ``x = eta*K*(1-nu)*nu_E/delta_M``, ``r_minus`` is evaluated as
    ``x/(1 + sqrt(1+x))^2``, which equals ``1 + 2/x*(1 - sqrt(1+x))``
    without the cancellation at either end of the range of x.
    """
    if not K > 0:
        raise ParameterError(f"carrying capacity must be > 0, got {K}")
    x = p.eta * K * (1.0 - p.nu) * p.nu_E / p.delta_M
    s = math.sqrt(1.0 + x)
    r_plus = 1.0 + 2.0 / x * (1.0 + s)
    r_minus = x / (1.0 + s) ** 2
    return r_minus, r_plus


def scaled_offspring(p: BioParams, c: ControlParams) -> float:
    return basic_offspring_number(p) / (1.0 + p.gamma * c.theta)


def control_gain_psi(p: BioParams, c: ControlParams) -> float:
    Rt = scaled_offspring(p, c)
    if Rt >= 1.0:
        raise ParameterError(f"psi undefined: R(theta) = {Rt} >= 1")
    return p.gamma * p.beta_E * (1.0 + Rt * (1.0 + c.theta * p.gamma)) / (1.0 - Rt)


def check_stabilization_conditions(p: BioParams, c: ControlParams) -> ConditionReport:
    Rt = scaled_offspring(p, c)
    num = 3.0 * c.alpha * c.theta * (1.0 - p.nu) * p.nu_E
    den = p.nu * p.nu_E + p.delta_E
    sigma = 1.0 - num / den
    return ConditionReport(
        R_theta=Rt,
        r_theta_ok=Rt < 1.0,
        sigma=sigma,
        sigma_half=1.0 - num / (2.0 * den),
        sigma_ok=sigma > 0.0,
        deltas_ok=p.delta_s >= p.delta_M,
    )


def ode_decay_rate_c0(p: BioParams) -> float:
    """Exponential decay rate of the linear Lyapunov function when R < 1."""
    R = basic_offspring_number(p)
    if R >= 1.0:
        raise ParameterError(f"c0 requires R < 1, got R = {R}")
    return min(
        (p.nu * p.nu_E + p.delta_E) * (1.0 - R) / (1.0 + R),
        p.delta_F * (1.0 - R) / 2.0,
        p.delta_M,
    )


def theta_decay_rate(p: BioParams, c: ControlParams) -> float:
    """Decay rate of the reduced system obtained with ``Ms = theta*M``."""
    Rt = scaled_offspring(p, c)
    if Rt >= 1.0:
        raise ParameterError(f"c_theta requires R(theta) < 1, got {Rt}")
    tg = c.theta * p.gamma
    return min(
        (p.nu * p.nu_E + p.delta_E) * (1.0 - Rt) / (1.0 + (1.0 + tg) * Rt),
        p.delta_F * (1.0 + tg) * (1.0 - Rt) / (2.0 + tg),
        p.delta_M,
    )


def derived_rates(
    p: BioParams, c: Optional[ControlParams] = None, K: Optional[float] = None
) -> DerivedRates:
    """Every derived scalar that is defined for the given inputs; the rest are None."""
    R = basic_offspring_number(p)
    r_minus = r_plus = None
    if K is not None:
        r_minus, r_plus = threshold_rates(p, K)
    Rt = psi = sigma = c_theta = None
    if c is not None:
        Rt = scaled_offspring(p, c)
        sigma = check_stabilization_conditions(p, c).sigma
        if Rt < 1.0:
            psi = control_gain_psi(p, c)
            c_theta = theta_decay_rate(p, c)
    return DerivedRates(
        R=R,
        r_plus=r_plus,
        r_minus=r_minus,
        R_theta=Rt,
        kappa=1.0 / p.eta,
        psi=psi,
        sigma=sigma,
        c0=ode_decay_rate_c0(p) if R < 1.0 else None,
        c_theta=c_theta,
    )
