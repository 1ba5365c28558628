"""Population masses, Lyapunov functionals and run metrics."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .params import (
    BioParams,
    ControlParams,
    ParameterError,
    basic_offspring_number,
    scaled_offspring,
)


class WeightVariant(enum.Enum):
    PLAIN_R = "PlainR"
    THETA_SCALED = "ThetaScaled"


@dataclass(frozen=True)
class LyapunovWeights:
    """Coefficients of E and F in the linear functional (M has weight 1)."""

    wE: float
    wF: float
    variant: WeightVariant

    @classmethod
    def plain(cls, p: BioParams) -> "LyapunovWeights":
        R = basic_offspring_number(p)
        if R >= 1.0:
            raise ParameterError(f"plain weights require R < 1, got {R}")
        return cls((1.0 + R) / (1.0 - R), 2.0 * p.beta_E / (p.delta_F * (1.0 - R)), WeightVariant.PLAIN_R)

    @classmethod
    def theta_scaled(cls, p: BioParams, c: ControlParams) -> "LyapunovWeights":
        Rt = scaled_offspring(p, c)
        if Rt >= 1.0:
            raise ParameterError(f"theta-scaled weights require R(theta) < 1, got {Rt}")
        tg = c.theta * p.gamma
        return cls(
            (1.0 + (1.0 + tg) * Rt) / (1.0 - Rt),
            p.beta_E * (2.0 + tg) / (p.delta_F * (1.0 + tg) * (1.0 - Rt)),
            WeightVariant.THETA_SCALED,
        )

    def bounds(self) -> tuple[float, float]:
        """``(a, A)`` with ``a*sum(masses) <= L <= A*sum(masses)``."""
        return min(self.wE, self.wF, 1.0), max(self.wE, self.wF, 1.0)


def l1_mass(f: np.ndarray, cell_area: float) -> float:
    # np.sum uses a fixed pairwise order for a given shape: reproducible
    return float(np.sum(f)) * cell_area


def functional_L(E, F, M, w: LyapunovWeights, cell_area: float) -> float:
    return w.wE * l1_mass(E, cell_area) + w.wF * l1_mass(F, cell_area) + l1_mass(M, cell_area)


def penalty_density(M, Ms, theta: float):
    """``(theta*M - Ms)^2 / (theta*M + Ms)``, zero where both vanish."""
    M = np.asarray(M, dtype=float)
    Ms = np.asarray(Ms, dtype=float)
    s = theta * M + Ms
    safe = np.where(s > 0, s, 1.0)
    d = theta * M - Ms
    # d * (d / s) rather than d**2 / s: the square under/overflows at extreme scales
    return np.where(s > 0, d * (d / safe), 0.0)


def functional_U(E, F, M, Ms, p: BioParams, c: ControlParams, cell_area: float) -> float:
    """Backstepping Lyapunov functional: theta-scaled V plus the Ms penalty."""
    w = LyapunovWeights.theta_scaled(p, c)
    V = functional_L(E, F, M, w, cell_area)
    return V + c.alpha * l1_mass(penalty_density(M, Ms, c.theta), cell_area)


def sandwich_constants(p: BioParams, c: ControlParams) -> tuple[float, float]:
    """``(k1, k2)`` with ``k1*||y||_1 <= U <= k2*||y||_1``."""
    w = LyapunovWeights.theta_scaled(p, c)
    k1 = min(w.wE, c.alpha, 1.0 / (1.0 + c.theta), w.wF)
    k2 = max(w.wE, c.alpha, 1.0 + c.alpha * c.theta, w.wF)
    return k1, k2


def control_cost(times: Sequence[float], rates: Sequence[float]) -> float:
    """Left-rectangle integral of the total release rate over time."""
    t = np.asarray(times, dtype=float)
    r = np.asarray(rates, dtype=float)
    if t.shape != r.shape:
        raise ValueError("times and rates must have the same length")
    if t.size < 2:
        return 0.0
    dt = np.diff(t)
    if np.any(dt < 0):
        raise ValueError("times must be nondecreasing")
    return float(np.sum(r[:-1] * dt))


def convergence_time(times: Sequence[float], max_E: Sequence[float], threshold: float = 1.0) -> Optional[float]:
    """First sample time at which the largest egg density is at most ``threshold``."""
    for t, m in zip(times, max_E):
        if m <= threshold:
            return float(t)
    return None


def fit_decay_rate(times: Sequence[float], values: Sequence[float], tail: float = 1.0) -> float:
    """Least-squares slope of ``log(values)`` against time.

    ``tail`` keeps only the last fraction of the samples (0.5 drops the
    first half as transient).
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape:
        raise ValueError("times and values must have the same length")
    if not 0 < tail <= 1:
        raise ValueError(f"tail must lie in (0, 1], got {tail}")
    start = int(np.floor(t.size * (1.0 - tail)))
    t, v = t[start:], v[start:]
    if t.size < 3:
        raise ValueError("need at least 3 samples to fit a decay rate")
    if np.any(~(v > 0)):
        raise ValueError("values must be strictly positive")
    slope, _ = np.polyfit(t, np.log(v), 1)
    return float(slope)
