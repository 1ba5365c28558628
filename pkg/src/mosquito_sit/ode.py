"""Spatially homogeneous life-cycle and SIT models.

States are plain float arrays: ``(E, F, M)`` for the life-cycle model and
``(E, F, M, Ms)`` for the model with sterile males.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .params import (
    BioParams,
    ParameterError,
    basic_offspring_number,
    threshold_rates,
)

CRITICAL_RTOL = 1e-9
MAX_HALVINGS = 40


class EquilibriumKind(enum.Enum):
    EXTINCTION = "extinction"
    E0_CRITICAL = "E0_critical"
    E1_LOW = "E1_low"
    E2_HIGH = "E2_high"


class Stability(enum.Enum):
    STABLE = "locally_asymptotically_stable"
    UNSTABLE = "unstable"
    DEGENERATE = "degenerate"


@dataclass
class Equilibrium:
    state: np.ndarray
    kind: EquilibriumKind
    stability: Stability
    routh: Optional[tuple[float, float, float]] = None


class IntegrationError(RuntimeError):
    """Raised when the positivity-preserving step size underflows."""


def life_cycle_rhs(s, p: BioParams, K: float) -> np.ndarray:
    E, F, M = s
    allee = p.eta * M / (1.0 + p.eta * M)
    return np.array(
        [
            p.beta_E * F * (1.0 - E / K) * allee - (p.nu_E + p.delta_E) * E,
            p.nu * p.nu_E * E - p.delta_F * F,
            (1.0 - p.nu) * p.nu_E * E - p.delta_M * M,
        ]
    )


def sit_rhs(s, p: BioParams, K: float, u: float = 0.0) -> np.ndarray:
    E, F, M, Ms = s
    allee = p.eta * M / (1.0 + p.eta * (M + p.gamma * Ms))
    return np.array(
        [
            p.beta_E * F * (1.0 - E / K) * allee - (p.nu_E + p.delta_E) * E,
            p.nu * p.nu_E * E - p.delta_F * F,
            (1.0 - p.nu) * p.nu_E * E - p.delta_M * M,
            u - p.delta_s * Ms,
        ]
    )


def equilibrium_state(E: float, p: BioParams) -> np.ndarray:
    """The point ``X_E`` on the line where the F and M equations balance."""
    return np.array([E, p.nu * p.nu_E / p.delta_F * E, (1.0 - p.nu) * p.nu_E / p.delta_M * E])


def positive_roots(p: BioParams, K: float) -> tuple[float, float]:
    """The two roots ``E1 < E2`` of the stationary quadratic, valid for R > r_plus.

    E2 comes from the closed form; E1 from the product of roots, which is
    free of cancellation when E1 is small.
    """
    R = basic_offspring_number(p)
    r_minus, r_plus = threshold_rates(p, K)
    if R <= r_plus:
        raise ParameterError(f"two positive equilibria need R > r_plus ({R} <= {r_plus})")
    root = math.sqrt((R - r_minus) * (R - r_plus))
    E2 = K / (2.0 * R) * (R - 1.0 + root)
    E1 = p.delta_M * K / (p.eta * R * (1.0 - p.nu) * p.nu_E) / E2
    return E1, E2


def jacobian_at(s, p: BioParams, K: float) -> np.ndarray:
    """Analytic Jacobian of the 3-state or (u = 0) 4-state right-hand side."""
    s = np.asarray(s, dtype=float)
    if s.shape == (3,):
        E, F, M = s
        Ms = 0.0
    elif s.shape == (4,):
        E, F, M, Ms = s
    else:
        raise ValueError(f"state must have 3 or 4 components, got shape {s.shape}")
    q = 1.0 + p.eta * (M + p.gamma * Ms)
    allee = p.eta * M / q
    logistic = 1.0 - E / K
    dallee_dM = p.eta * (1.0 + p.eta * p.gamma * Ms) / q**2
    dallee_dMs = -(p.eta**2) * p.gamma * M / q**2
    J = np.zeros((s.size, s.size))
    J[0, 0] = -p.beta_E * F * allee / K - (p.nu_E + p.delta_E)
    J[0, 1] = p.beta_E * logistic * allee
    J[0, 2] = p.beta_E * F * logistic * dallee_dM
    J[1, 0] = p.nu * p.nu_E
    J[1, 1] = -p.delta_F
    J[2, 0] = (1.0 - p.nu) * p.nu_E
    J[2, 2] = -p.delta_M
    if s.size == 4:
        J[0, 3] = p.beta_E * F * logistic * dallee_dMs
        J[3, 3] = -p.delta_s
    return J


def routh_coefficients(E: float, p: BioParams, K: float) -> tuple[float, float, float]:
    """Coefficients of ``lambda^3 + Q1 lambda^2 + Q2 lambda + Q3`` at ``X_E``.

    Valid only at a positive equilibrium abscissa, where the Jacobian entries
    have been simplified with the stationarity relations.
    """
    if not 0.0 < E < K:
        raise ParameterError(f"need 0 < E < K, got E = {E}, K = {K}")
    R = basic_offspring_number(p)
    a = p.nu_E + p.delta_E
    g = p.eta * R * (1.0 - p.nu) * p.nu_E
    lg = 1.0 - E / K
    Q1 = p.delta_M + p.delta_F + a / lg
    Q2 = a * (g * (p.delta_M * E + p.delta_F * E**2 / K) - p.delta_M**2) / (g * E * lg) + (
        p.delta_M * p.delta_F
    )
    Q3 = a * p.delta_M * p.delta_F * (g * E**2 / K - p.delta_M) / (g * E * lg)
    return Q1, Q2, Q3


def routh_stable(Q: tuple[float, float, float]) -> bool:
    Q1, Q2, Q3 = Q
    return Q1 > 0 and Q3 > 0 and Q1 * Q2 - Q3 > 0


def classify_stability(eq: Equilibrium, p: BioParams, K: float) -> Stability:
    if eq.kind is EquilibriumKind.EXTINCTION:
        # J(0) is lower triangular with strictly negative diagonal
        return Stability.STABLE
    if eq.kind is EquilibriumKind.E0_CRITICAL:
        return Stability.UNSTABLE
    Q = routh_coefficients(float(eq.state[0]), p, K)
    return Stability.STABLE if routh_stable(Q) else Stability.UNSTABLE


def equilibria(p: BioParams, K: float) -> list[Equilibrium]:
    """All nonnegative equilibria of the life-cycle model, extinction first."""
    R = basic_offspring_number(p)
    _, r_plus = threshold_rates(p, K)
    found = [Equilibrium(np.zeros(3), EquilibriumKind.EXTINCTION, Stability.STABLE)]
    if abs(R - r_plus) <= CRITICAL_RTOL * r_plus:
        E0 = K / 2.0 * (1.0 - 1.0 / R)
        found.append(
            Equilibrium(equilibrium_state(E0, p), EquilibriumKind.E0_CRITICAL, Stability.UNSTABLE)
        )
    elif R > r_plus:
        E1, E2 = positive_roots(p, K)
        for E, kind in ((E1, EquilibriumKind.E1_LOW), (E2, EquilibriumKind.E2_HIGH)):
            eq = Equilibrium(equilibrium_state(E, p), kind, Stability.DEGENERATE)
            eq.routh = routh_coefficients(E, p, K)
            eq.stability = classify_stability(eq, p, K)
            found.append(eq)
    return found


def lyapunov_V_ode(s, p: BioParams) -> float:
    """Linear Lyapunov function of the life-cycle model, defined for R < 1."""
    R = basic_offspring_number(p)
    if R >= 1.0:
        raise ParameterError(f"V requires R < 1, got R = {R}")
    E, F, M = s[0], s[1], s[2]
    return (1.0 + R) / (1.0 - R) * E + 2.0 * p.beta_E / (p.delta_F * (1.0 - R)) * F + M


def _rk4(rhs, y, h):
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * h * k1)
    k3 = rhs(y + 0.5 * h * k2)
    k4 = rhs(y + h * k3)
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(
    rhs: Callable[[np.ndarray], np.ndarray], s0, dt: float, T: float
) -> tuple[np.ndarray, np.ndarray]:
    """Classical RK4 sampled every ``dt`` days up to ``T``.

    A step that would produce a negative component is rejected and retried
    with half the step; the sample interval is then covered by several
    substeps. Returns ``(times, states)`` with ``states[k]`` at ``times[k]``.

    Raises
    ------
    IntegrationError
        If a step had to be halved more than 40 times.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if T < 0:
        raise ValueError(f"T must be >= 0, got {T}")
    y = np.asarray(s0, dtype=float).copy()
    if np.any(y < 0):
        raise ValueError("initial state must be nonnegative")
    n = int(math.floor(T / dt + 1e-9))
    times = dt * np.arange(n + 1)
    out = np.empty((n + 1, y.size))
    out[0] = y
    for k in range(n):
        remaining = dt
        h = dt
        halvings = 0
        while remaining > 0:
            h = min(h, remaining)
            trial = _rk4(rhs, y, h)
            if np.all(trial >= 0) and np.all(np.isfinite(trial)):
                y = trial
                remaining -= h
                if remaining <= 1e-15 * dt:
                    remaining = 0.0
                continue
            halvings += 1
            if halvings > MAX_HALVINGS:
                raise IntegrationError(
                    f"step size underflow at t = {times[k] + dt - remaining:.6g}: "
                    f"state {y.tolist()}, trial {trial.tolist()}"
                )
            h *= 0.5
        out[k + 1] = y
    return times, out
