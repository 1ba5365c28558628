"""Finite-difference discretization of the reaction-diffusion models.

Fields are ``(nx, ny)`` float arrays on a cell-centered grid, ``f[i, j]``
being the density at ``x = (i + 0.5) dx``, ``y = (j + 0.5) dy``. The E
equation has no diffusion; F, M and Ms diffuse with zero normal flux.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .control import ControlEvalContext, feedback_u
from .params import BioParams, ParameterError, basic_offspring_number

FIELD_NAMES = ("E", "F", "M", "Ms")


class NumericalAbort(RuntimeError):
    """A field went negative or non-finite during time stepping."""


@dataclass(frozen=True)
class GridSpec:
    nx: int = 50
    ny: int = 50
    lx: float = 5.0
    ly: float = 5.0

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny or self.nx < 1 or self.ny < 1:
            raise ParameterError(f"grid cell counts must be positive integers, got {self.nx}x{self.ny}")
        if not (self.lx > 0 and self.ly > 0):
            raise ParameterError(f"domain extents must be > 0, got {self.lx}x{self.ly}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid of cell centers, each of shape ``(nx, ny)``."""
        x = (np.arange(self.nx) + 0.5) * self.dx
        y = (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x, y, indexing="ij")


@dataclass(frozen=True)
class KFieldParams:
    """Constant background plus Gaussian breeding sites.

    ``sigma`` are squared-width scales: each bump is
    ``lam * exp(-((x-mu)^2 + (y-xi)^2) / sigma)``.
    """

    zeta: float = 500.0
    lam: tuple[float, ...] = (2e5, 1.5e5, 1e5)
    mu: tuple[float, ...] = (2.5, 1.5, 4.0)
    xi: tuple[float, ...] = (4.0, 1.5, 1.5)
    sigma: tuple[float, ...] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        for name in ("lam", "mu", "xi", "sigma"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if not len(self.lam) == len(self.mu) == len(self.xi) == len(self.sigma):
            raise ParameterError("lam, mu, xi, sigma must have the same length")
        if not self.zeta > 0:
            raise ParameterError(f"zeta must be > 0, got {self.zeta}")
        if any(v < 0 for v in self.lam):
            raise ParameterError("amplitudes lam must be >= 0")
        if any(v <= 0 for v in self.sigma):
            raise ParameterError("width scales sigma must be > 0")

    @classmethod
    def uniform(cls, K: float) -> "KFieldParams":
        return cls(zeta=K, lam=(), mu=(), xi=(), sigma=())


def carrying_capacity_field(g: GridSpec, kp: KFieldParams) -> np.ndarray:
    X, Y = g.centers()
    K = np.full(g.shape, kp.zeta)
    for lam, mu, xi, sig in zip(kp.lam, kp.mu, kp.xi, kp.sigma):
        K += lam * np.exp(-((X - mu) ** 2 + (Y - xi) ** 2) / sig)
    return K


def laplacian_neumann(f: np.ndarray, g: GridSpec) -> np.ndarray:
    """5-point Laplacian with mirrored ghost cells (zero normal flux).

    The boundary fluxes vanish exactly, so the discrete integral of the
    result telescopes to zero.
    """
    p = np.pad(f, 1, mode="edge")
    c = p[1:-1, 1:-1]
    return (p[2:, 1:-1] - 2.0 * c + p[:-2, 1:-1]) / g.dx**2 + (
        p[1:-1, 2:] - 2.0 * c + p[1:-1, :-2]
    ) / g.dy**2


def diffusion_dt_bound(p: BioParams, g: GridSpec) -> float:
    d_max = max(p.d1, p.d2, p.d3)
    if d_max == 0:
        return math.inf
    return 1.0 / (2.0 * d_max * (1.0 / g.dx**2 + 1.0 / g.dy**2))


def cfl_dt(p: BioParams, g: GridSpec, reaction_bound: float, safety: float = 0.9) -> float:
    """Explicit-Euler step keeping every update a nonnegative combination.

    Returns ``inf`` when neither diffusion nor reaction limits the step.
    """
    r = 1.0 / reaction_bound if reaction_bound > 0 else math.inf
    return safety * min(diffusion_dt_bound(p, g), r)


def equilibrium_initial_condition(p: BioParams, K: np.ndarray):
    """Pointwise steady state of the diffusion-free model without Allee factor."""
    R = basic_offspring_number(p)
    if R <= 1.0:
        raise ParameterError(f"equilibrium initial condition needs R > 1, got R = {R}")
    E0 = (1.0 - 1.0 / R) * K
    F0 = p.nu * p.nu_E / p.delta_F * E0
    M0 = (1.0 - p.nu) * p.nu_E / p.delta_M * E0
    return E0, F0, M0


@dataclass
class PdeState:
    E: np.ndarray
    F: np.ndarray
    M: np.ndarray
    Ms: np.ndarray
    t: float = 0.0

    def fields(self) -> dict[str, np.ndarray]:
        return {"E": self.E, "F": self.F, "M": self.M, "Ms": self.Ms}

    def validate(self) -> None:
        shape = self.E.shape
        for name, f in self.fields().items():
            if f.shape != shape:
                raise ValueError(f"field {name} has shape {f.shape}, expected {shape}")
            if not np.all(np.isfinite(f)):
                raise ValueError(f"field {name} has non-finite entries")
            if np.any(f < 0):
                raise ValueError(f"field {name} has negative entries")

    def copy(self) -> "PdeState":
        return PdeState(self.E.copy(), self.F.copy(), self.M.copy(), self.Ms.copy(), self.t)


@dataclass
class Controller:
    """Feedback context plus the 0/1 mask of cells where releases happen."""

    ctx: ControlEvalContext
    mask: np.ndarray = field(repr=False)

    def release(self, s: PdeState) -> np.ndarray:
        return feedback_u(s.F, s.M, s.Ms, self.ctx) * self.mask


def mating_factor(s: PdeState, p: BioParams) -> np.ndarray:
    return p.eta * s.M / (1.0 + p.eta * (s.M + p.gamma * s.Ms))


def reaction_loss_rate(s: PdeState, p: BioParams, K: np.ndarray) -> float:
    """Largest per-capita loss rate over all cells and equations."""
    e_loss = p.nu_E + p.delta_E + p.beta_E * s.F * mating_factor(s, p) / K
    return max(float(e_loss.max()) if e_loss.size else 0.0, p.delta_F, p.delta_M, p.delta_s)


def step(
    s: PdeState,
    p: BioParams,
    K: np.ndarray,
    g: GridSpec,
    dt: float,
    ctrl: Optional[Controller] = None,
    u: Optional[np.ndarray] = None,
    reactions: bool = True,
) -> PdeState:
    """One explicit Euler step of the (controlled) reaction-diffusion system.

    ``u`` may be passed when the release field was already evaluated on
    ``s``; otherwise it is computed from ``ctrl`` (or zero without control).
    ``reactions=False`` leaves only the diffusion terms (E is then frozen).

    Raises
    ------
    NumericalAbort
        If any updated entry is negative or non-finite.
    """
    if u is None:
        u = ctrl.release(s) if ctrl is not None else 0.0
    allee = mating_factor(s, p)
    rE = p.beta_E * s.F * (1.0 - s.E / K) * allee - (p.nu_E + p.delta_E) * s.E
    rF = p.nu * p.nu_E * s.E - p.delta_F * s.F
    rM = (1.0 - p.nu) * p.nu_E * s.E - p.delta_M * s.M
    rMs = u - p.delta_s * s.Ms
    if not reactions:
        rE = rF = rM = rMs = np.zeros_like(s.E)
    new = PdeState(
        E=s.E + dt * rE,
        F=s.F + dt * (rF + p.d1 * laplacian_neumann(s.F, g)),
        M=s.M + dt * (rM + p.d2 * laplacian_neumann(s.M, g)),
        Ms=s.Ms + dt * (rMs + p.d3 * laplacian_neumann(s.Ms, g)),
        t=s.t + dt,
    )
    _check_step(s, new, dt, {"E": rE, "F": rF, "M": rM, "Ms": rMs})
    return new


def _check_step(old: PdeState, new: PdeState, dt: float, reactions: dict) -> None:
    for name, f in new.fields().items():
        bad = ~np.isfinite(f) | (f < 0)
        if bad.any():
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            r = reactions[name]
            r_val = float(r[idx]) if np.ndim(r) else float(r)
            raise NumericalAbort(
                f"{name}{list(idx)} = {f[idx]!r} after step t={old.t:.6g} -> {new.t:.6g} "
                f"(dt={dt:.3g}): old value {getattr(old, name)[idx]!r}, reaction term {r_val!r}"
            )
