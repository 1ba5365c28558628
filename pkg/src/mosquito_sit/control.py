"""Backstepping release law for sterile males, evaluated pointwise."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .params import BioParams, ControlParams, control_gain_psi

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ControlEvalContext:
    p: BioParams
    c: ControlParams
    kappa: float
    psi: float

    @classmethod
    def build(cls, p: BioParams, c: ControlParams) -> "ControlEvalContext":
        """Precompute ``kappa = 1/eta`` and the gain ``psi``.

        Raises ParameterError when R(theta) >= 1, where psi is undefined.
        """
        if p.delta_s < p.delta_M:
            log.warning(
                "delta_s = %g < delta_M = %g: release rate may be negative, clamping at 0",
                p.delta_s,
                p.delta_M,
            )
        return cls(p=p, c=c, kappa=1.0 / p.eta, psi=control_gain_psi(p, c))


def feedback_u(F, M, Ms, ctx: ControlEvalContext):
    """Release rate per km^2 per day for the wild/sterile densities given.

    Works elementwise on scalars or arrays. The only 0/0 point,
    ``3*theta*M + Ms = 0``, returns 0.
    """
    p, c = ctx.p, ctx.c
    th, g, kap = c.theta, p.gamma, ctx.kappa
    F = np.asarray(F, dtype=float)
    M = np.asarray(M, dtype=float)
    Ms = np.asarray(Ms, dtype=float)
    den = 3.0 * th * M + Ms
    safe = np.where(den > 0, den, 1.0)
    first = (
        F * ctx.psi * M * (th * M + Ms) ** 2
        / (c.alpha * (M + g * Ms + kap) * (kap + (1.0 + g * th) * M) * safe)
    )
    second = th * (p.delta_s - p.delta_M) * M * (th * M + 3.0 * Ms) / safe
    u = np.where(den > 0, first + second, 0.0)
    if p.delta_s < p.delta_M:
        u = np.maximum(u, 0.0)
    return u if u.ndim else float(u)


def growth_bound_check(u_val, E, F, M, Ms, C_u: float):
    """True where ``0 <= u <= C_u (1 + E + F + M + Ms)``."""
    if not C_u > 0:
        raise ValueError(f"C_u must be > 0, got {C_u}")
    u_val = np.asarray(u_val, dtype=float)
    ok = (u_val >= 0) & (u_val <= C_u * (1.0 + E + F + M + Ms))
    return ok if np.ndim(ok) else bool(ok)


def local_lipschitz_probe(states, others, ctx: ControlEvalContext) -> float:
    """Largest observed ratio of the feedback increment to the weighted state increment.

    ``states`` and ``others`` are ``(n, 4)`` arrays of ``(E, F, M, Ms)``.
    Pairs with a zero denominator contribute 0 (u does not depend on E).
    """
    a = np.atleast_2d(np.asarray(states, dtype=float))
    b = np.atleast_2d(np.asarray(others, dtype=float))
    du = np.abs(feedback_u(a[:, 1], a[:, 2], a[:, 3], ctx) - feedback_u(b[:, 1], b[:, 2], b[:, 3], ctx))
    dist = (
        np.abs(a[:, 0] - b[:, 0])
        + np.abs(a[:, 1] - b[:, 1])
        + (1.0 + a[:, 1] + b[:, 1]) * (np.abs(a[:, 2] - b[:, 2]) + np.abs(a[:, 3] - b[:, 3]))
    )
    ratio = np.divide(du, dist, out=np.zeros_like(du), where=dist > 0)
    return float(ratio.max()) if ratio.size else 0.0
