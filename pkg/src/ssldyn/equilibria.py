"""Closed-form equilibria for scalar data (m = 1).

With rho = [xx], tau = [yx] scalars, every nontrivial SG/EMA equilibrium has
B = eps * a a^T / |a| with eps = sign(tau), c = a, and a radius |a| solving

    rho |a|^2 - tau eps |a| + lam = 0.

For discriminant tau^2 - 4 rho lam > 0 this gives two circles of radii
r <= R; large lam leaves only the origin.  A nontrivial equilibrium is also
a critical point of the shared-encoder objective only on the measure-zero
data set where rho delta^2 = tau^2 (delta - lam), delta = [yy].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import ModelState

_CIRCEQ_TOL = 1e-12


@dataclass(frozen=True)
class ScalarMoments:
    """m = 1 moments plus the ridge weight used by the equilibrium formulas."""

    rho: float
    tau: float
    lam: float
    delta: float | None = None

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError(f"rho must be >= 0, got {self.rho}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.delta is not None and self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")


@dataclass(frozen=True)
class EquilibriumSet:
    """Radii of the equilibrium circles, if any; the origin always belongs."""

    discriminant: float
    radii: tuple[float, ...]
    epsilon: float
    includes_origin: bool = True
    source: ScalarMoments | None = None

    def to_json_dict(self) -> dict:
        return {
            "discriminant": self.discriminant,
            "radii": list(self.radii),
            "epsilon": self.epsilon,
            "includes_origin": self.includes_origin,
        }


class Limit(Enum):
    ZERO = "zero"
    INNER_CIRCLE = "inner_circle"
    OUTER_CIRCLE = "outer_circle"
    NOT_CONVERGED = "not_converged"


def _circeq_residual(rho: float, tau: float, lam: float, s: float) -> float:
    return rho * s * s - abs(tau) * s + lam


def solve_equilibria(sm: ScalarMoments) -> EquilibriumSet:
    """All equilibrium radii for the given scalar moments.

    Only strictly positive radii are reported; the degenerate rho = 0 case
    solves the remaining linear equation directly instead of dividing by
    2 rho.
    """
    rho, tau, lam = sm.rho, sm.tau, sm.lam
    disc = tau * tau - 4.0 * rho * lam
    eps = math.copysign(1.0, tau) if tau != 0.0 else 0.0
    radii: list[float] = []
    if rho > 0.0 and tau != 0.0 and disc > 0.0:
        big = (abs(tau) + math.sqrt(disc)) / (2.0 * rho)
        small = lam / (rho * big)  # stable form of (|tau| - sqrt(disc)) / (2 rho)
        radii = [s for s in (small, big) if s > 0.0]
    elif rho > 0.0 and tau != 0.0 and disc == 0.0:
        s = abs(tau) / (2.0 * rho)
        if s > 0.0:
            radii = [s]
    elif rho == 0.0 and tau != 0.0 and lam > 0.0:
        radii = [lam / abs(tau)]
    for s in radii:
        res = abs(_circeq_residual(rho, tau, lam, s))
        scale = max(1.0, rho * s * s, abs(tau) * s)
        if res > _CIRCEQ_TOL * scale:
            raise AssertionError(f"radius {s} violates the circle equation by {res:.3e}")
    if not radii:
        eps = 0.0
    return EquilibriumSet(disc, tuple(sorted(radii)), eps, True, sm)


def materialize_equilibrium(eqset: EquilibriumSet, radius: float, direction) -> ModelState:
    """Model state at the equilibrium of the given radius and direction.

    a = radius * u, B = eps * radius * u u^T, c = a; radius 0 gives the
    origin.  The direction must be a unit vector.
    """
    u = np.asarray(direction, dtype=np.float64).ravel()
    n = u.shape[0]
    if abs(np.linalg.norm(u) - 1.0) > 1e-10:
        raise ValueError("direction must be a unit vector")
    if radius != 0.0 and not any(abs(radius - s) <= 1e-12 * max(1.0, s) for s in eqset.radii):
        raise ValueError(f"radius {radius} not in equilibrium set {eqset.radii}")
    a = radius * u.reshape(n, 1)
    b = eqset.epsilon * radius * np.outer(u, u)
    return ModelState(a, b, a)


def classify_limit(final: ModelState, eqset: EquilibriumSet) -> Limit:
    """Classify a final state by |a| against the circle radii.

    The convergence threshold is 1e-5 R; when the set has fewer than two
    radii only Zero and NotConverged are possible and the threshold falls
    back to 1e-5 max(1, |tau| / (2 rho)).
    """
    anorm = float(np.linalg.norm(final.A))
    if len(eqset.radii) == 2:
        small, big = eqset.radii
        thr = 1e-5 * big
        if anorm <= thr:
            return Limit.ZERO
        if abs(anorm - small) <= thr:
            return Limit.INNER_CIRCLE
        if abs(anorm - big) <= thr:
            return Limit.OUTER_CIRCLE
        return Limit.NOT_CONVERGED
    scale = 1.0
    if eqset.source is not None and eqset.source.rho > 0.0:
        scale = max(1.0, abs(eqset.source.tau) / (2.0 * eqset.source.rho))
    if anorm <= 1e-5 * scale:
        return Limit.ZERO
    return Limit.NOT_CONVERGED


def critical_coincidence(sm: ScalarMoments) -> bool:
    """Whether a circle equilibrium can be a critical point of E.

    Requires delta; true only on the exact data manifold
    rho delta^2 = tau^2 (delta - lam), and never when lam > delta.
    """
    if sm.delta is None:
        raise ValueError("delta missing: the coincidence test needs [yy]")
    if sm.lam > sm.delta:
        return False
    lhs = sm.rho * sm.delta * sm.delta
    rhs = sm.tau * sm.tau * (sm.delta - sm.lam)
    return abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs), abs(rhs))
