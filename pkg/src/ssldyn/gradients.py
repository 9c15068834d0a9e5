"""Closed-form gradient fields and objectives for the linear case.

With squared-error loss and ridge regularizer, the target-aware objective in
moment form is

    F(A, B, C) = 1/2 tr(A^T B^T B A Sxx) - tr(C^T B A Sxy)
                 + 1/2 tr(C^T C Syy) + lam/2 (|A|_F^2 + |B|_F^2),

and the shared-encoder objective is E(A, B) = F(A, B, A).  The proxy
gradients used by the stop-gradient and EMA procedures are

    P(A, B, C) = B^T R + lam A,     Q(A, B, C) = R A^T + lam B,

with prediction residual R(A, B, C) = B A Sxx - C Syx.  Every formula here
is checked against central finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import DataMoments, ModelState


class InconsistentMomentsError(ValueError):
    """The moment triple cannot come from any distribution of view pairs."""


@dataclass(frozen=True)
class GradPair:
    """Gradient of the shared-encoder objective with respect to (A, B)."""

    dA: np.ndarray
    dB: np.ndarray


def _check_shapes(state: ModelState, mom: DataMoments):
    if state.A.shape[1] != mom.m:
        raise ValueError(
            f"dimension mismatch: state has m={state.A.shape[1]}, moments have m={mom.m}"
        )


def residual_R(state: ModelState, mom: DataMoments) -> np.ndarray:
    """Prediction residual R = B A Sxx - C Syx (an n x m matrix)."""
    _check_shapes(state, mom)
    return state.B @ state.A @ mom.Sxx - state.C @ mom.Syx


def grad_P(state: ModelState, mom: DataMoments, lam: float) -> np.ndarray:
    """Encoder gradient of F at (A, B, C): B^T R + lam A."""
    _check_shapes(state, mom)
    return state.B.T @ residual_R(state, mom) + lam * state.A


def grad_Q(state: ModelState, mom: DataMoments, lam: float) -> np.ndarray:
    """Predictor gradient of F at (A, B, C): R A^T + lam B."""
    _check_shapes(state, mom)
    return residual_R(state, mom) @ state.A.T + lam * state.B


def grad_E(state: ModelState, mom: DataMoments, lam: float) -> GradPair:
    """Full gradient of E(A, B) = F(A, B, A); the C slot of state is ignored.

    The encoder gradient picks up a second branch from the target side:
    dA = B^T (B A Sxx - A Syx) - (B A Sxy - A Syy) + lam A, with Sxy = Syx^T.
    """
    _check_shapes(state, mom)
    A, B = state.A, state.B
    r = B @ A @ mom.Sxx - A @ mom.Syx
    s = B @ A @ mom.Sxy - A @ mom.Syy
    dA = B.T @ r - s + lam * A
    dB = r @ A.T + lam * B
    return GradPair(dA, dB)


def eval_objectives(state: ModelState, mom: DataMoments, lam: float) -> tuple[float, float]:
    """(E, F) evaluated in moment form.

    The data part equals 1/2 E|BAx - Cy|^2, which is nonnegative for any
    realizable moment triple; a value below -1e-9 means the supplied moments
    are not the second moments of any distribution and raises
    InconsistentMomentsError.
    """
    _check_shapes(state, mom)
    A, B, C = state.A, state.B, state.C
    BA = B @ A
    reg = 0.5 * lam * (np.sum(A * A) + np.sum(B * B))

    def data_part(target):
        val = (
            0.5 * np.trace(BA.T @ BA @ mom.Sxx)
            - np.trace(target.T @ BA @ mom.Sxy)
            + 0.5 * np.trace(target.T @ target @ mom.Syy)
        )
        if val < -1e-9:
            raise InconsistentMomentsError(
                f"inconsistent moments: quadratic form evaluated to {val}"
            )
        return val

    f_bar = data_part(C) + reg
    e_bar = data_part(A) + reg
    return float(e_bar), float(f_bar)
