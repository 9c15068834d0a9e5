"""Discrete steppers and continuous flows for the three training procedures.

SG updates (A, B) with the proxy gradients evaluated at C = A and keeps the
target encoder identical to the online one.  EMA updates (A, B) with the
gradients at the old (A, B, C) and then moves C toward the new A by
exponential averaging.  GDFlow is plain gradient descent on the
shared-encoder objective E and ignores C entirely.

The continuous counterparts are

    dA/dt = -(B^T R + lam A),  dB/dt = -(R A^T + lam B),
    dC/dt = (1 - alpha) (A - C)          (EMA only; SG substitutes C = A),

integrated with a fixed-step classical Runge-Kutta scheme (or forward Euler
on request).  Time-varying alpha schedules are evaluated at the stage times.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .gradients import InconsistentMomentsError, eval_objectives, grad_E, grad_P, grad_Q
from .model import DataMoments, Dims, HyperParams, ModelState

DIVERGENCE_LIMIT = 1e12


class AlgoKind(Enum):
    SG = "sg"
    EMA = "ema"
    GDFLOW = "gdflow"


@dataclass(frozen=True)
class DiagRecord:
    """Per-snapshot diagnostics stored alongside each trajectory state."""

    E_bar: float
    F_bar: float
    balance_residual: float
    norm_A: float
    integ_defect: float


@dataclass
class Trajectory:
    """Time-indexed snapshots of a run plus derived diagnostics."""

    algo: AlgoKind
    times: list[float]
    states: list[ModelState]
    diagnostics: list[DiagRecord]
    diverged: bool = False

    def __post_init__(self):
        if len(self.states) != len(self.times) or len(self.diagnostics) != len(self.times):
            raise ValueError("times, states and diagnostics must have equal length")
        if any(t1 <= t0 for t0, t1 in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")

    @property
    def final_state(self) -> ModelState:
        return self.states[-1]


def _diag(state: ModelState, mom: DataMoments, lam: float) -> DiagRecord:
    try:
        e_bar, f_bar = eval_objectives(state, mom, lam)
    except InconsistentMomentsError:
        e_bar = f_bar = float("nan")
    bal = float(np.linalg.norm(state.B.T @ state.B - state.A @ state.A.T))
    defect = float(np.linalg.norm(state.A @ mom.Syx.T))
    return DiagRecord(e_bar, f_bar, bal, float(np.linalg.norm(state.A)), defect)


def _blown_up(*mats) -> bool:
    for mat in mats:
        if not np.isfinite(mat).all() or np.abs(mat).max() > DIVERGENCE_LIMIT:
            return True
    return False


def step_discrete(
    algo: AlgoKind,
    state: ModelState,
    mom: DataMoments,
    hyper: HyperParams,
    t: int,
    total_steps: int,
) -> ModelState:
    """One discrete update; gradients are always evaluated at the old state.

    For EMA the target update C <- alpha_t C + (1 - alpha_t) A uses the *new*
    A, with alpha_t read from the schedule at phase t / total_steps.
    """
    A, B, C = state.A, state.B, state.C
    if algo is AlgoKind.SG:
        at = ModelState(A, B, A)
        a_new = A - hyper.mu * grad_P(at, mom, hyper.lam)
        b_new = B - hyper.nu * grad_Q(at, mom, hyper.lam)
        return ModelState(a_new, b_new, a_new)
    if algo is AlgoKind.EMA:
        a_new = A - hyper.mu * grad_P(state, mom, hyper.lam)
        b_new = B - hyper.nu * grad_Q(state, mom, hyper.lam)
        phase = t / total_steps if total_steps > 0 else 0.0
        alpha_t = hyper.alpha.value_at(phase)
        c_new = alpha_t * C + (1.0 - alpha_t) * a_new
        return ModelState(a_new, b_new, c_new)
    if algo is AlgoKind.GDFLOW:
        g = grad_E(state, mom, hyper.lam)
        return ModelState(A - hyper.mu * g.dA, B - hyper.nu * g.dB, C)
    raise ValueError(f"unknown algorithm {algo}")


def run_discrete(
    algo: AlgoKind,
    state0: ModelState,
    mom: DataMoments,
    hyper: HyperParams,
    steps: int,
) -> tuple[ModelState, bool]:
    """Iterate step_discrete; returns (final state, diverged flag)."""
    state = state0
    for t in range(steps):
        nxt = step_discrete(algo, state, mom, hyper, t, steps)
        if _blown_up(nxt.A, nxt.B, nxt.C):
            return state, True
        state = nxt
    return state, False


def flow_rhs(
    algo: AlgoKind,
    state: ModelState,
    mom: DataMoments,
    lam: float,
    alpha: float = 1.0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Right-hand side (dA, dB, dC) of the continuous dynamics.

    SG ignores the C slot of the state (C = A is substituted) and returns
    dC = 0; GDFlow likewise returns dC = 0.
    """
    A, B = state.A, state.B
    if algo is AlgoKind.GDFLOW:
        g = grad_E(state, mom, lam)
        return -g.dA, -g.dB, np.zeros_like(state.C)
    C = A if algo is AlgoKind.SG else state.C
    r = B @ A @ mom.Sxx - C @ mom.Syx
    dA = -(B.T @ r + lam * A)
    dB = -(r @ A.T + lam * B)
    if algo is AlgoKind.EMA:
        dC = (1.0 - alpha) * (A - state.C)
    else:
        dC = np.zeros_like(state.C)
    return dA, dB, dC


def flow_rhs_norm(
    algo: AlgoKind,
    state: ModelState,
    mom: DataMoments,
    lam: float,
    alpha: float = 1.0,
) -> float:
    """Frobenius norm of the flow RHS over the algorithm's phase space."""
    dA, dB, dC = flow_rhs(algo, state, mom, lam, alpha)
    total = np.sum(dA * dA) + np.sum(dB * dB)
    if algo is AlgoKind.EMA:
        total += np.sum(dC * dC)
    return float(np.sqrt(total))


def integrate_flow(
    algo: AlgoKind,
    state0: ModelState,
    mom: DataMoments,
    hyper: HyperParams,
    t_end: float,
    stride: int = 1,
    scheme: str = "rk4",
) -> Trajectory:
    """Fixed-step integration of the continuous dynamics up to t_end.

    Snapshots are recorded at t=0, every `stride` steps, and at the final
    time.  If t_end is not a multiple of dt the last step is shortened.  A
    non-finite state or any coefficient above 1e12 marks the trajectory
    diverged and stops the integration at the last healthy state.
    """
    if t_end < 0:
        raise ValueError(f"t_end must be >= 0, got {t_end}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if scheme not in ("rk4", "euler"):
        raise ValueError(f"unknown scheme {scheme!r}")

    dt, lam = hyper.dt, hyper.lam
    ema = algo is AlgoKind.EMA
    A = state0.A.copy()
    B = state0.B.copy()
    C = A.copy() if algo is AlgoKind.SG else state0.C.copy()

    def alpha_at(t: float) -> float:
        return hyper.alpha.value_at(t / t_end) if t_end > 0 else hyper.alpha.value_at(0.0)

    def rhs(t, a, b, c):
        if algo is AlgoKind.GDFLOW:
            r = b @ a @ mom.Sxx - a @ mom.Syx
            s = b @ a @ mom.Sxy - a @ mom.Syy
            return -(b.T @ r - s + lam * a), -(r @ a.T + lam * b), None
        r = b @ a @ mom.Sxx - (a if algo is AlgoKind.SG else c) @ mom.Syx
        da = -(b.T @ r + lam * a)
        db = -(r @ a.T + lam * b)
        dc = (1.0 - alpha_at(t)) * (a - c) if ema else None
        return da, db, dc

    def snapshot(a, b, c):
        return ModelState(a, b, (a if algo is AlgoKind.SG else c))

    times = [0.0]
    states = [snapshot(A, B, C)]
    n_full = int(np.floor(t_end / dt + 1e-12))
    remainder = t_end - n_full * dt
    if remainder < 1e-12 * max(dt, 1.0):
        remainder = 0.0
    total_steps = n_full + (1 if remainder > 0.0 else 0)

    diverged = False
    t = 0.0
    for k in range(total_steps):
        h = dt if k < n_full else remainder
        if scheme == "euler":
            dA, dB, dC = rhs(t, A, B, C)
            A = A + h * dA
            B = B + h * dB
            if ema:
                C = C + h * dC
        else:
            def stage_c(k, w):
                return C + w * k[2] if ema else C

            k1 = rhs(t, A, B, C)
            k2 = rhs(t + h / 2, A + (h / 2) * k1[0], B + (h / 2) * k1[1], stage_c(k1, h / 2))
            k3 = rhs(t + h / 2, A + (h / 2) * k2[0], B + (h / 2) * k2[1], stage_c(k2, h / 2))
            k4 = rhs(t + h, A + h * k3[0], B + h * k3[1], stage_c(k3, h))
            A = A + (h / 6) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            B = B + (h / 6) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            if ema:
                C = C + (h / 6) * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        t += h
        if _blown_up(A, B, C):
            diverged = True
            break
        if (k + 1) % stride == 0 and k + 1 < total_steps:
            times.append(t)
            states.append(snapshot(A, B, C))
    if not diverged and total_steps > 0:
        times.append(t)
        states.append(snapshot(A, B, C))

    diags = [_diag(s, mom, lam) for s in states]
    return Trajectory(algo, times, states, diags, diverged)


def trajectory_header(dims: Dims) -> list[str]:
    n, m = dims.n, dims.m
    cols = ["t"]
    cols += [f"A_{i}{j}" for i in range(n) for j in range(m)]
    cols += [f"B_{i}{j}" for i in range(n) for j in range(n)]
    cols += [f"C_{i}{j}" for i in range(n) for j in range(m)]
    cols += ["E_bar", "F_bar", "balance_residual", "norm_A", "integ_defect"]
    return cols


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """One snapshot per row, coefficients in row-major order."""
    dims = traj.states[0].dims
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(trajectory_header(dims))
        for t, state, d in zip(traj.times, traj.states, traj.diagnostics):
            row = [t]
            row += list(state.A.ravel())
            row += list(state.B.ravel())
            row += list(state.C.ravel())
            row += [d.E_bar, d.F_bar, d.balance_residual, d.norm_A, d.integ_defect]
            writer.writerow(format(v, ".17g") for v in row)


def read_trajectory_csv(path) -> tuple[np.ndarray, list[ModelState], np.ndarray]:
    """Read back a trajectory CSV; returns (times, states, diagnostics array)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n_b = sum(1 for h in header if h.startswith("B_"))
        n_a = sum(1 for h in header if h.startswith("A_"))
        n = int(round(np.sqrt(n_b)))
        if n * n != n_b or n_a == 0 or n_a % n != 0:
            raise ValueError(f"malformed trajectory header: {header}")
        m = n_a // n
        dims = Dims(n, m)
        times, states, diags = [], [], []
        for row in reader:
            vals = [float(v) for v in row]
            times.append(vals[0])
            vec = np.array(vals[1 : 1 + 2 * n * m + n * n])
            states.append(ModelState.from_vector(vec, dims))
            diags.append(vals[1 + 2 * n * m + n * n :])
    return np.asarray(times), states, np.asarray(diags)
