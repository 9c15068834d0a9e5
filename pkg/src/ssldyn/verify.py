"""Built-in invariant suite behind the `verify` subcommand.

A fast subset of the full test suite: finite-difference gradient checks,
the conservation law along SG/EMA flows, the collapse bound under the full
gradient flow, equilibrium residuals, the closed-form origin spectrum, and
the integrability defect.  Prints one PASS/FAIL line per check.
"""

from __future__ import annotations

import numpy as np

from .analysis import balance_residual, collapse_bound_check, integrability_defect, linearize
from .dynamics import AlgoKind, flow_rhs_norm, integrate_flow
from .equilibria import ScalarMoments, materialize_equilibrium, solve_equilibria
from .gradients import eval_objectives, grad_E, grad_P, grad_Q
from .model import (
    ConstantAlpha,
    DataMoments,
    Dims,
    HyperParams,
    ModelState,
    random_state,
    spawn_rng,
)


def _random_moments(rng, m: int) -> DataMoments:
    """Realizable moments: exact second moments of a joint Gaussian pair."""
    g = rng.standard_normal((2 * m, 2 * m))
    cov = g @ g.T + 0.1 * np.eye(2 * m)
    return DataMoments(cov[:m, :m], cov[m:, :m], cov[m:, m:])


def _fd_gradient(f, x0: np.ndarray, h: float = 1e-5) -> np.ndarray:
    g = np.zeros_like(x0)
    flat = g.ravel()
    for k in range(x0.size):
        step = np.zeros(x0.size)
        step[k] = h
        step = step.reshape(x0.shape)
        flat[k] = (f(x0 + step) - f(x0 - step)) / (2 * h)
    return g


def _rel_err(got: np.ndarray, want: np.ndarray) -> float:
    return float(np.linalg.norm(got - want) / max(np.linalg.norm(want), 1e-9))


def check_gradients(seed: int = 3, instances: int = 5) -> tuple[bool, str]:
    rng = spawn_rng(seed, 1)
    worst = 0.0
    for k in range(instances):
        n, m = 3, 2
        mom = _random_moments(rng, m)
        state = ModelState(
            rng.standard_normal((n, m)), rng.standard_normal((n, n)), rng.standard_normal((n, m))
        )
        lam = 0.3

        def f_of_A(a):
            _, fb = eval_objectives(ModelState(a, state.B, state.C), mom, lam)
            return fb

        def f_of_B(b):
            _, fb = eval_objectives(ModelState(state.A, b, state.C), mom, lam)
            return fb

        def e_of_A(a):
            eb, _ = eval_objectives(ModelState(a, state.B, state.C), mom, lam)
            return eb

        def e_of_B(b):
            eb, _ = eval_objectives(ModelState(state.A, b, state.C), mom, lam)
            return eb

        ge = grad_E(state, mom, lam)
        worst = max(
            worst,
            _rel_err(grad_P(state, mom, lam), _fd_gradient(f_of_A, state.A)),
            _rel_err(grad_Q(state, mom, lam), _fd_gradient(f_of_B, state.B)),
            _rel_err(ge.dA, _fd_gradient(e_of_A, state.A)),
            _rel_err(ge.dB, _fd_gradient(e_of_B, state.B)),
        )
    return worst <= 1e-6, f"max rel err {worst:.2e} (tol 1e-6)"


def check_conservation(seed: int = 4) -> tuple[bool, str]:
    rng = spawn_rng(seed, 2)
    worst = 0.0
    for algo in (AlgoKind.SG, AlgoKind.EMA):
        mom = _random_moments(rng, 2)
        state = random_state(Dims(3, 2), int(rng.integers(1 << 31)))
        lam = 0.2
        hyper = HyperParams(lam=lam, alpha=ConstantAlpha(0.9), dt=1e-3)
        traj = integrate_flow(algo, state, mom, hyper, t_end=5.0, stride=500)
        k0 = state.A @ state.A.T - state.B.T @ state.B
        scale = max(np.linalg.norm(k0), 1e-9)
        for t, s in zip(traj.times, traj.states):
            kt = np.exp(2 * lam * t) * (s.A @ s.A.T - s.B.T @ s.B)
            worst = max(worst, np.linalg.norm(kt - k0) / scale)
    return worst <= 1e-5, f"max relative drift {worst:.2e} (tol 1e-5)"


def check_collapse_bound(seed: int = 5) -> tuple[bool, str]:
    rng = spawn_rng(seed, 3)
    for k, lam in enumerate((0.01, 0.1, 1.0)):
        mom = _random_moments(rng, 2)
        state = random_state(Dims(3, 2), int(rng.integers(1 << 31)))
        hyper = HyperParams(lam=lam, dt=0.01)
        traj = integrate_flow(AlgoKind.GDFLOW, state, mom, hyper, t_end=10.0, stride=100)
        if traj.diverged or not collapse_bound_check(traj, lam):
            return False, f"bound violated for lam={lam}"
    return True, "norm decay bound held for lam in {0.01, 0.1, 1}"


def check_equilibria() -> tuple[bool, str]:
    sm = ScalarMoments(3.0, 2.0, 0.1)
    eqset = solve_equilibria(sm)
    if len(eqset.radii) != 2:
        return False, "expected two radii"
    mom = DataMoments.from_scalars(sm.rho, sm.tau)
    worst = 0.0
    direction = np.array([1.0, 0.0])
    for radius in eqset.radii:
        st = materialize_equilibrium(eqset, radius, direction)
        worst = max(
            worst,
            flow_rhs_norm(AlgoKind.SG, st, mom, sm.lam),
            flow_rhs_norm(AlgoKind.EMA, st, mom, sm.lam, alpha=0.9),
            balance_residual(st),
        )
    return worst <= 1e-10, f"max equilibrium residual {worst:.2e} (tol 1e-10)"


def check_origin_spectrum() -> tuple[bool, str]:
    lam, alpha = 0.1, 0.99
    n, m = 2, 1
    origin = ModelState(np.zeros((n, m)), np.zeros((n, n)), np.zeros((n, m)))
    mom = DataMoments.from_scalars(3.0, 2.0)
    hyper = HyperParams(lam=lam, alpha=ConstantAlpha(alpha), dt=0.05)
    rep = linearize(AlgoKind.EMA, origin, mom, hyper)
    expected = np.sort(np.concatenate([np.full(n * m + n * n, -lam), np.full(n * m, -(1 - alpha))]))
    got = np.sort(rep.spectrum.real)
    err = float(np.max(np.abs(got - expected)) + np.max(np.abs(rep.spectrum.imag)))
    return err <= 1e-8, f"origin spectrum error {err:.2e} (tol 1e-8)"


def check_integrability() -> tuple[bool, str]:
    rng = spawn_rng(6, 4)
    mom = _random_moments(rng, 2)
    zero = ModelState(np.zeros((3, 2)), np.zeros((3, 3)), np.zeros((3, 2)))
    if integrability_defect(zero, mom) != 0.0:
        return False, "defect nonzero at A=0"
    state = random_state(Dims(3, 2), 11)
    decor = DataMoments(mom.Sxx, np.zeros((2, 2)), mom.Syy)
    if integrability_defect(state, decor) != 0.0:
        return False, "defect nonzero for Syx=0"
    if integrability_defect(state, mom) <= 0.0:
        return False, "defect vanished on generic data"
    return True, "defect zero exactly when A=0 or Syx=0"


CHECKS = [
    ("gradient finite differences", check_gradients),
    ("flow conservation law", check_conservation),
    ("gradient-flow collapse bound", check_collapse_bound),
    ("scalar-case equilibrium residuals", check_equilibria),
    ("origin spectrum closed form", check_origin_spectrum),
    ("integrability defect", check_integrability),
]


def run_verification(out=print) -> int:
    """Run every check; returns the number of failures."""
    failures = 0
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        if ok:
            out(f"PASS {name}: {detail}")
        else:
            failures += 1
            out(f"FAIL {name}: {detail}")
    return failures
