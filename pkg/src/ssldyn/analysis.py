"""Equilibrium diagnostics and linear stability machinery.

Linearizing the SG/EMA flow at an equilibrium (A, B, C) sends a perturbation
(delta, eps, phi) to

    d(delta)/dt = -(B^T ((eps A + B delta) Sxx - phi Syx) + eps^T R + lam delta)
    d(eps)/dt   = -(((eps A + B delta) Sxx - phi Syx) A^T + R delta^T + lam eps)
    d(phi)/dt   = (1 - alpha) (delta - phi)

with R the residual at the equilibrium; SG substitutes phi = delta and drops
the third block.  The Jacobian is assembled column by column from canonical
basis perturbations and every call is validated against central finite
differences of the nonlinear flow before its spectrum is trusted.

For data dimension one the nontrivial equilibria form spheres, so the
spectrum always contains neutral directions tangent to the equilibrium set;
stability there is reported modulo the manifold by excluding eigenvectors
aligned with the analytic tangent space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .dynamics import AlgoKind, Trajectory, flow_rhs, integrate_flow
from .gradients import grad_P, grad_Q, residual_R
from .model import ConstantAlpha, DataMoments, HyperParams, ModelState, spawn_rng

EQUILIBRIUM_TOL = 1e-8
TANGENT_COSINE = 0.99


class NotEquilibriumError(ValueError):
    """The supplied state does not satisfy the equilibrium conditions."""


@dataclass(frozen=True)
class EmpiricalDecay:
    perturbation_size: float
    t_probe: float
    distance_after: float


@dataclass(frozen=True)
class StabilityReport:
    """Spectrum of the linearized flow at an equilibrium.

    When the equilibrium lies on a circle of equilibria (m = 1, nonzero
    radius), eigenvalues whose eigenvectors align with the tangent space of
    the circle are excluded from max_real_part and modulo_manifold is True.
    """

    spectrum: np.ndarray
    max_real_part: float
    method: str
    modulo_manifold: bool
    n_tangent_excluded: int = 0
    empirical_decay: EmpiricalDecay | None = None

    def to_json_dict(self) -> dict:
        out = {
            "spectrum": [{"re": float(z.real), "im": float(z.imag)} for z in self.spectrum],
            "max_real_part": self.max_real_part,
            "method": self.method,
            "modulo_manifold": self.modulo_manifold,
        }
        if self.empirical_decay is not None:
            out["empirical_decay"] = {
                "perturbation_size": self.empirical_decay.perturbation_size,
                "t_probe": self.empirical_decay.t_probe,
                "distance_after": self.empirical_decay.distance_after,
            }
        return out


def integrability_defect(state: ModelState, mom: DataMoments) -> float:
    """Frobenius norm of A [xy^T], the cross-derivative mismatch scale.

    The SG/EMA vector fields are gradients of some function only if this
    vanishes, which happens exactly when A = 0 or Syx = 0; the mismatch
    matrix is block diagonal with every block equal to Syx A^T.
    """
    return float(np.linalg.norm(state.A @ mom.Syx.T))


def balance_residual(state: ModelState) -> float:
    """|B^T B - A A^T|_F, which vanishes at SG/EMA limit points."""
    return float(np.linalg.norm(state.B.T @ state.B - state.A @ state.A.T))


def _require_equilibrium(algo: AlgoKind, eq: ModelState, mom: DataMoments, hyper: HyperParams):
    state = ModelState(eq.A, eq.B, eq.A) if algo is AlgoKind.SG else eq
    p = float(np.linalg.norm(grad_P(state, mom, hyper.lam)))
    q = float(np.linalg.norm(grad_Q(state, mom, hyper.lam)))
    if p > EQUILIBRIUM_TOL or q > EQUILIBRIUM_TOL:
        raise NotEquilibriumError(f"not an equilibrium: |P|={p:.3e}, |Q|={q:.3e}")
    if algo is AlgoKind.EMA:
        gap = float(np.linalg.norm(eq.A - eq.C))
        if gap > EQUILIBRIUM_TOL:
            raise NotEquilibriumError(f"not an equilibrium: |A - C|={gap:.3e}")
    return state


def _constant_alpha(hyper: HyperParams) -> float:
    if not isinstance(hyper.alpha, ConstantAlpha):
        raise ValueError("stability analysis requires a constant alpha schedule")
    if hyper.alpha.value == 1.0:
        raise ValueError("alpha = 1 freezes the target encoder; no meaningful phi block")
    return hyper.alpha.value


def _flatten_blocks(*mats) -> np.ndarray:
    return np.concatenate([m.ravel() for m in mats])


def _circle_tangent_basis(algo: AlgoKind, eq: ModelState) -> np.ndarray | None:
    """Orthonormal basis of the equilibrium-circle tangent space, or None.

    At a = rad*u, B = eps*rad*u u^T, c = a, moving u along the unit sphere
    traces the equilibrium set; differentiating in a direction w ⟂ u gives
    the tangent (rad*w, eps*rad*(w u^T + u w^T), rad*w).
    """
    n, m = eq.A.shape
    if m != 1:
        return None
    a = eq.A[:, 0]
    rad = float(np.linalg.norm(a))
    if rad <= EQUILIBRIUM_TOL:
        return None
    u = a / rad
    eps_sign = 1.0 if float(u @ eq.B @ u) >= 0 else -1.0
    # orthonormal complement of u
    basis = np.linalg.qr(np.column_stack([u, np.eye(n)]))[0][:, 1:n]
    cols = []
    for j in range(n - 1):
        w = basis[:, j]
        d_a = rad * w.reshape(n, 1)
        d_b = eps_sign * rad * (np.outer(w, u) + np.outer(u, w))
        if algo is AlgoKind.EMA:
            cols.append(_flatten_blocks(d_a, d_b, d_a))
        else:
            cols.append(_flatten_blocks(d_a, d_b))
    t = np.column_stack(cols)
    return np.linalg.qr(t)[0]


def linearize(
    algo: AlgoKind,
    eq: ModelState,
    mom: DataMoments,
    hyper: HyperParams,
) -> StabilityReport:
    """Spectrum of the flow linearized at an equilibrium.

    The Jacobian acts on (delta, eps) for SG and (delta, eps, phi) for EMA,
    flattened row-major.  Eigenvalues come from the dense nonsymmetric
    LAPACK solver (Hessenberg reduction followed by shifted QR); each call
    is cross-checked by matching J v against a central finite difference of
    the nonlinear flow for 20 random directions.
    """
    if algo not in (AlgoKind.SG, AlgoKind.EMA):
        raise ValueError("linearize supports SG and EMA only")
    n, m = eq.A.shape
    if n <= m:
        raise ValueError("stability analysis requires n > m")
    state = _require_equilibrium(algo, eq, mom, hyper)
    alpha = _constant_alpha(hyper) if algo is AlgoKind.EMA else 1.0

    A, B = state.A, state.B
    Sxx, Syx = mom.Sxx, mom.Syx
    lam = hyper.lam
    R = residual_R(state, mom)
    ema = algo is AlgoKind.EMA

    def jmap(delta, eps, phi=None):
        target = phi if ema else delta
        core = (eps @ A + B @ delta) @ Sxx - target @ Syx
        d_delta = -(B.T @ core + eps.T @ R + lam * delta)
        d_eps = -(core @ A.T + R @ delta.T + lam * eps)
        if ema:
            return d_delta, d_eps, (1.0 - alpha) * (delta - phi)
        return d_delta, d_eps

    dim = n * m + n * n + (n * m if ema else 0)

    def unflatten(v):
        delta = v[: n * m].reshape(n, m)
        eps = v[n * m : n * m + n * n].reshape(n, n)
        if ema:
            return delta, eps, v[n * m + n * n :].reshape(n, m)
        return delta, eps

    jac = np.empty((dim, dim))
    for k in range(dim):
        e = np.zeros(dim)
        e[k] = 1.0
        jac[:, k] = _flatten_blocks(*jmap(*unflatten(e)))

    _validate_jacobian(jac, algo, state, mom, lam, alpha, dim, n, m, ema)

    eigvals, eigvecs = np.linalg.eig(jac)
    tangent = _circle_tangent_basis(algo, eq)
    if tangent is not None:
        proj = tangent.T @ eigvecs
        cosines = np.linalg.norm(proj, axis=0) / np.linalg.norm(eigvecs, axis=0)
        keep = cosines < TANGENT_COSINE
        excluded = int(np.sum(~keep))
        max_re = float(np.max(eigvals[keep].real)) if keep.any() else float("nan")
        return StabilityReport(eigvals, max_re, "lapack_geev_hessenberg_qr", True, excluded)
    return StabilityReport(
        eigvals, float(np.max(eigvals.real)), "lapack_geev_hessenberg_qr", False, 0
    )


def _validate_jacobian(jac, algo, state, mom, lam, alpha, dim, n, m, ema):
    """Assert J v matches a central finite difference of the flow RHS."""
    rng = spawn_rng(20, dim)
    h = 1e-5

    def rhs_flat(vec):
        delta = vec[: n * m].reshape(n, m)
        eps = vec[n * m : n * m + n * n].reshape(n, n)
        phi = vec[n * m + n * n :].reshape(n, m) if ema else delta
        pert = ModelState(state.A + delta, state.B + eps, state.C + phi)
        dA, dB, dC = flow_rhs(algo, pert, mom, lam, alpha)
        if ema:
            return _flatten_blocks(dA, dB, dC)
        return _flatten_blocks(dA, dB)

    for _ in range(20):
        v = rng.standard_normal(dim)
        v /= np.linalg.norm(v)
        jv = jac @ v
        fd = (rhs_flat(h * v) - rhs_flat(-h * v)) / (2 * h)
        err = np.linalg.norm(jv - fd) / max(np.linalg.norm(jv), 1e-9)
        if err > 1e-6:
            raise RuntimeError(f"Jacobian validation failed: rel err {err:.3e}")


def _distance_to_circle(algo: AlgoKind, state: ModelState, rad: float, eps_sign: float) -> float:
    """Distance from a state to the sphere of equilibria of given radius."""
    n = state.A.shape[0]
    a = state.A[:, 0]
    b = state.B
    c = state.C[:, 0]
    include_c = algo is AlgoKind.EMA

    def dist2(u):
        d = np.sum((a - rad * u) ** 2) + np.linalg.norm(b - eps_sign * rad * np.outer(u, u)) ** 2
        if include_c:
            d += np.sum((c - rad * u) ** 2)
        return d

    if n == 2:
        angles = np.linspace(0.0, 2 * np.pi, 1024, endpoint=False)
        vals = [dist2(np.array([np.cos(t), np.sin(t)])) for t in angles]
        k = int(np.argmin(vals))
        best = vals[k]
        try:
            refined = optimize.minimize_scalar(
                lambda t: dist2(np.array([np.cos(t), np.sin(t)])),
                bracket=(angles[k] - 0.01, angles[k], angles[k] + 0.01),
            )
            best = min(best, refined.fun)
        except ValueError:
            pass  # flat objective (state equidistant from the circle)
        return float(np.sqrt(best))

    starts = [a, a + c] if include_c else [a]
    rng = spawn_rng(7, n)
    starts += [rng.standard_normal(n) for _ in range(8)]
    best = np.inf
    for w0 in starts:
        norm = np.linalg.norm(w0)
        if norm < 1e-12:
            continue
        res = optimize.minimize(lambda w: dist2(w / np.linalg.norm(w)), w0 / norm, method="BFGS")
        best = min(best, res.fun)
    return float(np.sqrt(best))


def empirical_stability_probe(
    algo: AlgoKind,
    eq: ModelState,
    mom: DataMoments,
    hyper: HyperParams,
    perturbation_size: float,
    t_probe: float,
    seed: int = 0,
) -> float:
    """Perturb an equilibrium, integrate, and measure the remaining distance.

    The perturbation is a random direction of the given norm in the
    algorithm's phase space ((A, B) for SG with C tracking A, (A, B, C) for
    EMA).  For circle equilibria the returned value is the distance to the
    equilibrium *set*, since motion along the circle is neutral.
    """
    state = _require_equilibrium(algo, eq, mom, hyper)
    n, m = eq.A.shape
    rng = spawn_rng(seed, 101)
    if algo is AlgoKind.EMA:
        v = rng.standard_normal(2 * n * m + n * n)
        v *= perturbation_size / np.linalg.norm(v)
        da, db, dc = v[: n * m].reshape(n, m), v[n * m : n * m + n * n].reshape(n, n), v[n * m + n * n :].reshape(n, m)
        start = ModelState(eq.A + da, eq.B + db, eq.C + dc)
    else:
        v = rng.standard_normal(n * m + n * n)
        v *= perturbation_size / np.linalg.norm(v)
        da, db = v[: n * m].reshape(n, m), v[n * m :].reshape(n, n)
        start = ModelState(eq.A + da, eq.B + db, eq.A + da)

    traj = integrate_flow(algo, start, mom, hyper, t_probe, stride=max(1, int(t_probe / hyper.dt)))
    if traj.diverged:
        raise FloatingPointError("probe trajectory diverged")
    final = traj.final_state

    a = state.A[:, 0] if m == 1 else None
    rad = float(np.linalg.norm(state.A))
    if m == 1 and rad > EQUILIBRIUM_TOL:
        u = a / rad
        eps_sign = 1.0 if float(u @ state.B @ u) >= 0 else -1.0
        return _distance_to_circle(algo, final, rad, eps_sign)

    d = np.sum((final.A - state.A) ** 2) + np.linalg.norm(final.B - state.B) ** 2
    if algo is AlgoKind.EMA:
        d += np.sum((final.C - eq.C) ** 2)
    return float(np.sqrt(d))


def collapse_bound_check(traj: Trajectory, lam: float) -> bool:
    """True iff |A(t)|_F <= |A(0)|_F exp(-lam t) (1 + 1e-6) at every snapshot."""
    norm0 = traj.diagnostics[0].norm_A
    for t, d in zip(traj.times, traj.diagnostics):
        if d.norm_A > norm0 * np.exp(-lam * t) * (1.0 + 1e-6):
            return False
    return True
