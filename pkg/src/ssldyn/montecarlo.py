"""Paired Monte-Carlo trials over random scalar data, reproducing the
convergence statistics of the SG and EMA procedures.

Each trial draws rho, tau, lam uniformly from the configured ranges and a
standard-normal starting state, then runs both procedures from the same
draw (pairing the two columns reduces comparison variance).  Trials whose
discriminant tau^2 - 4 rho lam is negative have no circle equilibria and are
skipped from the statistics.  Trial i derives its generator from
(master seed, i), so results are reproducible and independent of execution
order or thread count.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._kernels import integrate_m1_batch
from .equilibria import EquilibriumSet, Limit, ScalarMoments, classify_limit, solve_equilibria
from .model import AlphaSchedule, ConstantAlpha, LinearRampAlpha, ModelState, spawn_rng

_OUTCOMES = ("to_R", "to_r", "to_zero", "not_converged", "diverged")


@dataclass(frozen=True)
class TrialConfig:
    """Monte-Carlo configuration; defaults reproduce the reference table."""

    trials: int
    steps: int = 4000
    scheme: str = "rk4"
    dt: float = 1.0
    n: int = 2
    rho_range: tuple[float, float] = (0.0, 3.0)
    tau_range: tuple[float, float] = (-1.0, 1.0)
    lambda_range: tuple[float, float] = (0.01, 0.1)
    alpha: AlphaSchedule = LinearRampAlpha(0.9, 1.0)
    seed: int = 0
    workers: int = 0
    max_levels: int = 8

    def __post_init__(self):
        if self.trials < 0:
            raise ValueError("trials must be >= 0")
        if self.steps < 1 or self.dt <= 0:
            raise ValueError("steps must be >= 1 and dt > 0")
        if self.scheme not in ("rk4", "euler"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.n < 2:
            raise ValueError("n must be >= 2 (stability analysis needs n > m = 1)")

    def alpha_endpoints(self) -> tuple[float, float]:
        if isinstance(self.alpha, ConstantAlpha):
            return self.alpha.value, self.alpha.value
        if isinstance(self.alpha, LinearRampAlpha):
            return self.alpha.start, self.alpha.end
        raise ValueError("monte-carlo supports constant or linear-ramp alpha")

    def to_json_dict(self) -> dict:
        a0, a1 = self.alpha_endpoints()
        kind = "constant" if a0 == a1 else "ramp"
        return {
            "trials": self.trials,
            "steps": self.steps,
            "scheme": self.scheme,
            "dt": self.dt,
            "t_end": self.dt * self.steps,
            "n": self.n,
            "rho_range": list(self.rho_range),
            "tau_range": list(self.tau_range),
            "lambda_range": list(self.lambda_range),
            "alpha": {"kind": kind, "start": a0, "end": a1},
            "seed": self.seed,
            "max_levels": self.max_levels,
            "paired_draws": True,
        }


@dataclass(frozen=True)
class AlgoStats:
    """Outcome counts and fractions over the discriminant >= 0 population."""

    counts: dict[str, int]
    fractions: dict[str, float]

    @staticmethod
    def from_counts(counts: dict[str, int], total: int) -> "AlgoStats":
        fr = {k: (counts[k] / total if total > 0 else 0.0) for k in _OUTCOMES}
        fr["converged"] = fr["to_R"] + fr["to_zero"]
        counts = dict(counts)
        counts["converged"] = counts["to_R"] + counts["to_zero"]
        return AlgoStats(counts, fr)


@dataclass(frozen=True)
class TrialStats:
    config: TrialConfig
    sg: AlgoStats
    ema: AlgoStats
    skipped_negative_discriminant: int
    counted: int
    refinement_levels: dict[str, int] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        def block(stats: AlgoStats) -> dict:
            return {
                "converged": stats.fractions["converged"],
                "to_R": stats.fractions["to_R"],
                "to_r": stats.fractions["to_r"],
                "to_zero": stats.fractions["to_zero"],
                "not_converged": stats.fractions["not_converged"],
                "diverged": stats.fractions["diverged"],
            }

        return {
            "config": self.config.to_json_dict(),
            "ema": block(self.ema),
            "sg": block(self.sg),
            "skipped": self.skipped_negative_discriminant,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"


def draw_trial(cfg: TrialConfig, index: int):
    """Deterministic per-trial draw: rho, tau, lam, then A, B, C coefficients."""
    rng = spawn_rng(cfg.seed, index)
    rho = rng.uniform(*cfg.rho_range)
    tau = rng.uniform(*cfg.tau_range)
    lam = rng.uniform(*cfg.lambda_range)
    a0 = rng.standard_normal(cfg.n)
    b0 = rng.standard_normal((cfg.n, cfg.n))
    c0 = rng.standard_normal(cfg.n)
    return rho, tau, lam, a0, b0, c0


def _classification_scales(eqset: EquilibriumSet) -> tuple[float, float, float, bool]:
    """(r_small, r_big, threshold, two_radii) matching classify_limit."""
    if len(eqset.radii) == 2:
        small, big = eqset.radii
        return small, big, 1e-5 * big, True
    scale = 1.0
    if eqset.source is not None and eqset.source.rho > 0.0:
        scale = max(1.0, abs(eqset.source.tau) / (2.0 * eqset.source.rho))
    return 0.0, 0.0, 1e-5 * scale, False


def _set_threads(workers: int):
    if workers > 0:
        import numba

        numba.set_num_threads(min(workers, numba.config.NUMBA_NUM_THREADS))


def run_monte_carlo(cfg: TrialConfig) -> TrialStats:
    """Run all trials and aggregate outcome statistics for SG and EMA."""
    _set_threads(cfg.workers)
    n = cfg.n
    d = 2 * n + n * n

    rhos = np.empty(cfg.trials)
    taus = np.empty(cfg.trials)
    lams = np.empty(cfg.trials)
    y0s = np.empty((cfg.trials, d))
    for i in range(cfg.trials):
        rho, tau, lam, a0, b0, c0 = draw_trial(cfg, i)
        rhos[i], taus[i], lams[i] = rho, tau, lam
        y0s[i, :n] = a0
        y0s[i, n : n + n * n] = b0.ravel()
        y0s[i, n + n * n :] = c0

    keep = (taus * taus - 4.0 * rhos * lams) >= 0.0
    skipped = int(cfg.trials - keep.sum())
    kept = int(keep.sum())

    counts = {algo: {k: 0 for k in _OUTCOMES} for algo in ("sg", "ema")}
    levels_used: dict[str, int] = {}
    if kept > 0:
        y0k = np.ascontiguousarray(y0s[keep])
        rk, tk, lk = rhos[keep], taus[keep], lams[keep]
        a0, a1 = cfg.alpha_endpoints()
        use_rk4 = cfg.scheme == "rk4"

        eqsets = [solve_equilibria(ScalarMoments(rk[i], tk[i], lk[i])) for i in range(kept)]
        scales = [_classification_scales(es) for es in eqsets]
        r_smalls = np.array([s[0] for s in scales])
        r_bigs = np.array([s[1] for s in scales])
        thrs = np.array([s[2] for s in scales])
        twos = np.array([s[3] for s in scales], dtype=np.bool_)

        for algo, ema in (("sg", False), ("ema", True)):
            out_y = np.empty((kept, d))
            out_status = np.zeros(kept, dtype=np.int64)
            out_level = np.zeros(kept, dtype=np.int64)
            integrate_m1_batch(
                y0k, n, rk, tk, lk, r_smalls, r_bigs, thrs, twos,
                a0, a1, ema, use_rk4, cfg.dt, cfg.steps, cfg.max_levels,
                out_y, out_status, out_level,
            )
            for i in range(kept):
                if out_status[i] == 2:
                    counts[algo]["diverged"] += 1
                    continue
                a_fin = out_y[i, :n].reshape(n, 1)
                b_fin = out_y[i, n : n + n * n].reshape(n, n)
                c_fin = out_y[i, n + n * n :].reshape(n, 1) if ema else a_fin
                limit = classify_limit(ModelState(a_fin, b_fin, c_fin), eqsets[i])
                key = {
                    Limit.OUTER_CIRCLE: "to_R",
                    Limit.INNER_CIRCLE: "to_r",
                    Limit.ZERO: "to_zero",
                    Limit.NOT_CONVERGED: "not_converged",
                }[limit]
                counts[algo][key] += 1
            for lv in np.unique(out_level):
                levels_used[f"{algo}_level{int(lv)}"] = int(np.sum(out_level == lv))

    return TrialStats(
        cfg,
        AlgoStats.from_counts(counts["sg"], kept),
        AlgoStats.from_counts(counts["ema"], kept),
        skipped,
        kept,
        levels_used,
    )


def run_scalar_flow(
    a0: np.ndarray,
    b0: np.ndarray,
    c0: np.ndarray,
    sm: ScalarMoments,
    alpha: AlphaSchedule,
    dt: float,
    steps: int,
    ema: bool,
    scheme: str = "rk4",
    max_levels: int = 8,
) -> tuple[ModelState, bool]:
    """Integrate a single m = 1 run through the compiled kernel.

    Returns (final state, diverged).  SG runs report C = A.
    """
    n = a0.shape[0]
    d = 2 * n + n * n
    y0 = np.empty((1, d))
    y0[0, :n] = a0
    y0[0, n : n + n * n] = np.asarray(b0).ravel()
    y0[0, n + n * n :] = c0
    if isinstance(alpha, ConstantAlpha):
        al0 = al1 = alpha.value
    elif isinstance(alpha, LinearRampAlpha):
        al0, al1 = alpha.start, alpha.end
    else:
        raise ValueError("unsupported alpha schedule")
    eqset = solve_equilibria(sm)
    r_small, r_big, thr, two = _classification_scales(eqset)
    out_y = np.empty((1, d))
    out_status = np.zeros(1, dtype=np.int64)
    out_level = np.zeros(1, dtype=np.int64)
    integrate_m1_batch(
        y0, n, np.array([sm.rho]), np.array([sm.tau]), np.array([sm.lam]),
        np.array([r_small]), np.array([r_big]), np.array([thr]),
        np.array([two], dtype=np.bool_),
        al0, al1, ema, scheme == "rk4", dt, steps, max_levels,
        out_y, out_status, out_level,
    )
    a_fin = out_y[0, :n].reshape(n, 1)
    b_fin = out_y[0, n : n + n * n].reshape(n, n)
    c_fin = out_y[0, n + n * n :].reshape(n, 1) if ema else a_fin
    return ModelState(a_fin, b_fin, c_fin), bool(out_status[0] == 2)
