"""The three figure kinds rendered from run outputs.

* ``coefficients-vs-time`` — every model coefficient as a line, one panel
  per input run.
* ``plane-trajectories``  — encoder paths in the plane (m=1, n=2 runs),
  target paths dashed where they differ from the encoder, equilibrium
  circles overlaid when an equilibria file is given.
* ``objective-vs-time``   — the shared-encoder objective per run, plus the
  target-aware objective dashed where the two differ (EMA runs).

Rendering is deterministic: fixed figure sizes, a fixed SVG hash salt, and
no timestamp metadata.
"""

from __future__ import annotations

from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .io import EquilibriaData, TrajectoryData, read_equilibria, read_trajectory  # noqa: E402

KINDS = ("coefficients-vs-time", "plane-trajectories", "objective-vs-time")

matplotlib.rcParams["svg.hashsalt"] = "plotkit"


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    inputs: tuple[str, ...]
    output: str
    equilibria: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise ValueError("at least one trajectory CSV is required")
        object.__setattr__(self, "inputs", tuple(str(p) for p in self.inputs))


def _coeff_labels(n, m, prefix):
    return [f"{prefix}_{i}{j}" for i in range(n) for j in range(m)]


def _plot_coefficients(ax, traj: TrajectoryData):
    k = traj.t.shape[0]
    blocks = [("a", traj.A.reshape(k, -1)), ("B", traj.B.reshape(k, -1))]
    if not traj.target_tracks_online:
        blocks.append(("c", traj.C.reshape(k, -1)))
    for prefix, block in blocks:
        style = "--" if prefix == "c" else "-"
        for idx in range(block.shape[1]):
            i, j = divmod(idx, traj.m if prefix != "B" else traj.n)
            ax.plot(traj.t, block[:, idx], style, lw=1.0, label=f"{prefix}[{i},{j}]")
    ax.set_xlabel("t")
    ax.set_ylabel("coefficient value")
    ax.legend(fontsize=6, ncol=3, loc="best")
    ax.grid(True, alpha=0.3)


def _plot_plane(ax, trajs: list[TrajectoryData], eq: EquilibriaData | None):
    for traj in trajs:
        if traj.m != 1 or traj.n != 2:
            raise ValueError(
                f"{traj.path}: plane-trajectories requires m=1, n=2 runs "
                f"(got n={traj.n}, m={traj.m})"
            )
    for traj in trajs:
        a = traj.A[:, :, 0]
        ax.plot(a[:, 0], a[:, 1], "-", color="tab:red", lw=0.9, alpha=0.85)
        ax.plot(a[-1, 0], a[-1, 1], "o", color="tab:red", ms=3)
        if not traj.target_tracks_online and not traj.target_is_frozen:
            c = traj.C[:, :, 0]
            ax.plot(c[:, 0], c[:, 1], "--", color="tab:blue", lw=0.9, alpha=0.85)
            ax.plot(c[-1, 0], c[-1, 1], "o", color="tab:blue", ms=3)
    if eq is not None:
        theta = np.linspace(0.0, 2 * np.pi, 512)
        for radius, style in zip(sorted(eq.radii), (":", "-")):
            ax.plot(
                radius * np.cos(theta),
                radius * np.sin(theta),
                style,
                color="0.4",
                lw=1.0,
            )
        ax.plot(0.0, 0.0, "+", color="0.4", ms=8)
    ax.set_xlabel("a[0]")
    ax.set_ylabel("a[1]")
    ax.set_aspect("equal")
    ax.grid(True, alpha=0.3)


def _plot_objectives(ax, trajs: list[TrajectoryData]):
    for traj in trajs:
        e_bar = traj.diag["E_bar"]
        f_bar = traj.diag["F_bar"]
        (line,) = ax.plot(traj.t, e_bar, "-", lw=1.0)
        if not np.allclose(e_bar, f_bar, atol=1e-12, rtol=1e-9, equal_nan=True):
            ax.plot(traj.t, f_bar, "--", lw=1.0, color=line.get_color(), alpha=0.7)
    ax.set_xlabel("t")
    ax.set_ylabel("objective value")
    ax.grid(True, alpha=0.3)


def render(spec: PlotSpec) -> str:
    """Render the figure described by spec; returns the output path."""
    trajs = [read_trajectory(p) for p in spec.inputs]
    eq = read_equilibria(spec.equilibria) if spec.equilibria else None

    if spec.kind == "coefficients-vs-time":
        fig, axes = plt.subplots(
            len(trajs), 1, figsize=(7.0, 2.8 * len(trajs)), squeeze=False
        )
        for ax, traj in zip(axes[:, 0], trajs):
            _plot_coefficients(ax, traj)
            ax.set_title(traj.path, fontsize=7)
    elif spec.kind == "plane-trajectories":
        fig, ax = plt.subplots(figsize=(5.5, 5.5))
        _plot_plane(ax, trajs, eq)
    else:
        fig, ax = plt.subplots(figsize=(7.0, 4.0))
        _plot_objectives(ax, trajs)

    fig.tight_layout()
    metadata = {"Date": None} if str(spec.output).endswith(".svg") else {}
    fig.savefig(spec.output, metadata=metadata)
    plt.close(fig)
    return str(spec.output)
