"""Readers for the documented run-output formats.

Trajectory CSV: header
``t, A_00..A_{n-1,m-1}, B_00..B_{n-1,n-1}, C_00..C_{n-1,m-1}, E_bar, F_bar,
balance_residual, norm_A, integ_defect`` with row-major coefficients, one
snapshot per row.  Equilibria JSON: ``{discriminant, radii: [..], epsilon,
includes_origin}``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np


class FormatError(ValueError):
    """Malformed input file; the message names the offending location."""


DIAG_COLS = ("E_bar", "F_bar", "balance_residual", "norm_A", "integ_defect")


@dataclass(frozen=True)
class TrajectoryData:
    """One run: times, coefficient blocks, and diagnostic columns."""

    path: str
    n: int
    m: int
    t: np.ndarray  # (k,)
    A: np.ndarray  # (k, n, m)
    B: np.ndarray  # (k, n, n)
    C: np.ndarray  # (k, n, m)
    diag: dict[str, np.ndarray]

    @property
    def target_tracks_online(self) -> bool:
        """True when C is just a copy of A (stop-gradient style runs)."""
        return bool(np.allclose(self.C, self.A, atol=1e-12, rtol=0.0))

    @property
    def target_is_frozen(self) -> bool:
        """True when C never moves (full-gradient runs carry C untouched)."""
        return bool(np.allclose(self.C, self.C[0], atol=0.0, rtol=0.0))


def read_trajectory(path) -> TrajectoryData:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        n_a = sum(1 for h in header if h.startswith("A_"))
        n_b = sum(1 for h in header if h.startswith("B_"))
        n = int(round(math.sqrt(n_b))) if n_b else 0
        if not header or header[0] != "t" or n < 1 or n * n != n_b or n_a == 0 or n_a % n != 0:
            raise FormatError(f"{path}: header row is not a trajectory header: {header}")
        m = n_a // n
        expected = (
            ["t"]
            + [f"A_{i}{j}" for i in range(n) for j in range(m)]
            + [f"B_{i}{j}" for i in range(n) for j in range(n)]
            + [f"C_{i}{j}" for i in range(n) for j in range(m)]
            + list(DIAG_COLS)
        )
        if header != expected:
            raise FormatError(f"{path}: header row mismatch: {header}")
        width = len(expected)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise FormatError(f"{path}: row {lineno}: expected {width} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise FormatError(f"{path}: row {lineno}: {exc}") from None
    if not rows:
        raise FormatError(f"{path}: no data rows")
    data = np.asarray(rows)
    k = data.shape[0]
    nm, nn = n * m, n * n
    diag = {name: data[:, 1 + 2 * nm + nn + i] for i, name in enumerate(DIAG_COLS)}
    return TrajectoryData(
        path=str(path),
        n=n,
        m=m,
        t=data[:, 0],
        A=data[:, 1 : 1 + nm].reshape(k, n, m),
        B=data[:, 1 + nm : 1 + nm + nn].reshape(k, n, n),
        C=data[:, 1 + nm + nn : 1 + 2 * nm + nn].reshape(k, n, m),
        diag=diag,
    )


@dataclass(frozen=True)
class EquilibriaData:
    discriminant: float
    radii: tuple[float, ...]
    epsilon: float
    includes_origin: bool


def read_equilibria(path) -> EquilibriaData:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from None
    try:
        return EquilibriaData(
            discriminant=float(doc["discriminant"]),
            radii=tuple(float(r) for r in doc["radii"]),
            epsilon=float(doc["epsilon"]),
            includes_origin=bool(doc["includes_origin"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: not an equilibria document ({exc})") from None
