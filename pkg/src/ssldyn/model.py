"""Core value types for the linear teacher-student setting.

A linear encoder maps data x in R^m to A x in R^n, a linear predictor maps
codes to B z, and a target encoder maps the second view y to C y.  All
training procedures studied here depend on the view distribution only through
its second moments [xx^T], [yx^T], [yy^T], so the data is represented by
moment matrices rather than samples.

Matrix flattening is row-major everywhere: the parameter vector stores the
rows of A, then the rows of B, then the rows of C.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


def _as_matrix(x, name: str) -> np.ndarray:
    a = np.array(x, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be a 2-d matrix, got shape {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dims:
    """Problem dimensions: embedding size n, data size m.

    The interesting regime is overcomplete embeddings (n > m); n <= m is
    allowed for gradient-level testing but flagged, and the stability
    analyzer refuses it.
    """

    n: int
    m: int
    narrow: bool = field(init=False)

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError(f"dimensions must be positive, got n={self.n}, m={self.m}")
        object.__setattr__(self, "narrow", self.n <= self.m)


@dataclass(frozen=True)
class ModelState:
    """Parameter triple (A, B, C): encoder, predictor, target encoder.

    A and C are n x m, B is n x n.  Instances are immutable; the arrays are
    marked read-only at construction.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", _as_matrix(self.A, "A"))
        object.__setattr__(self, "B", _as_matrix(self.B, "B"))
        object.__setattr__(self, "C", _as_matrix(self.C, "C"))
        n, m = self.A.shape
        if self.B.shape != (n, n):
            raise ValueError(f"B must be {n}x{n}, got {self.B.shape}")
        if self.C.shape != (n, m):
            raise ValueError(f"C must be {n}x{m}, got {self.C.shape}")

    @property
    def dims(self) -> Dims:
        n, m = self.A.shape
        return Dims(n, m)

    @property
    def diverged(self) -> bool:
        """True when any coefficient is NaN or infinite."""
        return not (
            np.isfinite(self.A).all()
            and np.isfinite(self.B).all()
            and np.isfinite(self.C).all()
        )

    def to_vector(self) -> np.ndarray:
        """Flatten to a single vector, rows of A then B then C."""
        return np.concatenate([self.A.ravel(), self.B.ravel(), self.C.ravel()])

    @staticmethod
    def from_vector(vec, dims: Dims) -> "ModelState":
        n, m = dims.n, dims.m
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (2 * n * m + n * n,):
            raise ValueError(f"expected vector of length {2 * n * m + n * n}, got {vec.shape}")
        a = vec[: n * m].reshape(n, m)
        b = vec[n * m : n * m + n * n].reshape(n, n)
        c = vec[n * m + n * n :].reshape(n, m)
        return ModelState(a, b, c)


PSD_TOL = 1e-10


@dataclass(frozen=True)
class DataMoments:
    """Second moments of the paired-view distribution.

    Sxx = [xx^T], Syx = [yx^T], Syy = [yy^T], all m x m.  [xy^T] is always
    obtained as Syx.T, never stored.
    """

    Sxx: np.ndarray
    Syx: np.ndarray
    Syy: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Sxx", _as_matrix(self.Sxx, "Sxx"))
        object.__setattr__(self, "Syx", _as_matrix(self.Syx, "Syx"))
        object.__setattr__(self, "Syy", _as_matrix(self.Syy, "Syy"))
        m = self.Sxx.shape[0]
        for name in ("Sxx", "Syx", "Syy"):
            if getattr(self, name).shape != (m, m):
                raise ValueError(f"{name} must be {m}x{m}, got {getattr(self, name).shape}")

    @property
    def m(self) -> int:
        return self.Sxx.shape[0]

    @property
    def Sxy(self) -> np.ndarray:
        return self.Syx.T

    @staticmethod
    def from_scalars(rho: float, tau: float, delta: float = 0.0) -> "DataMoments":
        """m=1 moments from the scalars rho=[xx], tau=[yx], delta=[yy]."""
        return DataMoments([[rho]], [[tau]], [[delta]])


def moments_from_samples(pairs) -> DataMoments:
    """Empirical second moments from (x, y) view pairs.

    Sxx and Syy are symmetrized by averaging with their transposes so that
    downstream quadratic forms see exactly symmetric matrices, and both are
    checked to be positive semidefinite to tolerance.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("no samples")
    x0 = np.atleast_1d(np.asarray(pairs[0][0], dtype=np.float64))
    m = x0.shape[0]
    sxx = np.zeros((m, m))
    syx = np.zeros((m, m))
    syy = np.zeros((m, m))
    for x, y in pairs:
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        y = np.atleast_1d(np.asarray(y, dtype=np.float64))
        if x.shape != (m,) or y.shape != (m,):
            raise ValueError("dimension mismatch")
        sxx += np.outer(x, x)
        syx += np.outer(y, x)
        syy += np.outer(y, y)
    k = float(len(pairs))
    sxx = (sxx + sxx.T) / (2.0 * k)
    syy = (syy + syy.T) / (2.0 * k)
    syx /= k
    for name, mat in (("Sxx", sxx), ("Syy", syy)):
        if np.linalg.eigvalsh(mat).min() < -PSD_TOL:
            raise ValueError(f"{name} is not positive semidefinite")
    return DataMoments(sxx, syx, syy)


def load_sample_pairs_csv(path) -> DataMoments:
    """Moments from a CSV of view pairs with header x1,...,xm,y1,...,ym."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError("no samples")
        cols = [h.strip() for h in header]
        if len(cols) % 2 != 0 or not cols:
            raise ValueError(f"malformed header: expected x1..xm,y1..ym, got {cols}")
        m = len(cols) // 2
        expected = [f"x{i+1}" for i in range(m)] + [f"y{i+1}" for i in range(m)]
        if cols != expected:
            raise ValueError(f"malformed header: expected {expected}, got {cols}")
        pairs = []
        for row in reader:
            if not row:
                continue
            vals = [float(v) for v in row]
            if len(vals) != 2 * m:
                raise ValueError("dimension mismatch")
            pairs.append((vals[:m], vals[m:]))
    return moments_from_samples(pairs)


class AlphaSchedule:
    """Target-encoder averaging coefficient as a function of training phase.

    ``value_at(phase)`` takes the normalized phase t/T in [0, 1].
    """

    def value_at(self, phase: float) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantAlpha(AlphaSchedule):
    value: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.value}")

    def value_at(self, phase: float) -> float:
        return self.value


@dataclass(frozen=True)
class LinearRampAlpha(AlphaSchedule):
    start: float
    end: float

    def __post_init__(self):
        for v in (self.start, self.end):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"alpha ramp endpoints must be in [0, 1], got {v}")

    def value_at(self, phase: float) -> float:
        phase = min(max(phase, 0.0), 1.0)
        return self.start + (self.end - self.start) * phase


@dataclass(frozen=True)
class HyperParams:
    """Training hyperparameters.

    lam: ridge weight; mu, nu: step sizes for the encoder and predictor
    updates; alpha: target-averaging schedule; dt: integration step for the
    continuous flows.  alpha=1 is legal but freezes the target encoder, so
    the constructor flags it.
    """

    lam: float
    mu: float = 0.1
    nu: float = 0.1
    alpha: AlphaSchedule = ConstantAlpha(0.9)
    dt: float = 0.05
    target_frozen: bool = field(init=False)

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.mu <= 0 or self.nu <= 0:
            raise ValueError("step sizes mu, nu must be > 0")
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        frozen = isinstance(self.alpha, ConstantAlpha) and self.alpha.value == 1.0
        object.__setattr__(self, "target_frozen", frozen)


def spawn_rng(master_seed: int, *keys: int) -> np.random.Generator:
    """Deterministic generator for (master_seed, key...) streams.

    Identical arguments give bit-identical streams, independently of how
    many other streams were spawned.
    """
    return np.random.default_rng(np.random.SeedSequence((int(master_seed),) + tuple(int(k) for k in keys)))


def random_state(dims: Dims, seed: int) -> ModelState:
    """Standard-normal initialization of (A, B, C), drawn in that order.

    C is drawn independently; stop-gradient runs overwrite it with A.
    """
    rng = spawn_rng(seed)
    a = rng.standard_normal((dims.n, dims.m))
    b = rng.standard_normal((dims.n, dims.n))
    c = rng.standard_normal((dims.n, dims.m))
    return ModelState(a, b, c)
