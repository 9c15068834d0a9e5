import numpy as np
import pytest


def trajectory_csv_text(t, A, B, C, diag=None):
    """Build trajectory-CSV text from stacked arrays (k, n, m) / (k, n, n)."""
    A, B, C = np.asarray(A), np.asarray(B), np.asarray(C)
    k, n, m = A.shape
    header = (
        ["t"]
        + [f"A_{i}{j}" for i in range(n) for j in range(m)]
        + [f"B_{i}{j}" for i in range(n) for j in range(n)]
        + [f"C_{i}{j}" for i in range(n) for j in range(m)]
        + ["E_bar", "F_bar", "balance_residual", "norm_A", "integ_defect"]
    )
    if diag is None:
        diag = np.zeros((k, 5))
    lines = [",".join(header)]
    for r in range(k):
        vals = [t[r], *A[r].ravel(), *B[r].ravel(), *C[r].ravel(), *diag[r]]
        lines.append(",".join(format(v, ".17g") for v in vals))
    return "\n".join(lines) + "\n"


@pytest.fixture
def simple_run(tmp_path):
    """A tiny spiral-in run with n=2, m=1 and a lagging target."""
    t = np.linspace(0.0, 5.0, 40)
    angle = 0.8 * t
    radius = 1.5 * np.exp(-0.3 * t) + 0.6
    a = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)[:, :, None]
    c = np.roll(a, 2, axis=0)
    c[:2] = a[:2]
    b = np.einsum("kio,kjo->kij", a, a)
    e_bar = radius**2
    f_bar = e_bar * 1.1
    diag = np.stack([e_bar, f_bar, np.zeros_like(t), radius, np.zeros_like(t)], axis=1)
    path = tmp_path / "run.csv"
    path.write_text(trajectory_csv_text(t, a, b, c, diag), encoding="utf-8")
    return path


@pytest.fixture
def equilibria_json(tmp_path):
    path = tmp_path / "eq.json"
    path.write_text(
        '{"discriminant": 2.8, "radii": [0.0544467, 0.61222], '
        '"epsilon": 1.0, "includes_origin": true}\n',
        encoding="utf-8",
    )
    return path
