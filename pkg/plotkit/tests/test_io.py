import numpy as np
import pytest

from conftest import trajectory_csv_text

from plotkit import FormatError, read_equilibria, read_trajectory


class TestReadTrajectory:
    def test_parses_shapes_and_values(self, simple_run):
        traj = read_trajectory(simple_run)
        assert (traj.n, traj.m) == (2, 1)
        assert traj.t.shape == (40,)
        assert traj.A.shape == (40, 2, 1)
        assert traj.B.shape == (40, 2, 2)
        assert traj.C.shape == (40, 2, 1)
        assert set(traj.diag) == {"E_bar", "F_bar", "balance_residual", "norm_A", "integ_defect"}
        assert traj.t[0] == 0.0
        assert not traj.target_tracks_online

    def test_sg_style_run_detected(self, tmp_path):
        t = np.array([0.0, 1.0])
        a = np.ones((2, 2, 1))
        b = np.ones((2, 2, 2))
        path = tmp_path / "sg.csv"
        path.write_text(trajectory_csv_text(t, a, b, a.copy()), encoding="utf-8")
        traj = read_trajectory(path)
        assert traj.target_tracks_online

    def test_bad_value_names_row(self, tmp_path):
        t = np.array([0.0, 1.0, 2.0])
        a = np.zeros((3, 2, 1))
        b = np.zeros((3, 2, 2))
        text = trajectory_csv_text(t, a, b, a)
        lines = text.splitlines()
        lines[2] = lines[2].replace("1,", "oops,", 1)
        path = tmp_path / "bad.csv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        with pytest.raises(FormatError, match="row 3"):
            read_trajectory(path)

    def test_short_row_names_row(self, tmp_path):
        t = np.array([0.0, 1.0])
        a = np.zeros((2, 2, 1))
        b = np.zeros((2, 2, 2))
        text = trajectory_csv_text(t, a, b, a)
        lines = text.splitlines()
        lines[2] = ",".join(lines[2].split(",")[:-2])
        path = tmp_path / "short.csv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        with pytest.raises(FormatError, match="row 3"):
            read_trajectory(path)

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("x,y,z\n1,2,3\n", encoding="utf-8")
        with pytest.raises(FormatError, match="header"):
            read_trajectory(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(FormatError, match="empty"):
            read_trajectory(path)


class TestReadEquilibria:
    def test_parses_document(self, equilibria_json):
        eq = read_equilibria(equilibria_json)
        assert eq.radii == (0.0544467, 0.61222)
        assert eq.epsilon == 1.0
        assert eq.includes_origin

    def test_rejects_wrong_schema(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text('{"radii": [1.0]}', encoding="utf-8")
        with pytest.raises(FormatError):
            read_equilibria(path)

    def test_rejects_invalid_json(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text("{nope", encoding="utf-8")
        with pytest.raises(FormatError):
            read_equilibria(path)
