import numpy as np
import pytest

from ssldyn import (
    ConstantAlpha,
    DataMoments,
    Dims,
    HyperParams,
    LinearRampAlpha,
    ModelState,
    load_sample_pairs_csv,
    moments_from_samples,
    random_state,
    spawn_rng,
)


class TestDims:
    def test_positive_required(self):
        with pytest.raises(ValueError):
            Dims(0, 1)
        with pytest.raises(ValueError):
            Dims(2, -1)

    def test_narrow_flag(self):
        assert not Dims(3, 2).narrow
        assert Dims(2, 2).narrow
        assert Dims(1, 3).narrow


class TestModelState:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            ModelState(np.zeros((2, 1)), np.zeros((3, 3)), np.zeros((2, 1)))
        with pytest.raises(ValueError):
            ModelState(np.zeros((2, 1)), np.zeros((2, 2)), np.zeros((3, 1)))

    def test_immutable_arrays(self):
        st = ModelState(np.zeros((2, 1)), np.zeros((2, 2)), np.zeros((2, 1)))
        with pytest.raises(ValueError):
            st.A[0, 0] = 1.0

    def test_diverged_marker(self):
        ok = ModelState(np.ones((2, 1)), np.ones((2, 2)), np.ones((2, 1)))
        assert not ok.diverged
        bad = ModelState(np.array([[np.nan], [0.0]]), np.ones((2, 2)), np.ones((2, 1)))
        assert bad.diverged
        inf = ModelState(np.ones((2, 1)), np.array([[np.inf, 0], [0, 0]]), np.ones((2, 1)))
        assert inf.diverged

    def test_vector_round_trip(self, rng):
        for n, m in [(2, 1), (3, 2), (4, 4)]:
            st = ModelState(
                rng.standard_normal((n, m)),
                rng.standard_normal((n, n)),
                rng.standard_normal((n, m)),
            )
            back = ModelState.from_vector(st.to_vector(), Dims(n, m))
            assert np.array_equal(back.A, st.A)
            assert np.array_equal(back.B, st.B)
            assert np.array_equal(back.C, st.C)

    def test_row_major_layout(self):
        a = np.array([[1.0], [2.0]])
        b = np.array([[3.0, 4.0], [5.0, 6.0]])
        c = np.array([[7.0], [8.0]])
        vec = ModelState(a, b, c).to_vector()
        assert np.array_equal(vec, [1, 2, 3, 4, 5, 6, 7, 8])


class TestMomentsFromSamples:
    def test_single_unit_pair(self):
        mom = moments_from_samples([([1.0], [1.0])])
        assert mom.Sxx[0, 0] == 1.0
        assert mom.Syx[0, 0] == 1.0
        assert mom.Syy[0, 0] == 1.0

    def test_antisymmetric_pairs(self):
        mom = moments_from_samples([([1.0], [-1.0]), ([-1.0], [1.0])])
        assert mom.Sxx[0, 0] == pytest.approx(1.0)
        assert mom.Syx[0, 0] == pytest.approx(-1.0)
        assert mom.Syy[0, 0] == pytest.approx(1.0)

    def test_law_of_large_numbers(self):
        rng = spawn_rng(123)
        xs = rng.standard_normal(1000)
        mom = moments_from_samples([([x], [x]) for x in xs])
        for mat in (mom.Sxx, mom.Syx, mom.Syy):
            assert abs(mat[0, 0] - 1.0) < 0.1

    def test_empty_input(self):
        with pytest.raises(ValueError, match="no samples"):
            moments_from_samples([])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            moments_from_samples([([1.0, 2.0], [1.0, 2.0]), ([1.0], [1.0])])

    def test_symmetry_and_psd(self, rng):
        for trial in range(50):
            m = int(rng.integers(1, 4))
            pairs = [
                (rng.standard_normal(m), rng.standard_normal(m))
                for _ in range(int(rng.integers(2, 30)))
            ]
            mom = moments_from_samples(pairs)
            assert np.array_equal(mom.Sxx, mom.Sxx.T)
            assert np.array_equal(mom.Syy, mom.Syy.T)
            for _ in range(5):
                v = rng.standard_normal(m)
                assert v @ mom.Sxx @ v >= -1e-10
                assert v @ mom.Syy @ v >= -1e-10

    def test_sxy_is_transpose(self, rng):
        pairs = [(rng.standard_normal(2), rng.standard_normal(2)) for _ in range(10)]
        mom = moments_from_samples(pairs)
        assert np.array_equal(mom.Sxy, mom.Syx.T)


class TestSamplePairsCsv:
    def test_round_trip(self, tmp_path, rng):
        pairs = [(rng.standard_normal(2), rng.standard_normal(2)) for _ in range(20)]
        path = tmp_path / "pairs.csv"
        lines = ["x1,x2,y1,y2"]
        for x, y in pairs:
            lines.append(",".join(format(v, ".17g") for v in (*x, *y)))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        mom = load_sample_pairs_csv(path)
        want = moments_from_samples(pairs)
        assert np.allclose(mom.Sxx, want.Sxx, atol=1e-15)
        assert np.allclose(mom.Syx, want.Syx, atol=1e-15)
        assert np.allclose(mom.Syy, want.Syy, atol=1e-15)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c,d\n1,2,3,4\n", encoding="utf-8")
        with pytest.raises(ValueError, match="header"):
            load_sample_pairs_csv(path)


class TestRandomState:
    def test_determinism(self):
        s1 = random_state(Dims(3, 2), 42)
        s2 = random_state(Dims(3, 2), 42)
        assert np.array_equal(s1.A, s2.A)
        assert np.array_equal(s1.B, s2.B)
        assert np.array_equal(s1.C, s2.C)
        s3 = random_state(Dims(3, 2), 43)
        assert not np.array_equal(s1.A, s3.A)

    def test_shapes(self):
        st = random_state(Dims(2, 1), 7)
        assert st.A.shape == (2, 1)
        assert st.B.shape == (2, 2)
        assert st.C.shape == (2, 1)

    def test_coefficient_moments(self):
        # pool 1e5 coefficients across seeded states
        dims = Dims(4, 3)
        per_state = 2 * 4 * 3 + 16
        states = 100_000 // per_state + 1
        coeffs = np.concatenate(
            [random_state(dims, seed).to_vector() for seed in range(states)]
        )
        assert abs(coeffs.mean()) < 0.02
        assert abs(coeffs.var() - 1.0) < 0.05


class TestHyperParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            HyperParams(lam=-0.1)
        with pytest.raises(ValueError):
            HyperParams(lam=0.1, mu=0.0)
        with pytest.raises(ValueError):
            HyperParams(lam=0.1, dt=0.0)
        with pytest.raises(ValueError):
            ConstantAlpha(1.5)
        with pytest.raises(ValueError):
            LinearRampAlpha(0.5, 1.1)

    def test_alpha_one_flagged(self):
        assert HyperParams(lam=0.1, alpha=ConstantAlpha(1.0)).target_frozen
        assert not HyperParams(lam=0.1, alpha=ConstantAlpha(0.9)).target_frozen

    def test_ramp_evaluation(self):
        ramp = LinearRampAlpha(0.9, 1.0)
        assert ramp.value_at(0.0) == pytest.approx(0.9)
        assert ramp.value_at(0.5) == pytest.approx(0.95)
        assert ramp.value_at(1.0) == pytest.approx(1.0)
        assert ramp.value_at(2.0) == pytest.approx(1.0)  # clamped


class TestDirectMoments:
    def test_scalar_constructor(self):
        mom = DataMoments.from_scalars(3.0, 2.0, 1.5)
        assert mom.m == 1
        assert mom.Sxx[0, 0] == 3.0
        assert mom.Syx[0, 0] == 2.0
        assert mom.Syy[0, 0] == 1.5
