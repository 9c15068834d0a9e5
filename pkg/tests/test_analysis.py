import numpy as np
import pytest

from conftest import random_model_state, realizable_moments

from ssldyn import (
    AlgoKind,
    ConstantAlpha,
    DataMoments,
    HyperParams,
    ModelState,
    NotEquilibriumError,
    ScalarMoments,
    balance_residual,
    collapse_bound_check,
    empirical_stability_probe,
    grad_P,
    grad_Q,
    integrability_defect,
    integrate_flow,
    linearize,
    materialize_equilibrium,
    solve_equilibria,
    spawn_rng,
)

SM = ScalarMoments(3.0, 2.0, 0.1)
MOM = DataMoments.from_scalars(3.0, 2.0)
HYPER = HyperParams(lam=0.1, alpha=ConstantAlpha(0.9), dt=0.05)


def origin_state(n, m):
    return ModelState(np.zeros((n, m)), np.zeros((n, n)), np.zeros((n, m)))


def circle_state(kind, direction=None):
    eqset = solve_equilibria(SM)
    radius = eqset.radii[0] if kind == "inner" else eqset.radii[1]
    if direction is None:
        direction = np.array([1.0, 0.0])
    return materialize_equilibrium(eqset, radius, direction)


class TestIntegrabilityDefect:
    def test_zero_encoder(self, rng):
        mom, _ = realizable_moments(rng, 2)
        assert integrability_defect(origin_state(3, 2), mom) == 0.0

    def test_decorrelated_views(self, rng):
        mom, _ = realizable_moments(rng, 2)
        decor = DataMoments(mom.Sxx, np.zeros((2, 2)), mom.Syy)
        st = random_model_state(rng, 3, 2)
        assert integrability_defect(st, decor) == 0.0

    def test_generic_positivity(self, rng):
        for _ in range(100):
            mom, _ = realizable_moments(rng, 2)
            st = random_model_state(rng, 3, 2)
            assert integrability_defect(st, mom) > 0.0

    def test_matches_schwarz_cross_derivative(self, rng):
        # The mismatch matrix dP/dpsi - (dQ/dtheta)^T, computed by finite
        # differences of the stop-gradient fields over the flattened
        # parameters, must be block diagonal with every block Syx A^T.
        n, m = 3, 2
        mom, _ = realizable_moments(rng, m)
        st = random_model_state(rng, n, m)
        lam = 0.4
        p_dim, q_dim = n * m, n * n
        h = 1e-5

        def p_flat(theta, psi):
            a = theta.reshape(n, m)
            b = psi.reshape(n, n)
            return grad_P(ModelState(a, b, a), mom, lam).ravel()

        def q_flat(theta, psi):
            a = theta.reshape(n, m)
            b = psi.reshape(n, n)
            return grad_Q(ModelState(a, b, a), mom, lam).ravel()

        theta0, psi0 = st.A.ravel().copy(), st.B.ravel().copy()
        dp_dpsi = np.zeros((p_dim, q_dim))
        for k in range(q_dim):
            e = np.zeros(q_dim)
            e[k] = h
            dp_dpsi[:, k] = (p_flat(theta0, psi0 + e) - p_flat(theta0, psi0 - e)) / (2 * h)
        dq_dtheta = np.zeros((q_dim, p_dim))
        for k in range(p_dim):
            e = np.zeros(p_dim)
            e[k] = h
            dq_dtheta[:, k] = (q_flat(theta0 + e, psi0) - q_flat(theta0 - e, psi0)) / (2 * h)

        mismatch = dp_dpsi - dq_dtheta.T
        block = mom.Syx @ st.A.T
        for i in range(n):
            for j in range(n):
                got = mismatch[i * m : (i + 1) * m, j * n : (j + 1) * n]
                want = block if i == j else np.zeros((m, n))
                assert np.allclose(got, want, atol=1e-5)
        # and the reported defect is the Frobenius norm of one block
        assert integrability_defect(st, mom) == pytest.approx(np.linalg.norm(block), rel=1e-12)


class TestBalanceResidual:
    def test_zero_state(self):
        assert balance_residual(origin_state(2, 1)) == 0.0

    def test_constructed_balance(self):
        a = np.array([[1.0], [0.0]])
        st = ModelState(a, np.outer(a, a), a)
        assert balance_residual(st) == pytest.approx(0.0, abs=1e-15)

    def test_exponential_decay_along_sg_flow(self, rng):
        # |B^T B - A A^T|(t) = e^(-2 lam t) |K| exactly along the flow
        mom, _ = realizable_moments(rng, 2)
        st = random_model_state(rng, 3, 2)
        lam = 0.25
        hyper = HyperParams(lam=lam, dt=1e-3)
        traj = integrate_flow(AlgoKind.SG, st, mom, hyper, 4.0, stride=800)
        k0 = np.linalg.norm(st.B.T @ st.B - st.A @ st.A.T)
        for t, s in zip(traj.times, traj.states):
            want = np.exp(-2 * lam * t) * k0
            assert balance_residual(s) == pytest.approx(want, rel=1e-5)


class TestLinearize:
    def test_origin_spectrum_ema(self):
        lam, alpha = 0.1, 0.99
        hyper = HyperParams(lam=lam, alpha=ConstantAlpha(alpha), dt=0.05)
        rep = linearize(AlgoKind.EMA, origin_state(2, 1), MOM, hyper)
        assert not rep.modulo_manifold
        # -lam on the (delta, eps) blocks, -(1 - alpha) on the phi block
        want = np.sort(np.concatenate([np.full(6, -lam), np.full(2, -(1 - alpha))]))
        got = np.sort(rep.spectrum.real)
        assert np.max(np.abs(got - want)) <= 1e-8
        assert np.max(np.abs(rep.spectrum.imag)) <= 1e-8
        assert rep.max_real_part == pytest.approx(-min(lam, 1 - alpha), abs=1e-8)

    def test_origin_spectrum_sg(self):
        rep = linearize(AlgoKind.SG, origin_state(2, 1), MOM, HYPER)
        assert np.max(np.abs(rep.spectrum.real + 0.1)) <= 1e-8
        assert len(rep.spectrum) == 2 * 1 + 2 * 2

    def test_spectrum_block_count_ema(self):
        rep = linearize(AlgoKind.EMA, origin_state(3, 1), MOM, HYPER)
        assert len(rep.spectrum) == 3 + 9 + 3

    def test_outer_circle_stable_modulo_manifold(self):
        for algo in (AlgoKind.SG, AlgoKind.EMA):
            rep = linearize(algo, circle_state("outer"), MOM, HYPER)
            assert rep.modulo_manifold
            assert rep.n_tangent_excluded >= 1
            assert rep.max_real_part < 0.0

    def test_inner_circle_unstable(self):
        for algo in (AlgoKind.SG, AlgoKind.EMA):
            rep = linearize(algo, circle_state("inner"), MOM, HYPER)
            assert rep.max_real_part > 0.0

    def test_circle_has_neutral_mode(self):
        for algo in (AlgoKind.SG, AlgoKind.EMA):
            for kind in ("inner", "outer"):
                rep = linearize(algo, circle_state(kind), MOM, HYPER)
                assert np.min(np.abs(rep.spectrum.real)) <= 1e-8

    def test_spectrum_invariant_under_rotation(self):
        theta = 1.1
        direction = np.array([np.cos(theta), np.sin(theta)])
        for algo in (AlgoKind.SG, AlgoKind.EMA):
            base = np.sort_complex(linearize(algo, circle_state("outer"), MOM, HYPER).spectrum)
            rot = np.sort_complex(
                linearize(algo, circle_state("outer", direction), MOM, HYPER).spectrum
            )
            assert np.max(np.abs(base - rot)) <= 1e-8

    def test_rejects_non_equilibrium(self, rng):
        st = random_model_state(rng, 2, 1)
        with pytest.raises(NotEquilibriumError):
            linearize(AlgoKind.SG, st, MOM, HYPER)

    def test_rejects_narrow_dims(self, rng):
        mom, _ = realizable_moments(rng, 2)
        with pytest.raises(ValueError, match="n > m"):
            linearize(AlgoKind.SG, origin_state(2, 2), mom, HyperParams(lam=0.1))

    def test_rejects_frozen_target(self):
        hyper = HyperParams(lam=0.1, alpha=ConstantAlpha(1.0), dt=0.05)
        with pytest.raises(ValueError, match="alpha"):
            linearize(AlgoKind.EMA, origin_state(2, 1), MOM, hyper)


class TestEmpiricalProbe:
    def test_origin_returns(self):
        dist = empirical_stability_probe(
            AlgoKind.EMA, origin_state(2, 1), MOM, HYPER, 1e-3, 200.0
        )
        assert dist <= 1e-6

    def test_outer_circle_returns_to_set(self):
        dist = empirical_stability_probe(
            AlgoKind.EMA, circle_state("outer"), MOM, HYPER, 1e-3, 200.0
        )
        assert dist <= 1e-6

    def test_inner_circle_escapes(self):
        dist = empirical_stability_probe(
            AlgoKind.EMA, circle_state("inner"), MOM, HYPER, 1e-3, 200.0
        )
        assert dist > 1e-2

    def test_sg_probes(self):
        assert (
            empirical_stability_probe(AlgoKind.SG, circle_state("outer"), MOM, HYPER, 1e-3, 200.0)
            <= 1e-6
        )
        assert (
            empirical_stability_probe(AlgoKind.SG, circle_state("inner"), MOM, HYPER, 1e-3, 200.0)
            > 1e-2
        )


class TestCollapseBound:
    def test_zero_trajectory(self, rng):
        mom, _ = realizable_moments(rng, 2)
        traj = integrate_flow(
            AlgoKind.GDFLOW, origin_state(3, 2), mom, HyperParams(lam=0.1, dt=0.05), 5.0
        )
        assert collapse_bound_check(traj, 0.1)

    def test_gdflow_satisfies_bound(self, rng):
        mom, _ = realizable_moments(rng, 2)
        st = random_model_state(rng, 3, 2)
        traj = integrate_flow(AlgoKind.GDFLOW, st, mom, HyperParams(lam=0.1, dt=0.01), 30.0, stride=50)
        assert collapse_bound_check(traj, 0.1)

    def test_sg_limit_violates_bound(self):
        # an SG run settling on the outer circle keeps |A| bounded away
        # from zero, so the collapse bound must fail
        rng = spawn_rng(31)
        a0 = rng.standard_normal((2, 1)) + 2.0
        st = ModelState(a0, rng.standard_normal((2, 2)), a0)
        traj = integrate_flow(AlgoKind.SG, st, MOM, HyperParams(lam=0.1, dt=0.05), 200.0, stride=100)
        assert not traj.diverged
        assert np.linalg.norm(traj.final_state.A) > 0.1
        assert not collapse_bound_check(traj, 0.1)
