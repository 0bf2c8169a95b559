import math

import numpy as np
import pytest

from aldlab import (
    ALDConfig,
    ChainDivergenceError,
    DiagGMM,
    EngineError,
    MixturePerturbation,
    SignedSpectrum,
    SpectrumSpec,
    build_truncated_mixture,
    config_digest,
    drift_exact,
    drift_ideal,
    drift_misspecified,
    em_step,
    init_exact_smoothed,
    knn_kl,
    make_schedule,
    run_chains,
    smooth,
)
from conftest import fig2_target


def single_gaussian(d=1, var=1.0):
    return build_truncated_mixture((1.0,), [0.0], [SpectrumSpec.constant(var)], d)


class TestSchedule:
    def test_reference_constants(self):
        sched = make_schedule(20000, 9e-3, 20.0)
        assert sched.theta(0) == 40.0
        assert sched.theta(19999) == 0.0
        assert sched.t_horizon == pytest.approx(179.991)
        assert sched.kappa(0) == 1.0
        assert sched.kappa(19999) == 0.0

    def test_two_step_endpoints(self):
        sched = make_schedule(2, 0.1, 20.0)
        np.testing.assert_allclose(sched.levels, [40.0, 0.0])

    def test_three_step_midpoint(self):
        sched = make_schedule(3, 0.1, 1.0)
        np.testing.assert_allclose(sched.levels, [2.0, 1.0, 0.0])

    def test_monotone_nonincreasing(self):
        sched = make_schedule(500, 0.01, 7.0)
        assert np.all(np.diff(sched.levels) <= 0)

    def test_rejects_bad_inputs(self):
        with pytest.raises(EngineError):
            make_schedule(1, 0.1, 1.0)
        with pytest.raises(EngineError):
            make_schedule(10, -0.1, 1.0)
        with pytest.raises(EngineError):
            make_schedule(10, 0.1, 0.0)


class TestDrifts:
    def test_exact_theta_zero_is_raw_score(self, rng):
        g = fig2_target(3)
        x = rng.normal(size=3)
        np.testing.assert_allclose(
            drift_exact(g, SpectrumSpec.power_law(1.0, 2.7), 0.0, x), g.score(x)
        )

    def test_exact_variance_addition(self):
        g = single_gaussian()
        out = drift_exact(g, SpectrumSpec.constant(1.0), 1.0, np.array([2.0]))
        np.testing.assert_allclose(out, [-1.0])

    def test_exact_matches_finite_differences(self):
        g = fig2_target(3)
        c = SpectrumSpec.power_law(1.0, 2.7)
        x = np.array([1.0, 0.5, -0.2])
        sm = smooth(g, c, 40.0)
        h = 1e-5
        fd = np.empty(3)
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd[j] = (sm.log_density(x + e) - sm.log_density(x - e)) / (2 * h)
        np.testing.assert_allclose(drift_exact(g, c, 40.0, x), fd, rtol=1e-6)

    def test_misspecified_zero_perturbation(self, rng):
        g = fig2_target(2)
        c = SpectrumSpec.power_law(1.0, 4.0)
        pert = MixturePerturbation()
        for _ in range(5):
            x = rng.normal(size=2)
            np.testing.assert_allclose(
                drift_misspecified(g, pert, c, 3.0, x), drift_exact(g, c, 3.0, x)
            )

    def test_misspecified_differs_and_matches_pair_oracle(self, rng):
        from aldlab import apply_perturbation

        g = fig2_target(2)
        c = SpectrumSpec.power_law(1.0, 4.0)
        pert = MixturePerturbation(
            dvars=(SignedSpectrum(1.0, SpectrumSpec.power_law(1.0, 3.5)),) * 2
        )
        x = np.array([1.0, -0.5])
        mis = drift_misspecified(g, pert, c, 2.0, x)
        exact = drift_exact(g, c, 2.0, x)
        assert not np.allclose(mis, exact)
        oracle = smooth(apply_perturbation(g, pert), c, 2.0).score(x)
        np.testing.assert_allclose(mis, oracle)

    def test_weight_only_perturbation_identical_components(self, rng):
        # all components equal: responsibilities cancel weight changes
        g = DiagGMM(weights=(0.5, 0.5), means=[[0.0], [0.0]], variances=[[1.0], [1.0]])
        pert = MixturePerturbation(dweights=(-0.3, 0.3))
        c = SpectrumSpec.constant(1.0)
        for _ in range(5):
            x = rng.normal(size=1)
            np.testing.assert_allclose(
                drift_misspecified(g, pert, c, 1.5, x), drift_exact(g, c, 1.5, x)
            )

    def test_ideal_direct_substitution(self):
        # gamma=1, effective smoothing eigenvalue 2, T=1 doubles the score
        g = single_gaussian()
        c = SpectrumSpec.constant(1.0)
        out = drift_ideal(g, c, 0.0, 2.0, 1.0, SpectrumSpec.constant(1.0), np.array([1.5]))
        np.testing.assert_allclose(out, [-3.0])

    def test_ideal_large_horizon_limit(self, rng):
        g = fig2_target(2)
        c = SpectrumSpec.power_law(1.0, 2.7)
        gam = SpectrumSpec.power_law(1.0, 1.5)
        x = rng.normal(size=2)
        out = drift_ideal(g, c, 5.0, 40.0, 1e12, gam, x)
        np.testing.assert_allclose(out, gam.eigenvalues(2) * drift_exact(g, c, 5.0, x), rtol=1e-9)


class TestEmStep:
    def test_zero_drift_zero_noise(self):
        x = np.array([1.0, -2.0])
        out = em_step(x, np.zeros(2), SpectrumSpec.constant(1.0), 0.1, np.zeros(2))
        np.testing.assert_array_equal(out, x)

    def test_unit_noise_scaling(self):
        out = em_step(np.zeros(1), np.zeros(1), SpectrumSpec.constant(1.0), 0.5, np.ones(1))
        np.testing.assert_allclose(out, [1.0])  # sqrt(2 * 0.5 * 1) = 1

    def test_nonfinite_drift_rejected(self):
        with pytest.raises(EngineError, match="step 7"):
            em_step(np.zeros(1), np.array([np.inf]), np.ones(1), 0.1, np.zeros(1), step_index=7)

    def test_ou_stationary_variance(self):
        # EM on dX = -X dt + sqrt(2) dW has stationary variance 1/(1 - dt/2);
        # 1e4 independent coordinates, time-averaged after burn-in
        dt = 9e-3
        n = 10_000
        rng = np.random.default_rng(99)
        x = rng.standard_normal(n)
        gam = np.ones(n)
        acc = []
        for step in range(30_000):
            x = em_step(x, -x, gam, dt, rng.standard_normal(n))
            if step >= 10_000 and step % 100 == 0:
                acc.append(float(np.mean(x * x)))
        target = 1.0 / (1.0 - dt / 2.0)
        assert target == pytest.approx(1.004520, abs=1e-6)
        assert abs(float(np.mean(acc)) - target) / target < 0.01


class TestRunChains:
    def test_one_step_zero_noise_is_euler(self):
        g = fig2_target(2)
        sched = make_schedule(2, 0.05, 20.0)
        gam = SpectrumSpec.power_law(1.0, 1.5)
        c = SpectrumSpec.power_law(1.0, 2.7)
        cfg = ALDConfig(dim=2, schedule=sched, gamma=gam, c_base=c)
        batch = run_chains(cfg, g, 64, seed=3, noise_scale=0.0, checkpoints=(0,))
        x0 = batch.checkpoints[0]
        expect = x0 + 0.05 * gam.eigenvalues(2) * smooth(g, c, 40.0).score(x0)
        np.testing.assert_allclose(batch.samples, expect, rtol=1e-12)
        assert batch.steps_run == 1

    def test_determinism_and_chain_count_stability(self):
        g = fig2_target(3)
        cfg = ALDConfig(
            dim=3,
            schedule=make_schedule(50, 9e-3, 20.0),
            gamma=SpectrumSpec.power_law(1.0, 1.5),
            c_base=SpectrumSpec.power_law(1.0, 2.7),
        )
        a = run_chains(cfg, g, 700, seed=11)
        b = run_chains(cfg, g, 700, seed=11)
        np.testing.assert_array_equal(a.samples, b.samples)
        # rows are independent of how many chains were requested
        c = run_chains(cfg, g, 600, seed=11)
        np.testing.assert_array_equal(a.samples[:600], c.samples)
        assert a.config_digest == config_digest(cfg, g)

    def test_seed_changes_output(self):
        g = fig2_target(2)
        cfg = ALDConfig(
            dim=2,
            schedule=make_schedule(10, 9e-3, 20.0),
            gamma=SpectrumSpec.constant(1.0),
            c_base=SpectrumSpec.constant(1.0),
        )
        a = run_chains(cfg, g, 32, seed=1)
        b = run_chains(cfg, g, 32, seed=2)
        assert not np.array_equal(a.samples, b.samples)

    def test_final_drift_level_is_second_to_last(self):
        # steps k = 0..N-2 use levels theta_k; the state ends at level 0
        g = single_gaussian()
        sched = make_schedule(3, 0.1, 1.0)
        cfg = ALDConfig(
            dim=1,
            schedule=sched,
            gamma=SpectrumSpec.constant(1.0),
            c_base=SpectrumSpec.constant(1.0),
        )
        batch = run_chains(cfg, g, 8, seed=5, noise_scale=0.0, checkpoints=(0, 1))
        x0 = batch.checkpoints[0]
        x1 = batch.checkpoints[1]
        np.testing.assert_allclose(x1, x0 + 0.1 * smooth(g, SpectrumSpec.constant(1.0), 2.0).score(x0))
        np.testing.assert_allclose(
            batch.samples, x1 + 0.1 * smooth(g, SpectrumSpec.constant(1.0), 1.0).score(x1)
        )

    def test_single_gaussian_tracks_ou_moments(self):
        # exact drift on a single Gaussian stays Gaussian: compare against the
        # per-coordinate discrete variance recursion
        g = single_gaussian(d=2, var=1.0)
        sched = make_schedule(400, 9e-3, 10.0)
        cfg = ALDConfig(
            dim=2,
            schedule=sched,
            gamma=SpectrumSpec.constant(1.0),
            c_base=SpectrumSpec.constant(1.0),
        )
        batch = run_chains(cfg, g, 4096, seed=17)
        v = 1.0 + sched.theta0  # smoothed init variance
        for k in range(sched.n_steps - 1):
            vt = 1.0 + sched.levels[k]
            a = 1.0 - sched.dt / vt
            v = a * a * v + 2.0 * sched.dt
        emp = batch.samples.var(axis=0)
        se = v * math.sqrt(2.0 / batch.samples.shape[0])
        assert np.all(np.abs(emp - v) < 5 * se)
        assert np.all(np.abs(batch.samples.mean(axis=0)) < 5 * math.sqrt(v / batch.samples.shape[0]))

    def test_preconditioner_rescales_clock(self):
        # gamma = c*I with dt' = dt/c matches the base run distributionally
        g = single_gaussian(d=1)
        base = ALDConfig(
            dim=1,
            schedule=make_schedule(300, 9e-3, 10.0),
            gamma=SpectrumSpec.constant(1.0),
            c_base=SpectrumSpec.constant(1.0),
        )
        scaled = ALDConfig(
            dim=1,
            schedule=make_schedule(300, 3e-3, 10.0),
            gamma=SpectrumSpec.constant(3.0),
            c_base=SpectrumSpec.constant(1.0),
        )
        a = run_chains(base, g, 4096, seed=23).samples
        b = run_chains(scaled, g, 4096, seed=23).samples
        assert abs(a.mean() - b.mean()) < 0.1
        assert abs(a.var() - b.var()) / a.var() < 0.05

    def test_divergence_reports_chain_and_step(self):
        g = single_gaussian(d=1, var=1e-6)  # dt/v >> 2: unstable
        cfg = ALDConfig(
            dim=1,
            schedule=make_schedule(4000, 0.5, 1e-9),
            gamma=SpectrumSpec.constant(1.0),
            c_base=SpectrumSpec.constant(1e-9),
        )
        with pytest.raises(ChainDivergenceError) as err:
            run_chains(cfg, g, 8, seed=1)
        assert err.value.step >= 0 and err.value.chain >= 0

    def test_init_exact_smoothed_moments(self):
        g = fig2_target(2)
        c = SpectrumSpec.power_law(1.0, 2.7)
        pts = init_exact_smoothed(g, c, 40.0, 60_000, np.random.default_rng(2))
        sm = smooth(g, c, 40.0)
        w = sm.weights
        mean = w @ sm.means
        second = w @ (sm.variances + sm.means**2)
        var = second - mean**2
        np.testing.assert_allclose(pts.mean(axis=0), mean, atol=5 * np.sqrt(var / 60_000).max())
        np.testing.assert_allclose(pts.var(axis=0), var, rtol=0.05)

    def test_init_theta0_zero_samples_target(self):
        g = fig2_target(2)
        a = init_exact_smoothed(g, SpectrumSpec.constant(1.0), 0.0, 40, np.random.default_rng(3))
        b = g.sample(40, np.random.default_rng(3))
        np.testing.assert_array_equal(a, b)

    def test_custom_mixture_init(self):
        g = fig2_target(2)
        wrong = DiagGMM(weights=(0.1, 0.9), means=g.means, variances=g.variances)
        cfg = ALDConfig(
            dim=2,
            schedule=make_schedule(2, 0.01, 20.0),
            gamma=SpectrumSpec.constant(1.0),
            c_base=SpectrumSpec.constant(1.0),
            init_mode="custom_mixture",
            init_mixture=wrong,
        )
        batch = run_chains(cfg, g, 4000, seed=9, noise_scale=0.0, checkpoints=(0,))
        frac = float(np.mean(batch.checkpoints[0][:, 0] > 5.0))
        assert abs(frac - 0.9) < 0.03

    def test_config_validation(self):
        g = fig2_target(2)
        sched = make_schedule(5, 0.01, 20.0)
        with pytest.raises(EngineError):
            ALDConfig(dim=2, schedule=sched, gamma=SpectrumSpec.constant(1.0),
                      c_base=SpectrumSpec.constant(1.0), drift_mode="misspecified")
        with pytest.raises(EngineError):
            ALDConfig(dim=2, schedule=sched, gamma=SpectrumSpec.constant(1.0),
                      c_base=SpectrumSpec.constant(1.0), init_mode="custom_mixture")
        cfg = ALDConfig(dim=3, schedule=sched, gamma=SpectrumSpec.constant(1.0),
                        c_base=SpectrumSpec.constant(1.0))
        with pytest.raises(EngineError):
            run_chains(cfg, g, 10, seed=1)  # target dim mismatch


@pytest.mark.slow
def test_fig2_green_full_constants_d5():
    # full-scale-constant run at d=5 lands close to the target law
    g = fig2_target(5)
    cfg = ALDConfig(
        dim=5,
        schedule=make_schedule(20000, 9e-3, 20.0),
        gamma=SpectrumSpec.power_law(1.0, 1.5),
        c_base=SpectrumSpec.power_law(1.0, 2.7),
    )
    batch = run_chains(cfg, g, 2500, seed=41)
    target_pts = g.sample(2500, np.random.default_rng(42))
    est = knn_kl(target_pts, batch.samples, 20)
    assert est.value <= 0.5
