import math

import numpy as np
import pytest

import oracles
from rspsim.gates import Mode, QubitTarget, correction_u, epr_network, r_plus_matrix
from rspsim.protocol import (
    MeasurementPath,
    NoiseParams,
    Source,
    apply_relaxation,
    measure_branches,
    pseudo_pure_state,
    pure_dephasing_time,
    relaxation_kraus,
    run_rsp,
    run_sweep,
    sample_branch,
    sweep_targets,
)
from rspsim.qmath import DensityMatrix, apply_to_spin, random_density_matrix, trace_distance

DEFAULT_NOISE = NoiseParams()
T_HALF_J = 1 / (2 * 214.95)


def post_r_plus(target):
    u = apply_to_spin(r_plus_matrix(target), "A") @ epr_network().ideal_unitary()
    return DensityMatrix.from_ket(u[:, 0])


class TestNoiseParams:
    def test_defaults(self):
        p = NoiseParams()
        assert (p.t1_a, p.t2_a, p.t1_b, p.t2_b, p.j_coupling) == (4.8, 0.2, 17.2, 0.35, 214.95)

    @pytest.mark.parametrize("kw", [{"t1_a": 0}, {"t2_b": -1}, {"t2_a": 10.0}, {"acquisition_delay": -1}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            NoiseParams(**kw)

    def test_pure_dephasing_time(self):
        assert pure_dephasing_time(4.8, 0.2) == pytest.approx(0.2042553191489362, rel=1e-14)
        assert pure_dephasing_time(1.0, 2.0) == math.inf


class TestRelaxation:
    def test_dt_zero_identity(self, rng):
        rho = random_density_matrix(4, rng)
        assert np.max(np.abs(apply_relaxation(rho, 0, DEFAULT_NOISE).matrix - rho.matrix)) == 0

    def test_kraus_completeness(self):
        for dt in (1e-4, 0.01, 1.0):
            ks = relaxation_kraus(dt, 4.8, 0.2)
            assert np.max(np.abs(sum(k.conj().T @ k for k in ks) - np.eye(2))) < 1e-14

    def test_long_time_fixed_point(self, rng):
        rho = random_density_matrix(4, rng)
        out = apply_relaxation(rho, 1e4, DEFAULT_NOISE)
        np.testing.assert_allclose(out.matrix, np.diag([1, 0, 0, 0]), atol=1e-12)

    def test_proton_coherence_half_j(self):
        plus_a = DensityMatrix.from_ket(np.kron([1, 1], [1, 0]) / math.sqrt(2))
        out = apply_relaxation(plus_a, T_HALF_J, DEFAULT_NOISE)
        coherence = 2 * out.matrix[0, 2].real
        # total transverse decay exp(-dt/T2); the pure-dephasing share is exp(-dt/T2')
        assert coherence == pytest.approx(0.9884367623412204, rel=1e-12)
        assert math.exp(-T_HALF_J / pure_dephasing_time(4.8, 0.2)) == pytest.approx(0.9886762939482093, rel=1e-12)

    def test_population_decay(self):
        one = DensityMatrix.from_ket([0, 0, 1, 0])
        out = apply_relaxation(one, 0.5, DEFAULT_NOISE)
        assert out.matrix[2, 2].real == pytest.approx(math.exp(-0.5 / 4.8))

    def test_trace_and_positivity(self, rng):
        for _ in range(100):
            rho = random_density_matrix(4, rng)
            dt = float(rng.exponential(0.1))
            out = apply_relaxation(rho, dt, DEFAULT_NOISE)
            assert abs(np.trace(out.matrix) - 1) < 1e-12
            assert np.linalg.eigvalsh(out.matrix).min() > -1e-10

    def test_negative_dt(self, rng):
        with pytest.raises(ValueError):
            apply_relaxation(random_density_matrix(4, rng), -1, DEFAULT_NOISE)


class TestPseudoPure:
    def test_traceless_deviation(self):
        rho = pseudo_pure_state(0.3)
        assert abs(np.trace(rho.deviation)) < 1e-15
        np.testing.assert_array_equal(pseudo_pure_state(1).matrix, np.diag([1, 0, 0, 0]))

    def test_bad_epsilon(self):
        with pytest.raises(ValueError):
            pseudo_pure_state(0)

    @pytest.mark.parametrize("eps", [0.05, 0.4, 0.9])
    def test_linearity(self, eps):
        for mode in Mode:
            for *_, t in sweep_targets(mode)[::3]:
                pure = run_rsp(t).bob_bloch.as_array()
                diluted = run_rsp(t, epsilon=eps).bob_bloch.as_array()
                assert np.max(np.abs(diluted - eps * pure)) < 1e-10


class TestMeasureBranches:
    def test_equal_branches(self):
        for mode in Mode:
            for *_, t in sweep_targets(mode):
                b = measure_branches(post_r_plus(t))
                assert abs(b.p_plus - 0.5) < 1e-12 and abs(b.p_minus - 0.5) < 1e-12

    def test_plus_branch_holds_perp(self):
        t = QubitTarget.polar(1.1)
        b = measure_branches(post_r_plus(t))
        np.testing.assert_allclose(b.bob_given_plus.matrix, np.outer(t.ket_perp, t.ket_perp.conj()), atol=1e-12)
        np.testing.assert_allclose(b.bob_given_minus.matrix, np.outer(t.ket, t.ket.conj()), atol=1e-12)

    def test_product_input(self, rng):
        rho_b = random_density_matrix(2, rng)
        state = DensityMatrix(np.kron(np.diag([1, 0]), rho_b.matrix))
        b = measure_branches(state)
        assert b.p_plus == pytest.approx(1)
        assert b.bob_given_minus is None
        np.testing.assert_allclose(b.bob_given_plus.matrix, rho_b.matrix, atol=1e-14)

    def test_sampling_is_seeded(self):
        t = QubitTarget.equatorial(0.7)
        b = measure_branches(post_r_plus(t))
        draws = [sample_branch(b, correction_u(t.mode), np.random.default_rng(5))[0] for _ in range(3)]
        assert len(set(draws)) == 1
        for seed in range(10):
            _, bob = sample_branch(b, correction_u(t.mode), np.random.default_rng(seed))
            assert bob.matrix[0, 1] == pytest.approx(np.outer(t.ket, t.ket.conj())[0, 1])


class TestRunRSP:
    def test_polar_zero(self):
        res = run_rsp(QubitTarget.polar(0))
        assert res.bob_bloch == pytest.approx((0, 0, 1), abs=1e-12)
        assert res.fidelity == pytest.approx(1, abs=1e-10)
        assert res.branch_probs == pytest.approx((0.5, 0.5), abs=1e-12)

    def test_polar_pi_over_3(self):
        expected = oracles.bloch(oracles.bob_state_vector_pipeline("polar", math.pi / 3))
        np.testing.assert_allclose(expected, (math.sin(math.pi / 3), 0, 0.5), atol=1e-12)
        res = run_rsp(QubitTarget.polar(math.pi / 3), source=Source.PULSE_LEVEL)
        assert np.max(np.abs(res.bob_bloch.as_array() - expected)) < 1e-10

    def test_equatorial_3pi_over_8(self):
        phi = 3 * math.pi / 8
        expected = oracles.bloch(oracles.bob_state_vector_pipeline("equatorial", phi))
        np.testing.assert_allclose(expected, (math.cos(phi), math.sin(phi), 0), atol=1e-12)
        res = run_rsp(QubitTarget.equatorial(phi))
        assert np.max(np.abs(res.bob_bloch.as_array() - expected)) < 1e-10

    @pytest.mark.parametrize("path", list(MeasurementPath))
    @pytest.mark.parametrize("source", list(Source))
    def test_all_sweep_targets(self, path, source):
        for mode in Mode:
            for *_, t in sweep_targets(mode):
                res = run_rsp(t, path, None, source)
                assert abs(res.fidelity - 1) < 1e-10
                assert np.max(np.abs(res.bob_bloch.as_array() - t.bloch)) < 1e-10
                assert res.delta < 1e-10

    def test_paths_agree(self):
        for mode in Mode:
            for *_, t in sweep_targets(mode):
                a = run_rsp(t, MeasurementPath.CONDITIONAL_S)
                b = run_rsp(t, MeasurementPath.PROJECTIVE_BRANCH)
                assert trace_distance(a.bob_state, b.bob_state) < 1e-10

    def test_invalid_target(self):
        with pytest.raises(TypeError):
            run_rsp((0.0, 0.0))

    def test_disabled_noise_is_noiseless(self):
        t = QubitTarget.polar(1.0)
        res = run_rsp(t, noise=NoiseParams.disabled())
        assert not res.noisy and abs(res.fidelity - 1) < 1e-10

    def test_noise_lowers_fidelity(self):
        res = run_rsp(QubitTarget.equatorial(0.3), noise=DEFAULT_NOISE)
        assert res.noisy
        assert 0.9 < res.fidelity < 1
        assert res.delta > 0

    @pytest.mark.parametrize("source", list(Source))
    def test_t2_monotonicity(self, source):
        t = QubitTarget.polar(math.pi / 2)
        fids = [run_rsp(t, noise=DEFAULT_NOISE.scaled_t2(f), source=source).fidelity for f in (1, 0.5, 0.25)]
        assert fids[0] > fids[1] > fids[2]

    def test_acquisition_delay(self):
        t = QubitTarget.equatorial(1.0)
        base = run_rsp(t, noise=DEFAULT_NOISE).fidelity
        delayed = run_rsp(t, noise=NoiseParams(acquisition_delay=0.05)).fidelity
        assert delayed < base

    def test_rf_duration_adds_decay(self):
        t = QubitTarget.equatorial(1.0)
        base = run_rsp(t, noise=DEFAULT_NOISE).fidelity
        slow = run_rsp(t, noise=DEFAULT_NOISE, rf_duration_per_radian=1e-3).fidelity
        assert slow < base


class TestSweep:
    def test_polar(self):
        recs = run_sweep(Mode.POLAR)
        assert len(recs) == 25
        for k, r in enumerate(recs):
            theta = k * math.pi / 12
            assert r.index == k and r.angle == theta
            assert abs(r.real_signal - math.sin(theta)) < 1e-10
            assert abs(r.imag_signal) < 1e-10
            assert abs(r.z_readout - math.cos(theta)) < 1e-10

    def test_equatorial(self):
        recs = run_sweep(Mode.EQUATORIAL)
        assert len(recs) == 17
        for k, r in enumerate(recs):
            phi = k * math.pi / 8
            assert abs(r.real_signal - math.cos(phi)) < 1e-10
            assert abs(r.imag_signal - math.sin(phi)) < 1e-10

    def test_endpoints_coincide(self):
        recs = run_sweep(Mode.POLAR)
        first, last = recs[0], recs[-1]
        for field in ("real_signal", "imag_signal", "z_readout"):
            assert abs(getattr(first, field) - getattr(last, field)) < 1e-10

    def test_parallel_order(self):
        serial = run_sweep(Mode.EQUATORIAL, DEFAULT_NOISE)
        parallel = run_sweep(Mode.EQUATORIAL, DEFAULT_NOISE, workers=4)
        assert serial == parallel

    def test_deviation_column_only_when_pseudo_pure(self):
        assert run_sweep(Mode.POLAR)[0].delta_deviation is None
        assert run_sweep(Mode.POLAR, epsilon=0.5)[0].delta_deviation is not None
