import cmath
import math

import numpy as np
import pytest

import oracles
from rspsim import gates
from rspsim.gates import Mode, QubitTarget
from rspsim.protocol import sweep_targets
from rspsim.pulsedsl import compile_sequence
from rspsim.qmath import (
    E_MINUS,
    E_PLUS,
    HADAMARD,
    IDENTITY,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    apply_to_spin,
    equal_up_to_global_phase,
    is_unitary,
    kron,
)

ALL_TARGETS = [t for mode in Mode for *_, t in sweep_targets(mode)]


def random_targets(rng, n):
    out = []
    for _ in range(n):
        if rng.random() < 0.5:
            out.append(QubitTarget.polar(float(rng.uniform(0, 2 * math.pi))))
        else:
            out.append(QubitTarget.equatorial(float(rng.uniform(0, 2 * math.pi))))
    return out


class TestQubitTarget:
    def test_mode_constraints(self):
        with pytest.raises(ValueError):
            QubitTarget(Mode.POLAR, 1.0, 0.5)
        with pytest.raises(ValueError):
            QubitTarget(Mode.EQUATORIAL, 1.0, 0.5)
        with pytest.raises(ValueError):
            QubitTarget.polar(-0.1)

    def test_amplitudes(self):
        t = QubitTarget.equatorial(math.pi / 3)
        assert t.alpha == pytest.approx(1 / math.sqrt(2))
        assert t.beta == pytest.approx(cmath.exp(1j * math.pi / 3) / math.sqrt(2))
        assert abs(np.vdot(t.ket, t.ket_perp)) < 1e-15


class TestRotationR:
    def test_identity(self):
        np.testing.assert_allclose(gates.rotation_r(QubitTarget.polar(0)), IDENTITY, atol=1e-15)

    def test_polar_half_pi(self):
        np.testing.assert_allclose(
            gates.rotation_r(QubitTarget.polar(math.pi / 2)), np.array([[1, -1], [1, 1]]) / math.sqrt(2), atol=1e-15
        )

    def test_equatorial_half_pi(self):
        np.testing.assert_allclose(
            gates.rotation_r(QubitTarget.equatorial(math.pi / 2)), np.array([[1, 1j], [1j, 1]]) / math.sqrt(2), atol=1e-15
        )

    def test_columns(self, rng):
        for t in random_targets(rng, 50):
            r = gates.rotation_r(t)
            np.testing.assert_allclose(r[:, 0], t.ket, atol=1e-15)
            np.testing.assert_allclose(r[:, 1], t.ket_perp, atol=1e-15)


class TestRPlus:
    def test_polar_closed_form(self):
        for theta in np.linspace(0, 2 * math.pi, 25):
            c, s = math.cos(theta / 2), math.sin(theta / 2)
            np.testing.assert_allclose(gates.r_plus_matrix(QubitTarget.polar(theta)), [[c, s], [-s, c]], atol=1e-15)

    def test_equatorial_closed_form(self):
        for phi in np.linspace(0, 2 * math.pi, 17):
            e = cmath.exp(1j * phi)
            expected = np.array([[1, e.conjugate()], [-e, 1]]) / math.sqrt(2)
            np.testing.assert_allclose(gates.r_plus_matrix(QubitTarget.equatorial(phi)), expected, atol=1e-15)

    def test_unitarity(self, rng):
        for t in random_targets(rng, 50):
            assert np.max(np.abs(gates.r_plus_matrix(t) @ gates.rotation_r(t) - IDENTITY)) < 1e-15

    def test_maps_basis(self):
        for t in ALL_TARGETS:
            rp = gates.r_plus_matrix(t)
            m0 = equal_up_to_global_phase(rp @ t.ket, [1, 0])
            m1 = equal_up_to_global_phase(rp @ t.ket_perp, [0, 1])
            assert m0.equal and m1.equal
            assert abs(m0.phase - m1.phase) < 1e-12

    def test_angles_closed_form(self):
        assert gates.equatorial_angles(0) == (0, pytest.approx(math.pi / 2))
        t1, t2 = gates.equatorial_angles(math.pi / 2)
        assert t1 == pytest.approx(math.pi / 4)
        assert abs(t2) < 1e-15

    def test_equatorial_phi0_sequence(self):
        u = compile_sequence(gates.r_plus_sequence(QubitTarget.equatorial(0))).unitary[::2, ::2]
        np.testing.assert_allclose(u, np.array([[1, 1], [-1, 1]]) / math.sqrt(2), atol=1e-15)

    def test_equatorial_half_pi_sequence(self):
        u = compile_sequence(gates.r_plus_sequence(QubitTarget.equatorial(math.pi / 2))).unitary[::2, ::2]
        np.testing.assert_allclose(u, np.array([[1, -1j], [-1j, 1]]) / math.sqrt(2), atol=1e-15)

    @pytest.mark.parametrize("mode", list(Mode))
    def test_sequence_grid_matches_matrix(self, mode):
        for k, angle, _, t in sweep_targets(mode):
            u = compile_sequence(gates.r_plus_sequence(t)).unitary
            oracle = oracles.propagate(oracles.r_plus_pulses(mode.value, angle))
            assert np.max(np.abs(u - oracle)) < 1e-12
            err, _ = oracles.phase_aligned_error(oracle, apply_to_spin(gates.r_plus_matrix(t), "A"))
            assert err < 1e-12, (mode, k)
            assert equal_up_to_global_phase(u, apply_to_spin(gates.r_plus_matrix(t), "A")).max_error < 1e-12

    def test_pi_over_8(self):
        t = QubitTarget.equatorial(math.pi / 8)
        u = compile_sequence(gates.r_plus_sequence(t)).unitary[::2, ::2]
        assert equal_up_to_global_phase(u, gates.r_plus_matrix(t)).max_error < 1e-12


class TestSOperator:
    def test_polar_blocks(self):
        s, seq = gates.s_operator(Mode.POLAR)
        np.testing.assert_array_equal(s[:2, :2], 1j * SIGMA_Y)
        np.testing.assert_array_equal(s[2:, 2:], IDENTITY)
        assert np.max(np.abs(compile_sequence(seq).unitary - s)) < 1e-12

    def test_equatorial_phase(self):
        s, seq = gates.s_operator(Mode.EQUATORIAL)
        np.testing.assert_array_equal(s[:2, :2], SIGMA_Z)
        u = oracles.propagate(oracles.S_EQUATORIAL)
        assert np.max(np.abs(u - cmath.exp(-1j * math.pi / 4) * s)) < 1e-12
        m = equal_up_to_global_phase(compile_sequence(seq).unitary, s)
        assert m.equal and abs(m.phase - cmath.exp(-1j * math.pi / 4)) < 1e-12

    def test_squares(self):
        s = gates.conditional_s(Mode.POLAR)
        np.testing.assert_allclose(s @ s, kron(E_PLUS, -IDENTITY) + kron(E_MINUS, IDENTITY), atol=1e-15)
        for mode in Mode:
            assert is_unitary(gates.conditional_s(mode))


class TestCorrection:
    def test_polar_u_exact(self):
        for t in (x for x in ALL_TARGETS if x.mode is Mode.POLAR):
            np.testing.assert_allclose(gates.correction_u(Mode.POLAR) @ t.ket_perp, t.ket, atol=1e-15)

    def test_equatorial_u_up_to_phase(self):
        for t in (x for x in ALL_TARGETS if x.mode is Mode.EQUATORIAL):
            assert equal_up_to_global_phase(gates.correction_u(Mode.EQUATORIAL) @ t.ket_perp, t.ket).equal


class TestSinglet:
    def test_basis_expansion(self, rng):
        for theta, phi in zip(rng.uniform(0, 2 * math.pi, 100), rng.uniform(0, 2 * math.pi, 100)):
            psi = oracles.target_ket(theta, phi)
            perp = np.array([-np.conj(psi[1]), psi[0]])
            lhs = (np.kron(psi, perp) - np.kron(perp, psi)) / math.sqrt(2)
            assert np.max(np.abs(lhs - gates.SINGLET)) < 1e-12

    def test_post_r_plus_state(self):
        for t in ALL_TARGETS:
            out = apply_to_spin(gates.r_plus_matrix(t), "A") @ gates.SINGLET
            expected = (np.kron([1, 0], t.ket_perp) - np.kron([0, 1], t.ket)) / math.sqrt(2)
            assert np.max(np.abs(out - expected)) < 1e-12


class TestEPRNetwork:
    def test_ideal_network_step_by_step(self):
        net = gates.epr_network()
        names = [n for n, _ in net.gate_list]
        assert names == ["N_A", "H_A", "CN_AbarB"]
        state = gates.computational_ket("00")
        expected = [
            gates.computational_ket("10"),
            (gates.computational_ket("00") - gates.computational_ket("10")) / math.sqrt(2),
            gates.SINGLET,
        ]
        for (_, g), exp in zip(net.gate_list, expected):
            state = g @ state
            np.testing.assert_allclose(state, exp, atol=1e-15)

    def test_pulse_equivalent(self):
        net = gates.epr_network()
        out = compile_sequence(net.pulse_equivalent).unitary @ gates.computational_ket("00")
        m = equal_up_to_global_phase(out, gates.SINGLET)
        assert m.equal
        assert abs(m.phase - 1) < 1e-12

    def test_cnot_definition(self):
        np.testing.assert_array_equal(gates.CNOT_ABAR_B, kron(E_PLUS, SIGMA_X) + kron(E_MINUS, IDENTITY))

    def test_literal_cnot_relation(self):
        u = oracles.propagate(oracles.CNOT_TEXT)
        rel = kron(SIGMA_Z, SIGMA_Z) @ gates.CNOT_ABAR_B @ kron(IDENTITY, HADAMARD)
        assert np.max(np.abs(u - cmath.exp(-3j * math.pi / 4) * rel)) < 1e-12
        assert np.max(np.abs(compile_sequence(gates.paper_sequence("cnot_abar_b")).unitary - u)) < 1e-12

    def test_not_pulse(self):
        u = compile_sequence(gates.paper_sequence("not_a")).unitary
        np.testing.assert_allclose(u, -1j * kron(SIGMA_X, IDENTITY), atol=1e-15)
