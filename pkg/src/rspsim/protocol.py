"""End-to-end remote state preparation on two-spin density matrices.

Alice holds spin A and Bob spin B. A run prepares the singlet, rotates
Alice's spin by R+, then either applies the conditional unitary S (the
ensemble substitute for measurement plus feed-forward) or takes both
projective-measurement branches explicitly, and finally traces out spin A.

T1/T2 relaxation acts during timed pulses (J evolutions, and rf pulses when
they are given a duration) and during an optional delay before acquisition.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import gates
from .gates import Mode, QubitTarget
from .pulsedsl import J_COUPLING_HZ, PulseSequence, compile_sequence, pulse_unitary
from .qmath import (
    E_MINUS,
    E_PLUS,
    IDENTITY,
    SIGMA_Z,
    BlochVector,
    DensityMatrix,
    apply_to_spin,
    bloch_vector,
    dagger,
    fidelity,
    kron,
    partial_trace,
)
from .tomography import NMRSignal, nmr_signal, relative_error, tomograph

class MeasurementPath(str, enum.Enum):
    CONDITIONAL_S = "conditional"
    PROJECTIVE_BRANCH = "projective"


class Source(str, enum.Enum):
    PULSE_LEVEL = "pulse"
    IDEAL_GATE_LEVEL = "ideal"


@dataclass(frozen=True)
class NoiseParams:
    """Relaxation constants in seconds and the scalar coupling in Hz.

    Defaults are the 1H (spin A) / 13C (spin B) values of chloroform.
    """

    t1_a: float = 4.8
    t2_a: float = 0.2
    t1_b: float = 17.2
    t2_b: float = 0.35
    j_coupling: float = J_COUPLING_HZ
    enabled: bool = True
    acquisition_delay: float = 0.0

    def __post_init__(self):
        for name in ("t1_a", "t2_a", "t1_b", "t2_b", "j_coupling"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v!r}")
        if self.t2_a > 2 * self.t1_a or self.t2_b > 2 * self.t1_b:
            raise ValueError("T2 must not exceed 2*T1")
        if self.acquisition_delay < 0:
            raise ValueError("acquisition_delay must be non-negative")

    @classmethod
    def disabled(cls, **overrides) -> "NoiseParams":
        return cls(enabled=False, **overrides)

    def scaled_t2(self, factor: float) -> "NoiseParams":
        return NoiseParams(
            self.t1_a, self.t2_a * factor, self.t1_b, self.t2_b * factor,
            self.j_coupling, self.enabled, self.acquisition_delay,
        )

    def spin(self, name: str) -> tuple[float, float]:
        return (self.t1_a, self.t2_a) if name == "A" else (self.t1_b, self.t2_b)


def pure_dephasing_time(t1: float, t2: float) -> float:
    """T2' with 1/T2' = 1/T2 - 1/(2 T1); infinite when there is no pure dephasing."""
    rate = 1 / t2 - 1 / (2 * t1)
    return math.inf if rate <= 0 else 1 / rate


def relaxation_kraus(dt: float, t1: float, t2: float) -> list[np.ndarray]:
    """Kraus operators of amplitude damping followed by pure dephasing on one spin.

    Coherences decay as exp(-dt/T2) overall and populations relax to |0>
    as exp(-dt/T1).
    """
    gamma = -math.expm1(-dt / t1)
    lam = -math.expm1(-dt / pure_dephasing_time(t1, t2))
    damp = [
        np.array([[1, 0], [0, math.sqrt(1 - gamma)]], dtype=complex),
        np.array([[0, math.sqrt(gamma)], [0, 0]], dtype=complex),
    ]
    dephase = [math.sqrt(1 - lam / 2) * IDENTITY, math.sqrt(lam / 2) * SIGMA_Z]
    return [d @ a for d in dephase for a in damp]


def _relax(m: np.ndarray, dt: float, params: NoiseParams) -> np.ndarray:
    if dt == 0:
        return m
    for spin in ("A", "B"):
        ks = [apply_to_spin(k, spin) for k in relaxation_kraus(dt, *params.spin(spin))]
        m = sum(k @ m @ dagger(k) for k in ks)
    return (m + dagger(m)) / 2


def apply_relaxation(rho: DensityMatrix, dt: float, params: NoiseParams) -> DensityMatrix:
    """Independent T1/T2 relaxation of both spins for ``dt`` seconds."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(rho)
    return DensityMatrix(_relax(rho.matrix, dt, params), rho.label)


def pseudo_pure_state(epsilon: float = 1.0) -> DensityMatrix:
    """(1 - eps) I/4 + eps |00><00|."""
    if not (0 < epsilon <= 1):
        raise ValueError("epsilon must lie in (0, 1]")
    m = (1 - epsilon) * np.eye(4, dtype=complex) / 4
    m[0, 0] += epsilon
    return DensityMatrix(m, f"pseudo-pure eps={epsilon:g}")


def _noisy(noise: NoiseParams | None) -> bool:
    return noise is not None and noise.enabled


def _evolve_sequence(m, seq: PulseSequence, noise: NoiseParams | None, j_sign: int = 1):
    if not _noisy(noise):
        u = compile_sequence(seq, j_sign=j_sign).unitary
        return u @ m @ dagger(u)
    for p in seq.pulses:
        u = pulse_unitary(p, j_sign=j_sign)
        # relaxation split symmetrically around the propagator
        m = _relax(m, p.duration / 2, noise)
        m = u @ m @ dagger(u)
        m = _relax(m, p.duration / 2, noise)
    return m


def _evolve_block(m, u: np.ndarray, duration: float, noise: NoiseParams | None):
    if _noisy(noise):
        m = _relax(m, duration / 2, noise)
    m = u @ m @ dagger(u)
    if _noisy(noise):
        m = _relax(m, duration / 2, noise)
    return m


@dataclass(frozen=True)
class Branches:
    """Outcome of measuring spin A in the computational basis.

    ``p_plus`` is the probability of |0>. A conditional Bob state is None
    when its branch has (numerically) zero probability.
    """

    p_plus: float
    p_minus: float
    bob_given_plus: DensityMatrix | None
    bob_given_minus: DensityMatrix | None


def measure_branches(state: DensityMatrix, zero_tol: float = 1e-15) -> Branches:
    m = state.matrix if isinstance(state, DensityMatrix) else np.asarray(state, dtype=complex)
    out = []
    for proj in (E_PLUS, E_MINUS):
        p_op = kron(proj, IDENTITY)
        p = float(np.real(np.trace(p_op @ m)))
        if p <= zero_tol:
            out.append((max(p, 0.0), None))
            continue
        post = p_op @ m @ p_op / p
        out.append((p, partial_trace(DensityMatrix((post + dagger(post)) / 2), keep="B")))
    (pp, bp), (pm, bm) = out
    return Branches(pp, pm, bp, bm)


def sample_branch(branches: Branches, correction: np.ndarray, rng: np.random.Generator):
    """Draw one measurement outcome and Bob's corrected state (demonstration only)."""
    outcome = 0 if rng.random() < branches.p_plus else 1
    if outcome == 0:
        return outcome, branches.bob_given_plus.evolve(correction)
    return outcome, branches.bob_given_minus


def _projective_step(m, u: np.ndarray):
    # Measure A, apply U on B for outcome |0>, nothing for |1>; keep the ensemble.
    k_plus = kron(E_PLUS, u)
    k_minus = kron(E_MINUS, IDENTITY)
    return k_plus @ m @ dagger(k_plus) + k_minus @ m @ dagger(k_minus)


@dataclass(frozen=True)
class RSPResult:
    target: QubitTarget
    bob_bloch: BlochVector
    fidelity: float
    delta: float
    branch_probs: tuple[float, float]
    path: MeasurementPath
    noisy: bool
    bob_state: DensityMatrix = field(repr=False)
    delta_deviation: float = 0.0
    source: Source = Source.PULSE_LEVEL
    epsilon: float = 1.0

    @property
    def signal(self) -> NMRSignal:
        return nmr_signal(self.bob_state)


def theory_state(target: QubitTarget, epsilon: float = 1.0) -> DensityMatrix:
    """What Bob should hold: the target, diluted by the pseudo-pure background."""
    pure = np.outer(target.ket, target.ket.conj())
    return DensityMatrix((1 - epsilon) * IDENTITY / 2 + epsilon * pure, "theory")


def run_rsp(
    target: QubitTarget,
    path: MeasurementPath | str = MeasurementPath.CONDITIONAL_S,
    noise: NoiseParams | None = None,
    source: Source | str = Source.PULSE_LEVEL,
    *,
    epsilon: float = 1.0,
    rf_duration_per_radian: float = 0.0,
    j_sign: int = 1,
) -> RSPResult:
    """Run the full protocol for one target and read out Bob's spin."""
    if not isinstance(target, QubitTarget):
        raise TypeError("target must be a QubitTarget")
    path = MeasurementPath(path)
    source = Source(source)
    j_hz = noise.j_coupling if noise is not None else J_COUPLING_HZ
    seq_kw = {"j_coupling": j_hz, "rf_duration_per_radian": rf_duration_per_radian}

    m = pseudo_pure_state(epsilon).matrix
    network = gates.epr_network(**seq_kw)
    r_plus_seq = gates.r_plus_sequence(target, rf_duration_per_radian)
    s_seq = gates.s_sequence(target.mode, **seq_kw)

    if source is Source.PULSE_LEVEL:
        m = _evolve_sequence(m, network.pulse_equivalent, noise, j_sign)
        m = _evolve_sequence(m, r_plus_seq, noise, j_sign)
    else:
        m = _evolve_block(m, network.ideal_unitary(), network.pulse_equivalent.total_duration, noise)
        m = _evolve_block(m, apply_to_spin(gates.r_plus_matrix(target), "A"), r_plus_seq.total_duration, noise)

    branches = measure_branches(DensityMatrix((m + dagger(m)) / 2))

    if path is MeasurementPath.PROJECTIVE_BRANCH:
        m = _projective_step(m, gates.correction_u(target.mode))
    elif source is Source.PULSE_LEVEL:
        m = _evolve_sequence(m, s_seq, noise, j_sign)
    else:
        m = _evolve_block(m, gates.conditional_s(target.mode), s_seq.total_duration, noise)

    if _noisy(noise) and noise.acquisition_delay:
        m = _relax(m, noise.acquisition_delay, noise)

    bob = partial_trace(DensityMatrix((m + dagger(m)) / 2, "protocol output"), keep="B")
    theory = theory_state(target, epsilon)
    measured = tomograph(bob, 1).reconstructed
    return RSPResult(
        target=target,
        bob_bloch=bloch_vector(bob),
        fidelity=fidelity(bob, target.ket),
        delta=relative_error(theory, measured),
        branch_probs=(branches.p_plus, branches.p_minus),
        path=path,
        noisy=_noisy(noise),
        bob_state=bob,
        delta_deviation=relative_error(theory, measured, deviation=True),
        source=source,
        epsilon=epsilon,
    )


@dataclass(frozen=True)
class SweepRecord:
    index: int
    angle: float
    angle_label: str
    real_signal: float
    imag_signal: float
    z_readout: float
    fidelity: float
    delta: float
    p_plus: float
    delta_deviation: float | None = None


DEFAULT_DIVISIONS = {Mode.POLAR: 12, Mode.EQUATORIAL: 8}


def sweep_targets(mode: Mode | str, divisions: int | None = None) -> list[tuple[int, float, str, QubitTarget]]:
    """Grid points k*pi/divisions for k = 0 .. 2*divisions (both ends of the circle)."""
    mode = Mode(mode)
    n = divisions or DEFAULT_DIVISIONS[mode]
    out = []
    for k in range(2 * n + 1):
        angle = k * math.pi / n
        out.append((k, angle, f"{k}*pi/{n}", QubitTarget.on_circle(mode, angle)))
    return out


def run_sweep(
    mode: Mode | str,
    noise: NoiseParams | None = None,
    path: MeasurementPath | str = MeasurementPath.CONDITIONAL_S,
    source: Source | str = Source.PULSE_LEVEL,
    *,
    epsilon: float = 1.0,
    divisions: int | None = None,
    rf_duration_per_radian: float = 0.0,
    workers: int = 1,
) -> list[SweepRecord]:
    points = sweep_targets(mode, divisions)

    def one(point):
        k, angle, label, target = point
        res = run_rsp(target, path, noise, source, epsilon=epsilon, rf_duration_per_radian=rf_duration_per_radian)
        sig = res.signal
        return SweepRecord(
            index=k,
            angle=angle,
            angle_label=label,
            real_signal=sig.real_part,
            imag_signal=sig.imag_part,
            z_readout=sig.z_readout,
            fidelity=res.fidelity,
            delta=res.delta,
            p_plus=res.branch_probs[0],
            delta_deviation=res.delta_deviation if epsilon < 1 else None,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(one, points))
    else:
        records = [one(p) for p in points]
    return sorted(records, key=lambda r: r.index)
