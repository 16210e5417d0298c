"""Protocol operators for remote preparation of polar and equatorial qubits.

Each closed-form operator comes paired with the pulse program that realizes
it on the two-spin system; ``rspsim.cli verify`` checks the pairs agree.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .pulsedsl import J_COUPLING_HZ, Pulse, PulseSequence, parse_sequence
from .qmath import (
    E_MINUS,
    E_PLUS,
    HADAMARD,
    IDENTITY,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    dagger,
    kron,
)

TWO_PI = 2 * math.pi

SINGLET = np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2)

PAPER_SEQUENCES = ("epr", "not_a", "hadamard_a", "cnot_abar_b", "s_polar", "s_equatorial")


class Mode(str, enum.Enum):
    POLAR = "polar"
    EQUATORIAL = "equatorial"


@dataclass(frozen=True)
class QubitTarget:
    """State cos(theta/2)|0> + sin(theta/2) e^{i phi}|1> on a great circle.

    Angles are accepted on the closed interval [0, 2pi] so that sweeps can
    include both ends of the circle.
    """

    mode: Mode
    theta: float
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        for name in ("theta", "phi"):
            v = getattr(self, name)
            if not (math.isfinite(v) and 0 <= v <= TWO_PI):
                raise ValueError(f"{name}={v!r} outside [0, 2pi]")
        if self.mode is Mode.POLAR and self.phi != 0:
            raise ValueError("polar targets have phi = 0")
        if self.mode is Mode.EQUATORIAL and self.theta != math.pi / 2:
            raise ValueError("equatorial targets have theta = pi/2")

    @classmethod
    def polar(cls, theta: float) -> "QubitTarget":
        return cls(Mode.POLAR, theta, 0.0)

    @classmethod
    def equatorial(cls, phi: float) -> "QubitTarget":
        return cls(Mode.EQUATORIAL, math.pi / 2, phi)

    @classmethod
    def on_circle(cls, mode: Mode, angle: float) -> "QubitTarget":
        return cls.polar(angle) if Mode(mode) is Mode.POLAR else cls.equatorial(angle)

    @property
    def angle(self) -> float:
        """The free coordinate of the target's mode."""
        return self.theta if self.mode is Mode.POLAR else self.phi

    @property
    def alpha(self) -> float:
        return math.cos(self.theta / 2)

    @property
    def beta(self) -> complex:
        return math.sin(self.theta / 2) * complex(math.cos(self.phi), math.sin(self.phi))

    @property
    def ket(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)

    @property
    def ket_perp(self) -> np.ndarray:
        """The orthogonal state alpha|1> - beta*|0>."""
        return np.array([-self.beta.conjugate(), self.alpha], dtype=complex)

    @property
    def bloch(self) -> tuple[float, float, float]:
        st = math.sin(self.theta)
        return (st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta))


def rotation_r(target: QubitTarget) -> np.ndarray:
    """The rotation taking |0> to the target and |1> to its orthogonal state."""
    c = math.cos(target.theta / 2)
    s = math.sin(target.theta / 2)
    e = complex(math.cos(target.phi), math.sin(target.phi))
    return np.array([[c, -s * e.conjugate()], [s * e, c]], dtype=complex)


def r_plus_matrix(target: QubitTarget) -> np.ndarray:
    """Inverse of :func:`rotation_r`: rotates the measurement basis onto |0>, |1>."""
    return dagger(rotation_r(target))


def equatorial_angles(phi: float) -> tuple[float, float]:
    """Rotation angles of the X(t1) Ybar(t2) X(t1) decomposition.

    ``t2`` is left signed when cos(phi) < 0 rather than folded into a
    different branch.
    """
    theta1 = math.atan(math.sin(phi))
    theta2 = 2 * math.asin(math.cos(phi) / math.sqrt(2))
    return theta1, theta2


def r_plus_sequence(target: QubitTarget, rf_duration_per_radian: float = 0.0) -> PulseSequence:
    if target.mode is Mode.POLAR:
        pulse = Pulse.rf("Y", "A", -target.theta, rf_duration_per_radian)
        return PulseSequence((pulse,), f"R+ polar theta={target.theta:.12g}")
    theta1, theta2 = equatorial_angles(target.phi)
    x1 = Pulse.rf("X", "A", theta1, rf_duration_per_radian)
    pulses = (x1, Pulse.rf("Y", "A", -theta2, rf_duration_per_radian), x1)
    return PulseSequence(pulses, f"R+ equatorial phi={target.phi:.12g}")


def correction_u(mode: Mode) -> np.ndarray:
    """Bob's correction: maps the orthogonal state back onto the target."""
    return 1j * SIGMA_Y if Mode(mode) is Mode.POLAR else SIGMA_Z.copy()


def conditional_s(mode: Mode) -> np.ndarray:
    """U on spin B when spin A is |0>, identity when A is |1>."""
    return kron(E_PLUS, correction_u(mode)) + kron(E_MINUS, IDENTITY)


@lru_cache(maxsize=None)
def _sequence_text(name: str) -> str:
    return resources.files("rspsim.sequences").joinpath(f"{name}.pulse").read_text(encoding="utf-8")


def paper_sequence(name: str, j_coupling: float = J_COUPLING_HZ, rf_duration_per_radian: float = 0.0) -> PulseSequence:
    """Load one of the bundled pulse programs listed in ``PAPER_SEQUENCES``."""
    if name not in PAPER_SEQUENCES:
        raise KeyError(f"no bundled sequence {name!r}")
    return parse_sequence(
        _sequence_text(name), name, j_coupling=j_coupling, rf_duration_per_radian=rf_duration_per_radian
    )


def s_sequence(mode: Mode, **kwargs) -> PulseSequence:
    return paper_sequence("s_polar" if Mode(mode) is Mode.POLAR else "s_equatorial", **kwargs)


def s_operator(mode: Mode, **kwargs) -> tuple[np.ndarray, PulseSequence]:
    return conditional_s(mode), s_sequence(mode, **kwargs)


NOT_A = kron(SIGMA_X, IDENTITY)
HADAMARD_A = kron(HADAMARD, IDENTITY)
# Flips B iff A is |0> (empty-circle control).
CNOT_ABAR_B = kron(E_PLUS, SIGMA_X) + kron(E_MINUS, IDENTITY)


@dataclass(frozen=True)
class EPRNetwork:
    gate_list: tuple[tuple[str, np.ndarray], ...]
    pulse_equivalent: PulseSequence

    def ideal_unitary(self) -> np.ndarray:
        u = np.eye(4, dtype=complex)
        for _, g in self.gate_list:
            u = g @ u
        return u


def epr_network(**kwargs) -> EPRNetwork:
    """N_A, then H_A, then the A-bar controlled NOT, plus the compact pulse form."""
    gates = (("N_A", NOT_A), ("H_A", HADAMARD_A), ("CN_AbarB", CNOT_ABAR_B))
    return EPRNetwork(gates, paper_sequence("epr", **kwargs))


@dataclass(frozen=True)
class ProtocolOperators:
    r: np.ndarray
    r_plus: np.ndarray
    u: np.ndarray
    s: np.ndarray
    epr: np.ndarray


def protocol_operators(target: QubitTarget) -> ProtocolOperators:
    r = rotation_r(target)
    return ProtocolOperators(r, dagger(r), correction_u(target.mode), conditional_s(target.mode), SINGLET.copy())


def computational_ket(bits: str) -> np.ndarray:
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1
    return v
