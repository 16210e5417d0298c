"""Readout of simulated states: Pauli tomography, NMR signals, curve fits.

Tomography here uses the complete Pauli set with exact expectation values.
It stands in for whatever readout-pulse set an experiment actually uses.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .pulsedsl import rotation
from .qmath import PAULIS, SIGMA_X, SIGMA_Y, DensityMatrix, DimensionError, as_operator, dagger


def pauli_labels(n: int) -> list[str]:
    """Non-identity Pauli products on ``n`` qubits, spin A first."""
    if n not in (1, 2):
        raise DimensionError("tomography supports 1 or 2 qubits")
    labels = ["".join(p) for p in itertools.product("IXYZ", repeat=n)]
    return labels[1:]


def pauli_operator(label: str) -> np.ndarray:
    m = np.array([[1]], dtype=complex)
    for ch in label:
        m = np.kron(m, PAULIS[ch])
    return m


@dataclass(frozen=True)
class TomographyRecord:
    expectations: dict[str, float]
    reconstructed: DensityMatrix


def reconstruct(expectations: dict[str, float], n: int) -> DensityMatrix:
    dim = 2**n
    m = np.eye(dim, dtype=complex)
    for label, value in expectations.items():
        m = m + value * pauli_operator(label)
    return DensityMatrix(m / dim)


def tomograph(
    rho: DensityMatrix, n: int, *, readout_sigma: float = 0.0, rng: np.random.Generator | None = None
) -> TomographyRecord:
    """Measure every Pauli expectation of ``rho`` and rebuild the state.

    A nonzero ``readout_sigma`` adds Gaussian noise to each expectation; the
    noisy reconstruction is projected back onto the physical states by
    clipping negative eigenvalues.
    """
    m = rho.matrix if isinstance(rho, DensityMatrix) else as_operator(rho)
    if m.shape[0] != 2**n:
        raise DimensionError(f"state of dim {m.shape[0]} is not an {n}-qubit state")
    exps = {label: float(np.real(np.trace(m @ pauli_operator(label)))) for label in pauli_labels(n)}
    if readout_sigma > 0:
        rng = rng if rng is not None else np.random.default_rng(0)
        exps = {k: v + float(rng.normal(0, readout_sigma)) for k, v in exps.items()}
        raw = np.eye(2**n, dtype=complex)
        for label, value in exps.items():
            raw = raw + value * pauli_operator(label)
        raw = raw / 2**n
        raw = (raw + dagger(raw)) / 2
        w, v = np.linalg.eigh(raw)
        w = np.clip(w, 0, None)
        w = w / w.sum()
        return TomographyRecord(exps, DensityMatrix(v @ np.diag(w) @ dagger(v)))
    return TomographyRecord(exps, reconstruct(exps, n))


def relative_error(theory: DensityMatrix, expt: DensityMatrix, *, deviation: bool = False) -> float:
    """Frobenius-norm ratio ||theory - expt|| / ||theory||.

    With ``deviation=True`` both states are first reduced to their traceless
    parts, which is what an NMR measurement actually sees.
    """
    a = theory.matrix if isinstance(theory, DensityMatrix) else as_operator(theory)
    b = expt.matrix if isinstance(expt, DensityMatrix) else as_operator(expt)
    if a.shape != b.shape:
        raise DimensionError("states have different dimensions")
    if deviation:
        eye = np.eye(a.shape[0]) / a.shape[0]
        a = a - eye
        b = b - eye
    denom = np.linalg.norm(a, "fro")
    if denom == 0:
        raise ValueError("theory matrix has zero norm")
    return float(np.linalg.norm(a - b, "fro") / denom)


@dataclass(frozen=True)
class NMRSignal:
    real_part: float
    imag_part: float
    z_readout: float


def nmr_signal(rho_b: DensityMatrix) -> NMRSignal:
    """Integrated spin-B signal, with a Y(pi/2) readout pulse for the z component.

    The receiver phase is set so the x magnetization appears in the real
    channel.
    """
    m = rho_b.matrix
    real = float(np.real(np.trace(m @ SIGMA_X)))
    imag = float(np.real(np.trace(m @ SIGMA_Y)))
    ry = rotation("Y", math.pi / 2)
    after = ry @ m @ dagger(ry)
    z = float(np.real(np.trace(after @ SIGMA_X)))
    return NMRSignal(real, imag, z)


@dataclass(frozen=True)
class FitResult:
    amplitude: float
    phase_offset: float
    baseline: float
    rms_residual: float

    def curve(self, xs) -> np.ndarray:
        return self.amplitude * np.cos(np.asarray(xs) + self.phase_offset) + self.baseline


def fit_sinusoid(xs, ys, cond_limit: float = 1e12) -> FitResult:
    """Least-squares fit of ``y = a cos(x + d) + c``.

    Solved linearly as ``y = p cos x + q sin x + c`` through the 3x3 normal
    equations, then ``a = hypot(p, q)`` and ``d = atan2(-q, p)``.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("xs and ys must be 1-d arrays of equal length")
    if len(xs) < 3:
        raise ValueError("need at least 3 points")
    if len(np.unique(xs)) != len(xs):
        raise ValueError("xs must be distinct")
    design = np.column_stack([np.cos(xs), np.sin(xs), np.ones_like(xs)])
    normal = design.T @ design
    if np.linalg.cond(normal) > cond_limit:
        raise np.linalg.LinAlgError("normal matrix is singular for these sample points")
    p, q, c = np.linalg.solve(normal, design.T @ ys)
    amplitude = math.hypot(p, q)
    phase = math.atan2(-q, p) if amplitude > 1e-14 else 0.0
    resid = ys - design @ np.array([p, q, c])
    return FitResult(amplitude, phase, float(c), float(np.sqrt(np.mean(resid**2))))


def wrap_phase(x: float) -> float:
    """Map an angle into (-pi, pi]."""
    y = math.remainder(x, 2 * math.pi)
    return math.pi if y == -math.pi else y
