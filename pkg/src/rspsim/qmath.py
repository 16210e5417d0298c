"""Dense complex linear algebra for one- and two-qubit systems.

Operators are plain ``numpy`` arrays of shape (2, 2) or (4, 4). Spin A is the
slow (left) tensor factor and spin B the fast (right) one, so the two-qubit
basis order is |00>, |01>, |10>, |11> with the first label belonging to A.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
EIGEN_FLOOR = -1e-10

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

# Projectors onto spin states |0> (E+) and |1> (E-).
E_PLUS = np.array([[1, 0], [0, 0]], dtype=complex)
E_MINUS = np.array([[0, 0], [0, 1]], dtype=complex)

PAULIS = {"I": IDENTITY, "X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}

KET_0 = np.array([1, 0], dtype=complex)
KET_1 = np.array([0, 1], dtype=complex)


class DimensionError(ValueError):
    """Raised when an operand has the wrong shape."""


class InvalidStateError(ValueError):
    """Raised when a matrix is not a valid density matrix."""


def as_operator(m, dims=(2, 4)) -> np.ndarray:
    """Return ``m`` as a complex square array, checking its dimension."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] not in dims:
        raise DimensionError(f"expected a square matrix of dim {dims}, got shape {a.shape}")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(m))


def is_unitary(u: np.ndarray, tol: float = 1e-12) -> bool:
    u = np.asarray(u)
    return bool(np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0]))) <= tol)


class BlochVector(NamedTuple):
    x: float
    y: float
    z: float

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.x**2 + self.y**2 + self.z**2))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated density matrix (Hermitian, unit trace, positive semidefinite).

    The wrapped array is made read-only so instances can be shared freely.
    """

    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = as_operator(self.matrix).copy()
        herm_err = np.max(np.abs(m - dagger(m)))
        if herm_err > HERMITIAN_TOL:
            raise InvalidStateError(f"matrix is not Hermitian (max deviation {herm_err:.3g})")
        tr = np.trace(m)
        if abs(tr - 1) > TRACE_TOL:
            raise InvalidStateError(f"trace is {tr:.15g}, expected 1")
        min_eig = np.linalg.eigvalsh(m).min()
        if min_eig < EIGEN_FLOOR:
            raise InvalidStateError(f"matrix has negative eigenvalue {min_eig:.3g}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_ket(cls, ket, label: str = "") -> "DensityMatrix":
        v = np.asarray(ket, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()), label)

    @classmethod
    def maximally_mixed(cls, dim: int = 2, label: str = "") -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim, label)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    @property
    def deviation(self) -> np.ndarray:
        """Traceless part of the state, ``rho - I/d``."""
        return self.matrix - np.eye(self.dim) / self.dim

    def evolve(self, u: np.ndarray) -> "DensityMatrix":
        u = as_operator(u, (self.dim,))
        return DensityMatrix(_hermitize(u @ self.matrix @ dagger(u)), self.label)


def _hermitize(m: np.ndarray) -> np.ndarray:
    # Symmetrize roundoff so repeated evolution stays inside the tolerances.
    return (m + dagger(m)) / 2


def kron(a, b) -> np.ndarray:
    """Tensor product of two single-qubit operators, ``a`` acting on spin A."""
    a = as_operator(a, (2,))
    b = as_operator(b, (2,))
    return np.kron(a, b)


def apply_to_spin(u, spin: str) -> np.ndarray:
    """Embed a single-qubit operator on spin ``"A"`` or ``"B"``."""
    u = as_operator(u, (2,))
    if spin == "A":
        return np.kron(u, IDENTITY)
    if spin == "B":
        return np.kron(IDENTITY, u)
    raise ValueError(f"unknown spin {spin!r}; expected 'A' or 'B'")


def partial_trace(rho: DensityMatrix, keep: str) -> DensityMatrix:
    """Reduced state of the kept spin of a two-qubit density matrix."""
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(rho)
    if rho.dim != 4:
        raise DimensionError("partial_trace expects a 4x4 density matrix")
    t = rho.matrix.reshape(2, 2, 2, 2)  # indices: a, b, a', b'
    if keep == "B":
        reduced = np.einsum("abad->bd", t)
    elif keep == "A":
        reduced = np.einsum("abcb->ac", t)
    else:
        raise ValueError(f"unknown spin {keep!r}; expected 'A' or 'B'")
    return DensityMatrix(_hermitize(reduced), rho.label)


def fidelity(rho: DensityMatrix, pure_target, tol: float = 1e-12) -> float:
    """Overlap <psi|rho|psi> with a normalized pure target state."""
    psi = np.asarray(pure_target, dtype=complex).ravel()
    if abs(np.linalg.norm(psi) - 1) > tol:
        raise ValueError("target state is not normalized")
    m = rho.matrix if isinstance(rho, DensityMatrix) else as_operator(rho)
    if m.shape[0] != psi.shape[0]:
        raise DimensionError("state and target dimensions differ")
    f = float(np.real(psi.conj() @ m @ psi))
    return min(1.0, max(0.0, f))


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    diff = a.matrix - b.matrix
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


@dataclass(frozen=True)
class PhaseMatch:
    equal: bool
    phase: complex
    max_error: float

    def __bool__(self) -> bool:
        return self.equal


def equal_up_to_global_phase(u, v, tol: float = 1e-12) -> PhaseMatch:
    """Compare two arrays modulo a unit-modulus factor ``c`` with ``u ~ c * v``.

    The phase is read off the largest-magnitude entry of ``v``. Works for
    matrices and state vectors alike.
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape:
        raise DimensionError(f"shape mismatch {u.shape} vs {v.shape}")
    idx = np.unravel_index(np.argmax(np.abs(v)), v.shape)
    if abs(v[idx]) == 0:
        raise ValueError("reference matrix is zero")
    ratio = u[idx] / v[idx]
    if abs(ratio) == 0:
        phase = 1 + 0j
    else:
        phase = complex(ratio / abs(ratio))
    err = float(np.max(np.abs(u - phase * v)))
    return PhaseMatch(err <= tol, phase, err)


def bloch_vector(rho: DensityMatrix) -> BlochVector:
    m = rho.matrix if isinstance(rho, DensityMatrix) else as_operator(rho, (2,))
    if m.shape != (2, 2):
        raise DimensionError("bloch_vector expects a single-qubit state")
    if np.max(np.abs(m - dagger(m))) > HERMITIAN_TOL:
        raise InvalidStateError("matrix is not Hermitian")
    comps = [np.trace(m @ p) for p in (SIGMA_X, SIGMA_Y, SIGMA_Z)]
    return BlochVector(*(float(np.real(c)) for c in comps))


def ket_from_angles(theta: float, phi: float) -> np.ndarray:
    """cos(theta/2)|0> + sin(theta/2) e^{i phi}|1>."""
    return np.array([np.cos(theta / 2), np.sin(theta / 2) * np.exp(1j * phi)], dtype=complex)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Random state V diag(p) V^dagger with Haar-ish V from a QR decomposition."""
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    p = rng.random(dim)
    if rank is not None:
        p[rank:] = 0
    p = p / p.sum()
    return DensityMatrix(_hermitize(q @ np.diag(p) @ dagger(q)))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
