"""Identity checks tying every pulse program to the operator it realizes."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import gates
from .protocol import sweep_targets
from .pulsedsl import compile_sequence
from .qmath import HADAMARD, IDENTITY, SIGMA_X, SIGMA_Z, apply_to_spin, equal_up_to_global_phase, kron

TOL = 1e-12

# What the literal CNOT pulse text actually compiles to under our conventions.
CNOT_LOCAL_CORRECTION = kron(SIGMA_Z, SIGMA_Z)
CNOT_PHASE = cmath.exp(-3j * math.pi / 4)


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    max_error: float
    phase: complex
    expected_phase: complex | None = None
    tol: float = TOL

    @property
    def passed(self) -> bool:
        if self.max_error > self.tol:
            return False
        if self.expected_phase is not None:
            return abs(self.phase - self.expected_phase) <= self.tol
        return True


def _check(name, actual, expected, expected_phase=None) -> IdentityCheck:
    m = equal_up_to_global_phase(actual, expected, TOL)
    return IdentityCheck(name, m.max_error, m.phase, expected_phase)


def _worst(name, pairs, expected_phase=None) -> IdentityCheck:
    checks = [_check(name, a, e, expected_phase) for a, e in pairs]
    failing = [c for c in checks if not c.passed]
    return failing[0] if failing else max(checks, key=lambda c: c.max_error)


def _block_a(u4: np.ndarray) -> np.ndarray:
    # A-only unitaries are kron(u, I); read u off the B=0 sub-block.
    return u4[::2, ::2]


def run_identities(j_sign: int = 1) -> list[IdentityCheck]:
    """Evaluate every sequence/matrix identity; ``j_sign=-1`` is the negative control."""
    seq = {name: compile_sequence(gates.paper_sequence(name), j_sign=j_sign).unitary for name in gates.PAPER_SEQUENCES}
    ket00 = gates.computational_ket("00")
    checks = []

    checks.append(_check("epr pulse sequence |00> -> singlet", seq["epr"] @ ket00, gates.SINGLET))
    net = gates.epr_network()
    checks.append(_check("epr gate network N_A, H_A, CN |00> -> singlet", net.ideal_unitary() @ ket00, gates.SINGLET, 1))
    checks.append(_check("NOT_A pulse = sigma_x on A", seq["not_a"], kron(SIGMA_X, IDENTITY), -1j))
    checks.append(_check("H_A pulse = Hadamard on A", seq["hadamard_a"], kron(HADAMARD, IDENTITY), 1j))
    checks.append(
        _check(
            "CN pulse = (sz x sz) CN_AbarB (I x H)",
            seq["cnot_abar_b"],
            CNOT_LOCAL_CORRECTION @ gates.CNOT_ABAR_B @ kron(IDENTITY, HADAMARD),
            CNOT_PHASE,
        )
    )
    for mode, label, phase in (
        (gates.Mode.POLAR, "s_polar", 1),
        (gates.Mode.EQUATORIAL, "s_equatorial", cmath.exp(-1j * math.pi / 4)),
    ):
        checks.append(_check(f"S {mode.value} pulse = U x E+ + I x E-", seq[label], gates.conditional_s(mode), phase))

    for mode in gates.Mode:
        pairs = []
        for _, _, _, target in sweep_targets(mode):
            u = compile_sequence(gates.r_plus_sequence(target), j_sign=j_sign).unitary
            pairs.append((_block_a(u), gates.r_plus_matrix(target)))
        checks.append(_worst(f"R+ {mode.value} pulse grid = closed form", pairs))

    pairs = []
    for mode in gates.Mode:
        for _, _, _, target in sweep_targets(mode):
            psi, perp = target.ket, target.ket_perp
            lhs = (np.kron(psi, perp) - np.kron(perp, psi)) / math.sqrt(2)
            pairs.append((lhs, gates.SINGLET))
    checks.append(_worst("singlet expands in every target basis", pairs, 1))

    pairs = []
    for mode in gates.Mode:
        for _, _, _, target in sweep_targets(mode):
            after = apply_to_spin(gates.r_plus_matrix(target), "A") @ gates.SINGLET
            expected = (np.kron([1, 0], target.ket_perp) - np.kron([0, 1], target.ket)) / math.sqrt(2)
            pairs.append((after, expected))
    checks.append(_worst("R+ on A maps singlet to |0>|perp> - |1>|psi>", pairs, 1))
    return checks


def _fmt_phase(z: complex) -> str:
    turns = cmath.phase(z) / math.pi
    if abs(turns) < 5e-7:
        turns = 0.0
    return f"exp({turns:+.6f}i*pi)"


def format_report(checks: list[IdentityCheck]) -> str:
    lines = []
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        lines.append(f"{status}  {c.name:<52s} max_err={c.max_error:.3e}  phase={_fmt_phase(c.phase)}")
    n_pass = sum(c.passed for c in checks)
    lines.append(f"{n_pass}/{len(checks)} identities hold")
    return "\n".join(lines) + "\n"

