"""Generalized stabilizers of LMESs and their controlled-unitary preparation.

The stabilizers ``U_k = U_ph X_k U_ph^dag`` share the eigenbasis
``|Psi_i> = U_ph H^n |i>``.  A circuit of controlled gates, one auxiliary
qubit per stabilizer, pushes any system input into the joint +1 eigenspace
and parks the input's coordinates on the auxiliary register.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ShapeError, TooLarge
from .reduced import LmesDescription
from .tensor import (
    EQ_TOL,
    PAULI,
    DiagonalUnitary,
    QubitRegister,
    StateVector,
    plus_state,
)

MAX_LME_QUBITS = 6

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def _check_size(n: int) -> None:
    if n > MAX_LME_QUBITS:
        raise TooLarge(f"{n} qubits exceeds the preparation cap of {MAX_LME_QUBITS}")


def _single_site(op: np.ndarray, k: int, n: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for j in range(n):
        out = np.kron(out, op if j == k else PAULI[0])
    return out


def _hadamard_all(n: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        out = np.kron(out, _H)
    return out


@dataclass(frozen=True)
class GeneralizedStabilizer:
    """Commuting observables ``U_k``, flips ``V_k`` and eigenbasis ``U_ph H^n``."""

    n: int
    phase_gate: DiagonalUnitary
    stabilizers: tuple[np.ndarray, ...]
    flips: tuple[np.ndarray, ...]
    eigenbasis: np.ndarray

    @property
    def register(self) -> QubitRegister:
        return self.phase_gate.register

    def eigenvector(self, bits) -> np.ndarray:
        """``|Psi_i>``, with eigenvalue ``(-1)^(i_k)`` under ``U_k``."""
        bits = list(bits)
        if len(bits) != self.n:
            raise ShapeError(f"need {self.n} bits, got {len(bits)}")
        index = int("".join(str(int(b)) for b in bits), 2) if bits else 0
        return self.eigenbasis[:, index]


def build_stabilizer(lmes: LmesDescription) -> GeneralizedStabilizer:
    n = lmes.n
    _check_size(n)
    u_ph = lmes.phase_gate()
    d = u_ph.diagonal
    basis = d[:, None] * _hadamard_all(n)
    stabilizers, flips = [], []
    for k in range(n):
        x_k = _single_site(PAULI[1], k, n)
        stabilizers.append(d[:, None] * x_k * d.conj()[None, :])
        # V_k swaps |Psi_{..0_k..}> with |Psi_{..1_k..}>
        v_k = basis @ x_k @ basis.conj().T
        z_k = _single_site(PAULI[3], k, n)
        if np.max(np.abs(v_k - z_k)) > EQ_TOL:
            raise NumericalError(f"flip operator V_{k} departs from Z_{k}")
        flips.append(v_k)
    return GeneralizedStabilizer(n, u_ph, tuple(stabilizers), tuple(flips), basis)


@dataclass(frozen=True)
class PreparationCircuit:
    """Controlled gates ``U_k^c = Ubar_k Utilde_k``, applied for ``k = n..1``."""

    stabilizer: GeneralizedStabilizer
    aux_prefix: str = "a"

    @property
    def n(self) -> int:
        return self.stabilizer.n

    @property
    def register(self) -> QubitRegister:
        aux = QubitRegister.numbered(self.n, self.aux_prefix)
        return self.stabilizer.register.concat(aux)

    def controlled_gate(self, k: int) -> np.ndarray:
        """Dense ``U_k^c`` on system then auxiliary qubits (small ``n`` only)."""
        n = self.n
        p0 = np.diag([1.0, 0.0]).astype(complex)
        p1 = np.diag([0.0, 1.0]).astype(complex)
        pp = _H @ p0 @ _H
        pm = _H @ p1 @ _H
        eye = np.eye(2**n, dtype=complex)
        tilde = np.kron(eye, _single_site(p0, k, n)) + np.kron(
            self.stabilizer.stabilizers[k], _single_site(p1, k, n)
        )
        bar = np.kron(eye, _single_site(pp, k, n)) + np.kron(
            self.stabilizer.flips[k], _single_site(pm, k, n)
        )
        return bar @ tilde


def _aux_axis_apply(psi: np.ndarray, k: int, op: np.ndarray, n: int) -> np.ndarray:
    """Apply a one-qubit ``op`` to auxiliary qubit ``k`` of a ``(2^n,)+(2,)*n`` tensor."""
    return np.moveaxis(np.tensordot(op, psi, axes=([1], [k + 1])), 0, k + 1)


def _controlled(psi: np.ndarray, k: int, sys_op: np.ndarray, n: int) -> np.ndarray:
    """``1 x |0><0| + sys_op x |1><1|`` on auxiliary qubit ``k``."""
    out = psi.copy()
    sel = [slice(None)] * (n + 1)
    sel[k + 1] = 1
    sel = tuple(sel)
    sub = psi[sel]
    out[sel] = np.tensordot(sys_op, sub, axes=([1], [0]))
    return out


def _run(stab: GeneralizedStabilizer, psi: np.ndarray, inverse: bool) -> np.ndarray:
    n = stab.n
    psi = psi.reshape((2**n,) + (2,) * n)
    order = range(n) if inverse else range(n - 1, -1, -1)
    for k in order:
        if inverse:
            # (Ubar Utilde)^dag = Utilde^dag Ubar^dag, both factors hermitian
            psi = _aux_axis_apply(psi, k, _H, n)
            psi = _controlled(psi, k, stab.flips[k], n)
            psi = _aux_axis_apply(psi, k, _H, n)
            psi = _controlled(psi, k, stab.stabilizers[k].conj().T, n)
        else:
            psi = _controlled(psi, k, stab.stabilizers[k], n)
            psi = _aux_axis_apply(psi, k, _H, n)
            psi = _controlled(psi, k, stab.flips[k], n)
            psi = _aux_axis_apply(psi, k, _H, n)
    return psi.reshape(-1)


def build_circuit(lmes: LmesDescription, aux_prefix: str = "a") -> PreparationCircuit:
    return PreparationCircuit(build_stabilizer(lmes), aux_prefix)


def _system_input(circ: PreparationCircuit, state) -> np.ndarray:
    amps = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    if amps.shape != (2**circ.n,):
        raise ShapeError(f"input must have {2**circ.n} amplitudes, got {amps.shape}")
    return amps


def prepare(circ: PreparationCircuit, state) -> StateVector:
    """``U_1^c ... U_n^c |Phi>_s |+>_a^n``."""
    _check_size(circ.n)
    phi = _system_input(circ, state)
    aux = np.full(2**circ.n, 2.0 ** (-circ.n / 2), dtype=complex)
    out = _run(circ.stabilizer, np.kron(phi, aux), inverse=False)
    return StateVector(circ.register, out)


def double_copy(lmes: LmesDescription, aux_prefix: str = "a") -> StateVector:
    """``|Psi>|Psi*>`` from the all-plus input."""
    circ = build_circuit(lmes, aux_prefix)
    return prepare(circ, plus_state(circ.stabilizer.register))


def auxiliary_state(lmes: LmesDescription, target) -> StateVector:
    """``H^n U_Psi^dag |Phi>`` with ``U_Psi = U_ph H^n``; equals ``U_ph^dag |Phi>``."""
    _check_size(lmes.n)
    stab = build_stabilizer(lmes)
    circ = PreparationCircuit(stab)
    phi = _system_input(circ, target)
    hn = _hadamard_all(lmes.n)
    amps = hn @ (stab.eigenbasis.conj().T @ phi)
    aux = QubitRegister.numbered(lmes.n, circ.aux_prefix)
    return StateVector(aux, amps, normalized=False)


def split_product(state: StateVector, n_first: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Schmidt decomposition across the first ``n_first`` qubits.

    Returns ``(coefficients, left, right)`` with ``left``/``right`` the
    leading Schmidt vectors.
    """
    rest = state.n_qubits - n_first
    if n_first < 1 or rest < 1:
        raise ShapeError("both sides of the cut need at least one qubit")
    mat = state.amplitudes.reshape(2**n_first, 2**rest)
    u, s, vh = np.linalg.svd(mat)
    return s, u[:, 0] * s[0], vh[0]


def invert_prepare(lmes: LmesDescription, target, tol: float = 1e-10) -> StateVector:
    """Auxiliary input that, run backwards with ``|Psi>``, produces ``target``.

    The reverse circuit is executed on ``|Psi> |phi>`` and must return
    ``|Phi> |+>^n``; otherwise :class:`NumericalError` is raised.
    """
    phi = auxiliary_state(lmes, target)
    stab = build_stabilizer(lmes)
    psi = lmes.state().amplitudes
    back = _run(stab, np.kron(psi, phi.amplitudes), inverse=True)
    goal = np.kron(_system_input(PreparationCircuit(stab), target),
                   np.full(2**lmes.n, 2.0 ** (-lmes.n / 2)))
    err = float(np.max(np.abs(back - goal)))
    if err > tol:
        raise NumericalError(f"reverse circuit misses the target by {err:.3e}")
    return phi
