"""Reduced states of locally maximally entangleable states (LMESs).

An LMES is ``U |+>^n`` with ``U`` a product of pure phase gates.  Its reduced
state on the system qubits fixes the dephasing map of the same gates, so
everything here doubles as a map constructor.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import ShapeError, UnsupportedPattern
from .pattern import InteractionPattern, PurePhaseGate, WeightedGraph, label_key
from .tensor import (
    DensityMatrix,
    DiagonalUnitary,
    QubitRegister,
    StateVector,
    bit_table,
    partial_trace,
    plus_state,
)


@dataclass(frozen=True)
class LmesDescription:
    """``|Psi> = U |+>^n`` with ``U`` the product of ``gates``."""

    labels: tuple[str, ...]
    gates: tuple[PurePhaseGate, ...] = ()

    def __post_init__(self):
        labels = tuple(self.labels)
        gates = tuple(
            g if isinstance(g, PurePhaseGate) else PurePhaseGate(tuple(g[0]), g[1])
            for g in self.gates
        )
        known = set(labels)
        for g in gates:
            if not set(g.support) <= known:
                raise ShapeError(f"gate support {g.support} not inside {labels}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "gates", tuple(sorted(gates, key=PurePhaseGate.sort_key)))

    @classmethod
    def from_pattern(cls, p: InteractionPattern) -> "LmesDescription":
        return cls(p.register.labels, p.gates)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def register(self) -> QubitRegister:
        return QubitRegister(self.labels)

    def phase_gate(self) -> DiagonalUnitary:
        return DiagonalUnitary.from_pure_gates(
            self.register, [(g.support, g.phase) for g in self.gates]
        )

    def state(self) -> StateVector:
        return self.phase_gate().apply(plus_state(self.register))


def reduced_brute_force(lmes: LmesDescription, keep) -> DensityMatrix:
    """Exact partial trace of the full LMES vector."""
    return partial_trace(lmes.state(), keep)


def _single_qubit(offdiag: complex, label: str) -> DensityMatrix:
    return DensityMatrix(QubitRegister((label,)), [[0.5, offdiag], [np.conj(offdiag), 0.5]])


def pure_gate_factor(order: int, phi: float) -> complex:
    """Coherence multiplier ``(2^(n-1) - 1 + e^{-i phi}) / 2^(n-1)`` of one gate."""
    if order < 1:
        raise ShapeError("gate order must be at least 1")
    w = 2.0 ** (order - 1)
    return (w - 1.0 + np.exp(-1j * phi)) / w


def single_qubit_reduced_pure_gate(n: int, phi: float, label: str = "s0") -> DensityMatrix:
    """One-qubit marginal of ``U_n(phi)|+>^n``."""
    return _single_qubit(0.5 * pure_gate_factor(n, phi), label)


def single_qubit_reduced_multi_gate(orders, phis, label: str = "s0") -> DensityMatrix:
    """Marginal of a qubit shared by gates that are otherwise disjoint."""
    orders, phis = list(orders), list(phis)
    if len(orders) != len(phis):
        raise ShapeError("one phase per gate required")
    c = 1.0 + 0j
    for k, phi in zip(orders, phis):
        c *= pure_gate_factor(k, phi)
    return _single_qubit(0.5 * c, label)


def weighted_graph_reduced(g: WeightedGraph, keep, normalize: bool = False) -> DensityMatrix:
    """Marginal of a weighted graph state without touching the traced register.

    With ``alpha_s = s^T Gamma s`` the traced qubits enter only through the
    coefficients ``c = prod_i (1 + exp(2i (s - s')^T Gamma_AB e_i))``, which
    depend on the difference ``s - s'`` alone and are evaluated once per
    difference class.  The result is unnormalized (trace ``2^n``) unless
    ``normalize`` is set.
    """
    keep = set(keep)
    idx_a = [k for k, q in enumerate(g.labels) if q in keep]
    idx_b = [k for k, q in enumerate(g.labels) if q not in keep]
    if len(idx_a) != len(keep):
        missing = keep - set(g.labels)
        raise ShapeError(f"unknown labels {sorted(missing)}")
    if not idx_a:
        raise ShapeError("keep must name at least one qubit")
    gamma_a = g.gamma[np.ix_(idx_a, idx_a)]
    gamma_ab = g.gamma[np.ix_(idx_a, idx_b)]

    bits = bit_table(len(idx_a)).astype(float)
    local = np.einsum("ai,ij,aj->a", bits, gamma_a, bits)

    diffs = bits[:, None, :] - bits[None, :, :]
    flat = diffs.reshape(-1, len(idx_a))
    classes, inverse = np.unique(flat, axis=0, return_inverse=True)
    angles = 2.0 * classes @ gamma_ab
    coeff = np.prod(1.0 + np.exp(1j * angles), axis=1)
    c = coeff[np.ravel(inverse)].reshape(diffs.shape[:2])

    rho = np.exp(1j * (local[:, None] - local[None, :])) * c
    register = QubitRegister(tuple(g.labels[k] for k in idx_a))
    if normalize:
        return DensityMatrix(register, rho / 2 ** g.n)
    return DensityMatrix(register, rho, normalized=False)


def overlapping_bath(p: InteractionPattern) -> tuple[str, ...]:
    """Bath qubits shared by two or more system-bath collisions."""
    seen = {}
    for s in p.system_labels:
        for g in p.collisions(s):
            for q in g.bath_qubits:
                seen[q] = seen.get(q, 0) + 1
    return tuple(sorted((q for q, c in seen.items() if c >= 2), key=label_key))


def reduced_via_peps(p: InteractionPattern, keep=None) -> DensityMatrix:
    """System marginal ``rho_Sigma`` of ``U_SB |+>^(N_S+N_B)``.

    Only the overlapping bath qubits are summed explicitly; every other bath
    qubit touches a single gate and is absorbed into that gate's factor.
    Bath-only gates drop out, and system-only gates contribute a fixed phase.
    """
    if not p.purely_dephasing:
        raise UnsupportedPattern("the PEPS route needs every gate to touch at most one system qubit")
    if keep is not None and tuple(sorted(keep, key=label_key)) != p.system_labels:
        raise ShapeError("the PEPS route returns the marginal on all system qubits")

    overlap = overlapping_bath(p)
    opos = {q: k for k, q in enumerate(overlap)}
    local_phase = np.zeros(p.n_system)
    for g in p.local_gates():
        local_phase[p.system_labels.index(g.system_qubits[0])] += g.phase

    per_system = []
    for s in p.system_labels:
        entries = []
        for g in p.collisions(s):
            shared = [opos[q] for q in g.bath_qubits if q in opos]
            free = len(g.bath_qubits) - len(shared)
            entries.append((shared, pure_gate_factor(free + 1, g.phase)))
        per_system.append(entries)

    rho = np.zeros((2**p.n_system, 2**p.n_system), dtype=complex)
    for k in product((0, 1), repeat=len(overlap)):
        term = np.ones((1, 1), dtype=complex)
        for l, entries in enumerate(per_system):
            c = np.exp(-1j * local_phase[l])
            for shared, factor in entries:
                if all(k[j] for j in shared):
                    c *= factor
            term = np.kron(term, 0.5 * np.array([[1.0, c], [np.conj(c), 1.0]]))
        rho += term
    rho /= 2 ** len(overlap)
    return DensityMatrix(p.system_register, rho)
