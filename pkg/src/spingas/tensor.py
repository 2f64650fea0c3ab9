"""Dense linear algebra over labelled qubit registers.

Basis convention: the label at position 0 of a register is the most
significant bit of the computational-basis index, so ``|q0 q1 ... q_{n-1}>``
has index ``sum_k q_k * 2**(n-1-k)``.  Every module in the package relies on
this ordering.

All containers are immutable; the arrays they hold are flagged read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .errors import DuplicateLabel, ShapeError, TooLarge, UnknownLabel

MAX_VECTOR_QUBITS = 14
MAX_DENSITY_QUBITS = 12

EQ_TOL = 1e-10
HERM_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = -1e-10

TWO_PI = 2.0 * np.pi

PAULI = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def _frozen(array, dtype):
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class QubitRegister:
    """Ordered, duplicate-free list of qubit labels."""

    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(label) for label in self.labels)
        if not labels:
            raise ShapeError("a register needs at least one qubit")
        seen = set()
        for label in labels:
            if label in seen:
                raise DuplicateLabel(f"label {label!r} appears twice")
            seen.add(label)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def of(cls, *labels: str) -> "QubitRegister":
        return cls(tuple(labels))

    @classmethod
    def numbered(cls, n: int, prefix: str = "q") -> "QubitRegister":
        return cls(tuple(f"{prefix}{k}" for k in range(n)))

    @property
    def n_qubits(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return 2 ** len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownLabel(f"no qubit labelled {label!r}") from None

    def concat(self, other: "QubitRegister") -> "QubitRegister":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise DuplicateLabel(f"labels {sorted(clash)} present in both registers")
        return QubitRegister(self.labels + other.labels)

    def __contains__(self, label) -> bool:
        return label in self.labels

    def __len__(self) -> int:
        return len(self.labels)


def _as_register(register) -> QubitRegister:
    if isinstance(register, QubitRegister):
        return register
    if isinstance(register, int):
        return QubitRegister.numbered(register)
    return QubitRegister(tuple(register))


@dataclass(frozen=True, eq=False)
class StateVector:
    register: QubitRegister
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        register = _as_register(self.register)
        object.__setattr__(self, "register", register)
        if register.n_qubits > MAX_VECTOR_QUBITS:
            raise TooLarge(
                f"{register.n_qubits} qubits exceeds the state-vector cap of {MAX_VECTOR_QUBITS}"
            )
        amps = _frozen(self.amplitudes, complex).reshape(-1)
        if amps.shape != (register.dim,):
            raise ShapeError(f"expected {register.dim} amplitudes, got {amps.size}")
        if self.normalized and abs(np.linalg.norm(amps) - 1.0) > TRACE_TOL:
            raise ShapeError(f"state has norm {np.linalg.norm(amps):.3e}, expected 1")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return self.register.n_qubits

    def density(self) -> "DensityMatrix":
        a = self.amplitudes
        return DensityMatrix(self.register, np.outer(a, a.conj()), normalized=self.normalized)

    def conj(self) -> "StateVector":
        return StateVector(self.register, self.amplitudes.conj(), self.normalized)

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Dense Hermitian operator.

    ``normalized=False`` marks intermediates whose trace is not fixed to one
    (unnormalized reduced states, Hadamard products, Choi operators).
    Positivity is not checked on construction; call :meth:`check_psd`.
    """

    register: QubitRegister
    entries: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        register = _as_register(self.register)
        object.__setattr__(self, "register", register)
        if register.n_qubits > MAX_DENSITY_QUBITS:
            raise TooLarge(
                f"{register.n_qubits} qubits exceeds the density-matrix cap of {MAX_DENSITY_QUBITS}"
            )
        rho = _frozen(self.entries, complex)
        if rho.shape != (register.dim, register.dim):
            raise ShapeError(f"expected a {register.dim}x{register.dim} matrix, got {rho.shape}")
        herm_err = np.max(np.abs(rho - rho.conj().T)) if rho.size else 0.0
        if herm_err > HERM_TOL * max(1.0, np.max(np.abs(rho))):
            raise ShapeError(f"matrix is not Hermitian (deviation {herm_err:.3e})")
        if self.normalized and abs(np.trace(rho) - 1.0) > TRACE_TOL:
            raise ShapeError(f"trace {np.trace(rho).real:.15g} differs from 1")
        object.__setattr__(self, "entries", rho)

    @property
    def n_qubits(self) -> int:
        return self.register.n_qubits

    @property
    def dim(self) -> int:
        return self.register.dim

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])

    def check_psd(self) -> "DensityMatrix":
        lo = self.min_eigenvalue()
        if lo < PSD_TOL:
            raise ShapeError(f"matrix has eigenvalue {lo:.3e} below {PSD_TOL}")
        return self

    def as_normalized(self) -> "DensityMatrix":
        """Rescale to unit trace."""
        return DensityMatrix(self.register, self.entries / np.trace(self.entries).real)

    def scaled(self, factor: float) -> "DensityMatrix":
        return DensityMatrix(self.register, self.entries * factor, normalized=False)

    def relabel(self, register) -> "DensityMatrix":
        return DensityMatrix(register, self.entries, self.normalized)


@dataclass(frozen=True, eq=False)
class DiagonalUnitary:
    """``diag(exp(i * phases))`` on a register."""

    register: QubitRegister
    phases: np.ndarray = field(repr=False)

    def __post_init__(self):
        register = _as_register(self.register)
        object.__setattr__(self, "register", register)
        phases = _frozen(self.phases, float).reshape(-1)
        if phases.shape != (register.dim,):
            raise ShapeError(f"expected {register.dim} phases, got {phases.size}")
        object.__setattr__(self, "phases", phases)

    @classmethod
    def identity(cls, register) -> "DiagonalUnitary":
        register = _as_register(register)
        return cls(register, np.zeros(register.dim))

    @classmethod
    def from_pure_gates(cls, register, gates: Iterable[tuple[Sequence[str], float]]):
        """Product of pure phase gates ``1 + (e^{i phi} - 1)|1..1><1..1|``.

        ``gates`` yields ``(support_labels, phi)`` pairs.
        """
        register = _as_register(register)
        return cls(register, pure_gate_phases(register, gates))

    @property
    def diagonal(self) -> np.ndarray:
        return np.exp(1j * self.phases)

    def matrix(self) -> np.ndarray:
        return np.diag(self.diagonal)

    def dagger(self) -> "DiagonalUnitary":
        return DiagonalUnitary(self.register, np.mod(-self.phases, TWO_PI))

    def compose(self, other: "DiagonalUnitary") -> "DiagonalUnitary":
        if other.register != self.register:
            raise ShapeError("cannot compose unitaries on different registers")
        return DiagonalUnitary(self.register, np.mod(self.phases + other.phases, TWO_PI))

    def apply(self, x):
        if x.register != self.register:
            raise ShapeError("unitary and operand live on different registers")
        d = self.diagonal
        if isinstance(x, StateVector):
            return StateVector(x.register, d * x.amplitudes, x.normalized)
        return DensityMatrix(x.register, x.entries * np.outer(d, d.conj()), x.normalized)


def bit_table(n: int) -> np.ndarray:
    """``(2**n, n)`` array of basis-index bits, column 0 most significant."""
    idx = np.arange(2**n)
    shifts = np.arange(n - 1, -1, -1)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.int8)


def pure_gate_phases(register, gates) -> np.ndarray:
    register = _as_register(register)
    n = register.n_qubits
    idx = np.arange(register.dim)
    phases = np.zeros(register.dim)
    for support, phi in gates:
        mask = 0
        for label in support:
            mask |= 1 << (n - 1 - register.index(label))
        phases[(idx & mask) == mask] += phi
    return phases


def tensor_product(a, b):
    register = a.register.concat(b.register)
    normalized = a.normalized and b.normalized
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(register, np.kron(a.amplitudes, b.amplitudes), normalized)
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(register, np.kron(a.entries, b.entries), normalized)
    raise TypeError("tensor_product needs two operands of the same kind")


def _split_axes(register: QubitRegister, keep) -> tuple[list[int], list[int]]:
    keep = set(keep)
    if not keep:
        raise ShapeError("keep must name at least one qubit")
    for label in keep:
        register.index(label)
    kept = [k for k, label in enumerate(register.labels) if label in keep]
    traced = [k for k, label in enumerate(register.labels) if label not in keep]
    return kept, traced


def partial_trace(x, keep) -> DensityMatrix:
    """Trace out every qubit not in ``keep``.

    Accepts a :class:`DensityMatrix` or a :class:`StateVector` (in which case
    the reduced state of the pure state is formed without building the full
    projector).  Kept qubits retain their relative order.
    """
    register = x.register
    kept, traced = _split_axes(register, keep)
    n = register.n_qubits
    dk, dt = 2 ** len(kept), 2 ** len(traced)
    out_reg = QubitRegister(tuple(register.labels[k] for k in kept))
    if isinstance(x, StateVector):
        psi = x.amplitudes.reshape((2,) * n).transpose(kept + traced).reshape(dk, dt)
        rho = psi @ psi.conj().T
    else:
        t = x.entries.reshape((2,) * (2 * n))
        t = t.transpose(kept + traced + [n + k for k in kept] + [n + k for k in traced])
        rho = np.einsum("iaja->ij", t.reshape(dk, dt, dk, dt))
    return DensityMatrix(out_reg, rho, normalized=x.normalized)


def hadamard_product(a, b) -> DensityMatrix:
    """Entrywise product. Either operand may be a raw square array."""
    ea = a.entries if isinstance(a, DensityMatrix) else np.asarray(a)
    eb = b.entries if isinstance(b, DensityMatrix) else np.asarray(b)
    if ea.shape != eb.shape:
        raise ShapeError(f"cannot multiply {ea.shape} and {eb.shape} entrywise")
    register = a.register if isinstance(a, DensityMatrix) else getattr(b, "register", None)
    if register is None:
        register = QubitRegister.numbered(int(np.log2(ea.shape[0])))
    return DensityMatrix(register, ea * eb, normalized=False)


def bell_register(n_pairs: int, system="s", ancilla="a") -> QubitRegister:
    labels = []
    for k in range(n_pairs):
        labels += [f"{system}{k}", f"{ancilla}{k}"]
    return QubitRegister(tuple(labels))


def bell_columns(n_pairs: int) -> np.ndarray:
    """Bell-basis vectors as matrix columns (pair-interleaved qubit order)."""
    phi_plus = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    single = np.stack([np.kron(s, np.eye(2)) @ phi_plus for s in PAULI], axis=1)
    out = np.ones((1, 1), dtype=complex)
    for _ in range(n_pairs):
        out = np.kron(out, single)
    return out


def bell_basis(n_pairs: int) -> list[StateVector]:
    """The ``4**n_pairs`` vectors ``(sigma_{i1} x 1)|Phi+> x ... x (sigma_{in} x 1)|Phi+>``.

    Ordered lexicographically in ``(i1, ..., in)``; qubits are interleaved as
    ``s0 a0 s1 a1 ...``.
    """
    if n_pairs < 1:
        raise ShapeError("n_pairs must be at least 1")
    register = bell_register(n_pairs)
    cols = bell_columns(n_pairs)
    return [StateVector(register, cols[:, k]) for k in range(cols.shape[1])]


def pauli_string(indices: Sequence[int]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for i in indices:
        out = np.kron(out, PAULI[i])
    return out


def pauli_strings(n: int, alphabet=(0, 1, 2, 3)):
    """Yield ``(index_tuple, matrix)`` in lexicographic order."""
    for idx in product(alphabet, repeat=n):
        yield idx, pauli_string(idx)


# -- common states ---------------------------------------------------------


def plus_state(register) -> StateVector:
    register = _as_register(register)
    return StateVector(register, np.full(register.dim, 2 ** (-register.n_qubits / 2)))


def basis_state(register, bits: Sequence[int]) -> StateVector:
    register = _as_register(register)
    if len(bits) != register.n_qubits:
        raise ShapeError("one bit per qubit required")
    index = int("".join(str(int(b)) for b in bits), 2) if bits else 0
    amps = np.zeros(register.dim, dtype=complex)
    amps[index] = 1.0
    return StateVector(register, amps)


def ghz_state(register, p: float = 0.5) -> StateVector:
    """``sqrt(p)|0..0> + sqrt(1-p)|1..1>``."""
    register = _as_register(register)
    amps = np.zeros(register.dim, dtype=complex)
    amps[0] = np.sqrt(p)
    amps[-1] += np.sqrt(1.0 - p)
    return StateVector(register, amps)


BELL_STATES = {
    "phip": np.array([1, 0, 0, 1]) / np.sqrt(2),
    "phim": np.array([1, 0, 0, -1]) / np.sqrt(2),
    "psip": np.array([0, 1, 1, 0]) / np.sqrt(2),
    "psim": np.array([0, 1, -1, 0]) / np.sqrt(2),
}


def bell_state(name: str, register=None) -> StateVector:
    if register is None:
        register = QubitRegister.numbered(2, "s")
    return StateVector(register, BELL_STATES[name])


def random_state(register, rng: np.random.Generator) -> StateVector:
    register = _as_register(register)
    v = rng.normal(size=register.dim) + 1j * rng.normal(size=register.dim)
    return StateVector(register, v / np.linalg.norm(v))


def random_density_matrix(register, rng: np.random.Generator, rank=None) -> DensityMatrix:
    """Random full-rank (or given-rank) state from the induced Ginibre measure."""
    register = _as_register(register)
    rank = register.dim if rank is None else rank
    g = rng.normal(size=(register.dim, rank)) + 1j * rng.normal(size=(register.dim, rank))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return DensityMatrix(register, rho / np.trace(rho).real)


def state_fidelity(a: StateVector, b: StateVector) -> float:
    """``|<a|b>|^2`` for pure states."""
    return abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2


def max_abs_diff(a, b) -> float:
    ea = a.entries if isinstance(a, DensityMatrix) else np.asarray(a)
    eb = b.entries if isinstance(b, DensityMatrix) else np.asarray(b)
    return float(np.max(np.abs(ea - eb)))
