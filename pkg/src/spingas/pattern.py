"""Interaction patterns: which qubits collide through which pure phase gates.

A pattern lives on a register of ``n_system`` system qubits ``s0, s1, ...``
followed by ``n_bath`` bath qubits ``b0, b1, ...``.  Text format::

    # comment
    system 2
    bath 3
    gate phase=1.5707963 s:0 b:0 b:1
    gate phase=0.3 s:1 b:1 b:2
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np

from .errors import DuplicateGate, NotAGraphState, ParseError, RangeError, ShapeError
from .tensor import QubitRegister, StateVector, TWO_PI

_LABEL = re.compile(r"^([A-Za-z_]+)(\d+)$")
_KIND_ORDER = {"s": 0, "b": 1}


def label_key(label: str):
    """Sort key: system before bath, then by numeric index."""
    m = _LABEL.match(label)
    if m is None:
        return (2, label, 0)
    prefix, idx = m.groups()
    return (_KIND_ORDER.get(prefix, 2), prefix, int(idx))


def reduce_phase(phi: float) -> float:
    out = math.fmod(float(phi), TWO_PI)
    if out < 0:
        out += TWO_PI
    if out >= TWO_PI:
        out = 0.0
    return out


def is_system(label: str) -> bool:
    return label.startswith("s")


def is_bath(label: str) -> bool:
    return label.startswith("b")


@dataclass(frozen=True)
class PurePhaseGate:
    """``1 + (e^{i phase} - 1)|1..1><1..1|`` on ``support``."""

    support: tuple[str, ...]
    phase: float

    def __post_init__(self):
        support = tuple(sorted({str(q) for q in self.support}, key=label_key))
        if not support:
            raise ShapeError("a phase gate needs a nonempty support")
        if len(support) != len(tuple(self.support)):
            raise ShapeError(f"repeated qubit in gate support {self.support}")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "phase", reduce_phase(self.phase))

    @property
    def order(self) -> int:
        return len(self.support)

    @property
    def system_qubits(self) -> tuple[str, ...]:
        return tuple(q for q in self.support if is_system(q))

    @property
    def bath_qubits(self) -> tuple[str, ...]:
        return tuple(q for q in self.support if is_bath(q))

    def sort_key(self):
        return (tuple(label_key(q) for q in self.support), self.phase)

    def matrix(self) -> np.ndarray:
        d = np.ones(2**self.order, dtype=complex)
        d[-1] = np.exp(1j * self.phase)
        return np.diag(d)


@dataclass(frozen=True)
class Classification:
    purely_dephasing: bool
    markovian: bool
    conditions_ab: bool
    core: tuple[str, ...] | None
    orders: dict
    overlapping_qubits: tuple[str, ...]
    overlapping_edges: tuple[tuple[str, str], ...]
    intra_overlap: dict

    @property
    def m(self) -> int | None:
        return None if self.core is None else len(self.core)

    def to_dict(self) -> dict:
        return {
            "purely_dephasing": self.purely_dephasing,
            "markovian": self.markovian,
            "conditions_ab": self.conditions_ab,
            "m": self.m,
            "core": None if self.core is None else list(self.core),
            "orders": {k: list(v) for k, v in self.orders.items()},
            "overlapping_qubits": list(self.overlapping_qubits),
            "overlapping_edges": [list(e) for e in self.overlapping_edges],
            "intra_overlap": {k: list(v) for k, v in self.intra_overlap.items()},
        }


@dataclass(frozen=True)
class InteractionPattern:
    """Gates are kept in a canonical order; phase gates commute so this is lossless."""

    n_system: int
    n_bath: int
    gates: tuple[PurePhaseGate, ...] = ()

    def __post_init__(self):
        if self.n_system < 1:
            raise ShapeError("a pattern needs at least one system qubit")
        if self.n_bath < 0:
            raise ShapeError("bath size must be non-negative")
        gates = tuple(sorted(self.gates, key=PurePhaseGate.sort_key))
        valid = set(self.register.labels)
        for g in gates:
            for q in g.support:
                if q not in valid:
                    raise ShapeError(f"gate qubit {q!r} is outside the declared register")
        object.__setattr__(self, "gates", gates)

    @property
    def system_labels(self) -> tuple[str, ...]:
        return tuple(f"s{k}" for k in range(self.n_system))

    @property
    def bath_labels(self) -> tuple[str, ...]:
        return tuple(f"b{k}" for k in range(self.n_bath))

    @property
    def register(self) -> QubitRegister:
        return QubitRegister(self.system_labels + self.bath_labels)

    @property
    def system_register(self) -> QubitRegister:
        return QubitRegister(self.system_labels)

    @property
    def n_qubits(self) -> int:
        return self.n_system + self.n_bath

    def gate_list(self):
        """``(support, phase)`` pairs for :func:`tensor.pure_gate_phases`."""
        return [(g.support, g.phase) for g in self.gates]

    def collisions(self, system_label: str) -> list[PurePhaseGate]:
        """Gates coupling exactly this system qubit to at least one bath qubit."""
        return [
            g for g in self.gates
            if g.system_qubits == (system_label,) and g.bath_qubits
        ]

    def local_gates(self) -> list[PurePhaseGate]:
        """Gates acting on a single system qubit and nothing else."""
        return [g for g in self.gates if len(g.system_qubits) == 1 and not g.bath_qubits]

    @cached_property
    def classification(self) -> Classification:
        return classify(self)

    @property
    def purely_dephasing(self) -> bool:
        return self.classification.purely_dephasing

    @property
    def markovian(self) -> bool:
        return self.classification.markovian

    @property
    def overlap_core(self):
        return self.classification.core

    def with_gates(self, gates) -> "InteractionPattern":
        return InteractionPattern(self.n_system, self.n_bath, tuple(gates))


# -- parsing ---------------------------------------------------------------

_HEADER = ("system", "bath")


def _parse_count(tokens, lineno, keyword):
    (word, wcol), rest = tokens[0], tokens[1:]
    if word != keyword:
        raise ParseError(f"expected '{keyword} <count>'", lineno, wcol)
    if len(rest) != 1:
        col = rest[1][1] if len(rest) > 1 else wcol + len(word)
        raise ParseError(f"'{keyword}' takes exactly one integer", lineno, col)
    text, col = rest[0]
    if not text.isdigit():
        raise ParseError(f"bad {keyword} count {text!r}", lineno, col)
    return int(text)


def _parse_gate(tokens, lineno, n_system, n_bath):
    if len(tokens) < 2 or not tokens[1][0].startswith("phase="):
        col = tokens[1][1] if len(tokens) > 1 else tokens[0][1] + 4
        raise ParseError("expected 'phase=<radians>' after 'gate'", lineno, col)
    text, col = tokens[1]
    try:
        phi = float(text[len("phase="):])
    except ValueError:
        raise ParseError(f"bad phase {text!r}", lineno, col) from None
    if not math.isfinite(phi):
        raise ParseError(f"phase must be finite, got {text!r}", lineno, col)
    support = []
    for text, col in tokens[2:]:
        kind, sep, idx = text.partition(":")
        if sep != ":" or kind not in ("s", "b") or not idx.isdigit():
            raise ParseError(f"bad qubit token {text!r}", lineno, col)
        idx = int(idx)
        limit = n_system if kind == "s" else n_bath
        if idx >= limit:
            raise RangeError(f"{text} outside declared range 0..{limit - 1}", lineno, col)
        label = f"{kind}{idx}"
        if label in support:
            raise ParseError(f"qubit {text} listed twice", lineno, col)
        support.append(label)
    if not support:
        raise ParseError("gate has empty support", lineno, tokens[-1][1])
    return PurePhaseGate(tuple(support), phi)


def parse_pattern(text: str) -> InteractionPattern:
    header = {}
    gates = []
    seen_lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        tokens = [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", line)]
        if not tokens:
            continue
        if len(header) < 2:
            keyword = _HEADER[len(header)]
            header[keyword] = _parse_count(tokens, lineno, keyword)
            if keyword == "system" and header["system"] < 1:
                raise ParseError("system count must be at least 1", lineno, tokens[1][1])
            continue
        if tokens[0][0] != "gate":
            raise ParseError(f"unknown directive {tokens[0][0]!r}", lineno, tokens[0][1])
        key = tuple(t for t, _ in tokens)
        if key in seen_lines:
            raise DuplicateGate(f"duplicates the gate on line {seen_lines[key]}", lineno, 1)
        seen_lines[key] = lineno
        gates.append(_parse_gate(tokens, lineno, header["system"], header["bath"]))
    if len(header) < 2:
        missing = _HEADER[len(header)]
        raise ParseError(f"missing '{missing} <count>' declaration")
    return InteractionPattern(header["system"], header["bath"], tuple(gates))


def _format_qubit(label: str) -> str:
    return f"{label[0]}:{label[1:]}"


def serialize(p: InteractionPattern) -> str:
    lines = [f"system {p.n_system}", f"bath {p.n_bath}"]
    for g in p.gates:
        qubits = " ".join(_format_qubit(q) for q in g.support)
        lines.append(f"gate phase={g.phase!r} {qubits}")
    return "\n".join(lines) + "\n"


def load_pattern(path) -> InteractionPattern:
    with open(path, encoding="utf-8") as fh:
        return parse_pattern(fh.read())


# -- classification --------------------------------------------------------


def _core_for(per_system: dict) -> tuple[bool, frozenset | None]:
    """Check the shared-core conditions on the bath sets of each system qubit.

    Every collision set must contain the core, and any two sets belonging to
    different system qubits must intersect in exactly the core.
    """
    all_sets = [I for sets in per_system.values() for I in sets]
    if not all_sets:
        return True, frozenset()
    active = [l for l, sets in per_system.items() if sets]
    if len(active) == 1:
        core = frozenset.intersection(*all_sets)
        return True, core
    core = None
    for la, lb in combinations(active, 2):
        for I in per_system[la]:
            for J in per_system[lb]:
                inter = I & J
                if core is None:
                    core = inter
                elif inter != core:
                    return False, None
    if not all(core <= I for I in all_sets):
        return False, None
    return True, core


def classify(p: InteractionPattern) -> Classification:
    purely = all(len(g.system_qubits) <= 1 for g in p.gates)

    per_system = {s: [] for s in p.system_labels}
    coupled = []
    for g in p.gates:
        if len(g.system_qubits) == 1 and g.bath_qubits:
            per_system[g.system_qubits[0]].append(frozenset(g.bath_qubits))
            coupled.append(frozenset(g.bath_qubits))
    markovian = purely and all(
        not (I & J) for I, J in combinations(coupled, 2)
    )

    if purely:
        ok, core = _core_for(per_system)
    else:
        ok, core = False, None
    core_t = None if core is None else tuple(sorted(core, key=label_key))

    orders = {
        s: tuple(len(I) + 1 for I in per_system[s]) for s in p.system_labels
    }

    counts = Counter(q for g in p.gates for q in g.support)
    overlapping = tuple(sorted((q for q, c in counts.items() if c >= 2), key=label_key))
    edge_counts = Counter(
        e for g in p.gates for e in combinations(g.support, 2)
    )
    edges = tuple(sorted(
        (e for e, c in edge_counts.items() if c >= 2),
        key=lambda e: (label_key(e[0]), label_key(e[1])),
    ))

    base = core if core is not None else frozenset()
    intra = {}
    for s, sets in per_system.items():
        shared = Counter(q for I in sets for q in I - base)
        intra[s] = tuple(sorted((q for q, c in shared.items() if c >= 2), key=label_key))

    return Classification(
        purely_dephasing=purely,
        markovian=markovian,
        conditions_ab=ok,
        core=core_t,
        orders=orders,
        overlapping_qubits=overlapping,
        overlapping_edges=edges,
        intra_overlap=intra,
    )


# -- PEPS picture ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PepsProjector:
    """``sqrt(2)^(k-1) (|0><0..0| + |1><1..1|)`` from ``k`` virtual qubits."""

    physical_label: str
    virtual_labels: tuple[str, ...]
    operator: np.ndarray = field(repr=False)

    @property
    def virtual_count(self) -> int:
        return len(self.virtual_labels)


def peps_operator(k: int) -> np.ndarray:
    op = np.zeros((2, 2**k))
    op[0, 0] = op[1, -1] = np.sqrt(2.0) ** (k - 1)
    return op


def virtual_supports(p: InteractionPattern) -> tuple[list[tuple[str, ...]], dict]:
    """Rewrite each gate on private virtual qubits.

    Returns the per-gate virtual supports and a map from each physical qubit
    to its virtual copies (in gate order).  Qubits hit by a single gate keep
    their own label.
    """
    counts = Counter(q for g in p.gates for q in g.support)
    seen = Counter()
    copies = {q: [] for q in counts}
    supports = []
    for g in p.gates:
        vs = []
        for q in g.support:
            if counts[q] == 1:
                v = q
            else:
                v = f"{q}#{seen[q]}"
                seen[q] += 1
            copies[q].append(v)
            vs.append(v)
        supports.append(tuple(vs))
    return supports, copies


def build_peps_projectors(p: InteractionPattern) -> list[PepsProjector]:
    _, copies = virtual_supports(p)
    out = []
    for q in sorted(copies, key=label_key):
        k = len(copies[q])
        if k >= 2:
            out.append(PepsProjector(q, tuple(copies[q]), peps_operator(k)))
    return out


def contract_peps(p: InteractionPattern) -> StateVector:
    """Physical LMES obtained by projecting the virtual product of gate states."""
    supports, copies = virtual_supports(p)
    physical = list(p.register.labels)
    index = {q: k for k, q in enumerate(physical)}
    for q, vs in copies.items():
        for v in vs:
            if v not in index:
                index[v] = len(index)
    if len(index) > 52:
        raise ShapeError("too many virtual qubits for a single contraction")

    operands = []
    for g, vs in zip(p.gates, supports):
        t = np.full(2 ** g.order, 2 ** (-g.order / 2), dtype=complex)
        t[-1] *= np.exp(1j * g.phase)
        operands += [t.reshape((2,) * g.order), [index[v] for v in vs]]
    for proj in build_peps_projectors(p):
        k = proj.virtual_count
        operands += [
            proj.operator.reshape((2,) * (k + 1)),
            [index[proj.physical_label]] + [index[v] for v in proj.virtual_labels],
        ]
    for q in physical:
        if q not in copies:
            operands += [np.full(2, 2**-0.5), [index[q]]]
    psi = np.einsum(*operands, [index[q] for q in physical], optimize=True)
    return StateVector(p.register, psi.reshape(-1))


# -- weighted graphs -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Phases ``alpha_i = i^T Gamma i`` of a weighted graph state."""

    labels: tuple[str, ...]
    gamma: np.ndarray

    def __post_init__(self):
        gamma = np.array(self.gamma, dtype=float)
        n = len(self.labels)
        if gamma.shape != (n, n):
            raise ShapeError(f"adjacency matrix must be {n}x{n}")
        if not np.allclose(gamma, gamma.T, atol=0, rtol=0):
            raise ShapeError("adjacency matrix must be symmetric")
        gamma.setflags(write=False)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "gamma", gamma)

    @property
    def n(self) -> int:
        return len(self.labels)

    def phases(self) -> np.ndarray:
        from .tensor import bit_table

        bits = bit_table(self.n).astype(float)
        return np.einsum("ai,ij,aj->a", bits, self.gamma, bits)


def graph_from_pattern(p: InteractionPattern) -> WeightedGraph:
    labels = p.register.labels
    pos = {q: k for k, q in enumerate(labels)}
    gamma = np.zeros((len(labels), len(labels)))
    for g in p.gates:
        if g.order > 2:
            raise NotAGraphState(f"gate on {g.support} has order {g.order}")
        if g.order == 1:
            k = pos[g.support[0]]
            gamma[k, k] += g.phase
        else:
            a, b = pos[g.support[0]], pos[g.support[1]]
            gamma[a, b] += g.phase / 2
            gamma[b, a] += g.phase / 2
    return WeightedGraph(labels, gamma)


# -- standard patterns -----------------------------------------------------


def repeated_collisions_pattern(m: int, orders, phis) -> InteractionPattern:
    """One system qubit hit by gates that all share the bath qubits ``b0..b{m-1}``.

    ``orders[i]`` is the number of bath qubits of gate ``i`` (gate order minus
    one); each gate adds ``orders[i] - m`` fresh bath qubits.
    """
    orders = list(orders)
    phis = list(phis)
    if len(orders) != len(phis):
        raise ShapeError("one phase per gate required")
    if any(n1 < m for n1 in orders) or m < 0:
        raise ShapeError("every gate must contain the whole core")
    core = [f"b{k}" for k in range(m)]
    nxt = m
    gates = []
    for n1, phi in zip(orders, phis):
        fresh = [f"b{nxt + k}" for k in range(n1 - m)]
        nxt += n1 - m
        gates.append(PurePhaseGate(("s0", *core, *fresh), phi))
    return InteractionPattern(1, nxt, tuple(gates))


def shared_core_pattern(m: int, orders, phis) -> InteractionPattern:
    """System qubit ``l`` meets the common core plus ``orders[l] - m`` private bath qubits."""
    orders = list(orders)
    phis = list(phis)
    if len(orders) != len(phis):
        raise ShapeError("one phase per system qubit required")
    if any(n1 < m for n1 in orders) or m < 0:
        raise ShapeError("every gate must contain the whole core")
    core = [f"b{k}" for k in range(m)]
    nxt = m
    gates = []
    for l, (n1, phi) in enumerate(zip(orders, phis)):
        fresh = [f"b{nxt + k}" for k in range(n1 - m)]
        nxt += n1 - m
        gates.append(PurePhaseGate((f"s{l}", *core, *fresh), phi))
    return InteractionPattern(len(orders), nxt, tuple(gates))


FIG2_COUPLINGS = ("independent", "overlap_qubit", "overlap_edge")


def two_system_pattern(coupling: str, phi1: float, phi2: float) -> InteractionPattern:
    """Two system qubits, each hit by one 3-qubit gate."""
    supports = {
        "independent": (("s0", "b0", "b1"), ("s1", "b2", "b3"), 4),
        "overlap_qubit": (("s0", "b0", "b1"), ("s1", "b1", "b2"), 3),
        "overlap_edge": (("s0", "b0", "b1"), ("s1", "b0", "b1"), 2),
    }
    if coupling not in supports:
        raise ShapeError(f"unknown coupling {coupling!r}; choose from {FIG2_COUPLINGS}")
    a, b, n_bath = supports[coupling]
    return InteractionPattern(2, n_bath, (PurePhaseGate(a, phi1), PurePhaseGate(b, phi2)))


def random_pattern(
    rng: np.random.Generator,
    n_system: int,
    n_bath: int,
    n_gates: int,
    max_order: int = 4,
    purely_dephasing: bool = True,
    local_gates: bool = False,
) -> InteractionPattern:
    """Random gates with uniformly drawn phases, for testing."""
    gates = []
    sys = [f"s{k}" for k in range(n_system)]
    bath = [f"b{k}" for k in range(n_bath)]
    for _ in range(n_gates):
        if purely_dephasing:
            n_b = int(rng.integers(1, min(max_order - 1, n_bath) + 1)) if n_bath else 0
            support = [sys[int(rng.integers(n_system))]]
            support += list(rng.choice(bath, size=n_b, replace=False)) if n_b else []
        else:
            pool = sys + bath
            k = int(rng.integers(1, min(max_order, len(pool)) + 1))
            support = list(rng.choice(pool, size=k, replace=False))
        if not support:
            continue
        gates.append(PurePhaseGate(tuple(support), float(rng.uniform(0, TWO_PI))))
    if local_gates:
        for s in sys:
            if rng.random() < 0.5:
                gates.append(PurePhaseGate((s,), float(rng.uniform(0, TWO_PI))))
        if bath and rng.random() < 0.5:
            k = int(rng.integers(1, min(2, len(bath)) + 1))
            support = tuple(rng.choice(bath, size=k, replace=False))
            gates.append(PurePhaseGate(support, float(rng.uniform(0, TWO_PI))))
    return InteractionPattern(n_system, n_bath, tuple(gates))
