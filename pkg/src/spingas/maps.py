"""Dephasing maps ``E(rho) = tr_B[U (rho x |+><+|^N_B) U^dag]`` in several guises.

``map_oracle`` evolves the full register and is the reference everything else
is checked against.  The other representations are

* :class:`KrausForm` -- a weighted sum of product single-qubit phase gates,
* :class:`HadamardForm` -- ``E(rho) = 2^N_S rho_Sigma (.) rho``,
* :class:`PauliForm` -- ``E(rho) = sum lambda_i^j Z_i rho Z_j`` read off the
  Choi state in the Bell basis,
* closed forms for patterns whose collisions share a common core.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np

from .errors import ClosedFormInapplicable, ShapeError, TooLarge, UnsupportedPattern
from .pattern import InteractionPattern, label_key
from .reduced import LmesDescription, reduced_brute_force, reduced_via_peps
from .tensor import (
    MAX_DENSITY_QUBITS,
    TWO_PI,
    DensityMatrix,
    DiagonalUnitary,
    QubitRegister,
    bell_columns,
    bell_register,
    bit_table,
    pure_gate_phases,
)

MAX_PAULI_SYSTEM = 5


def _system_operand(p: InteractionPattern, rho) -> DensityMatrix:
    entries = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if entries.shape != (2**p.n_system, 2**p.n_system):
        raise ShapeError(
            f"input must be a {2**p.n_system}x{2**p.n_system} system state, got {entries.shape}"
        )
    normalized = rho.normalized if isinstance(rho, DensityMatrix) else False
    return DensityMatrix(p.system_register, entries, normalized=normalized)


def map_oracle(p: InteractionPattern, rho) -> DensityMatrix:
    """Reference evolution on the full system+bath register.

    Uses ``rho x |+><+| = (rho x |+>)(1 x <+|)`` so the joint operator is kept
    as two ``2^N x 2^N_S`` factors; the partial trace over the bath is then a
    single contraction.  Every gate in the pattern is applied.
    """
    if p.n_qubits > MAX_DENSITY_QUBITS:
        raise TooLarge(f"oracle limited to {MAX_DENSITY_QUBITS} qubits, pattern has {p.n_qubits}")
    rho = _system_operand(p, rho)
    ds, db = 2**p.n_system, 2**p.n_bath
    plus = np.full((db, 1), db**-0.5)
    u = np.exp(1j * pure_gate_phases(p.register, p.gate_list()))
    left = u[:, None] * np.kron(rho.entries, plus)
    right = u[:, None] * np.kron(np.eye(ds), plus)
    out = np.einsum("ika,jka->ij", left.reshape(ds, db, ds), right.conj().reshape(ds, db, ds))
    return DensityMatrix(p.system_register, out, normalized=rho.normalized)


# -- Kraus form ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class KrausTerm:
    weight: float
    unitaries: tuple[DiagonalUnitary, ...]
    tag: str = ""

    def diagonal(self) -> np.ndarray:
        d = np.ones(1, dtype=complex)
        for u in self.unitaries:
            d = np.kron(d, u.diagonal)
        return d


@dataclass(frozen=True, eq=False)
class KrausForm:
    """``E(rho) = sum_t w_t U_t rho U_t^dag / normalizer`` with product ``U_t``."""

    register: QubitRegister
    terms: tuple[KrausTerm, ...]
    normalizer: float

    @property
    def total_weight(self) -> float:
        return float(sum(t.weight for t in self.terms))

    def is_product_form(self) -> bool:
        n = self.register.n_qubits
        return all(
            len(t.unitaries) == n and all(u.register.n_qubits == 1 for u in t.unitaries)
            for t in self.terms
        )

    def mask(self) -> np.ndarray:
        """Entrywise multiplier ``M`` with ``E(rho) = M (.) rho``."""
        dim = self.register.dim
        m = np.zeros((dim, dim), dtype=complex)
        for t in self.terms:
            d = t.diagonal()
            m += t.weight * np.outer(d, d.conj())
        return m / self.normalizer

    def apply(self, rho) -> DensityMatrix:
        entries = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
        out = np.zeros_like(entries, dtype=complex)
        for t in self.terms:
            d = t.diagonal()
            out += t.weight * (d[:, None] * entries * d.conj()[None, :])
        normalized = rho.normalized if isinstance(rho, DensityMatrix) else False
        return DensityMatrix(self.register, out / self.normalizer, normalized=normalized)


def _single(label: str, theta: float) -> DiagonalUnitary:
    return DiagonalUnitary(QubitRegister((label,)), [0.0, theta % TWO_PI])


def _local_phases(p: InteractionPattern) -> np.ndarray:
    out = np.zeros(p.n_system)
    for g in p.local_gates():
        out[p.system_labels.index(g.system_qubits[0])] += g.phase
    return out


def _require_purely_dephasing(p: InteractionPattern):
    if not p.purely_dephasing:
        raise UnsupportedPattern("pattern couples several system qubits within one gate")


def kraus_form(p: InteractionPattern) -> KrausForm:
    """Enumerate bath basis strings; merge strings that induce the same local gates."""
    _require_purely_dephasing(p)
    bits = bit_table(p.n_bath).astype(bool) if p.n_bath else np.ones((1, 0), dtype=bool)
    bpos = {q: k for k, q in enumerate(p.bath_labels)}
    theta = np.tile(_local_phases(p), (bits.shape[0], 1))
    for l, s in enumerate(p.system_labels):
        for g in p.collisions(s):
            cols = [bpos[q] for q in g.bath_qubits]
            theta[:, l] += g.phase * np.all(bits[:, cols], axis=1)
    theta = np.mod(theta, TWO_PI)
    groups, counts = np.unique(theta, axis=0, return_counts=True)
    terms = tuple(
        KrausTerm(float(c), tuple(_single(s, th) for s, th in zip(p.system_labels, row)))
        for row, c in zip(groups, counts)
    )
    return KrausForm(p.system_register, terms, float(2**p.n_bath))


# -- Hadamard form ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HadamardForm:
    """``rho_Sigma`` with unit trace; ``E(rho) = 2^N_S rho_Sigma (.) rho``."""

    rho_sigma: DensityMatrix

    @property
    def register(self) -> QubitRegister:
        return self.rho_sigma.register

    def mask(self) -> np.ndarray:
        return self.rho_sigma.entries * self.register.dim

    def apply(self, rho) -> DensityMatrix:
        entries = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
        normalized = rho.normalized if isinstance(rho, DensityMatrix) else False
        return DensityMatrix(self.register, self.mask() * entries, normalized=normalized)


def hadamard_form(p: InteractionPattern) -> HadamardForm:
    if p.purely_dephasing:
        return HadamardForm(reduced_via_peps(p))
    rho = reduced_brute_force(LmesDescription.from_pattern(p), p.system_labels)
    return HadamardForm(rho)


# -- Pauli / Choi form -----------------------------------------------------


def _interleave_perm(n: int) -> list[int]:
    """Axis order taking (s0..s_{n-1}, a0..a_{n-1}) to (s0, a0, s1, a1, ...)."""
    return [k for pair in zip(range(n), range(n, 2 * n)) for k in pair]


def choi_state(mask: np.ndarray) -> DensityMatrix:
    """``(E x 1)(|Phi+><Phi+|^n)`` for ``E(rho) = mask (.) rho``, pairs interleaved."""
    ds = mask.shape[0]
    n = int(round(np.log2(ds)))
    if 2 * n > MAX_DENSITY_QUBITS:
        raise TooLarge(f"Choi state of {n} system qubits exceeds the density-matrix cap")
    c = np.zeros((ds, ds, ds, ds), dtype=complex)
    x = np.arange(ds)
    c[x[:, None], x[:, None], x[None, :], x[None, :]] = mask / ds
    perm = _interleave_perm(n)
    c = c.reshape((2,) * (4 * n)).transpose(perm + [2 * n + k for k in perm])
    return DensityMatrix(bell_register(n), c.reshape(ds * ds, ds * ds))


def _z_string(idx: int, n: int) -> str:
    return "".join("3" if (idx >> (n - 1 - k)) & 1 else "0" for k in range(n))


@dataclass(frozen=True, eq=False)
class PauliForm:
    """Coefficients ``lambda[i][j]`` of ``Z_i rho Z_j`` over strings in {0,3}^n.

    ``table[a, b]`` holds the coefficient with left string ``a`` and right
    string ``b``, where bit ``k`` of an index set means ``Z`` on qubit ``k``.
    ``leak`` is the largest Bell-basis overlap at an index containing 1 or 2.
    """

    register: QubitRegister
    table: np.ndarray
    leak: float = 0.0

    @property
    def n(self) -> int:
        return self.register.n_qubits

    @property
    def coefficients(self) -> dict:
        n = self.n
        return {
            (_z_string(a, n), _z_string(b, n)): complex(self.table[a, b])
            for a in range(2**n)
            for b in range(2**n)
        }

    def coefficient(self, left: str, right: str) -> complex:
        a = int(left.replace("3", "1"), 2)
        b = int(right.replace("3", "1"), 2)
        return complex(self.table[a, b])

    def nonzero(self, tol: float = 1e-12) -> dict:
        return {k: v for k, v in self.coefficients.items() if abs(v) > tol}

    def mask(self) -> np.ndarray:
        n = self.n
        bits = bit_table(n).astype(int)
        signs = (-1.0) ** (bits @ bits.T)
        return signs @ self.table @ signs.T

    def apply(self, rho) -> DensityMatrix:
        entries = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
        normalized = rho.normalized if isinstance(rho, DensityMatrix) else False
        return DensityMatrix(self.register, self.mask() * entries, normalized=normalized)


def pauli_from_choi(choi: DensityMatrix, register: QubitRegister) -> PauliForm:
    n = register.n_qubits
    cols = bell_columns(n)
    full = cols.conj().T @ choi.entries @ cols
    # Bell index (i_1..i_n) in base 4; keep the digits 0 and 3
    digits = np.array(list(product(range(4), repeat=n)))
    on_pattern = np.all((digits == 0) | (digits == 3), axis=1)
    keep = np.flatnonzero(on_pattern)
    table = full[np.ix_(keep, keep)]
    off = full.copy()
    off[np.ix_(keep, keep)] = 0
    return PauliForm(register, table, float(np.max(np.abs(off))) if off.size else 0.0)


def pauli_form(p: InteractionPattern) -> PauliForm:
    if p.n_system > MAX_PAULI_SYSTEM:
        raise TooLarge(f"Pauli tables limited to {MAX_PAULI_SYSTEM} system qubits")
    choi = choi_state(hadamard_form(p).mask())
    return pauli_from_choi(choi, p.system_register)


def two_qubit_gate_map_closed_form(phis, label: str = "s0") -> PauliForm:
    """One system qubit meeting fresh bath qubits through 2-qubit gates.

    With ``r = prod cos(phi/2)`` and ``gamma = sum phi/2`` the nonzero
    coefficients are ``(1 +- r cos gamma)/2`` on ``rho`` and ``Z rho Z``, and
    ``+- i r sin(gamma)/2`` on ``rho Z`` and ``Z rho``.
    """
    phis = np.asarray(list(phis), dtype=float)
    r = float(np.prod(np.cos(phis / 2)))
    gamma = float(np.sum(phis / 2))
    l00 = (1 + r * np.cos(gamma)) / 2
    l33 = (1 - r * np.cos(gamma)) / 2
    l03 = 1j * r * np.sin(gamma) / 2
    table = np.array([[l00, l03], [-l03, l33]], dtype=complex)
    return PauliForm(QubitRegister((label,)), table)


# -- closed forms for a shared core ----------------------------------------


def _local_groups(gates, core: set, label: str):
    """Sum over the non-core bath bits of one system qubit's gates.

    Returns ``{theta: count}`` for the conditioned local unitary ``U(theta)``.
    """
    free = sorted({q for g in gates for q in g.bath_qubits if q not in core}, key=label_key)
    pos = {q: k for k, q in enumerate(free)}
    bits = bit_table(len(free)).astype(bool) if free else np.ones((1, 0), dtype=bool)
    theta = np.zeros(bits.shape[0])
    for g in gates:
        cols = [pos[q] for q in g.bath_qubits if q not in core]
        theta += g.phase * np.all(bits[:, cols], axis=1)
    theta = np.mod(theta, TWO_PI)
    vals, counts = np.unique(theta, return_counts=True)
    return list(zip(vals, counts)), len(free)


def theorem1_closed_form(p: InteractionPattern) -> KrausForm:
    """Map of a pattern whose collisions all contain, and pairwise meet in, a core.

    ``E = [(2^N_B - 2^(N_B - m)) rho + (E~_1 x ... x E~_NS)(rho)] / 2^N_B`` where
    ``E~_l`` sums the gates of system qubit ``l`` over its non-core bath bits
    with the core fixed to ``|1..1>``.  Bath qubits outside every collision
    contribute a uniform factor of 2 each.  The first term carries the tag
    ``"identity"`` whenever ``m > 0``.
    """
    _require_purely_dephasing(p)
    info = p.classification
    if not info.conditions_ab:
        raise ClosedFormInapplicable("collisions do not share a common core")
    core = set(info.core)
    m = len(core)
    local = _local_phases(p)

    per_system = []
    used = set(core)
    for s in p.system_labels:
        groups, n_free = _local_groups(p.collisions(s), core, s)
        used |= {q for g in p.collisions(s) for q in g.bath_qubits}
        per_system.append(groups)
    idle = p.n_bath - len(used)

    terms = []
    ident = 2.0**p.n_bath - 2.0 ** (p.n_bath - m)
    if ident > 0:
        terms.append(KrausTerm(
            ident, tuple(_single(s, th) for s, th in zip(p.system_labels, local)), "identity"
        ))
    for combo in product(*per_system):
        weight = float(2**idle)
        us = []
        for (theta, count), s, th0 in zip(combo, p.system_labels, local):
            weight *= float(count)
            us.append(_single(s, theta + th0))
        terms.append(KrausTerm(weight, tuple(us)))
    return KrausForm(p.system_register, tuple(terms), float(2**p.n_bath))


def shared_core_closed_form(m: int, orders, phis) -> KrausForm:
    """One gate of ``orders[l]`` bath qubits per system qubit, all sharing ``m``.

    ``E = 2^-m [(2^m - 1) rho + (x_l E_l)(rho)]`` with
    ``E_l(s) = (1 - 2^(m-n_l)) s + 2^(m-n_l) U_l s U_l^dag``.
    """
    orders, phis = list(orders), list(phis)
    if len(orders) != len(phis) or m < 0 or any(n < m for n in orders):
        raise ClosedFormInapplicable("each gate must contain the whole core")
    labels = tuple(f"s{l}" for l in range(len(orders)))
    locals_ = [
        [(0.0, 2.0 ** (n - m) - 1.0), (phi, 1.0)] for n, phi in zip(orders, phis)
    ]
    terms = []
    total = 2.0**m * np.prod([2.0 ** (n - m) for n in orders])
    ident = (2.0**m - 1.0) * total / 2.0**m
    if ident > 0:
        terms.append(KrausTerm(ident, tuple(_single(s, 0.0) for s in labels), "identity"))
    for combo in product(*locals_):
        w = float(np.prod([c for _, c in combo]))
        if w > 0:
            terms.append(KrausTerm(w, tuple(_single(s, th) for s, (th, _) in zip(labels, combo))))
    return KrausForm(QubitRegister(labels), tuple(terms), float(total))


def single_system_repeated_collisions(m: int, orders, phis) -> KrausForm:
    """``E = 2^-m [(2^m - 1) rho + E_k o ... o E_1(rho)]`` on one system qubit.

    ``orders[i]`` is the number of bath qubits of gate ``i``; every gate shares
    the same ``m`` of them and
    ``E_i(rho) = ((2^(n_i-m) - 1) rho + U_i rho U_i^dag) / 2^(n_i-m)``.
    """
    orders, phis = list(orders), list(phis)
    if len(orders) != len(phis):
        raise ClosedFormInapplicable("one phase per gate required")
    if m < 0 or any(n < m for n in orders):
        raise ClosedFormInapplicable("every gate must contain the whole core")
    private = [2.0 ** (n - m) for n in orders]
    total = 2.0**m * float(np.prod(private))
    terms = []
    ident = (2.0**m - 1.0) * float(np.prod(private))
    if ident > 0:
        terms.append(KrausTerm(ident, (_single("s0", 0.0),), "identity"))
    for hits in product((0, 1), repeat=len(orders)):
        w = float(np.prod([1.0 if h else c - 1.0 for h, c in zip(hits, private)]))
        if w == 0:
            continue
        theta = sum(phi for h, phi in zip(hits, phis) if h)
        terms.append(KrausTerm(w, (_single("s0", theta),)))
    return KrausForm(QubitRegister(("s0",)), tuple(terms), total)


# -- reference coefficient tables ------------------------------------------

REFERENCE_CASES = ("single3", "overlap_qubit", "overlap_edge")


def _two_qubit_table(c: dict) -> dict:
    """Expand grouped two-system coefficients to all 16 (left, right) entries.

    The grouping follows the structure
    ``l00^00 rho + l00^30 (rho Z1 - Z1 rho) + l00^03 (rho Z2 - Z2 rho)
    + l30^30 Z1 rho Z1 + l03^30 (Z2 rho Z1 + Z1 rho Z2 - ZZ rho - rho ZZ)
    + l03^03 Z2 rho Z2 + l30^33 (Z1 rho ZZ - ZZ rho Z1)
    + l03^33 (Z2 rho ZZ - ZZ rho Z2) + l33^33 ZZ rho ZZ``.
    """
    return {
        ("00", "00"): ("lambda_00^00", 1, c["00^00"]),
        ("00", "30"): ("lambda_00^30", 1, c["00^30"]),
        ("30", "00"): ("lambda_00^30", -1, c["00^30"]),
        ("00", "03"): ("lambda_00^03", 1, c["00^03"]),
        ("03", "00"): ("lambda_00^03", -1, c["00^03"]),
        ("30", "30"): ("lambda_30^30", 1, c["30^30"]),
        ("03", "30"): ("lambda_03^30", 1, c["03^30"]),
        ("30", "03"): ("lambda_03^30", 1, c["03^30"]),
        ("33", "00"): ("lambda_03^30", -1, c["03^30"]),
        ("00", "33"): ("lambda_03^30", -1, c["03^30"]),
        ("03", "03"): ("lambda_03^03", 1, c["03^03"]),
        ("30", "33"): ("lambda_30^33", 1, c["30^33"]),
        ("33", "30"): ("lambda_30^33", -1, c["30^33"]),
        ("03", "33"): ("lambda_03^33", 1, c["03^33"]),
        ("33", "03"): ("lambda_03^33", -1, c["03^33"]),
        ("33", "33"): ("lambda_33^33", 1, c["33^33"]),
    }


def reference_pauli_table(case: str, phi1: float, phi2: float = 0.0) -> dict:
    """Hand-derived coefficient formulas for three small patterns.

    Returns ``{(left, right): (name, value)}``.  ``single3`` is one system
    qubit with one 3-qubit gate of phase ``phi1``; its coefficients are
    compared as listed, ``l0^0 rho + l3^3 Z rho Z + l0^3 (rho Z - Z rho)``,
    since a minus sign in front of ``Z rho Z`` would break trace
    preservation (see :func:`single3_negated_trace`).  The others are two
    system qubits each hit by one 3-qubit gate, sharing a bath qubit or a
    bath pair.
    """
    c1, c2 = np.cos(phi1), np.cos(phi2)
    s1, s2 = np.sin(phi1), np.sin(phi2)
    h1, h2 = np.sin(phi1 / 2) ** 2, np.sin(phi2 / 2) ** 2
    k1, k2 = np.cos(phi1 / 2) ** 2, np.cos(phi2 / 2) ** 2
    if case == "single3":
        l00 = (7 + c1) / 8
        l33 = (1 - c1) / 8
        l03 = 1j * s1 / 8
        return {
            ("0", "0"): ("lambda_0^0", l00),
            ("3", "3"): ("lambda_3^3", l33),
            ("0", "3"): ("lambda_0^3", l03),
            ("3", "0"): ("lambda_0^3", -l03),
        }
    if case == "overlap_qubit":
        c = {
            "00^00": (25 + 3 * c2 + c1 * (3 + c2)) / 32,
            "00^30": 1j / 32 * (3 + c2) * s1,
            "00^03": 1j / 32 * (3 + c1) * s2,
            "30^30": (3 + c2) * h1 / 16,
            "03^30": s1 * s2 / 32,
            "03^03": (3 + c1) * h2 / 16,
            "30^33": 1j / 16 * h1 * s2,
            "03^33": 1j / 16 * s1 * h2,
            "33^33": h1 * h2 / 8,
        }
    elif case == "overlap_edge":
        c = {
            "00^00": (13 + c2 + c1 * (1 + c2)) / 16,
            "00^30": 1j / 8 * k2 * s1,
            "00^03": 1j / 8 * np.cos(phi1) ** 2 * s2,
            "30^30": k2 * h1 / 4,
            "03^30": s1 * s2 / 16,
            "03^03": k1 * h2 / 4,
            "30^33": 1j / 8 * h1 * s2,
            "03^33": 1j / 8 * s1 * h2,
            "33^33": h1 * h2 / 4,
        }
    else:
        raise ValueError(f"unknown case {case!r}; choose from {REFERENCE_CASES}")
    return {key: (name, sign * val) for key, (name, sign, val) in _two_qubit_table(c).items()}


def single3_negated_trace(phi: float) -> float:
    """Trace of the output if ``Z rho Z`` entered with a minus sign (1 would be consistent)."""
    return (7 + np.cos(phi)) / 8 - (1 - np.cos(phi)) / 8


def compare_with_reference(form: PauliForm, case: str, phi1: float, phi2: float = 0.0,
                           tol: float = 1e-12) -> dict:
    """Reference coefficients that disagree with ``form``: ``{name: max abs error}``."""
    bad = {}
    for (left, right), (name, value) in reference_pauli_table(case, phi1, phi2).items():
        err = abs(form.coefficient(left, right) - value)
        if err > tol:
            bad[name] = max(bad.get(name, 0.0), err)
    return bad


# -- all representations together -----------------------------------------

REPRESENTATIONS = ("oracle", "kraus", "hadamard", "pauli", "theorem1")


@dataclass(eq=False)
class DephasingMap:
    """A pattern's map with every applicable representation built on demand."""

    pattern: InteractionPattern
    _cache: dict = field(default_factory=dict, repr=False)

    @cached_property
    def hadamard(self) -> HadamardForm:
        return hadamard_form(self.pattern)

    @cached_property
    def kraus(self) -> KrausForm:
        return kraus_form(self.pattern)

    @cached_property
    def pauli(self) -> PauliForm:
        return pauli_form(self.pattern)

    @cached_property
    def choi(self) -> DensityMatrix:
        return choi_state(self.hadamard.mask())

    @cached_property
    def theorem1(self) -> KrausForm:
        return theorem1_closed_form(self.pattern)

    def applicable(self) -> tuple[str, ...]:
        p = self.pattern
        out = ["hadamard"]
        if p.n_qubits <= MAX_DENSITY_QUBITS:
            out.insert(0, "oracle")
        if p.purely_dephasing:
            out.append("kraus")
            if p.classification.conditions_ab:
                out.append("theorem1")
        if p.n_system <= MAX_PAULI_SYSTEM:
            out.append("pauli")
        return tuple(out)

    def apply(self, rho, representation: str = "hadamard") -> DensityMatrix:
        if representation == "oracle":
            return map_oracle(self.pattern, rho)
        if representation not in REPRESENTATIONS:
            raise ValueError(f"unknown representation {representation!r}")
        rho = _system_operand(self.pattern, rho)
        return getattr(self, representation).apply(rho)
