"""Coherence and entanglement observables of dephasing maps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FitError, ShapeError, WrongArity
from .maps import (
    DephasingMap,
    HadamardForm,
    hadamard_form,
    map_oracle,
    single_system_repeated_collisions,
)
from .pattern import (
    InteractionPattern,
    shared_core_pattern,
    two_system_pattern,
)
from .tensor import PAULI, DensityMatrix, QubitRegister, ghz_state

# -- single-qubit coherence ------------------------------------------------


def coherence_factor(form) -> float:
    """Multiplier applied to ``|rho_01|`` of a single system qubit.

    Accepts a :class:`HadamardForm` or a pattern.  With a unit-trace
    ``rho_Sigma`` the multiplier is ``2 |<0|rho_Sigma|1>|``.
    """
    if isinstance(form, InteractionPattern):
        form = hadamard_form(form)
    if not isinstance(form, HadamardForm):
        raise TypeError("expected a HadamardForm or an InteractionPattern")
    if form.register.n_qubits != 1:
        raise WrongArity(f"coherence factor needs one system qubit, got {form.register.n_qubits}")
    return float(abs(form.mask()[0, 1]))


def _decay_base(n1: int, phi: float) -> float:
    if n1 < 1:
        raise ShapeError("n1 must be at least 1")
    w = 2.0**n1 - 1.0
    inner = 1.0 + 2.0 * np.cos(phi) / w + 1.0 / w**2
    return w / 2.0**n1 * np.sqrt(max(inner, 0.0))


def markov_decay(n1: int, k: int, phi: float) -> float:
    """``k`` collisions, each with ``n1`` fresh bath qubits."""
    if k < 0:
        raise ShapeError("k must be non-negative")
    return float(_decay_base(n1, phi) ** k)


def nonmarkov_decay(n1: int, k: int, phi: float) -> float:
    """``k`` collisions, all with the same ``n1`` bath qubits: the phases add."""
    if k < 0:
        raise ShapeError("k must be non-negative")
    return float(_decay_base(n1, k * phi))


def coherence_time_ratio(n1_a: int, n1_b: int, phi_max: float = 0.2, points: int = 40,
                         max_residual: float = 1e-3) -> float:
    """Ratio of coherence times of ``n1_a`` to ``n1_b`` bath qubits per gate.

    ``-ln(markov_decay(n1, 1, phi))`` is fitted through the origin against
    ``phi^2 / 8`` on ``(0, phi_max]``; the ratio of coherence times is the
    inverse ratio of the fitted slopes.
    """
    phis = np.linspace(phi_max / points, phi_max, points)
    x = phis**2 / 8

    def slope(n1):
        y = np.array([-np.log(markov_decay(n1, 1, ph)) for ph in phis])
        s = float(x @ y / (x @ x))
        rel = np.sqrt(np.mean((y - s * x) ** 2)) / np.sqrt(np.mean(y**2))
        if rel > max_residual:
            raise FitError(f"quadratic fit for n1={n1} leaves relative residual {rel:.2e}")
        return s

    return slope(n1_b) / slope(n1_a)


@dataclass(frozen=True)
class CoherenceScan:
    parameterization: dict
    samples: tuple[tuple[float, float], ...]


FIG1_N1 = 4
FIG1_K = 2


def fig1_scan(m: int, phi_grid) -> CoherenceScan:
    """Two 5-qubit gates on one system qubit sharing ``m`` bath qubits, equal phases."""
    samples = []
    for phi in phi_grid:
        form = single_system_repeated_collisions(m, [FIG1_N1] * FIG1_K, [phi] * FIG1_K)
        samples.append((float(phi), float(abs(form.mask()[0, 1]))))
    return CoherenceScan({"m": m, "n1": FIG1_N1, "k": FIG1_K}, tuple(samples))


# -- two-qubit entanglement ------------------------------------------------

_YY = np.kron(PAULI[2], PAULI[2])


def concurrence(rho) -> float:
    entries = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if entries.shape != (4, 4):
        raise ShapeError(f"concurrence needs a 4x4 state, got {entries.shape}")
    return float(_concurrence_batch(entries[None])[0])


def _concurrence_batch(rhos: np.ndarray) -> np.ndarray:
    # mu_i are the singular values of sqrt(rho) YY sqrt(rho)^*, which avoids
    # square roots of eigenvalue noise near pure states
    w, v = np.linalg.eigh(rhos)
    root = (v * np.sqrt(np.clip(w, 0.0, None))[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)
    mu = np.linalg.svd(root @ _YY @ root.conj(), compute_uv=False)
    return np.clip(mu[..., 0] - mu[..., 1] - mu[..., 2] - mu[..., 3], 0.0, None)


def _binary_entropy(x):
    x = np.clip(x, 0.0, 1.0)
    out = np.zeros_like(x, dtype=float)
    inside = (x > 0) & (x < 1)
    xi = x[inside]
    out[inside] = -xi * np.log2(xi) - (1 - xi) * np.log2(1 - xi)
    return out


def eof_from_concurrence(c):
    c = np.clip(np.asarray(c, dtype=float), 0.0, 1.0)
    return _binary_entropy((1 + np.sqrt(1 - c**2)) / 2)


def eof_two_qubit(rho) -> float:
    """Entanglement of formation via the concurrence."""
    return float(eof_from_concurrence(concurrence(rho)))


_PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


def euler_unitary(a, b, c) -> np.ndarray:
    """``Rz(a) Ry(b) Rz(c)``, broadcasting over leading axes."""
    a, b, c = np.broadcast_arrays(*(np.asarray(t, dtype=float) for t in (a, b, c)))
    cb, sb = np.cos(b / 2), np.sin(b / 2)
    ep, em = np.exp(-0.5j * (a + c)), np.exp(-0.5j * (a - c))
    u = np.empty(a.shape + (2, 2), dtype=complex)
    u[..., 0, 0] = ep * cb
    u[..., 0, 1] = -em * sb
    u[..., 1, 0] = em.conj() * sb
    u[..., 1, 1] = ep.conj() * cb
    return u


def maximally_entangled(params: np.ndarray) -> np.ndarray:
    """``(u x v)|Phi+>`` for rows of six Euler angles ``(u: 0..2, v: 3..5)``."""
    params = np.atleast_2d(params)
    u = euler_unitary(params[:, 0], params[:, 1], params[:, 2])
    v = euler_unitary(params[:, 3], params[:, 4], params[:, 5])
    uv = np.einsum("bij,bkl->bikjl", u, v).reshape(-1, 4, 4)
    return uv @ _PHI_PLUS


def _output_concurrence(mask: np.ndarray, params: np.ndarray) -> np.ndarray:
    psi = maximally_entangled(params)
    rhos = np.einsum("bi,bj->bij", psi, psi.conj()) * mask
    return _concurrence_batch(rhos)


# Euler angles for u with v = 1 giving the four Bell states
BELL_STARTS = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [np.pi, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, np.pi, np.pi, 0.0, 0.0, 0.0],
    [0.0, np.pi, 0.0, 0.0, 0.0, 0.0],
])


@dataclass(frozen=True)
class OptimizerResult:
    value: float
    params: np.ndarray
    converged: bool
    evaluations: int


def maximize_concurrence(mask: np.ndarray, rng: np.random.Generator, starts: int = 20,
                         step: float = 0.5, min_step: float = 1e-6,
                         max_rounds: int = 4000) -> OptimizerResult:
    """Multi-start compass search over the six Euler angles.

    All starts move in lockstep: each round evaluates ``+-step`` along every
    coordinate for every start, keeps the best improving move per start, and
    halves that start's step when nothing improves.  The four Bell states are
    included as extra starts.
    """
    x = np.vstack([rng.uniform(0, 2 * np.pi, size=(starts, 6)), BELL_STARTS])
    n = x.shape[0]
    steps = np.full(n, step)
    f = _output_concurrence(mask, x)
    evals = n
    moves = np.vstack([np.eye(6), -np.eye(6)])
    for _ in range(max_rounds):
        active = steps >= min_step
        if not active.any():
            break
        idx = np.flatnonzero(active)
        cand = x[idx, None, :] + steps[idx, None, None] * moves[None]
        fc = _output_concurrence(mask, cand.reshape(-1, 6)).reshape(len(idx), 12)
        evals += fc.size
        best = np.argmax(fc, axis=1)
        gain = fc[np.arange(len(idx)), best] > f[idx]
        up, down = idx[gain], idx[~gain]
        x[up] = cand[gain, best[gain]]
        f[up] = fc[gain, best[gain]]
        steps[down] /= 2
    k = int(np.argmax(f))
    return OptimizerResult(float(f[k]), x[k].copy(), bool(np.all(steps < min_step)), evals)


def max_concurrence_scan(mask: np.ndarray, points: int = 20001) -> float:
    """Brute maximum over the input family using its one relevant angle.

    ``(u x v)|Phi+> = (u v^T x 1)|Phi+>``, and the outer ``Rz`` factors of
    ``u v^T`` commute with any diagonal-mask map and act locally, so only the
    middle ``Ry`` angle matters.
    """
    b = np.linspace(0, np.pi, points)
    params = np.zeros((points, 6))
    params[:, 1] = b
    return float(np.max(_output_concurrence(mask, params)))


@dataclass(frozen=True)
class EntanglementScan:
    coupling: str
    points: tuple[tuple[float, float], ...]
    values: tuple[float, ...]
    params: tuple[tuple[float, ...], ...]
    converged: tuple[bool, ...]


def fig2_point(coupling: str, phi1: float, phi2: float, seed: int = 0,
               grid_index=(0, 0), starts: int = 20) -> OptimizerResult:
    mask = DephasingMap(two_system_pattern(coupling, phi1, phi2)).hadamard.mask()
    rng = np.random.default_rng(np.random.SeedSequence([seed, *grid_index]))
    return maximize_concurrence(mask, rng, starts=starts)


def fig2_scan(coupling: str, grid, seed: int = 0, starts: int = 20) -> EntanglementScan:
    """Best entanglement of formation over maximally entangled inputs per grid point.

    ``grid`` is a sequence of ``(phi1, phi2)``; each point's optimizer is seeded
    from ``(seed, point index)`` so results do not depend on evaluation order.
    """
    points, values, params, conv = [], [], [], []
    for i, (phi1, phi2) in enumerate(grid):
        res = fig2_point(coupling, phi1, phi2, seed, (i,), starts)
        points.append((float(phi1), float(phi2)))
        values.append(float(eof_from_concurrence(res.value)))
        params.append(tuple(float(t) for t in res.params))
        conv.append(res.converged)
    return EntanglementScan(coupling, tuple(points), tuple(values), tuple(params), tuple(conv))


# -- multipartite ----------------------------------------------------------


def partial_transpose(rho: DensityMatrix, cut) -> np.ndarray:
    cut = set(cut)
    labels = rho.register.labels
    if not cut or not cut < set(labels):
        raise ShapeError("cut must be a nonempty proper subset of the register")
    n = len(labels)
    t = rho.entries.reshape((2,) * (2 * n))
    axes = list(range(2 * n))
    for k, q in enumerate(labels):
        if q in cut:
            axes[k], axes[n + k] = n + k, k
    return t.transpose(axes).reshape(rho.entries.shape)


def log_negativity(rho: DensityMatrix, cut) -> float:
    ev = np.linalg.eigvalsh(partial_transpose(rho, cut))
    return float(np.log2(np.sum(np.abs(ev))))


def _ghz_factor(n_system: int, n1: int, phi: float, dependent: bool) -> float:
    beta = 2.0**-n1
    if dependent:
        return abs(1 - beta + beta * np.exp(-1j * n_system * phi))
    return abs(1 - beta + beta * np.exp(-1j * phi)) ** n_system


def e_indep_vs_e_dep(n_system: int, n1: int, p: float, phi: float) -> tuple[float, float]:
    """Log-negativity of one qubit against the rest for a dephased GHZ-type input.

    Input ``sqrt(p)|0..0> + sqrt(1-p)|1..1>``; every system qubit meets
    ``n1`` bath qubits through one gate of phase ``phi``, either with private
    baths or all sharing the same ``n1`` bath qubits.  The output keeps its
    two-level structure with the coherence scaled by the map's mask entry.
    """
    amp = 2 * np.sqrt(p * (1 - p))
    return (
        float(np.log2(1 + amp * _ghz_factor(n_system, n1, phi, False))),
        float(np.log2(1 + amp * _ghz_factor(n_system, n1, phi, True))),
    )


def e_indep_vs_e_dep_sqrt_variant(n_system: int, n1: int, p: float, phi: float) -> tuple[float, float]:
    """The same pair with an extra square root on the coherence factor (a known variant)."""
    amp = 2 * np.sqrt(p * (1 - p))
    beta = 2.0**-n1
    mu = (1 - beta + beta * np.exp(1j * phi)) ** n_system
    nu = 1 - beta + beta * np.exp(1j * n_system * phi)
    return (
        float(np.log2(1 + abs(amp * np.sqrt(mu)))),
        float(np.log2(1 + abs(amp * np.sqrt(nu)))),
    )


def ghz_pattern(n_system: int, n1: int, phi: float, dependent: bool) -> InteractionPattern:
    m = n1 if dependent else 0
    return shared_core_pattern(m, [n1] * n_system, [phi] * n_system)


def ghz_log_negativity_oracle(n_system: int, n1: int, p: float, phi: float,
                              dependent: bool) -> float:
    pat = ghz_pattern(n_system, n1, phi, dependent)
    rho = ghz_state(pat.system_register, p).density()
    return log_negativity(map_oracle(pat, rho), {"s0"})


def dfs_check(p: InteractionPattern, rho) -> float:
    """``max |E(rho) - rho|``; zero means ``rho`` is left untouched."""
    out = DephasingMap(p).apply(rho)
    entries = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return float(np.max(np.abs(out.entries - entries)))


def werner_state(p: float, register=None) -> DensityMatrix:
    """``(1 - p) 1/4 + p |Psi-><Psi-|``."""
    psi = np.array([0, 1, -1, 0]) / np.sqrt(2)
    register = register or QubitRegister(("s0", "s1"))
    return DensityMatrix(register, (1 - p) * np.eye(4) / 4 + p * np.outer(psi, psi))
