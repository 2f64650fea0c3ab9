"""Command-line front end.

Exit codes: 0 ok, 2 usage or parse error, 3 size cap exceeded, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import FitError, NumericalError, ParseError, SpinGasError, TooLarge
from .lme_prep import build_circuit, double_copy, prepare, split_product
from .maps import REPRESENTATIONS, DephasingMap, map_oracle
from .metrics import (
    FIG1_K,
    FIG1_N1,
    e_indep_vs_e_dep,
    fig1_scan,
    fig2_scan,
    markov_decay,
    nonmarkov_decay,
)
from .pattern import FIG2_COUPLINGS, load_pattern
from .reduced import LmesDescription
from .tensor import (
    BELL_STATES,
    DensityMatrix,
    QubitRegister,
    StateVector,
    ghz_state,
    plus_state,
    random_density_matrix,
)

EXIT_OK, EXIT_USAGE, EXIT_TOO_LARGE, EXIT_NUMERICAL = 0, 2, 3, 4

MAP_REPRS = ("oracle", "kraus", "hadamard", "pauli", "choi", "theorem1")
SCAN_KINDS = ("fig1", "fig2", "coherence", "ghz")


class UsageError(SpinGasError):
    pass


# -- formatting ------------------------------------------------------------


def fmt_complex(z: complex) -> str:
    """``re,im`` with 15 significant digits; negative zero prints as 0."""
    z = complex(z)
    return f"{z.real + 0.0:.15g},{z.imag + 0.0:.15g}"


def fmt_float(x: float) -> str:
    """Shortest round-trip text of a float, used for every CSV cell."""
    return repr(float(x))


def dump_matrix(a: np.ndarray) -> str:
    a = np.atleast_2d(a)
    return "".join(" ".join(fmt_complex(z) for z in row) + "\n" for row in a)


def dump_vector(v: np.ndarray) -> str:
    return "".join(fmt_complex(z) + "\n" for z in np.ravel(v))


def read_dense(path: str) -> np.ndarray:
    """Rows of whitespace-separated ``re,im`` tokens; '#' starts a comment."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            row = []
            for col, tok in enumerate(line.split(), start=1):
                re_part, sep, im_part = tok.partition(",")
                try:
                    row.append(complex(float(re_part), float(im_part) if sep else 0.0))
                except ValueError:
                    raise ParseError(f"bad complex entry {tok!r}", lineno, col) from None
            rows.append(row)
    if not rows:
        raise ParseError(f"{path} holds no entries")
    if len({len(r) for r in rows}) != 1:
        raise ParseError(f"{path} has rows of different lengths")
    a = np.array(rows, dtype=complex)
    return a[:, 0] if a.shape[1] == 1 else a


# -- argument values -------------------------------------------------------

_PI_EXPR = re.compile(r"^([-+]?\d*\.?\d*)\*?pi(?:/(\d*\.?\d+))?$")


def parse_angle(text: str) -> float:
    """A float, or a multiple of pi such as ``pi``, ``2pi``, ``-pi/2``."""
    text = text.strip().lower()
    m = _PI_EXPR.match(text)
    if m:
        coef = m.group(1)
        factor = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
        div = float(m.group(2)) if m.group(2) else 1.0
        return factor * np.pi / div
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad angle {text!r}") from None


@dataclass(frozen=True)
class Grid:
    start: float
    stop: float
    steps: int

    def values(self) -> np.ndarray:
        if self.steps == 1:
            return np.array([self.start])
        return np.linspace(self.start, self.stop, self.steps)


def parse_grid(text: str) -> Grid:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid {text!r} is not start:stop:steps")
    try:
        steps = int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad step count {parts[2]!r}") from None
    if steps < 1:
        raise argparse.ArgumentTypeError("grid needs at least one step")
    return Grid(parse_angle(parts[0]), parse_angle(parts[1]), steps)


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None


def parse_seed(text: str) -> int:
    try:
        seed = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed {text!r}") from None
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return seed


def named_state(text: str, register: QubitRegister):
    """``plus``, ``ghz:p=<float>``, ``bell:<name>`` or ``file:<path>``."""
    kind, _, arg = text.partition(":")
    if kind == "plus" and not arg:
        return plus_state(register)
    if kind == "ghz":
        key, _, val = arg.partition("=")
        if key != "p":
            raise UsageError(f"expected ghz:p=<float>, got {text!r}")
        try:
            p = float(val)
        except ValueError:
            raise UsageError(f"bad GHZ weight {val!r}") from None
        if not 0.0 <= p <= 1.0:
            raise UsageError("GHZ weight must lie in [0, 1]")
        return ghz_state(register, p)
    if kind == "bell":
        if arg not in BELL_STATES:
            raise UsageError(f"unknown Bell state {arg!r}; choose from {sorted(BELL_STATES)}")
        if register.n_qubits != 2:
            raise UsageError("Bell inputs need exactly two system qubits")
        return StateVector(register, BELL_STATES[arg])
    if kind == "file" and arg:
        a = read_dense(arg)
        if a.ndim == 1:
            return StateVector(register, a)
        return DensityMatrix(register, a)
    raise UsageError(f"unknown state {text!r}")


def _as_density(state) -> DensityMatrix:
    return state.density() if isinstance(state, StateVector) else state


# -- output ----------------------------------------------------------------


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(c if isinstance(c, str) else fmt_float(c) for c in row))
    return "\n".join(lines) + "\n"


# -- commands --------------------------------------------------------------


def cmd_validate(args) -> int:
    p = load_pattern(args.pattern)
    c = p.classification
    m = "none" if c.m is None else str(c.m)
    orders = " ".join(f"{s}:{','.join(str(o) for o in c.orders.get(s, ())) or '-'}"
                      for s in p.system_labels)
    text = (
        f"purely_dephasing={str(c.purely_dephasing).lower()} "
        f"markovian={str(c.markovian).lower()} m={m}\n"
        f"conditions_ab={str(c.conditions_ab).lower()} orders {orders}\n"
        + json.dumps({"system": p.n_system, "bath": p.n_bath, "gates": len(p.gates),
                      **c.to_dict()}, sort_keys=True)
        + "\n"
    )
    _emit(text, args.out)
    return EXIT_OK


def _kraus_dump(form) -> str:
    lines = [f"# normalizer {fmt_float(form.normalizer)} terms {len(form.terms)}\n"]
    for t in form.terms:
        tag = f" tag={t.tag}" if t.tag else ""
        lines.append(f"term weight={fmt_float(t.weight)}{tag}\n")
        lines.append(" ".join(fmt_complex(z) for z in t.diagonal()) + "\n")
    return "".join(lines)


def _pauli_dump(form, tol: float) -> str:
    # the table is hermitian; only left <= right is listed
    lines = []
    for (left, right), value in sorted(form.nonzero(tol).items()):
        if left <= right:
            lines.append(f"{left} {right} {fmt_complex(value)}\n")
    return "".join(lines)


def cmd_map(args) -> int:
    p = load_pattern(args.pattern)
    dm = DephasingMap(p)
    rep = args.repr
    if rep == "oracle":
        rho = _as_density(named_state(args.state or "plus", p.system_register))
        text = dump_matrix(map_oracle(p, rho).entries)
    elif rep == "hadamard":
        text = dump_matrix(dm.hadamard.rho_sigma.entries)
    elif rep == "choi":
        text = dump_matrix(dm.choi.entries)
    elif rep == "pauli":
        text = _pauli_dump(dm.pauli, args.tol)
    else:
        text = _kraus_dump(getattr(dm, rep))
    _emit(text, args.out)
    return EXIT_OK


def cmd_apply(args) -> int:
    p = load_pattern(args.pattern)
    rho = _as_density(named_state(args.state or "plus", p.system_register))
    out = DephasingMap(p).apply(rho, args.repr)
    _emit(dump_matrix(out.entries), args.out)
    return EXIT_OK


def _grid(args, default: Grid) -> np.ndarray:
    return (args.grid or default).values()


_FULL_TURN = Grid(0.0, 2 * np.pi, 101)


def cmd_scan(args) -> int:
    kind = args.kind
    if kind == "fig1":
        rows = []
        for m in args.m or [0, 1, 3, 4]:
            if not 0 <= m <= FIG1_N1:
                raise UsageError(f"m must lie in 0..{FIG1_N1}")
            for phi, f in fig1_scan(m, _grid(args, _FULL_TURN)).samples:
                rows.append((str(m), phi, f))
        text = _csv(("m", "phi", "factor"), rows)
    elif kind == "fig2":
        axis = _grid(args, Grid(0.0, 2 * np.pi, 9))
        points = [(a, b) for a in axis for b in axis]
        rows = []
        for coupling in args.coupling or list(FIG2_COUPLINGS):
            if coupling not in FIG2_COUPLINGS:
                raise UsageError(f"unknown coupling {coupling!r}")
            scan = fig2_scan(coupling, points, seed=args.seed, starts=args.starts)
            for (a, b), e in zip(scan.points, scan.values):
                rows.append((coupling, a, b, e))
        text = _csv(("coupling", "phi1", "phi2", "eof"), rows)
    elif kind == "coherence":
        rows = []
        for n1 in args.n1 or [1, 2, 3]:
            for k in args.k or [FIG1_K]:
                for phi in _grid(args, _FULL_TURN):
                    rows.append((str(n1), str(k), phi, markov_decay(n1, k, phi),
                                 nonmarkov_decay(n1, k, phi)))
        text = _csv(("n1", "k", "phi", "markov", "nonmarkov"), rows)
    else:
        rows = []
        for ns in args.ns or [2, 3, 4]:
            for n1 in args.n1 or [2]:
                phis = [np.pi / ns] if args.grid is None else args.grid.values()
                for phi in phis:
                    e_ind, e_dep = e_indep_vs_e_dep(ns, n1, args.p, phi)
                    rows.append((str(ns), str(n1), args.p, phi, e_ind, e_dep))
        text = _csv(("NS", "n1", "p", "phi", "E_indep", "E_dep"), rows)
    _emit(text, args.out)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    p = load_pattern(args.pattern)
    dm = DephasingMap(p)
    rng = np.random.default_rng(args.seed)
    reprs = [r for r in dm.applicable() if r != "oracle"]
    worst = {r: 0.0 for r in reprs}
    for _ in range(args.samples):
        rho = random_density_matrix(p.system_register, rng)
        ref = map_oracle(p, rho).entries
        for r in reprs:
            err = float(np.max(np.abs(dm.apply(rho, r).entries - ref)))
            worst[r] = max(worst[r], err)
    lines = [f"{r} max_abs_err={e:.3e}\n" for r, e in worst.items()]
    ok = all(e <= args.tol for e in worst.values())
    lines.append(f"{'PASS' if ok else 'FAIL'} tol={args.tol:g} samples={args.samples}\n")
    _emit("".join(lines), args.out)
    return EXIT_OK if ok else EXIT_NUMERICAL


def _lmes(path: str) -> LmesDescription:
    p = load_pattern(path)
    if p.n_bath:
        raise UsageError("LMES files declare 'bath 0'")
    return LmesDescription.from_pattern(p)


def _check_factorized(out: StateVector, n: int, tol: float) -> None:
    s = split_product(out, n)[0]
    if abs(s[0] - 1.0) > tol:
        raise NumericalError(f"output is not a product state (leading Schmidt value {s[0]:.3e})")


def cmd_prepare(args) -> int:
    lmes = _lmes(args.pattern)
    circ = build_circuit(lmes)
    state = named_state(args.state or "plus", lmes.register)
    if not isinstance(state, StateVector):
        raise UsageError("the preparation input must be a pure state")
    out = prepare(circ, state)
    _check_factorized(out, lmes.n, args.tol)
    _emit(dump_vector(out.amplitudes), args.out)
    return EXIT_OK


def cmd_double_copy(args) -> int:
    lmes = _lmes(args.pattern)
    out = double_copy(lmes)
    _check_factorized(out, lmes.n, args.tol)
    _emit(dump_vector(out.amplitudes), args.out)
    return EXIT_OK


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write to this path instead of stdout")
    common.add_argument("--seed", type=parse_seed, default=0, help="RNG seed (default 0)")
    common.add_argument("--tol", type=float, default=1e-10, help="numerical tolerance")

    parser = argparse.ArgumentParser(prog="spingas",
                                     description="Dephasing maps induced by spin-bath phase gates.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", parents=[common], help="classify a pattern file")
    v.add_argument("pattern")
    v.set_defaults(func=cmd_validate)

    m = sub.add_parser("map", parents=[common], help="dump one representation of the map")
    m.add_argument("pattern")
    m.add_argument("--repr", choices=MAP_REPRS, default="hadamard")
    m.add_argument("--state", help="input for --repr oracle (default plus)")
    m.set_defaults(func=cmd_map)

    a = sub.add_parser("apply", parents=[common], help="apply the map to a state")
    a.add_argument("pattern")
    a.add_argument("--repr", choices=REPRESENTATIONS, default="hadamard")
    a.add_argument("--state", help="plus, ghz:p=<float>, bell:<name> or file:<path>")
    a.set_defaults(func=cmd_apply)

    s = sub.add_parser("scan", parents=[common], help="write figure data as CSV")
    s.add_argument("kind", choices=SCAN_KINDS)
    s.add_argument("--grid", type=parse_grid, help="phase grid start:stop:steps")
    s.add_argument("--m", type=parse_int_list, help="fig1 overlap sizes, e.g. 0,1,3,4")
    s.add_argument("--coupling", action="append", help="fig2 coupling (repeatable)")
    s.add_argument("--starts", type=int, default=20, help="fig2 random optimizer starts")
    s.add_argument("--n1", type=parse_int_list, help="bath qubits per gate")
    s.add_argument("--k", type=parse_int_list, help="collisions per system qubit")
    s.add_argument("--ns", type=parse_int_list, help="ghz system sizes")
    s.add_argument("--p", type=float, default=0.5, help="ghz weight")
    s.set_defaults(func=cmd_scan)

    o = sub.add_parser("oracle-check", parents=[common],
                       help="compare every representation against the dense oracle")
    o.add_argument("pattern")
    o.add_argument("--samples", type=int, default=10)
    o.set_defaults(func=cmd_oracle_check)

    pr = sub.add_parser("prepare-lme", parents=[common], help="run the stabilizer preparation circuit")
    pr.add_argument("pattern")
    pr.add_argument("--state", help="system input (default plus)")
    pr.set_defaults(func=cmd_prepare)

    d = sub.add_parser("double-copy", parents=[common], help="prepare |Psi>|Psi*>")
    d.add_argument("pattern")
    d.set_defaults(func=cmd_double_copy)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TooLarge as exc:
        print(f"spingas: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except (NumericalError, FitError) as exc:
        print(f"spingas: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (SpinGasError, OSError) as exc:
        print(f"spingas: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
