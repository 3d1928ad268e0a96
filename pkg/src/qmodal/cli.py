"""Command-line front end.

Exit codes: 0 ok, 2 input error, 3 capacity exceeded, 4 verification failure.
With ``--out DIR`` every command writes its CSV, a PNG figure and a JSON
manifest into DIR; otherwise the CSV goes to stdout.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .circuit import gate_counts, to_text
from .encoding import VARIANTS, block_error, build_block_encoding, build_walk, \
    build_controlled_walk, controlled_walk_toffolis, default_system, extract_block
from .reference import OscillatorSystem, SpecError, eig, load_system
from .simulator import CapacityError

EXIT_OK, EXIT_INPUT, EXIT_CAPACITY, EXIT_VERIFY = 0, 2, 3, 4
ENCODE_MAX_N = 4


class InputError(ValueError):
    pass


@dataclass
class RunManifest:
    command: str
    spec: str | None
    variant: str | None
    n: object = None
    t: int | None = None
    m: object = None
    seed: int | None = None
    version: str = __version__
    argv: list = field(default_factory=list)
    wall_clock_seconds: float = 0.0
    outputs: list = field(default_factory=list)

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")


# -- argument helpers ------------------------------------------------------------

def parse_int_list(text: str) -> list[int]:
    """'3', '2..8' or '32,64,128' (ranges inclusive)."""
    out: list[int] = []
    try:
        for part in str(text).split(","):
            part = part.strip()
            if ".." in part:
                lo, hi = part.split("..")
                out.extend(range(int(lo), int(hi) + 1))
            elif part:
                out.append(int(part))
    except ValueError:
        raise InputError(f"bad integer list {text!r}") from None
    if not out:
        raise InputError("empty integer list")
    return out


def _variants(text: str) -> list[str]:
    if text == "all":
        return list(VARIANTS)
    vs = [v.strip() for v in text.split(",")]
    for v in vs:
        if v not in VARIANTS:
            raise InputError(f"unknown variant {v!r}; choose from {', '.join(VARIANTS)} or all")
    return vs


def _system(args, n: int | None = None) -> OscillatorSystem:
    n = args.n if n is None else n
    if args.spec:
        sys_ = load_system(args.spec)
        return sys_ if n is None else sys_.with_n(int(n))
    if n is None:
        raise InputError("--n is required without --spec")
    return default_system(args.variant, int(n), args.k1, args.k2, args.boundary)


def _mode(text: str):
    if text in ("fundamental", "f"):
        return "fundamental"
    try:
        return int(text)
    except ValueError:
        raise InputError(f"mode must be an integer or 'fundamental', got {text!r}") from None


class _Output:
    """Collects CSV text and figures for one command."""

    def __init__(self, args, manifest: RunManifest):
        self.dir = Path(args.out) if getattr(args, "out", None) else None
        self.plot = not getattr(args, "no_plot", False)
        self.manifest = manifest
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)

    def csv(self, name: str, text: str) -> None:
        if self.dir is None:
            sys.stdout.write(text)
            return
        p = self.dir / name
        p.write_text(text)
        self.manifest.outputs.append(p.name)

    def text(self, name: str, text: str) -> None:
        if self.dir is None:
            sys.stdout.write(text)
            return
        p = self.dir / name
        p.write_text(text)
        self.manifest.outputs.append(p.name)

    def figure(self, name: str, draw: Callable) -> None:
        if self.dir is None or not self.plot:
            return
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        fig, ax = plt.subplots(figsize=(6, 4))
        draw(ax)
        fig.tight_layout()
        p = self.dir / name
        fig.savefig(p, dpi=120)
        plt.close(fig)
        self.manifest.outputs.append(p.name)

    def finish(self, t0: float) -> None:
        self.manifest.wall_clock_seconds = round(time.time() - t0, 3)
        if self.dir is not None:
            self.manifest.write(self.dir / "manifest.json")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(round(float(x), 12) + 0.0)
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(_fmt(v) for v in r) + "\n")
    return buf.getvalue()


def _info(msg: str) -> None:
    print(msg, file=sys.stderr)


# -- commands --------------------------------------------------------------------

def cmd_encode(args, out: _Output) -> int:
    ns = parse_int_list(args.n) if isinstance(args.n, str) else [args.n]
    status = EXIT_OK
    rows = []
    for n in ns:
        if n > ENCODE_MAX_N:
            raise CapacityError(f"dense block extraction supports n <= {ENCODE_MAX_N}")
        sys_ = _system(args, n)
        be = build_block_encoding(sys_, args.variant)
        block = be.alpha * extract_block(be)
        ref = be.target_matrix()
        diff = float(np.max(np.abs(block - ref)))
        ok = diff < args.tol
        status = status if ok else EXIT_VERIFY
        rows.append((args.variant, n, be.circuit.num_qubits, be.alpha, diff, ok))
        N = sys_.N
        cells = [(x, y, float(np.real(block[x, y])), float(ref[x, y])) for x in range(N) for y in range(N)]
        out.csv(f"block_n{n}.csv", _csv(["row", "col", "alpha_block", "reference"], cells))
        if args.dump_circuit:
            Path(args.dump_circuit).write_text(to_text(be.circuit))
        out.figure(f"block_n{n}.png", lambda ax, b=block, r=ref: _draw_block(ax, b, r))
        _info(f"{args.variant} n={n}: max |alpha*block - H| = {diff:.3e} ({'ok' if ok else 'MISMATCH'})")
    out.csv("encode_summary.csv", _csv(["variant", "n", "qubits", "alpha", "max_diff", "ok"], rows))
    return status


def _draw_block(ax, block, ref):
    N = ref.shape[0]
    ax.imshow(np.real(block), cmap="viridis")
    ax.set_title(f"alpha * block, max diff {np.max(np.abs(block - ref)):.1e}")
    ax.set_xticks(range(N))
    ax.set_yticks(range(N))


def cmd_solve(args, out: _Output) -> int:
    from .qpe import QpeConfig, decode_bin, run_qpe
    from .stateprep import CoarseState, coarse_eigenvector, exact_mode, state_circuit

    sys_ = _system(args)
    n = sys_.n
    be = build_block_encoding(sys_, args.variant)
    w = build_walk(be)
    mode = _mode(args.mode)
    if args.exact_init:
        _, v, _ = exact_mode(sys_, mode)
        cs = CoarseState(n, v / np.linalg.norm(v))
    else:
        m = n if args.m is None else args.m
        if not 1 <= m <= n:
            raise InputError("--m must lie in 1..n")
        cs = coarse_eigenvector(sys_, m, mode)
    cfg = QpeConfig(args.t, state_circuit(cs, n), args.shots, args.seed)
    dist = run_qpe(w, cfg, args.method)
    T = dist.size
    rows = []
    for y in range(T):
        r = decode_bin(y, args.t, be)
        p = dist.probabilities[y] if dist.counts is None else dist.counts[y] / args.shots
        extra = [] if dist.counts is None else [int(dist.counts[y])]
        rows.append([y, float(p)] + extra + [r.lambda_tilde, r.lambda_original, r.omega])
    head = ["phi_int", "probability"] + ([] if dist.counts is None else ["count"]) + \
        ["lambda_tilde", "lambda_original", "omega"]
    out.csv("histogram.csv", _csv(head, rows))
    probs = np.array([r[1] for r in rows])
    folded = probs[: T // 2 + 1].copy()
    folded[1:T // 2] += probs[T - 1:T // 2:-1]
    top = int(np.argmax(folded))
    res = decode_bin(top, args.t, be)
    omega = "nan" if res.omega is None else f"{res.omega:.6f}"
    summary = (f"top bin phi_int={top} (folded mass {folded[top]:.6f}): lambda_tilde={res.lambda_tilde:.6f} "
               f"lambda_original={res.lambda_original:.6f} omega={omega}\n")
    status = EXIT_OK
    if args.oracle_check:
        summary_rows, ok = _oracle_rows(be, probs, args.t)
        out.csv("oracle_check.csv", _csv(
            ["lambda_tilde", "lambda_original", "multiplicity", "bin", "bin_mass"], summary_rows))
        if not ok:
            status = EXIT_VERIFY
            summary += "oracle check FAILED: top bin matches no dense eigenvalue\n"
        else:
            summary += "oracle check ok\n"
    out.text("summary.txt", summary)
    _info(summary.rstrip())
    out.figure("histogram.png", lambda ax: _draw_hist(ax, probs, args.t))
    return status


def _oracle_rows(be, probs, t):
    T = 2 ** t
    lam, _ = eig(be.target_matrix() / be.alpha)
    vals, counts = np.unique(np.round(lam, 10), return_counts=True)
    rows = []
    for v, c in sorted(zip(vals, counts), key=lambda z: -z[0]):
        y = math.acos(max(-1.0, min(1.0, v))) / (2 * math.pi) * T
        b = int(round(y)) % T
        mass = probs[b] + (probs[(T - b) % T] if b not in (0, T // 2) else 0.0)
        lo = be.alpha * be.system.k_scale * v - be.system.shift
        rows.append((float(v), float(lo), int(c), b, float(mass)))
    folded = probs[: T // 2 + 1].copy()
    folded[1:T // 2] += probs[T - 1:T // 2:-1]
    top = int(np.argmax(folded))
    theta_top = 2 * math.pi * top / T
    ok = any(abs(math.acos(max(-1.0, min(1.0, v))) - theta_top) <= 2 * math.pi / T + 1e-12 for v in vals)
    return rows, ok


def _draw_hist(ax, probs, t):
    T = 2 ** t
    ax.bar(np.arange(T), probs, width=1.0)
    ax.set_xlabel("phi_int")
    ax.set_ylabel("probability")
    ax.set_title(f"phase register distribution (t={t})")


def cmd_counts(args, out: _Output) -> int:
    rows = []
    status = EXIT_OK
    for v in _variants(args.variant):
        for n in parse_int_list(args.n):
            sys_ = default_system(v, n)
            w = build_walk(build_block_encoding(sys_, v))
            c = build_controlled_walk(w)
            gc = gate_counts(c, args.policy)
            formula = controlled_walk_toffolis(v, n)
            ok = gc.toffoli == formula
            if not ok and args.policy == "shared":
                status = EXIT_VERIFY
            rows.append((v, n, gc.toffoli, formula, ok, gc.cnot, gc.single_qubit, gc.rotation, c.num_qubits))
    head = ["variant", "n", "toffoli", "formula", "match", "cnot", "single_qubit", "rotation", "qubits"]
    if args.format == "md":
        lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
        lines += ["| " + " | ".join(_fmt(x) for x in r) + " |" for r in rows]
        out.text("counts.md", "\n".join(lines) + "\n")
    else:
        out.csv("counts.csv", _csv(head, rows))
    out.figure("counts.png", lambda ax: _draw_counts(ax, rows))
    return status


def _draw_counts(ax, rows):
    for v in dict.fromkeys(r[0] for r in rows):
        pts = [(r[1], r[2], r[3]) for r in rows if r[0] == v]
        ns, got, want = zip(*pts)
        ax.plot(ns, got, "o", label=f"{v} constructed")
        ax.plot(ns, want, "-", label=f"{v} closed form")
    ax.set_xlabel("n")
    ax.set_ylabel("Toffolis per controlled walk")
    ax.legend(fontsize=7)


def cmd_estimate(args, out: _Output) -> int:
    from .resources import ResourceParams, estimate, format_table, rotation_t_estimate
    params = ResourceParams(args.eps_prec, args.eps_fail, args.p_phys, args.t_cycle,
                            args.n_factory, args.block, args.runs)
    rows = [estimate(params, v, n) for v in _variants(args.variant) for n in parse_int_list(args.n)]
    name = "estimate.md" if args.format == "md" else "estimate.csv"
    out.text(name, format_table(rows, args.format))
    if args.rotation_t:
        _info(f"rotation T-gate side estimate (not in totals): {rotation_t_estimate(args.eps_prec):.3e}")
    out.figure("estimate.png", lambda ax: _draw_estimate(ax, rows))
    return EXIT_OK


def _draw_estimate(ax, rows):
    for v in dict.fromkeys(r.variant for r in rows):
        pts = [r for r in rows if r.variant == v]
        ax.plot([r.n for r in pts], [r.runtime_minutes for r in pts], "o-", label=v)
    ax.set_xlabel("n (matrix order 2^n)")
    ax.set_ylabel("runtime [min]")
    ax.set_xscale("log", base=2)
    ax.legend()


def cmd_stateprep(args, out: _Output) -> int:
    from .stateprep import infidelity
    mode = _mode(args.mode)
    rows = []
    for n in parse_int_list(args.n):
        sys_ = _system(args, n)
        ms = parse_int_list(args.m) if args.m else range(1, n + 1)
        for m in ms:
            if m > n:
                continue
            rows.append((n, m, args.mode, infidelity(sys_, n, m, mode)))
    out.csv("stateprep.csv", _csv(["n", "m", "mode", "infidelity"], rows))
    out.figure("stateprep.png", lambda ax: _draw_stateprep(ax, rows))
    return EXIT_OK


def _draw_stateprep(ax, rows):
    for m in sorted({r[1] for r in rows}):
        pts = sorted((r[0], r[3]) for r in rows if r[1] == m)
        ax.plot(*zip(*pts), "o-", label=f"m={m}")
    ax.axhline(0.1, color="grey", lw=0.8, ls="--")
    ax.set_xlabel("n")
    ax.set_ylabel("infidelity")
    ax.legend(fontsize=7, ncol=2)


# -- parser ----------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, system: bool = True) -> None:
    p.add_argument("--out", help="directory for CSV, figure and manifest")
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    if system:
        p.add_argument("--spec", help="system descriptor JSON")
        p.add_argument("--k1", type=float, default=0.5)
        p.add_argument("--k2", type=float, default=1.0)
        p.add_argument("--boundary", choices=("periodic", "fixed"), default="periodic")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qmodal", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="extract and check a block encoding")
    _common(p)
    p.add_argument("--variant", choices=VARIANTS, default="example1")
    p.add_argument("--n", default="2")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--dump-circuit", help="write the circuit text to this path")

    p = sub.add_parser("solve", help="phase estimation end to end")
    _common(p)
    p.add_argument("--variant", choices=VARIANTS, default="example1")
    p.add_argument("--n", type=int)
    p.add_argument("--t", type=int, default=8)
    p.add_argument("--m", type=int)
    p.add_argument("--mode", default="fundamental")
    p.add_argument("--exact-init", action="store_true")
    p.add_argument("--shots", type=int, default=0)
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=("powers", "circuit"), default="powers")
    p.add_argument("--oracle-check", action="store_true")

    p = sub.add_parser("counts", help="controlled-walk gate counts vs closed forms")
    _common(p, system=False)
    p.add_argument("--variant", default="all")
    p.add_argument("--n", default="2..8")
    p.add_argument("--policy", choices=("shared", "separate"), default="shared")
    p.add_argument("--format", choices=("csv", "md"), default="csv")

    p = sub.add_parser("estimate", help="fault-tolerant resource table")
    _common(p, system=False)
    p.add_argument("--variant", default="example2")
    p.add_argument("--n", default="32,64,128")
    p.add_argument("--format", choices=("csv", "md"), default="md")
    p.add_argument("--eps-prec", type=float, default=1e-4)
    p.add_argument("--eps-fail", type=float, default=1e-2)
    p.add_argument("--p-phys", type=float, default=1e-3)
    p.add_argument("--t-cycle", type=float, default=1e-6)
    p.add_argument("--n-factory", type=int, default=2)
    p.add_argument("--block", choices=("compact", "fast"), default="fast")
    p.add_argument("--runs", type=int, default=2)
    p.add_argument("--rotation-t", action="store_true", help="print the rotation T-gate side estimate")

    p = sub.add_parser("stateprep", help="coarse-state infidelity sweep")
    _common(p)
    p.add_argument("--variant", choices=VARIANTS, default="example1")
    p.add_argument("--n", default="1..10")
    p.add_argument("--m", help="coarse sizes (default 1..n)")
    p.add_argument("--mode", default="fundamental")
    return ap


COMMANDS = {"encode": cmd_encode, "solve": cmd_solve, "counts": cmd_counts,
            "estimate": cmd_estimate, "stateprep": cmd_stateprep}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    t0 = time.time()
    man = RunManifest(args.command, getattr(args, "spec", None), getattr(args, "variant", None),
                      getattr(args, "n", None), getattr(args, "t", None), getattr(args, "m", None),
                      getattr(args, "seed", None), argv=argv)
    try:
        out = _Output(args, man)
        code = COMMANDS[args.command](args, out)
        out.finish(t0)
        return code
    except CapacityError as e:
        _info(f"error: {e}")
        return EXIT_CAPACITY
    except (SpecError, InputError, ValueError, OSError) as e:
        _info(f"error: {e}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
