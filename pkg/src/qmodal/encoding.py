"""Block encodings of ring matrices and their qubitized walk operators.

Register roles: ``s`` holds the row/column index, ``a_s`` the slot (and then
the neighbor index), ``a_1``/``a_2`` the rotation targets of U_1/U_2,
``cst`` the adder constant, ``anc`` the adder carry plus ladder ancillas,
``flip`` selects between U_H and its adjoint and ``sgn`` takes the
reflection phase.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .arithmetic import adder_control_exemptions, adder_gates
from .circuit import (Circuit, Gate, Qubit, Register, H, SWAP, X, Z, adjoint, controlled,
                      index_ranges)
from .oracles import OracleSpec, difference_gates, of_gates, oh_rotation_gates, rotation_angle
from .reference import OscillatorSystem, shifted_scaled
from .simulator import sector_operator

VARIANTS = ("example1", "example2", "speedrun")


@dataclass(frozen=True)
class BlockEncoding:
    """U with <0_anc, x| U |0_anc, x'> = H_xx' / alpha."""

    circuit: Circuit
    ancilla_qubits: tuple[Qubit, ...]
    alpha: float
    signal_width: int
    variant: str = ""
    system: OscillatorSystem | None = None
    u1: Circuit | None = None
    u2: Circuit | None = None
    work_qubits: tuple[Qubit, ...] = ()

    @property
    def signal_qubits(self) -> list[Qubit]:
        return Register("s", self.signal_width).qubits

    def target_matrix(self) -> np.ndarray:
        """The matrix whose block H / alpha this encodes."""
        return shifted_scaled(self.system)[0]


@dataclass(frozen=True)
class WalkOperator:
    circuit: Circuit
    sign_qubit: Qubit
    flip_qubit: Qubit
    encoding: BlockEncoding
    exempt: tuple[tuple[int, int], ...] = ()
    reflect_qubits: tuple[Qubit, ...] = ()

    def initial_gates(self) -> list[Gate]:
        """Prepare |1>_sgn |+>_flip from |0>."""
        return [X(self.sign_qubit), H(self.flip_qubit)]


# -- helpers ----------------------------------------------------------------

def _check_variant(sys: OscillatorSystem, variant: str) -> None:
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    kind = sys.springs.kind
    if variant == "example1" and kind != "uniform":
        raise ValueError("example1 needs uniform springs")
    if variant in ("example2", "speedrun") and kind != "alternating":
        raise ValueError(f"{variant} needs alternating springs")
    if variant == "speedrun" and sys.boundary != "periodic":
        raise ValueError("speedrun supports the periodic boundary only")
    if not sys.uniform_mass:
        raise ValueError("block encodings need uniform masses")


def _ocf(g: Gate, flip: Qubit) -> Gate:
    return g.with_control(flip, False)


def _cf(g: Gate, flip: Qubit) -> Gate:
    return g.with_control(flip, True)


class _Builder:
    """Gate list with a parallel record of which gates stay uncontrolled."""

    def __init__(self):
        self.gates: list[Gate] = []
        self.free: list[int] = []

    def add(self, gates: Sequence[Gate], exempt: bool) -> None:
        start = len(self.gates)
        self.gates.extend(gates)
        if exempt:
            self.free.extend(range(start, len(self.gates)))

    def add_indexed(self, gates: Sequence[Gate], exempt_idx) -> None:
        start = len(self.gates)
        self.gates.extend(gates)
        self.free.extend(start + i for i in sorted(exempt_idx))

    @property
    def exempt(self):
        return index_ranges(self.free)


# -- generic (O_F / O_H based) encodings ------------------------------------

@dataclass(frozen=True)
class _Layout:
    n: int
    spec: OracleSpec
    rotations: bool
    anc_width: int

    def registers(self):
        n = self.n
        regs = []
        if self.rotations:
            regs += [("a_1", 1), ("a_2", 1)]
        regs += [("a_s", n), ("s", n), ("cst", n), ("anc", self.anc_width)]
        return tuple(regs)

    @property
    def s(self):
        return Register("s", self.n).qubits

    @property
    def a_s(self):
        return Register("a_s", self.n).qubits

    @property
    def cst(self):
        return Register("cst", self.n).qubits

    @property
    def carry(self):
        return Qubit("anc", 0)


def _layout(sys: OscillatorSystem, variant: str) -> _Layout:
    spec = OracleSpec.from_system(sys)
    n = sys.n
    rot = bool(oh_rotation_gates(spec, Register("s", n).qubits, Register("a_s", n).qubits,
                                 Qubit("a_1", 0))) or variant == "example2"
    # the ladder of the widest controlled gate in the controlled walk; cst is
    # clean outside O_F and may be borrowed for the rest
    anc = n + 2 if rot else n
    return _Layout(n, spec, rot, anc)


def _prep_gates(lay: _Layout) -> list[Gate]:
    """Diffusion on the slot register followed by O_F."""
    g = [H(lay.a_s[0])] if lay.n >= 2 else []
    return g + of_gates(lay.s, lay.a_s, lay.cst, lay.carry)


def _rot(lay: _Layout, target: str) -> list[Gate]:
    if not lay.rotations:
        return []
    return oh_rotation_gates(lay.spec, lay.s, lay.a_s, Qubit(target, 0))


def _u_gates(lay: _Layout, target: str, swap: bool) -> list[Gate]:
    pre = difference_gates(lay.s, lay.a_s, lay.carry)
    post = [g.adjoint() for g in reversed(pre)]
    rot = _rot(lay, target)
    gates = _prep_gates(lay)
    if rot:
        gates += pre + rot + post
    if swap:
        gates += [SWAP(a, b) for a, b in zip(lay.a_s, lay.s)]
    return gates


def build_u1(sys: OscillatorSystem, variant: str = "example2") -> Circuit:
    """Column-side state preparation: |0>|x'> -> sum_y sqrt(H_x'y / alpha)-weighted branches."""
    if variant == "speedrun":
        return _speedrun_parts(sys)[0]
    _check_variant(sys, variant)
    lay = _layout(sys, variant)
    return Circuit(lay.registers(), _u_gates(lay, "a_1", False), "U_1")


def build_u2(sys: OscillatorSystem, variant: str = "example2") -> Circuit:
    """Row-side state preparation; as U_1 but rotating a_2 and ending with swaps."""
    if variant == "speedrun":
        return _speedrun_parts(sys)[1]
    _check_variant(sys, variant)
    lay = _layout(sys, variant)
    return Circuit(lay.registers(), _u_gates(lay, "a_2", True), "U_2")


def build_block_encoding(sys: OscillatorSystem, variant: str) -> BlockEncoding:
    _check_variant(sys, variant)
    if variant == "speedrun":
        return build_speedrun_encoding(sys)
    lay = _layout(sys, variant)
    u1 = Circuit(lay.registers(), _u_gates(lay, "a_1", False), "U_1")
    u2 = Circuit(lay.registers(), _u_gates(lay, "a_2", True), "U_2")
    uh = Circuit(lay.registers(), u1.gates + adjoint(u2).gates, f"U_H {variant} n={sys.n}")
    anc = ([Qubit("a_1", 0), Qubit("a_2", 0)] if lay.rotations else []) + lay.a_s
    work = lay.cst + Register("anc", lay.anc_width).qubits
    alpha = shifted_scaled(sys)[1]
    return BlockEncoding(uh, tuple(anc), alpha, sys.n, variant, sys, u1, u2, tuple(work))


def _reflection(be: BlockEncoding, flip: Qubit, sgn: Qubit) -> list[Gate]:
    ctrls = [(flip, False)] + [(q, False) for q in be.ancilla_qubits]
    return [Z(sgn, *ctrls)]


def _walk_tail(b: _Builder, be: BlockEncoding, flip: Qubit, sgn: Qubit) -> None:
    b.add([X(flip)], False)
    b.add([H(flip)], True)
    b.add(_reflection(be, flip, sgn), False)
    b.add([H(flip)], True)
    b.add([Z(sgn)], False)


def build_walk(be: BlockEncoding) -> WalkOperator:
    """Qubitized walk: (reflection about |+>_flip |0>_anc) . X_flip . U~.

    U~ applies U_H when flip = 0 and its adjoint when flip = 1.  Gates common
    to both branches are left uncontrolled; when U_H is self-adjoint U~ is
    just U_H.
    """
    if be.variant == "speedrun":
        return _speedrun_walk(be)
    sys = be.system
    lay = _layout(sys, be.variant)
    flip, sgn = Qubit("flip", 0), Qubit("sgn", 0)
    regs = (("sgn", 1), ("flip", 1)) + lay.registers()
    b = _Builder()
    prep = _prep_gates(lay)
    prep_dg = [g.adjoint() for g in reversed(prep)]
    swaps = [SWAP(a, c) for a, c in zip(lay.a_s, lay.s)]
    if not lay.rotations:
        b.add(prep, True)
        b.add(swaps, False)
        b.add(prep_dg, True)
    else:
        pre = difference_gates(lay.s, lay.a_s, lay.carry)
        post = [g.adjoint() for g in reversed(pre)]
        rot1, rot2 = _rot(lay, "a_1"), _rot(lay, "a_2")
        b.add(prep + pre, True)
        b.add([_ocf(g, flip) for g in rot1], False)
        b.add(post, True)
        b.add([_ocf(g, flip) for g in swaps], False)
        b.add(pre, True)
        # the flip = 0 branch undoes rot2, the flip = 1 branch applies it;
        # all rotations commute, so they pair up gate by gate
        mid = []
        for g in rot2:
            mid += [_ocf(g.adjoint(), flip), _cf(g, flip)]
        b.add(mid, False)
        b.add(post, True)
        b.add([_cf(g, flip) for g in swaps], False)
        b.add(pre, True)
        b.add([_cf(g.adjoint(), flip) for g in reversed(rot1)], False)
        b.add(post + prep_dg, True)
    _walk_tail(b, be, flip, sgn)
    circ = Circuit(regs, b.gates, f"walk {be.variant} n={sys.n}")
    return WalkOperator(circ, sgn, flip, be, b.exempt, (flip,) + be.ancilla_qubits)


def build_controlled_walk(w: WalkOperator, ctrl: Qubit | None = None, positive: bool = True) -> Circuit:
    ctrl = ctrl or Qubit("phase", 0)
    c = controlled(w.circuit, ctrl, positive, w.exempt)
    return c.relabel(f"controlled {w.circuit.label}")


# -- speedrun -----------------------------------------------------------------

def _speedrun_regs(n: int):
    return (("a_1", 1), ("a_2", 1), ("s", n), ("cst", n), ("anc", 2))


def _speedrun_pieces(sys: OscillatorSystem):
    n = sys.n
    a1, a2 = Qubit("a_1", 0), Qubit("a_2", 0)
    s, cst = Register("s", n).qubits, Register("cst", n).qubits
    carry = Qubit("anc", 0)
    # cst <- -1 when a_1 = 0 and +1 when a_1 = 1
    cprep = [X(cst[0])] + [X(q, (a1, False)) for q in cst[1:]]
    add = adder_gates(cst, s, carry)
    par = X(a1, (s[0], False))
    k1, k2 = sys.springs.values
    ang = 2.0 * np.arccos(k1 / k2)
    rot = [Gate("Ry", (a2,), ((a1, False),), ang)] if ang > 0 else []
    return a1, a2, cprep, add, par, rot


def _speedrun_parts(sys: OscillatorSystem):
    _check_variant(sys, "speedrun")
    a1, a2, cprep, add, par, rot = _speedrun_pieces(sys)
    regs = _speedrun_regs(sys.n)
    u1 = Circuit(regs, [H(a1)], "U_1")
    u2 = Circuit(regs, [H(a1)] + cprep + add + cprep + [par] + rot, "U_2")
    return u1, u2


def build_speedrun_encoding(sys: OscillatorSystem) -> BlockEncoding:
    """U_1 = H on a_1; U_2 shifts s by -/+1 on the a_1 branches, fixes parity, rotates a_2."""
    u1, u2 = _speedrun_parts(sys)
    uh = Circuit(u1.registers, u1.gates + adjoint(u2).gates, f"U_H speedrun n={sys.n}")
    anc = (Qubit("a_1", 0), Qubit("a_2", 0))
    work = tuple(Register("cst", sys.n).qubits + Register("anc", 2).qubits)
    # two Hadamard branches give the 1/2 prefactor, also when N = 2
    alpha = 2.0
    return BlockEncoding(uh, anc, alpha, sys.n, "speedrun", sys, u1, u2, work)


def _speedrun_walk(be: BlockEncoding) -> WalkOperator:
    sys = be.system
    a1, a2, cprep, add, par, rot = _speedrun_pieces(sys)
    flip, sgn = Qubit("flip", 0), Qubit("sgn", 0)
    regs = (("sgn", 1), ("flip", 1)) + _speedrun_regs(sys.n)
    b = _Builder()
    b.add([H(a1)], True)
    b.add([_ocf(g.adjoint(), flip) for g in reversed(rot)], False)
    b.add([_ocf(par, flip)], False)
    # flip = 0 needs the inverse shift, which is the shift conjugated by X(a_1)
    b.add([_ocf(X(a1), flip)], False)
    b.add(cprep, True)
    b.add_indexed(add, adder_control_exemptions(sys.n))
    b.add(cprep, True)
    b.add([_ocf(X(a1), flip)], False)
    b.add([_cf(par, flip)], False)
    b.add([_cf(g, flip) for g in rot], False)
    b.add([H(a1)], True)
    _walk_tail(b, be, flip, sgn)
    circ = Circuit(regs, b.gates, f"walk speedrun n={sys.n}")
    return WalkOperator(circ, sgn, flip, be, b.exempt, (flip,) + be.ancilla_qubits)


# -- verification helpers ----------------------------------------------------------

def extract_block(be: BlockEncoding) -> np.ndarray:
    """<0_anc, x| U |0_anc, x'> over the signal register (all other qubits pinned to 0)."""
    return sector_operator(be.circuit, be.signal_qubits).real.copy() \
        if _is_real(be) else sector_operator(be.circuit, be.signal_qubits)


def _is_real(be: BlockEncoding) -> bool:
    return all(g.kind != "Rz" for g in be.circuit.gates)


def block_error(be: BlockEncoding) -> float:
    """max |alpha * block - H|."""
    return float(np.max(np.abs(be.alpha * extract_block(be) - be.target_matrix())))


def walk_qubits(variant: str, n: int) -> int:
    """Closed-form walk widths."""
    return {"example1": 4 * n + 2, "example2": 4 * n + 6, "speedrun": 2 * n + 6}[variant]


def controlled_walk_toffolis(variant: str, n: int) -> int:
    """Closed-form Toffoli counts of one controlled walk step."""
    return {"example1": 11 * n + 2, "example2": 42 * n + 30, "speedrun": 4 * n + 24}[variant]


def default_system(variant: str, n: int, k1: float = 0.5, k2: float = 1.0,
                   boundary: str = "periodic") -> OscillatorSystem:
    from .reference import alternating_ring, uniform_ring
    if variant == "example1":
        return uniform_ring(n, boundary=boundary)
    return alternating_ring(n, k1, k2, boundary=boundary)
