"""Sparsity oracles for 2-sparse ring matrices.

``O_F`` turns a slot index into a column index; ``O_H`` writes (or rotates
by) the corresponding matrix entry.  Entries are looked up from the
difference x - y, which the circuits first compute in place as x - y - 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .arithmetic import adder_gates
from .circuit import Circuit, Gate, Qubit, Register, Ry, X, pattern_controls
from .reference import OscillatorSystem, shifted_scaled

DIRECTIONS = (+1, -1)


@dataclass(frozen=True)
class OracleSpec:
    """Entry table of a ring matrix normalized to max entry 1.

    ``entry_rule[(p, d)]`` is the entry between a row x with parity p and
    the column y = x - d.
    """

    n: int
    boundary: str = "periodic"
    entry_rule: Mapping[tuple[int, int], float] = field(
        default_factory=lambda: {(p, d): 1.0 for p in (0, 1) for d in DIRECTIONS})

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.boundary not in ("periodic", "fixed"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        rule = {(int(p), int(d)): float(v) for (p, d), v in dict(self.entry_rule).items()}
        for p in (0, 1):
            for d in DIRECTIONS:
                v = rule.get((p, d))
                if v is None:
                    raise ValueError(f"entry_rule lacks key {(p, d)}")
                if not 0.0 <= v <= 1.0:
                    raise ValueError(f"entry {v} outside [0, 1]")
        if self.n == 1:
            # a 2-site ring has a single coupling, which normalizes to 1
            rule = {k: 1.0 for k in rule}
        object.__setattr__(self, "entry_rule", rule)

    @property
    def N(self) -> int:
        return 2 ** self.n

    @property
    def parity_dependent(self) -> bool:
        r = self.entry_rule
        return any(r[(0, d)] != r[(1, d)] for d in DIRECTIONS)

    def value(self, x: int, y: int) -> float:
        """Normalized matrix entry H_xy."""
        N = self.N
        diff = (x - y) % N
        if self.n == 1:
            return 1.0 if diff == 1 else 0.0
        if diff == 1:
            d = +1
        elif diff == N - 1:
            d = -1
        else:
            return 0.0
        if self.boundary == "fixed" and {x, y} == {0, N - 1}:
            return 0.0
        return self.entry_rule[(x % 2, d)]

    def matrix(self) -> np.ndarray:
        N = self.N
        return np.array([[self.value(x, y) for y in range(N)] for x in range(N)])

    @classmethod
    def from_system(cls, sys: OscillatorSystem) -> "OracleSpec":
        H = shifted_scaled(sys)[0]
        top = float(np.max(H))
        N = sys.N
        rule = {}
        for p in (0, 1):
            for d in DIRECTIONS:
                if N == 2:
                    rule[(p, d)] = 1.0
                    continue
                # first row of this parity whose coupling is not cut by the boundary
                x = next(x for x in range(p, N, 2)
                         if sys.boundary == "periodic" or {x, (x - d) % N} != {0, N - 1})
                rule[(p, d)] = float(H[x, (x - d) % N]) / top
        spec = cls(sys.n, sys.boundary, rule)
        if not np.allclose(spec.matrix() * top, H, atol=1e-12):
            raise ValueError("matrix is not a parity-periodic 2-sparse ring matrix")
        return spec


def rotation_angle(v: float) -> float:
    """Ry angle leaving amplitude sqrt(v) on |0>."""
    return 2.0 * math.acos(math.sqrt(min(1.0, max(0.0, v))))


def difference_pattern(n: int, d: int) -> int:
    """Value of x - y - 1 (mod 2^n) when x - y = d."""
    return (d - 1) % (2 ** n)


# -- O_F ---------------------------------------------------------------------

def of_gates(x: Sequence[Qubit], y: Sequence[Qubit], cst: Sequence[Qubit], carry: Qubit) -> list[Gate]:
    """|x>|i>|0>|0> -> |x>|x -/+ 1>|0>|0> for slot i in {0, 1} held in y[0].

    For n = 1 the slot is always 0 (a single neighbor) and no doubling is
    needed; the map is then y = x + 1.
    """
    n = len(x)
    gates: list[Gate] = []
    if n >= 2:
        gates += [X(y[1], y[0]), X(y[0], y[1])]
    gates += [X(q) for q in cst]
    gates += adder_gates(x, y, carry)
    gates += adder_gates(cst, y, carry)
    gates += [X(q) for q in cst]
    return gates


def _default_regs(n: int, *names):
    return [Register(nm, n) for nm in names]


def build_of(n: int) -> Circuit:
    if n < 1:
        raise ValueError("n must be >= 1")
    x, y, cst = _default_regs(n, "x", "y", "cst")
    anc = Register("anc", 1)
    return Circuit((("x", n), ("y", n), ("cst", n), ("anc", 1)),
                   of_gates(x.qubits, y.qubits, cst.qubits, anc[0]), f"O_F n={n}")


# -- O_H (in place) ------------------------------------------------------------

def difference_gates(x: Sequence[Qubit], y: Sequence[Qubit], carry: Qubit) -> list[Gate]:
    """|x>|y> -> |x>|x - y - 1>."""
    return [X(q) for q in y] + adder_gates(x, y, carry)


def _pattern_gates(spec: OracleSpec, x, y, make) -> list[Gate]:
    """One gate per non-trivial entry, selected by the difference pattern."""
    n = spec.n
    out: list[Gate] = []
    parity = spec.parity_dependent
    for p, d in ((0, +1), (1, -1), (1, +1), (0, -1)):
        if not parity and p == 1:
            continue
        v = spec.entry_rule[(p, d)]
        ctrls = pattern_controls(y, difference_pattern(n, d))
        if parity:
            ctrls = [(x[0], bool(p))] + ctrls
        out += make(v, ctrls)
    return out


def _boundary_gates(spec: OracleSpec, x, y, make_kill) -> list[Gate]:
    if spec.boundary != "fixed":
        return []
    n, N = spec.n, spec.N
    out = []
    for xv, d in ((0, +1), (N - 1, -1)):
        ctrls = pattern_controls(x, xv) + pattern_controls(y, difference_pattern(n, d))
        out += make_kill(spec.entry_rule[(xv % 2, d)], ctrls)
    return out


def oh_rotation_gates(spec: OracleSpec, x: Sequence[Qubit], y: Sequence[Qubit], z: Qubit) -> list[Gate]:
    """Rotations applied while y holds x - y - 1.

    Entries equal to 1 need no rotation.  With a fixed boundary the two
    wraparound entries receive a further rotation completing the angle to
    pi, which leaves zero amplitude on |0>_z.
    """
    if spec.n == 1:
        return []

    def rot(v, ctrls):
        ang = rotation_angle(v)
        return [Ry(ang, z, *ctrls, tag="rotation")] if ang > 0 else []

    def kill(v, ctrls):
        return [Ry(math.pi - rotation_angle(v), z, *ctrls, tag="boundary")]

    if spec.boundary == "fixed" and spec.n < 2:
        raise ValueError("fixed boundary needs n >= 2")
    return _pattern_gates(spec, x, y, rot) + _boundary_gates(spec, x, y, kill)


def oh_mod_gates(spec: OracleSpec, x, y, z: Qubit, carry: Qubit):
    """Return (compute, rotate, uncompute) gate lists of the in-place oracle."""
    pre = difference_gates(x, y, carry)
    rot = oh_rotation_gates(spec, x, y, z)
    post = [g.adjoint() for g in reversed(pre)]
    return pre, rot, post


def build_oh_mod(spec: OracleSpec) -> Circuit:
    n = spec.n
    x, y = _default_regs(n, "x", "y")
    z, anc = Register("z", 1), Register("anc", 1)
    pre, rot, post = oh_mod_gates(spec, x.qubits, y.qubits, z[0], anc[0])
    return Circuit((("x", n), ("y", n), ("z", 1), ("anc", 1)), pre + rot + post, f"O_H^mod n={n}")


# -- O_H (XOR into a value register) -------------------------------------------

def fixed_point_code(v: float, width: int, tol: float = 1e-12) -> int:
    """Unsigned fixed point with one integer bit: v = code / 2^(width-1)."""
    if width < 1:
        raise ValueError("value width must be >= 1")
    scale = 2 ** (width - 1)
    code = int(round(v * scale))
    if code >= 2 ** width or code < 0 or abs(code / scale - v) > tol:
        raise ValueError(f"value {v} is not representable in {width} fixed-point bits")
    return code


def decode_fixed_point(code: int, width: int) -> float:
    return code / 2 ** (width - 1)


def build_oh_xor(spec: OracleSpec, value_width: int = 8) -> Circuit:
    n = spec.n
    x, y = _default_regs(n, "x", "y")
    z, anc = Register("z", value_width), Register("anc", 1)

    def xor(v, ctrls):
        code = fixed_point_code(v, value_width)
        return [X(z[b], *ctrls, tag="xor") for b in range(value_width) if (code >> b) & 1]

    pre = difference_gates(x.qubits, y.qubits, anc[0])
    if n == 1:
        mid = xor(1.0, pattern_controls(y.qubits, 0))
    else:
        mid = _pattern_gates(spec, x.qubits, y.qubits, xor)
        mid += _boundary_gates(spec, x.qubits, y.qubits, xor)
    post = [g.adjoint() for g in reversed(pre)]
    regs = (("x", n), ("y", n), ("z", value_width), ("anc", 1))
    return Circuit(regs, pre + mid + post, f"O_H xor n={n}")


# -- layered systems -------------------------------------------------------------

def _bits(m: int) -> int:
    return max(1, (m - 1).bit_length())


@dataclass(frozen=True)
class LayeredSpec:
    """L copies of a K-site unit cell.

    ``table[(x, i)] = (y_i, dl_i)``: slot i of site x couples to site y_i of
    layer l + dl_i.  ``entries[(dl, x, y)]`` holds the coupling values.
    """

    K: int
    L: int
    table: Mapping[tuple[int, int], tuple[int, int]]
    entries: Mapping[tuple[int, int, int], float]
    value_width: int = 4

    def __post_init__(self):
        if self.L < 2 or self.L & (self.L - 1):
            raise ValueError("L must be a power of two >= 2")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        for (x, i), (y, dl) in self.table.items():
            if not (0 <= x < self.K and 0 <= y < self.K):
                raise ValueError("site index out of range")
        for x in range(self.K):
            dls = [dl % self.L for (xx, _), (_, dl) in self.table.items() if xx == x]
            if len(set(dls)) != len(dls):
                raise ValueError("layer offsets of one site must be distinct")
        for v in self.entries.values():
            if v < 0:
                raise ValueError("only non-negative couplings are supported")

    @property
    def site_bits(self) -> int:
        return _bits(self.K)

    @property
    def slot_bits(self) -> int:
        return _bits(1 + max(i for _, i in self.table))

    @property
    def layer_bits(self) -> int:
        return self.L.bit_length() - 1

    @property
    def N(self) -> int:
        return self.K * self.L

    def neighbors(self, x: int, l: int, i: int) -> tuple[int, int]:
        y, dl = self.table[(x, i)]
        return y, (l + dl) % self.L


def chain_layers(L: int, value_width: int = 4) -> LayeredSpec:
    """A uniform ring seen as L single-site layers (slot 0 -> l-1, slot 1 -> l+1)."""
    table = {(0, 0): (0, -1), (0, 1): (0, +1)}
    entries = {(-1, 0, 0): 1.0, (1, 0, 0): 1.0}
    return LayeredSpec(1, L, table, entries, value_width)


def dimer_layers(L: int, value_width: int = 4) -> LayeredSpec:
    """A uniform ring of 2L sites seen as L two-site layers (site 2l + x)."""
    table = {(0, 0): (1, -1), (0, 1): (1, 0), (1, 0): (0, 0), (1, 1): (0, +1)}
    entries = {(-1, 0, 1): 1.0, (0, 0, 1): 1.0, (0, 1, 0): 1.0, (1, 1, 0): 1.0}
    return LayeredSpec(2, L, table, entries, value_width)


def _layered_regs(ls: LayeredSpec):
    regs = []
    if ls.K > 1:
        regs.append(("x", ls.site_bits))
    regs += [("y", max(ls.slot_bits, ls.site_bits if ls.K > 1 else 1)),
             ("l", ls.layer_bits), ("dl", ls.layer_bits), ("anc", 1)]
    return regs


def build_layered_sub_of(ls: LayeredSpec) -> Circuit:
    """|x, i>|0> -> |x, y_i>|dl_i> from the coupling table."""
    regs = dict(_layered_regs(ls))
    y, dl = Register("y", regs["y"]), Register("dl", regs["dl"])
    xq = Register("x", regs["x"]).qubits if ls.K > 1 else []
    gates: list[Gate] = []
    for (x, i), (_, d) in sorted(ls.table.items()):
        code = d % ls.L
        ctrls = pattern_controls(xq, x) + pattern_controls(y.qubits, i)
        gates += [X(dl[b], *ctrls) for b in range(dl.width) if (code >> b) & 1]
    if ls.K > 1:
        # the layer offset identifies the slot, so y can be rewritten in place
        for (x, i), (yi, d) in sorted(ls.table.items()):
            flip = i ^ yi
            ctrls = pattern_controls(xq, x) + pattern_controls(dl.qubits, d % ls.L)
            gates += [X(y[b], *ctrls) for b in range(y.width) if (flip >> b) & 1]
    return Circuit(tuple(regs.items()), gates, "O_F sub")


def build_layered_of(ls: LayeredSpec) -> Circuit:
    sub = build_layered_sub_of(ls)
    l, dl, anc = Register("l", ls.layer_bits), Register("dl", ls.layer_bits), Register("anc", 1)
    add = adder_gates(l.qubits, dl.qubits, anc[0])
    return sub.extend(add).relabel(f"O_F layered K={ls.K} L={ls.L}")


def build_layered_sub_oh(ls: LayeredSpec) -> Circuit:
    """|x, y>|dl>|z> -> |x, y>|dl>|z xor H_{dl,xy}>."""
    regs = dict(_layered_regs(ls))
    regs["z"] = ls.value_width
    y, dl, z = Register("y", regs["y"]), Register("dl", regs["dl"]), Register("z", ls.value_width)
    xq = Register("x", regs["x"]).qubits if ls.K > 1 else []
    gates: list[Gate] = []
    for (d, x, yv), v in sorted(ls.entries.items()):
        code = fixed_point_code(v, ls.value_width)
        # with a single site y still holds the slot; the offset alone picks the entry
        yc = pattern_controls(y.qubits, yv) if ls.K > 1 else []
        ctrls = pattern_controls(xq, x) + yc + pattern_controls(dl.qubits, d % ls.L)
        gates += [X(z[b], *ctrls) for b in range(ls.value_width) if (code >> b) & 1]
    return Circuit(tuple(regs.items()), gates, "O_H sub")


def build_layered_oh(ls: LayeredSpec) -> Circuit:
    """Entry oracle on |x, y>|l, l + dl>: undo the layer sum, apply the sub oracle, redo."""
    sub = build_layered_sub_oh(ls)
    l, dl, anc = Register("l", ls.layer_bits), Register("dl", ls.layer_bits), Register("anc", 1)
    add = adder_gates(l.qubits, dl.qubits, anc[0])
    undo = [g.adjoint() for g in reversed(add)]
    return Circuit(sub.registers, undo + list(sub.gates) + add, f"O_H layered K={ls.K} L={ls.L}")
