"""Reversible arithmetic and control-lowering building blocks.

Ripple-carry addition uses the majority / un-majority-and-add cells with a
single carry ancilla.  Controlled rotations follow the A X B X C pattern, and
multi-controlled gates fold their controls into a Toffoli ladder.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuit import Circuit, Gate, Qubit, Register, Ry, Rz, SWAP, X, compose, controlled
from .simulator import ry_matrix, rz_matrix


def _distinct(*qs: Qubit) -> None:
    if len(set(qs)) != len(qs):
        raise ValueError("qubits must be distinct")


def majority_gates(c: Qubit, a: Qubit, b: Qubit) -> list[Gate]:
    _distinct(c, a, b)
    return [X(a, b), X(c, b), X(b, c, a)]


def uma_gates(c: Qubit, a: Qubit, b: Qubit) -> list[Gate]:
    _distinct(c, a, b)
    return [X(b, c, a), X(c, b), X(a, c)]


def _regs_for(*groups: Sequence[Qubit]) -> tuple[tuple[str, int], ...]:
    widths: dict[str, int] = {}
    for grp in groups:
        for q in grp:
            widths[q.register] = max(widths.get(q.register, 0), q.index + 1)
    return tuple(widths.items())


def build_majority(c: Qubit, a: Qubit, b: Qubit) -> Circuit:
    return Circuit(_regs_for((c, a, b)), majority_gates(c, a, b), "majority")


def build_uma(c: Qubit, a: Qubit, b: Qubit) -> Circuit:
    return Circuit(_regs_for((c, a, b)), uma_gates(c, a, b), "uma")


@dataclass(frozen=True)
class AdderLayout:
    x_qubits: tuple[Qubit, ...]
    y_qubits: tuple[Qubit, ...]
    carry_ancilla: Qubit

    def __post_init__(self):
        object.__setattr__(self, "x_qubits", tuple(self.x_qubits))
        object.__setattr__(self, "y_qubits", tuple(self.y_qubits))
        if len(self.x_qubits) != len(self.y_qubits) or not self.x_qubits:
            raise ValueError("operands must have equal nonzero width")
        _distinct(*self.x_qubits, *self.y_qubits, self.carry_ancilla)

    @property
    def n(self) -> int:
        return len(self.x_qubits)


def adder_gates(x: Sequence[Qubit], y: Sequence[Qubit], carry: Qubit) -> list[Gate]:
    """|x>|y>|0> -> |x>|x+y mod 2^n>|0>; the sum lands on ``y``."""
    lay = AdderLayout(tuple(x), tuple(y), carry)
    n = lay.n
    lines = [carry] + list(lay.x_qubits)
    gates: list[Gate] = []
    for i in range(n):
        gates += majority_gates(lines[i], lay.y_qubits[i], lay.x_qubits[i])
    for i in reversed(range(n)):
        gates += uma_gates(lines[i], lay.y_qubits[i], lay.x_qubits[i])
    return gates


def adder_control_exemptions(n: int) -> set[int]:
    """Indices of adder gates that stay uncontrolled in the controlled adder.

    Only the first CNOT of each majority cell and the last CNOT of each
    un-majority cell take the extra control; with the control off the
    remaining cells cancel pairwise.
    """
    keep = {3 * i for i in range(n)} | {3 * n + 3 * j + 2 for j in range(n)}
    return set(range(6 * n)) - keep


def controlled_adder_gates(x, y, carry, ctrl: Qubit, positive: bool = True) -> list[Gate]:
    gates = adder_gates(x, y, carry)
    skip = adder_control_exemptions(len(gates) // 6)
    return [g if i in skip else g.with_control(ctrl, positive) for i, g in enumerate(gates)]


def _adder_regs(n: int):
    return (("x", n), ("y", n), ("anc", 1))


def build_adder(n: int) -> Circuit:
    if n < 1:
        raise ValueError("n must be >= 1")
    x, y, a = Register("x", n), Register("y", n), Register("anc", 1)
    return Circuit(_adder_regs(n), adder_gates(x.qubits, y.qubits, a[0]), f"adder n={n}")


def build_controlled_adder(n: int, ctrl: Qubit | None = None) -> Circuit:
    ctrl = ctrl or Qubit("c", 0)
    add = build_adder(n)
    if ctrl in set(add.all_qubits()):
        raise ValueError("control must lie outside the adder")
    return controlled(add, ctrl, True, sorted(adder_control_exemptions(n))).relabel(
        f"controlled adder n={n}")


# -- controlled single-qubit unitaries (A X B X C) ---------------------------

def su2_matrix(beta: float, gamma: float, delta: float) -> np.ndarray:
    """The unitary written as A X B X C below."""
    p, m = (beta + delta) / 2, (beta - delta) / 2
    c, s = np.cos(gamma / 2), np.sin(gamma / 2)
    return np.array([[np.exp(-1j * p) * c, -np.exp(-1j * m) * s],
                     [np.exp(1j * m) * s, np.exp(1j * p) * c]])


def abc_factors(beta: float, gamma: float, delta: float):
    """A, B, C with A B C = I and A X B X C = su2_matrix(beta, gamma, delta)."""
    A = rz_matrix(beta) @ ry_matrix(gamma / 2)
    B = ry_matrix(-gamma / 2) @ rz_matrix(-(beta + delta) / 2)
    C = rz_matrix(-(beta - delta) / 2)
    return A, B, C


def _rot_gates(ops, target: Qubit) -> list[Gate]:
    out = []
    for kind, ang in ops:
        if abs(ang) > 0:
            out.append(Ry(ang, target) if kind == "Ry" else Rz(ang, target))
    return out


def controlled_u_gates(beta: float, gamma: float, delta: float, ctrl: Qubit,
                       target: Qubit, positive: bool = True) -> list[Gate]:
    """C, CNOT, B, CNOT, A in time order; zero-angle rotations are dropped."""
    _distinct(ctrl, target)
    c_ops = [("Rz", -(beta - delta) / 2)]
    b_ops = [("Rz", -(beta + delta) / 2), ("Ry", -gamma / 2)]
    a_ops = [("Ry", gamma / 2), ("Rz", beta)]
    cx = X(target, (ctrl, positive))
    return (_rot_gates(c_ops, target) + [cx] + _rot_gates(b_ops, target) + [cx]
            + _rot_gates(a_ops, target))


def build_controlled_ry(theta: float, ctrl: Qubit, target: Qubit) -> Circuit:
    gates = controlled_u_gates(0.0, theta, 0.0, ctrl, target)
    return Circuit(_regs_for((ctrl, target)), gates, "controlled Ry")


def build_controlled_rz(theta: float, ctrl: Qubit, target: Qubit) -> Circuit:
    # free parameter fixed at half the angle
    x = theta / 2
    gates = controlled_u_gates(x, 0.0, theta - x, ctrl, target)
    return Circuit(_regs_for((ctrl, target)), gates, "controlled Rz")


# -- multi-controlled ladders and controlled swaps --------------------------

def multi_controlled_gates(base: Gate, ancillas: Sequence[Qubit]) -> list[Gate]:
    """Lower all controls of ``base`` onto a single ancilla via Toffolis.

    Negative controls are X-conjugated.  Uses k-1 ancillas (returned to |0>)
    and 2(k-1) Toffolis for k controls.
    """
    ctrls = list(base.controls)
    k = len(ctrls)
    if k <= 1:
        return [base]
    anc = list(ancillas)[: k - 1]
    if len(anc) < k - 1:
        raise ValueError(f"{k} controls need {k - 1} ancillas, got {len(ancillas)}")
    _distinct(*base.qubits(), *anc)
    flips = [X(q) for q, pol in ctrls if not pol]
    qs = [q for q, _ in ctrls]
    ladder = [X(anc[0], qs[0], qs[1])]
    for i in range(2, k):
        ladder.append(X(anc[i - 1], anc[i - 2], qs[i]))
    core = Gate(base.kind, base.targets, ((anc[k - 2], True),), base.angle, base.tag)
    undo = list(reversed(ladder))
    return flips + ladder + [core] + undo + flips


def build_multi_controlled(base: Gate, controls: Sequence = (), ancillas: Sequence[Qubit] | None = None) -> Circuit:
    g = Gate(base.kind, base.targets, tuple(base.controls) + tuple(controls), base.angle)
    k = g.num_controls
    if ancillas is None:
        ancillas = Register("anc", max(1, k - 1)).qubits
    gates = multi_controlled_gates(g, ancillas)
    return Circuit(_regs_for(g.qubits(), ancillas), gates, "multi-controlled")


def cswap_gates(ctrl: Qubit, q1: Qubit, q2: Qubit) -> list[Gate]:
    _distinct(ctrl, q1, q2)
    return [X(q1, q2), X(q2, ctrl, q1), X(q1, q2)]


def build_cswap(ctrl: Qubit, q1: Qubit, q2: Qubit) -> Circuit:
    return Circuit(_regs_for((ctrl, q1, q2)), cswap_gates(ctrl, q1, q2), "cswap")


def swap_gates(q1: Qubit, q2: Qubit) -> list[Gate]:
    _distinct(q1, q2)
    return [X(q1, q2), X(q2, q1), X(q1, q2)]


def lower(c: Circuit, ancillas: Sequence[Qubit]) -> Circuit:
    """Rewrite ``c`` using only X/CNOT/Toffoli plus singly controlled rotations.

    SWAPs become three CNOTs with controls on the middle one; anything with
    more than two controls (or a controlled non-X gate with two) goes
    through a Toffoli ladder on ``ancillas``.
    """
    out: list[Gate] = []
    for g in c.gates:
        if g.kind == "SWAP":
            a, b = g.targets
            mid = Gate("X", (b,), g.controls + ((a, True),))
            seq = [X(a, b), mid, X(a, b)]
        else:
            seq = [g]
        for h in seq:
            if h.kind == "X" and h.num_controls <= 2 and all(p for _, p in h.controls):
                out.append(h)
            elif h.num_controls >= 2 or (h.kind == "X" and not all(p for _, p in h.controls)):
                out.extend(multi_controlled_gates(h, ancillas))
            else:
                out.append(h)
    return Circuit(compose(c, Circuit(_regs_for(ancillas))).registers, out, c.label)
