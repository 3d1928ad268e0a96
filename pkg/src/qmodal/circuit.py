"""Gate-level circuit representation.

Circuits are immutable: a table of named registers plus an ordered tuple of
gates.  Controls may be positive or negative (open circles); no eager
X-conjugation happens at construction time.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Sequence, Union

KINDS = ("X", "H", "Z", "Ry", "Rz", "SWAP")
_ROTATIONS = ("Ry", "Rz")

# Fixed global ordering of well-known registers; the first listed register
# holds the most significant bits of the tensor-product index.
REGISTER_ORDER = ("sgn", "flip", "a_1", "a_2", "a_s", "s", "v", "cst", "anc", "phase")


@dataclass(frozen=True, order=True)
class Qubit:
    """One qubit of a named register; index 0 is the least significant bit."""

    register: str
    index: int

    def __str__(self) -> str:
        return f"{self.register}[{self.index}]"


Control = tuple  # (Qubit, bool) with True meaning a positive control
ControlLike = Union[Qubit, "tuple[Qubit, bool]"]


def _norm_controls(controls: Iterable[ControlLike]) -> tuple[tuple[Qubit, bool], ...]:
    out = []
    for c in controls:
        if isinstance(c, Qubit):
            out.append((c, True))
        else:
            q, pol = c
            out.append((q, bool(pol)))
    return tuple(out)


@dataclass(frozen=True)
class Register:
    name: str
    width: int

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [Qubit(self.name, k) for k in range(self.width)[i]]
        if i < 0:
            i += self.width
        if not 0 <= i < self.width:
            raise IndexError(f"{self.name}[{i}] out of range (width {self.width})")
        return Qubit(self.name, i)

    def __iter__(self) -> Iterator[Qubit]:
        return (Qubit(self.name, k) for k in range(self.width))

    def __len__(self) -> int:
        return self.width

    @property
    def qubits(self) -> list[Qubit]:
        return list(self)


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[Qubit, ...]
    controls: tuple[tuple[Qubit, bool], ...] = ()
    angle: float | None = None
    tag: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "controls", _norm_controls(self.controls))
        want = 2 if self.kind == "SWAP" else 1
        if len(self.targets) != want:
            raise ValueError(f"{self.kind} takes {want} target(s), got {len(self.targets)}")
        if self.kind in _ROTATIONS:
            if self.angle is None or not math.isfinite(self.angle):
                raise ValueError(f"{self.kind} needs a finite angle")
            object.__setattr__(self, "angle", float(self.angle))
        elif self.angle is not None:
            raise ValueError(f"{self.kind} takes no angle")
        tq = set(self.targets)
        if len(tq) != len(self.targets):
            raise ValueError("duplicate targets")
        cq = [q for q, _ in self.controls]
        if len(set(cq)) != len(cq):
            raise ValueError("duplicate controls")
        if tq & set(cq):
            raise ValueError("targets and controls overlap")

    @property
    def num_controls(self) -> int:
        return len(self.controls)

    def qubits(self) -> tuple[Qubit, ...]:
        return self.targets + tuple(q for q, _ in self.controls)

    def adjoint(self) -> "Gate":
        if self.kind in _ROTATIONS:
            return replace(self, angle=-self.angle)
        return self

    def with_control(self, q: Qubit, positive: bool = True) -> "Gate":
        return replace(self, controls=self.controls + ((q, positive),))

    def with_tag(self, tag: str) -> "Gate":
        return replace(self, tag=tag)

    def __str__(self) -> str:
        head = self.kind.upper()
        if self.angle is not None:
            head += f" {self.angle!r}"
        s = head + " " + " ".join(map(str, self.targets))
        if self.controls:
            s += " | " + " ".join(f"{q}{'+' if p else '-'}" for q, p in self.controls)
        if self.tag:
            s += f"  # {self.tag}"
        return s


# -- gate shorthands --------------------------------------------------------

def X(t: Qubit, *controls: ControlLike, tag: str = "") -> Gate:
    return Gate("X", (t,), _norm_controls(controls), tag=tag)


def Z(t: Qubit, *controls: ControlLike, tag: str = "") -> Gate:
    return Gate("Z", (t,), _norm_controls(controls), tag=tag)


def H(t: Qubit, *controls: ControlLike, tag: str = "") -> Gate:
    return Gate("H", (t,), _norm_controls(controls), tag=tag)


def Ry(theta: float, t: Qubit, *controls: ControlLike, tag: str = "") -> Gate:
    return Gate("Ry", (t,), _norm_controls(controls), angle=theta, tag=tag)


def Rz(theta: float, t: Qubit, *controls: ControlLike, tag: str = "") -> Gate:
    return Gate("Rz", (t,), _norm_controls(controls), angle=theta, tag=tag)


def SWAP(a: Qubit, b: Qubit, *controls: ControlLike, tag: str = "") -> Gate:
    return Gate("SWAP", (a, b), _norm_controls(controls), tag=tag)


def neg(q: Qubit) -> tuple[Qubit, bool]:
    """Negative (open) control on ``q``."""
    return (q, False)


def pattern_controls(qubits: Sequence[Qubit], value: int) -> list[tuple[Qubit, bool]]:
    """Controls selecting the basis value ``value`` on ``qubits`` (little-endian)."""
    return [(q, bool((value >> k) & 1)) for k, q in enumerate(qubits)]


# -- circuits ---------------------------------------------------------------

def _merge_registers(a: Sequence[tuple[str, int]], b: Sequence[tuple[str, int]]):
    table = dict(a)
    order = [name for name, _ in a]
    for name, w in b:
        if name in table:
            if table[name] != w:
                raise ValueError(f"register {name!r} width mismatch: {table[name]} vs {w}")
        else:
            table[name] = w
            order.append(name)
    return tuple((name, table[name]) for name in order)


def _expand_ranges(ranges: Iterable, ngates: int) -> set[int]:
    out: set[int] = set()
    for r in ranges:
        if isinstance(r, int):
            idx = [r]
        else:
            i, j = r
            if not 0 <= i <= j <= ngates:
                raise ValueError(f"exempt range {(i, j)} outside 0..{ngates}")
            idx = range(i, j)
        out.update(idx)
    return out


def index_ranges(indices: Iterable[int]) -> tuple[tuple[int, int], ...]:
    """Collapse a set of gate indices into sorted half-open ranges."""
    out: list[list[int]] = []
    for i in sorted(set(indices)):
        if out and out[-1][1] == i:
            out[-1][1] = i + 1
        else:
            out.append([i, i + 1])
    return tuple((a, b) for a, b in out)


@dataclass(frozen=True)
class Circuit:
    registers: tuple[tuple[str, int], ...]
    gates: tuple[Gate, ...] = ()
    label: str = ""

    def __post_init__(self):
        regs = tuple((str(n), int(w)) for n, w in (
            self.registers.items() if isinstance(self.registers, dict) else self.registers))
        names = [n for n, _ in regs]
        if len(set(names)) != len(names):
            raise ValueError("duplicate register names")
        for n, w in regs:
            if w < 1:
                raise ValueError(f"register {n!r} must have width >= 1")
        object.__setattr__(self, "registers", regs)
        object.__setattr__(self, "gates", tuple(self.gates))
        table = dict(regs)
        for g in self.gates:
            for q in g.qubits():
                w = table.get(q.register)
                if w is None or not 0 <= q.index < w:
                    raise ValueError(f"gate {g} uses undeclared qubit {q}")

    # construction helpers
    @classmethod
    def empty(cls, registers=(), label: str = "") -> "Circuit":
        return cls(registers, (), label)

    def register(self, name: str) -> Register:
        return Register(name, dict(self.registers)[name])

    @property
    def register_table(self) -> dict[str, int]:
        return dict(self.registers)

    @property
    def num_qubits(self) -> int:
        return sum(w for _, w in self.registers)

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self) -> Iterator[Gate]:
        return iter(self.gates)

    def all_qubits(self) -> list[Qubit]:
        return [Qubit(n, k) for n, w in self.registers for k in range(w)]

    def touched_qubits(self) -> set[Qubit]:
        return {q for g in self.gates for q in g.qubits()}

    def layout(self) -> dict[Qubit, int]:
        """Bit position of every qubit in the global basis index."""
        rank = {name: i for i, name in enumerate(REGISTER_ORDER)}
        order = sorted(range(len(self.registers)),
                       key=lambda i: (rank.get(self.registers[i][0], len(rank)), i))
        pos: dict[Qubit, int] = {}
        offset = 0
        for i in reversed(order):
            name, w = self.registers[i]
            for k in range(w):
                pos[Qubit(name, k)] = offset + k
            offset += w
        return pos

    def with_registers(self, registers) -> "Circuit":
        regs = registers.items() if isinstance(registers, dict) else registers
        return Circuit(_merge_registers(self.registers, tuple(regs)), self.gates, self.label)

    def extend(self, gates: Iterable[Gate]) -> "Circuit":
        return Circuit(self.registers, self.gates + tuple(gates), self.label)

    def relabel(self, label: str) -> "Circuit":
        return Circuit(self.registers, self.gates, label)

    def retag(self, tag: str) -> "Circuit":
        return Circuit(self.registers, tuple(g.with_tag(tag) for g in self.gates), self.label)

    # algebra
    def compose(self, other: "Circuit") -> "Circuit":
        return compose(self, other)

    def adjoint(self) -> "Circuit":
        return adjoint(self)

    def controlled(self, ctrl: Qubit, positive: bool = True, exempt=()) -> "Circuit":
        return controlled(self, ctrl, positive, exempt)

    def to_text(self) -> str:
        return to_text(self)


def compose(*circuits: Circuit) -> Circuit:
    """Concatenate gate lists; register tables are merged by name."""
    if not circuits:
        return Circuit(())
    regs = circuits[0].registers
    gates: list[Gate] = list(circuits[0].gates)
    for c in circuits[1:]:
        regs = _merge_registers(regs, c.registers)
        gates.extend(c.gates)
    return Circuit(regs, tuple(gates), circuits[0].label)


def adjoint(c: Circuit) -> Circuit:
    return Circuit(c.registers, tuple(g.adjoint() for g in reversed(c.gates)), c.label)


def controlled(c: Circuit, ctrl: Qubit, positive: bool = True, exempt=()) -> Circuit:
    """Add a control to every gate not listed in ``exempt``.

    ``exempt`` holds half-open index ranges ``(i, j)`` (or bare indices).  The
    exempt gates, read in circuit order, must multiply to the identity; then
    the result acts as the identity when the control is off.
    """
    if ctrl in c.touched_qubits():
        raise ValueError(f"control {ctrl} already used by the circuit")
    table = c.register_table
    regs = c.registers
    if ctrl.register in table:
        if ctrl.index >= table[ctrl.register]:
            raise ValueError(f"control {ctrl} outside register width {table[ctrl.register]}")
    else:
        regs = regs + ((ctrl.register, ctrl.index + 1),)
    skip = _expand_ranges(exempt, len(c.gates))
    gates = tuple(g if i in skip else g.with_control(ctrl, positive) for i, g in enumerate(c.gates))
    return Circuit(regs, gates, c.label)


# -- gate accounting ---------------------------------------------------------

@dataclass(frozen=True)
class GateCounts:
    toffoli: int = 0
    cnot: int = 0
    single_qubit: int = 0
    rotation: int = 0
    qubits: int = 0

    def __add__(self, other: "GateCounts") -> "GateCounts":
        return GateCounts(self.toffoli + other.toffoli, self.cnot + other.cnot,
                          self.single_qubit + other.single_qubit,
                          self.rotation + other.rotation, max(self.qubits, other.qubits))


POLICIES = ("shared", "separate")


def _ladder(k: int) -> int:
    return 2 * (k - 1) if k >= 2 else 0


def gate_cost(g: Gate) -> GateCounts:
    """Cost of one gate after lowering its controls.

    A plain Toffoli (X or Z with two controls) is native.  Otherwise k >= 2
    controls are folded into one ancilla by a Toffoli ladder of 2(k-1) gates
    and the base gate is applied singly controlled.  A controlled rotation
    costs two CNOTs and two rotations; a controlled SWAP puts all controls on
    its middle CNOT.
    """
    k = g.num_controls
    if g.kind in ("X", "Z"):
        if k == 0:
            return GateCounts(single_qubit=1)
        if k == 1:
            return GateCounts(cnot=1)
        if k == 2:
            return GateCounts(toffoli=1)
        return GateCounts(toffoli=_ladder(k), cnot=1)
    if g.kind == "SWAP":
        mid = gate_cost(Gate("X", (g.targets[1],), g.controls + ((g.targets[0], True),)))
        return GateCounts(toffoli=mid.toffoli, cnot=mid.cnot + 2)
    # H, Ry, Rz
    if k == 0:
        return GateCounts(single_qubit=1) if g.kind == "H" else GateCounts(rotation=1)
    return GateCounts(toffoli=_ladder(k), cnot=2, rotation=2)


def _ladder_group_key(g: Gate):
    if g.kind == "SWAP" or g.num_controls < 2:
        return None
    return (frozenset(q for q, _ in g.controls),)


def _polarity_map(g: Gate) -> dict[Qubit, bool]:
    return dict(g.controls)


def _groups(gates: Sequence[Gate]) -> list[list[Gate]]:
    """Greedy runs of adjacent gates that can share one Toffoli ladder.

    Members have the same control qubits; their polarity patterns are all
    equal, or split into two patterns differing on a single qubit (the
    ladder then branches on that qubit with one extra Toffoli stage).
    """
    out: list[list[Gate]] = []
    for g in gates:
        key = _ladder_group_key(g)
        if out and key is not None and _ladder_group_key(out[-1][0]) == key:
            pats = {tuple(sorted(_polarity_map(h).items())) for h in out[-1]}
            pats.add(tuple(sorted(_polarity_map(g).items())))
            targets_ok = all(t not in _polarity_map(out[-1][0]) for t in g.targets)
            if targets_ok and (len(pats) == 1 or (len(pats) == 2 and _differ_by_one(*pats))):
                out[-1].append(g)
                continue
        out.append([g])
    return out


def _differ_by_one(p, q) -> bool:
    return sum(a[1] != b[1] for a, b in zip(p, q)) == 1


def gate_counts(c: Circuit, policy: str = "shared") -> GateCounts:
    """Exact resource tally of a circuit.

    ``policy="separate"`` lowers every gate on its own.  ``policy="shared"``
    additionally lets runs of adjacent multi-controlled gates share a
    ladder (see ``_groups``) whenever that is cheaper.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    total = GateCounts(qubits=c.num_qubits)
    groups = _groups(c.gates) if policy == "shared" else [[g] for g in c.gates]
    for grp in groups:
        costs = [gate_cost(g) for g in grp]
        sep = sum(x.toffoli for x in costs)
        acc = GateCounts()
        for x in costs:
            acc = acc + x
        if len(grp) > 1:
            k = grp[0].num_controls
            shared = _ladder(k)
            if shared < sep:
                branches = len({tuple(sorted(_polarity_map(h).items())) for h in grp})
                acc = replace(acc, toffoli=shared, cnot=acc.cnot + 2 * (branches - 1))
        total = total + acc
    return replace(total, qubits=c.num_qubits)


def count_breakdown(c: Circuit, policy: str = "shared") -> dict[str, int]:
    """Toffoli totals per gate tag (untagged gates under "")."""
    out: dict[str, int] = {}
    segs: list[tuple[str, list[Gate]]] = []
    for g in c.gates:
        if segs and segs[-1][0] == g.tag:
            segs[-1][1].append(g)
        else:
            segs.append((g.tag, [g]))
    for tag, gates in segs:
        out[tag] = out.get(tag, 0) + gate_counts(Circuit(c.registers, tuple(gates)), policy).toffoli
    return out


# -- text serialization -----------------------------------------------------

def to_text(c: Circuit) -> str:
    lines = []
    if c.label:
        lines.append(f"# {c.label}")
    for name, w in c.registers:
        lines.append(f"register {name} {w}")
    lines.extend(str(g) for g in c.gates)
    return "\n".join(lines) + "\n"


_QUBIT_RE = re.compile(r"^([A-Za-z_][\w]*)\[(\d+)\]([+-]?)$")


def _parse_qubit(tok: str):
    m = _QUBIT_RE.match(tok)
    if not m:
        raise ValueError(f"bad qubit token {tok!r}")
    return Qubit(m.group(1), int(m.group(2))), m.group(3)


def from_text(text: str) -> Circuit:
    kinds = {k.upper(): k for k in KINDS}
    regs: list[tuple[str, int]] = []
    gates: list[Gate] = []
    label = ""
    for raw in text.splitlines():
        line, _, comment = raw.partition("#")
        line = line.strip()
        if not line:
            if not regs and not gates and comment.strip() and not label:
                label = comment.strip()
            continue
        toks = line.split()
        if toks[0] == "register":
            regs.append((toks[1], int(toks[2])))
            continue
        kind = kinds.get(toks[0])
        if kind is None:
            raise ValueError(f"unknown gate line {raw!r}")
        rest = toks[1:]
        angle = None
        if kind in _ROTATIONS:
            angle = float(rest[0])
            rest = rest[1:]
        if "|" in rest:
            bar = rest.index("|")
            tgt, ctl = rest[:bar], rest[bar + 1:]
        else:
            tgt, ctl = rest, []
        targets = tuple(_parse_qubit(t)[0] for t in tgt)
        controls = []
        for t in ctl:
            q, sign = _parse_qubit(t)
            controls.append((q, sign != "-"))
        gates.append(Gate(kind, targets, tuple(controls), angle, comment.strip()))
    return Circuit(tuple(regs), tuple(gates), label)
