"""Dense statevector simulation used to verify every builder."""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .circuit import Circuit, Gate, Qubit

UNITARY_MAX_QUBITS = 14
_DEFAULT_MAX_QUBITS = 22


class CapacityError(RuntimeError):
    """Requested simulation exceeds the configured width budget."""


def max_qubits() -> int:
    env = os.environ.get("QMODAL_MAX_QUBITS")
    return int(env) if env else _DEFAULT_MAX_QUBITS


def _check_width(q: int, cap: int | None = None) -> None:
    cap = max_qubits() if cap is None else cap
    if q > cap:
        raise CapacityError(f"{q} qubits exceeds simulator cap of {cap}")


_SQ = 1 / np.sqrt(2)
_HMAT = np.array([[_SQ, _SQ], [_SQ, -_SQ]])


def ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz_matrix(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def gate_matrix(g: Gate) -> np.ndarray:
    """2x2 base matrix (SWAP excluded)."""
    if g.kind == "X":
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if g.kind == "Z":
        return np.diag([1, -1]).astype(complex)
    if g.kind == "H":
        return _HMAT.astype(complex)
    if g.kind == "Ry":
        return ry_matrix(g.angle)
    if g.kind == "Rz":
        return rz_matrix(g.angle)
    raise ValueError(g.kind)


def _apply_gate(psi: np.ndarray, g: Gate, axis: Mapping[Qubit, int]) -> None:
    """Apply ``g`` in place to ``psi`` of shape (2,)*q (+ optional batch axis)."""
    base: list = [slice(None)] * psi.ndim
    for q, pol in g.controls:
        base[axis[q]] = 1 if pol else 0

    def at(**fix):
        idx = list(base)
        for ax, v in fix.values():
            idx[ax] = v
        return tuple(idx)

    if g.kind == "SWAP":
        a, b = axis[g.targets[0]], axis[g.targets[1]]
        i01, i10 = at(p=(a, 0), r=(b, 1)), at(p=(a, 1), r=(b, 0))
        tmp = psi[i01].copy()
        psi[i01] = psi[i10]
        psi[i10] = tmp
        return
    t = axis[g.targets[0]]
    i0, i1 = at(p=(t, 0)), at(p=(t, 1))
    if g.kind == "X":
        tmp = psi[i0].copy()
        psi[i0] = psi[i1]
        psi[i1] = tmp
    elif g.kind == "Z":
        psi[i1] *= -1
    elif g.kind == "Rz":
        psi[i0] *= np.exp(-0.5j * g.angle)
        psi[i1] *= np.exp(0.5j * g.angle)
    else:
        u = gate_matrix(g)
        a = psi[i0].copy()
        psi[i0] *= u[0, 0]
        psi[i0] += u[0, 1] * psi[i1]
        psi[i1] *= u[1, 1]
        psi[i1] += u[1, 0] * a


def _run(gates: Iterable[Gate], pos: Mapping[Qubit, int], q: int, psi: np.ndarray) -> np.ndarray:
    """Evolve a flat (2^q,) or (2^q, batch) array; returns the same buffer reshaped."""
    gates = list(gates)
    batch = psi.shape[1:] if psi.ndim > 1 else ()
    view = psi.reshape((2,) * q + batch)
    axis = {qb: q - 1 - p for qb, p in pos.items()}
    targets = {t for g in gates for t in g.targets}
    ctrl_only = sorted({c for g in gates for c, _ in g.controls} - targets, key=axis.get)
    if q < 12 or not ctrl_only or all(axis[c] == i for i, c in enumerate(ctrl_only)):
        for g in gates:
            _apply_gate(view, g, axis)
        return view.reshape(psi.shape)
    # qubits that are only ever controls go to the outermost axes, so that
    # conditioning on them selects contiguous blocks
    front = [axis[c] for c in ctrl_only]
    rest = [a for a in range(q) if a not in set(front)]
    perm = front + rest + list(range(q, view.ndim))
    work = np.ascontiguousarray(view.transpose(perm))
    new_axis = {qb: perm.index(a) for qb, a in axis.items()}
    for g in gates:
        _apply_gate(work, g, new_axis)
    view[...] = work.transpose(np.argsort(perm))
    return view.reshape(psi.shape)


@dataclass
class Statevector:
    """Amplitudes over the full register table of ``layout``."""

    amplitudes: np.ndarray
    layout: dict[Qubit, int]

    @property
    def num_qubits(self) -> int:
        return len(self.layout)

    @classmethod
    def zero(cls, circuit: Circuit) -> "Statevector":
        q = circuit.num_qubits
        _check_width(q)
        a = np.zeros(2 ** q, dtype=complex)
        a[0] = 1
        return cls(a, circuit.layout())

    @classmethod
    def basis(cls, circuit: Circuit, values: Mapping[str, int] | None = None) -> "Statevector":
        sv = cls.zero(circuit)
        idx = basis_index(circuit, values or {})
        sv.amplitudes[0] = 0
        sv.amplitudes[idx] = 1
        return sv

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def register_value_probs(self, qubits: Sequence[Qubit]) -> np.ndarray:
        """Marginal distribution of the little-endian value held on ``qubits``."""
        p = self.probabilities()
        idx = np.arange(p.size)
        val = np.zeros(p.size, dtype=np.int64)
        for k, qb in enumerate(qubits):
            val |= ((idx >> self.layout[qb]) & 1) << k
        return np.bincount(val, weights=p, minlength=2 ** len(qubits))

    def read(self, qubits: Sequence[Qubit]) -> dict[int, float]:
        """Nonzero entries of the marginal over ``qubits``."""
        probs = self.register_value_probs(qubits)
        return {int(i): float(v) for i, v in enumerate(probs) if v > 1e-14}


def basis_index(circuit: Circuit, values: Mapping[str, int]) -> int:
    """Global basis index with register ``name`` holding integer ``values[name]``."""
    pos = circuit.layout()
    table = circuit.register_table
    idx = 0
    for name, v in values.items():
        w = table[name]
        if not 0 <= v < 2 ** w:
            raise ValueError(f"value {v} does not fit register {name} of width {w}")
        for k in range(w):
            if (v >> k) & 1:
                idx |= 1 << pos[Qubit(name, k)]
    return idx


def register_values(circuit: Circuit, index: int) -> dict[str, int]:
    pos = circuit.layout()
    out = {name: 0 for name, _ in circuit.registers}
    for qb, p in pos.items():
        if (index >> p) & 1:
            out[qb.register] |= 1 << qb.index
    return out


def apply(c: Circuit, state: Statevector | None = None) -> Statevector:
    """Return U(c)|state>, starting from |0...0> when ``state`` is None.

    From |0...0>, qubits no gate touches stay |0> and are left out of the
    evolution entirely.
    """
    layout = c.layout()
    q = len(layout)
    _check_width(q)
    if state is None:
        touched = c.touched_qubits()
        active = sorted(touched, key=lambda qb: layout[qb])
        k = len(active)
        small = np.zeros(2 ** k, dtype=complex)
        small[0] = 1
        cpos = {qb: i for i, qb in enumerate(active)}
        small = _run(c.gates, cpos, k, small)
        full = np.zeros(2 ** q, dtype=complex)
        full[_embed_indices(active, layout, k)] = small
        return Statevector(full, layout)
    if state.layout != layout:
        raise ValueError("statevector layout does not match circuit registers")
    amps = state.amplitudes.astype(complex, copy=True)
    return Statevector(_run(c.gates, layout, q, amps), layout)


def _embed_indices(active: Sequence[Qubit], layout: Mapping[Qubit, int], k: int) -> np.ndarray:
    idx = np.arange(2 ** k)
    out = np.zeros(2 ** k, dtype=np.int64)
    for i, qb in enumerate(active):
        out |= ((idx >> i) & 1) << layout[qb]
    return out


def circuit_unitary(c: Circuit) -> np.ndarray:
    q = c.num_qubits
    _check_width(q, UNITARY_MAX_QUBITS)
    m = np.eye(2 ** q, dtype=complex)
    return _run(c.gates, c.layout(), q, m)


def sector_operator(c: Circuit, free: Sequence[Qubit], fixed: Mapping[Qubit, int] | None = None,
                    check_closed: bool = False, tol: float = 1e-10) -> np.ndarray:
    """Matrix of <fixed, j| U |fixed, i> over basis states of the ``free`` qubits.

    Every qubit outside ``free`` is pinned (to 0 unless named in ``fixed``).
    Entry (j, i) uses the little-endian value formed on ``free``.  With
    ``check_closed`` the pinned sector must be invariant under U.
    """
    layout = c.layout()
    fixed = dict(fixed or {})
    free = list(free)
    if set(free) & set(fixed):
        raise ValueError("a qubit cannot be both free and fixed")
    for qb in layout:
        if qb not in free:
            fixed.setdefault(qb, 0)
    touched = c.touched_qubits()
    sim = sorted(set(free) | (touched & set(fixed)), key=lambda qb: layout[qb])
    k = len(sim)
    _check_width(k)
    # untouched pinned qubits never change, so they drop out of the evolution
    cpos = {qb: i for i, qb in enumerate(sim)}
    f = len(free)
    nfree = 2 ** f
    base = 0
    for qb in sim:
        if qb in fixed and fixed[qb]:
            base |= 1 << cpos[qb]
    cols = np.arange(nfree)
    col_idx = np.full(nfree, base, dtype=np.int64)
    for i, qb in enumerate(free):
        col_idx |= ((cols >> i) & 1) << cpos[qb]
    out = np.zeros((nfree, nfree), dtype=complex)
    chunk = max(1, min(nfree, 2 ** max(0, 22 - k)))
    worst = 0.0
    for start in range(0, nfree, chunk):
        stop = min(nfree, start + chunk)
        psi = np.zeros((2 ** k, stop - start), dtype=complex)
        psi[col_idx[start:stop], np.arange(stop - start)] = 1
        psi = _run(c.gates, cpos, k, psi)
        block = psi[col_idx, :]
        out[:, start:stop] = block
        if check_closed:
            leak = 1 - np.sum(np.abs(block) ** 2, axis=0)
            worst = max(worst, float(np.max(np.abs(leak))))
    if check_closed and worst > tol:
        raise ValueError(f"sector not invariant: leakage {worst:.3e}")
    return out


class ZeroProbabilityError(ValueError):
    pass


def project(state: Statevector, assignments: Iterable[tuple[Qubit, int]]):
    """Post-select ``assignments``; returns (probability, renormalized state)."""
    idx = np.arange(state.amplitudes.size)
    mask = np.ones(idx.size, dtype=bool)
    for qb, bit in assignments:
        mask &= ((idx >> state.layout[qb]) & 1) == bit
    amps = np.where(mask, state.amplitudes, 0)
    p = float(np.sum(np.abs(amps) ** 2))
    if p < 1e-15:
        raise ZeroProbabilityError("projection has zero probability")
    return p, Statevector(amps / np.sqrt(p), state.layout)


def sample(state: Statevector, qubits: Sequence[Qubit], rng_seed: int | None = None,
           shots: int | None = None):
    """Draw outcomes (little-endian integers over ``qubits``) from the marginal."""
    probs = state.register_value_probs(qubits)
    return sample_distribution(probs, rng_seed, shots)


def sample_distribution(probs: np.ndarray, rng_seed: int | None, shots: int | None = None):
    rng = np.random.default_rng(rng_seed)
    p = np.clip(np.asarray(probs, dtype=float), 0, None)
    p = p / p.sum()
    if shots is None:
        return int(rng.choice(p.size, p=p))
    return rng.choice(p.size, size=shots, p=p)


def dump_csv(state: Statevector, path) -> None:
    with open(path, "w") as fh:
        fh.write("index,re,im\n")
        for i, a in enumerate(state.amplitudes):
            if a != 0:
                fh.write(f"{i},{a.real!r},{a.imag!r}\n")
