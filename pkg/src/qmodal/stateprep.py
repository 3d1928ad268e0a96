"""Coarse-grained initial states.

An eigenvector of the 2^m-site system fills the m most significant qubits of
the signal register; the remaining n - m qubits are put in |+>.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .circuit import Circuit, Gate, H, Qubit, Register, Ry, X, Z, pattern_controls
from .reference import OscillatorSystem, eig, shifted_scaled, uniform_ring
from .simulator import Statevector

Mode = Union[int, str]
DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class CoarseState:
    m: int
    amplitudes: np.ndarray
    target_n: int | None = None

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=float)
        if a.shape != (2 ** self.m,):
            raise ValueError(f"need {2 ** self.m} amplitudes")
        if abs(np.linalg.norm(a) - 1) > 1e-12:
            raise ValueError("amplitudes must be normalized")
        object.__setattr__(self, "amplitudes", a)


def _sign_fix(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > tol)
    return -v if nz.size and v[nz[0]] < 0 else v


def eigenspaces(w: np.ndarray, tol: float = DEGENERACY_TOL) -> list[list[int]]:
    """Index groups of (descending) eigenvalues equal within ``tol``."""
    groups: list[list[int]] = []
    for i, val in enumerate(w):
        if groups and abs(w[groups[-1][0]] - val) < tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def standing_waves(H: np.ndarray):
    """Eigenpairs by descending eigenvalue with smooth representatives.

    Inside a degenerate eigenspace the basis is built from the projections of
    cos(2 pi k x / N) and sin(2 pi k x / N), for the wave number k whose
    profiles overlap the space most; every vector gets a positive first
    nonzero component.
    """
    w, V = eig(H)
    N = len(w)
    x = np.arange(N)
    ks = np.arange(N // 2 + 1)
    C = np.cos(2 * np.pi * np.outer(x, ks) / N)
    S = np.sin(2 * np.pi * np.outer(x, ks) / N)
    out = V.copy()
    for grp in eigenspaces(w):
        E = V[:, grp]
        if len(grp) == 1:
            out[:, grp[0]] = _sign_fix(E[:, 0])
            continue
        scores = np.sum((E.T @ C) ** 2, axis=0) + np.sum((E.T @ S) ** 2, axis=0)
        k = int(np.argmax(scores))
        basis: list[np.ndarray] = []
        cands = [E @ (E.T @ C[:, k]), E @ (E.T @ S[:, k])] + [E[:, j] for j in range(len(grp))]
        for c in cands:
            for b in basis:
                c = c - (b @ c) * b
            nrm = np.linalg.norm(c)
            if nrm > 1e-8:
                basis.append(c / nrm)
            if len(basis) == len(grp):
                break
        for j, i in enumerate(grp):
            out[:, i] = _sign_fix(basis[j])
    return w, out


def coarse_system(sys: OscillatorSystem, m: int) -> OscillatorSystem:
    """The 2^m-site stand-in; alternating springs are replaced by their mean."""
    if sys.springs.kind == "alternating":
        k1, k2 = sys.springs.values
        return uniform_ring(m, (k1 + k2) / 2, float(sys.mass_array()[0]), sys.boundary)
    if sys.springs.kind == "explicit":
        raise ValueError("coarse graining needs uniform or alternating springs")
    return sys.with_n(m)


@lru_cache(maxsize=64)
def _original_eigs(sys: OscillatorSystem):
    H, _, ks, shift = shifted_scaled(sys)
    w, V = standing_waves(H)
    return w, V, ks * w - shift


def fundamental_index(sys: OscillatorSystem, tol: float = 1e-9) -> int:
    """Index (descending order) of the slowest mode with nonzero frequency."""
    _, _, lam = _original_eigs(sys)
    idx = np.flatnonzero(lam < -tol)
    if idx.size == 0:
        raise ValueError("no oscillating mode")
    return int(idx[0])


def resolve_mode(sys: OscillatorSystem, which_mode: Mode) -> int:
    if which_mode == "fundamental":
        return fundamental_index(sys)
    k = int(which_mode)
    if not 0 <= k < sys.N:
        raise ValueError(f"mode {k} out of range for N={sys.N}")
    return k


def exact_mode(sys: OscillatorSystem, which_mode: Mode = "fundamental"):
    """(eigenvalue of the target matrix, representative vector, eigenspace basis)."""
    w, V, _ = _original_eigs(sys)
    k = resolve_mode(sys, which_mode)
    grp = next(g for g in eigenspaces(w) if k in g)
    return float(w[k]), V[:, k], V[:, grp]


def coarse_eigenvector(sys: OscillatorSystem, m: int, which_mode: Mode = "fundamental") -> CoarseState:
    if not 1 <= m <= 12:
        raise ValueError("m must be in 1..12")
    cs = coarse_system(sys, m)
    _, v, _ = exact_mode(cs, which_mode)
    return CoarseState(m, v / np.linalg.norm(v), sys.n)


def expand(cs: CoarseState, n: int) -> Statevector:
    """Coarse amplitudes on the top m bits, uniform over the low n - m bits."""
    if n < cs.m:
        raise ValueError("n must be >= m")
    rep = 2 ** (n - cs.m)
    amps = np.repeat(cs.amplitudes, rep) / math.sqrt(rep)
    layout = {Qubit("s", k): k for k in range(n)}
    return Statevector(amps.astype(complex), layout)


def prep_angles(cs: CoarseState) -> list[float]:
    """Binary-tree angles in heap order: theta[2^l - 1 + j] splits subtree j of level l."""
    a2 = np.asarray(cs.amplitudes) ** 2
    m = cs.m
    out = []
    for level in range(m):
        size = 2 ** (m - level)
        for j in range(2 ** level):
            block = a2[j * size:(j + 1) * size]
            left, right = float(block[: size // 2].sum()), float(block[size // 2:].sum())
            # 2 arccos sqrt(left / total), in a form that keeps tiny subtrees
            out.append(2.0 * math.atan2(math.sqrt(right), math.sqrt(left)))
    return out


def _tree_gates(angles: Sequence[float], qubits: Sequence[Qubit]) -> list[Gate]:
    """Level l rotates qubits[m-1-l], controlled on the l more significant qubits."""
    m = len(qubits)
    if len(angles) != 2 ** m - 1:
        raise ValueError(f"need {2 ** m - 1} angles for m={m}")
    gates = []
    for level in range(m):
        tgt = qubits[m - 1 - level]
        higher = list(qubits[m - level:])
        for j in range(2 ** level):
            ang = angles[2 ** level - 1 + j]
            gates.append(Ry(ang, tgt, *pattern_controls(higher, j)))
    return gates


def sign_gates(signs: Sequence[int], qubits: Sequence[Qubit]) -> list[Gate]:
    """Phase -1 on every basis value i with signs[i] < 0."""
    gates = []
    t, rest = qubits[0], list(qubits[1:])
    for i, sg in enumerate(signs):
        if sg >= 0:
            continue
        flip = [] if i & 1 else [X(t)]
        gates += flip + [Z(t, *pattern_controls(rest, i >> 1))] + flip
    return gates


def build_prep_circuit(angles: Sequence[float], m: int, n: int | None = None,
                       signs: Sequence[int] | None = None, register: str = "s") -> Circuit:
    """|0> -> coarse state on the top m qubits of ``register`` (|+> below)."""
    n = m if n is None else n
    if n < m:
        raise ValueError("n must be >= m")
    reg = Register(register, n)
    top = reg.qubits[n - m:]
    gates = [H(q) for q in reg.qubits[: n - m]] + _tree_gates(angles, top)
    if signs is not None:
        gates += sign_gates(signs, top)
    return Circuit(((register, n),), gates, f"prep m={m} n={n}")


def state_circuit(cs: CoarseState, n: int, register: str = "s") -> Circuit:
    signs = [-1 if a < 0 else 1 for a in cs.amplitudes]
    return build_prep_circuit(prep_angles(cs), cs.m, n, signs, register)


def overlap_squared(state: np.ndarray, basis: np.ndarray) -> float:
    """Squared norm of the projection of ``state`` onto span(basis columns)."""
    c = basis.conj().T @ np.asarray(state)
    return float(np.real(np.vdot(c, c)))


def infidelity(sys: OscillatorSystem, n: int, m: int, which_mode: Mode = "fundamental") -> float:
    """1 - |projection of the expanded coarse state onto the exact mode's eigenspace|^2."""
    if n > 12:
        raise ValueError("n must be <= 12 for the dense reference")
    fine = sys.with_n(n)
    mode = resolve_mode(fine, which_mode) if which_mode != "fundamental" else "fundamental"
    _, _, basis = exact_mode(fine, mode)
    cs = coarse_eigenvector(sys, m, which_mode)
    psi = expand(cs, n).amplitudes.real
    return max(0.0, 1.0 - overlap_squared(psi, basis))


def infidelity_sweep(sys: OscillatorSystem, ns: Sequence[int], ms: Sequence[int] | None = None,
                     modes: Sequence[Mode] = ("fundamental",)):
    rows = []
    for n in ns:
        for m in (ms if ms is not None else range(1, n + 1)):
            if m > n:
                continue
            for mode in modes:
                rows.append((n, m, mode, infidelity(sys, n, m, mode)))
    return rows
