"""Phase estimation over the qubitized walk and phase-to-eigenvalue decoding.

The phase register value is little-endian; phase[j] controls 2^j repetitions
of the controlled walk, so an eigenphase 2 pi phi lands on phi_int ~ phi 2^t.
A walk eigenvalue exp(-/+ i arccos lam) therefore shows up as the bin pair
phi_int, 2^t - phi_int, both decoding to lam = cos(2 pi phi_int / 2^t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuit import Circuit, Gate, H, Qubit, Register, Rz, SWAP, adjoint
from .encoding import BlockEncoding, WalkOperator, build_controlled_walk
from .reference import OscillatorSystem, shifted_scaled
from .simulator import Statevector, _check_width, _run, apply, sample_distribution

PHASE = "phase"


@dataclass(frozen=True)
class QpeConfig:
    t: int
    init: Circuit | None = None  # state preparation on the signal register
    shots: int = 0  # 0 = exact marginal distribution
    seed: int | None = None

    def __post_init__(self):
        if self.t < 1:
            raise ValueError("t must be >= 1")
        if self.shots < 0:
            raise ValueError("shots must be >= 0")

    @property
    def walk_applications(self) -> int:
        return 2 ** self.t - 1


def phase_qubits_for(eps_prec: float) -> int:
    """ceil(log2 1/eps)."""
    return max(1, math.ceil(math.log2(1.0 / eps_prec) - 1e-12))


@dataclass(frozen=True)
class PhaseDistribution:
    t: int
    probabilities: np.ndarray
    counts: np.ndarray | None = None  # sampled histogram, if any

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.shape != (2 ** self.t,):
            raise ValueError(f"need {2 ** self.t} probabilities")
        if np.any(p < -1e-12) or abs(p.sum() - 1) > 1e-9:
            raise ValueError("not a probability distribution")
        object.__setattr__(self, "probabilities", np.clip(p, 0.0, None))

    @property
    def size(self) -> int:
        return 2 ** self.t

    def lambda_tilde(self) -> np.ndarray:
        """Decoded block eigenvalue per bin."""
        return np.cos(2 * np.pi * np.arange(self.size) / self.size)

    def folded(self) -> np.ndarray:
        """Mass of each bin pair {y, 2^t - y}, indexed by y in 0..2^(t-1)."""
        p = self.probabilities
        half = self.size // 2
        out = p[: half + 1].copy()
        out[1:half] += p[self.size - 1:half:-1]
        return out

    def top_bin(self) -> int:
        """Most likely bin, taken on the folded histogram (so y <= 2^(t-1))."""
        return int(np.argmax(self.folded()))

    def mass_near(self, lambda_tilde: float, window: float = 1.0) -> float:
        """Mass within ``window`` bins (exclusive) of the two bins of ``lambda_tilde``."""
        theta = math.acos(max(-1.0, min(1.0, lambda_tilde)))
        centre = theta / (2 * np.pi) * self.size
        y = np.arange(self.size)
        d = np.abs(y - centre)
        d = np.minimum(d, np.abs(y - (self.size - centre)))
        d = np.minimum(d, np.abs(y - (centre + self.size)))
        return float(self.probabilities[d < window - 1e-9].sum())

    def sample(self, shots: int, seed: int | None) -> "PhaseDistribution":
        draws = sample_distribution(self.probabilities, seed, shots)
        counts = np.bincount(draws, minlength=self.size)
        return PhaseDistribution(self.t, self.probabilities, counts)


@dataclass(frozen=True)
class EigenResult:
    phase: float
    lambda_tilde: float
    lambda_original: float
    omega: float | None
    physical: bool = True

    @property
    def nonphysical(self) -> bool:
        return not self.physical


def decode_params(target) -> tuple[float, float, float]:
    """(alpha, k_scale, shift) from a system, an encoding or a walk."""
    if isinstance(target, WalkOperator):
        target = target.encoding
    if isinstance(target, BlockEncoding):
        _, _, ks, shift = shifted_scaled(target.system)
        return target.alpha, ks, shift
    if isinstance(target, OscillatorSystem):
        _, alpha, ks, shift = shifted_scaled(target)
        return alpha, ks, shift
    alpha, ks, shift = target
    return float(alpha), float(ks), float(shift)


def postprocess(phase: float, target, tol: float = 1e-9) -> EigenResult:
    """phase in [0, 1) -> block eigenvalue -> matrix eigenvalue and frequency."""
    alpha, ks, shift = decode_params(target)
    phase = float(phase) % 1.0
    lt = math.cos(2 * math.pi * phase)
    lo = alpha * ks * lt - shift
    if lo > tol:
        return EigenResult(phase, lt, lo, None, physical=False)
    return EigenResult(phase, lt, lo, math.sqrt(max(0.0, -lo)))


def decode_bin(phi_int: int, t: int, target) -> EigenResult:
    return postprocess(phi_int / 2 ** t, target)


# -- circuits ------------------------------------------------------------------

def _cphase(phi: float, ctrl: Qubit, target: Qubit) -> list[Gate]:
    """diag(1, 1, 1, e^{i phi}) up to a global phase."""
    return [Rz(phi / 2, ctrl), Rz(phi, target, ctrl)]


def qft_gates(qubits: Sequence[Qubit]) -> list[Gate]:
    """|k> -> 2^{-t/2} sum_y e^{2 pi i k y / 2^t} |y> on a little-endian register."""
    q = list(qubits)
    t = len(q)
    gates: list[Gate] = []
    for i in reversed(range(t)):
        gates.append(H(q[i]))
        for m in reversed(range(i)):
            gates += _cphase(np.pi / 2 ** (i - m), q[m], q[i])
    for i in range(t // 2):
        gates.append(SWAP(q[i], q[t - 1 - i]))
    return gates


def build_qft(t: int, register: str = PHASE) -> Circuit:
    return Circuit(((register, t),), qft_gates(Register(register, t).qubits), f"qft t={t}")


def build_inverse_qft(t: int, register: str = PHASE) -> Circuit:
    return adjoint(build_qft(t, register)).relabel(f"inverse qft t={t}")


@dataclass(frozen=True)
class QpeCircuit:
    circuit: Circuit
    phase_qubits: tuple[Qubit, ...]
    walk_applications: int
    walk: WalkOperator = field(repr=False)
    segments: tuple[int, int] = (0, 0)  # gate index where the walks start / the inverse QFT starts


def _init_circuit(w: WalkOperator, cfg: QpeConfig) -> Circuit:
    regs = w.circuit.registers
    gates = list(w.initial_gates())
    if cfg.init is not None:
        gates += list(cfg.init.gates)
    return Circuit(regs, gates, "init")


def build_qpe(w: WalkOperator, cfg: QpeConfig, check_width: bool = True) -> QpeCircuit:
    t = cfg.t
    phase = Register(PHASE, t).qubits
    total = w.circuit.num_qubits + t
    if check_width:
        _check_width(total)
    regs = w.circuit.registers + ((PHASE, t),)
    gates: list[Gate] = list(_init_circuit(w, cfg).gates)
    gates += [H(q) for q in phase]
    start = len(gates)
    reps = 0
    for j, q in enumerate(phase):
        cw = build_controlled_walk(w, q).gates
        for _ in range(2 ** j):
            gates += cw
            reps += 1
    stop = len(gates)
    gates += build_inverse_qft(t).gates
    circ = Circuit(regs, gates, f"qpe t={t} {w.circuit.label}")
    return QpeCircuit(circ, tuple(phase), reps, w, (start, stop))


def _initial_walk_state(w: WalkOperator, cfg: QpeConfig) -> np.ndarray:
    init = _init_circuit(w, cfg)
    return apply(init).amplitudes


def _powers_distribution(w: WalkOperator, cfg: QpeConfig) -> np.ndarray:
    """Exact phase marginal from the autocorrelations c_d = <psi| W^d |psi>.

    The pre-QFT state is T^{-1/2} sum_k |k> W^k |psi>, so after the inverse
    QFT P(y) = T^{-2} sum_{k,k'} c_{k-k'} e^{-2 pi i (k-k') y / T}; only one
    walk-register vector is held at a time.
    """
    c = w.circuit
    q = c.num_qubits
    _check_width(q)
    T = 2 ** cfg.t
    pos = c.layout()
    psi = _initial_walk_state(w, cfg)
    corr = np.empty(T, dtype=complex)
    corr[0] = np.vdot(psi, psi)
    cur = psi.copy()
    for d in range(1, T):
        cur = _run(c.gates, pos, q, cur)
        corr[d] = np.vdot(psi, cur)
    d = np.arange(T)
    weights = (T - d) * corr
    y = np.arange(T)
    phases = np.exp(-2j * np.pi * np.outer(y, d) / T)
    # the d and -d terms are complex conjugates
    p = 2 * np.real(phases @ weights) - T * np.real(corr[0])
    return p / T ** 2


def _circuit_distribution(w: WalkOperator, cfg: QpeConfig) -> np.ndarray:
    qc = build_qpe(w, cfg)
    c = qc.circuit
    a, b = qc.segments
    # three passes so the phase qubits are control-only in the long middle one
    state = apply(Circuit(c.registers, c.gates[:a]))
    state = apply(Circuit(c.registers, c.gates[a:b]), state)
    state = apply(Circuit(c.registers, c.gates[b:]), state)
    return state.register_value_probs(list(qc.phase_qubits))


METHODS = ("circuit", "powers")


def run_qpe(w: WalkOperator, cfg: QpeConfig, method: str = "powers") -> PhaseDistribution:
    """Phase-register distribution (exact, or sampled when ``cfg.shots`` > 0).

    ``circuit`` simulates the full gate list of :func:`build_qpe` and is
    limited by the total width; ``powers`` evaluates the same marginal
    without holding the phase qubits, so only the walk width counts
    against the simulator cap.
    """
    if method == "circuit":
        p = _circuit_distribution(w, cfg)
    elif method == "powers":
        p = _powers_distribution(w, cfg)
    else:
        raise ValueError(f"method must be one of {METHODS}")
    p = p / p.sum()
    dist = PhaseDistribution(cfg.t, p)
    if cfg.shots:
        dist = dist.sample(cfg.shots, cfg.seed)
    return dist


# -- walk spectrum --------------------------------------------------------------

def _zero_sector_basis(w: WalkOperator) -> np.ndarray:
    """Columns |1>_sgn |+>_flip |0>_anc |x>_s for every signal value x."""
    c = w.circuit
    lay = c.layout()
    be = w.encoding
    N = 2 ** be.signal_width
    G = np.zeros((2 ** c.num_qubits, N), dtype=complex)
    base = 1 << lay[w.sign_qubit]
    fbit = 1 << lay[w.flip_qubit]
    for x in range(N):
        idx = base
        for k, qb in enumerate(be.signal_qubits):
            if (x >> k) & 1:
                idx |= 1 << lay[qb]
        G[idx, x] = G[idx | fbit, x] = 1 / np.sqrt(2)
    return G


def walk_eigenphases(w: WalkOperator, tol: float = 1e-9):
    """Eigenphases of the walk restricted to span{G, W G} (G = zero-sector states).

    Returns (phases, leakage): ``leakage`` measures how far the span is from
    invariant, which should be ~0 for a valid walk.
    """
    c = w.circuit
    q = c.num_qubits
    _check_width(q)
    pos = c.layout()
    G = _zero_sector_basis(w)
    WG = _run(c.gates, pos, q, G.copy())
    W2G = _run(c.gates, pos, q, WG.copy())
    B = np.hstack([G, WG])
    U, S, Vh = np.linalg.svd(B, full_matrices=False)
    r = int(np.sum(S > tol * S[0]))
    Q = U[:, :r]
    WQ = np.hstack([WG, W2G]) @ (Vh[:r].conj().T / S[:r])
    M = Q.conj().T @ WQ
    leak = float(np.linalg.norm(WQ - Q @ M))
    return np.angle(np.linalg.eigvals(M)), leak


def folded_walk_spectrum(w: WalkOperator, tol: float = 1e-7) -> np.ndarray:
    """cos(theta) over one phase of each +/- pair (descending)."""
    th, _ = walk_eigenphases(w)
    keep = [a for a in th if math.sin(a) > tol or abs(math.sin(a)) <= tol]
    return np.sort(np.cos(keep))[::-1]


def mode_bins(lambda_tilde: float, t: int) -> tuple[float, float]:
    """Fractional bin positions of the +/- phase pair."""
    theta = math.acos(max(-1.0, min(1.0, lambda_tilde)))
    y = theta / (2 * np.pi) * 2 ** t
    return y, (2 ** t - y) % 2 ** t
