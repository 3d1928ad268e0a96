"""Classical ground truth for the oscillator chain.

Sites are numbered from 0.  Spring ``j`` couples site ``j`` to site
``j+1 mod N``.  With alternating constants, springs leaving an odd site carry
k1 and springs leaving an even site carry k2, so that the entry between an
even x and y = x-1 is k1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

BOUNDARIES = ("periodic", "fixed")


class SpecError(ValueError):
    """Malformed or inconsistent system descriptor."""


@dataclass(frozen=True)
class Springs:
    kind: str  # "uniform" | "alternating" | "explicit"
    values: tuple[float, ...]

    def constants(self, N: int) -> np.ndarray:
        if self.kind == "uniform":
            return np.full(N, self.values[0], dtype=float)
        if self.kind == "alternating":
            k1, k2 = self.values
            return np.array([k1 if j % 2 else k2 for j in range(N)], dtype=float)
        if len(self.values) != N:
            raise SpecError(f"explicit springs need {N} values, got {len(self.values)}")
        return np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class OscillatorSystem:
    n: int
    springs: Springs
    masses: Any = 1.0  # scalar for uniform masses, else a length-N sequence
    boundary: str = "periodic"
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise SpecError("n must be a positive integer")
        if self.boundary not in BOUNDARIES:
            raise SpecError(f"boundary must be one of {BOUNDARIES}")
        ks = np.asarray(self.springs.values, dtype=float)
        if ks.size == 0 or np.any(ks <= 0) or not np.all(np.isfinite(ks)):
            raise SpecError("spring constants must be positive")
        if self.springs.kind == "alternating":
            k1, k2 = self.springs.values
            if not k1 <= k2:
                raise SpecError("alternating springs need k1 <= k2")
        m = np.atleast_1d(np.asarray(self.masses, dtype=float))
        if np.any(m <= 0):
            raise SpecError("masses must be positive")
        if m.size not in (1, self.N):
            raise SpecError(f"mass list must have length {self.N}")
        self.springs.constants(self.N)

    @property
    def N(self) -> int:
        return 2 ** self.n

    def mass_array(self) -> np.ndarray:
        m = np.atleast_1d(np.asarray(self.masses, dtype=float))
        return np.full(self.N, m[0]) if m.size == 1 else m

    @property
    def uniform_mass(self) -> bool:
        m = self.mass_array()
        return bool(np.all(m == m[0]))

    @property
    def sparsity(self) -> int:
        """Nonzero off-diagonal entries per row (a 2-site ring has only one)."""
        return 1 if self.N == 2 else 2

    @property
    def k_scale(self) -> float:
        """Entry normalizer: the k2 (or uniform k) spring over the mass."""
        m = self.mass_array()[0]
        if self.springs.kind == "alternating":
            return self.springs.values[1] / m
        if self.springs.kind == "uniform":
            return self.springs.values[0] / m
        return float(np.max(self.springs.values)) / m

    @property
    def shift(self) -> float:
        d = np.diag(build_matrix(self))
        return float(-d[0])

    @property
    def alpha(self) -> float:
        h = shifted_scaled(self)[0]
        return float(self.sparsity * np.max(np.abs(h)))

    def with_n(self, n: int) -> "OscillatorSystem":
        return OscillatorSystem(n, self.springs, self.masses, self.boundary, self.label)


def uniform_ring(n: int, k: float = 1.0, m: float = 1.0, boundary: str = "periodic") -> OscillatorSystem:
    return OscillatorSystem(n, Springs("uniform", (float(k),)), float(m), boundary)


def alternating_ring(n: int, k1: float, k2: float, m: float = 1.0,
                     boundary: str = "periodic") -> OscillatorSystem:
    return OscillatorSystem(n, Springs("alternating", (float(k1), float(k2))), float(m), boundary)


def build_matrix(sys: OscillatorSystem) -> np.ndarray:
    """The equation-of-motion matrix: m_x * xdd_x = sum of spring forces.

    Entries are added spring by spring, so the two springs of a 2-site ring
    sum into one off-diagonal entry.  ``fixed`` drops the corner couplings
    but keeps both springs on the diagonal (walls at the ends).
    """
    N = sys.N
    if N > 4096:
        raise SpecError("N too large for a dense matrix")
    ks = sys.springs.constants(N)
    m = sys.mass_array()
    H = np.zeros((N, N))
    for j in range(N):
        a, b = j, (j + 1) % N
        H[a, a] -= ks[j]
        H[b, b] -= ks[j]
        if sys.boundary == "fixed" and j == N - 1:
            continue
        H[a, b] += ks[j]
        H[b, a] += ks[j]
    return H / m[:, None]


def shifted_scaled(sys: OscillatorSystem):
    """Return (H, alpha, k_scale, shift) with H = (H_orig + shift) / k_scale.

    H has zero diagonal and non-negative entries; the block that a circuit
    encodes is H / alpha, and k_scale * H - shift * I recovers H_orig.
    """
    H0 = build_matrix(sys)
    d = np.diag(H0)
    if not np.allclose(d, d[0], rtol=0, atol=1e-12 * max(1.0, abs(d[0]))):
        raise SpecError("diagonal is not uniform; shift construction needs equal diagonal entries")
    shift = float(-d[0])
    ks = sys.k_scale
    H = (H0 + shift * np.eye(sys.N)) / ks
    np.fill_diagonal(H, 0.0)
    alpha = float(sys.sparsity * np.max(np.abs(H)))
    return H, alpha, ks, shift


def encoded_block(sys: OscillatorSystem) -> np.ndarray:
    H, alpha, _, _ = shifted_scaled(sys)
    return H / alpha


def eig(H: np.ndarray, tol: float = 1e-12):
    """Eigenpairs of a real symmetric matrix, sorted by descending eigenvalue."""
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("square matrix required")
    scale = max(1.0, float(np.max(np.abs(H)))) if H.size else 1.0
    if not np.allclose(H, H.T, rtol=0, atol=tol * scale):
        raise ValueError("matrix is not symmetric")
    w, v = np.linalg.eigh((H + H.T) / 2)
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def to_original(sys_or_params, lam_tilde):
    """Map an encoded-block eigenvalue back to an eigenvalue of H_orig."""
    if isinstance(sys_or_params, OscillatorSystem):
        _, alpha, ks, shift = shifted_scaled(sys_or_params)
    else:
        alpha, ks, shift = sys_or_params
    return alpha * ks * np.asarray(lam_tilde) - shift


# -- descriptor parsing -----------------------------------------------------

def system_from_dict(d: dict) -> OscillatorSystem:
    if not isinstance(d, dict):
        raise SpecError("descriptor must be a JSON object")
    try:
        n = d["n"]
    except KeyError:
        raise SpecError("descriptor is missing 'n'") from None
    if not isinstance(n, int) or isinstance(n, bool):
        raise SpecError("'n' must be an integer")
    raw = d.get("springs", {"uniform": 1.0})
    if isinstance(raw, dict) and len(raw) == 1:
        (kind, val), = raw.items()
        if kind == "uniform":
            springs = Springs("uniform", (float(val),))
        elif kind == "alternating":
            if not isinstance(val, Sequence) or len(val) != 2:
                raise SpecError("'alternating' needs [k1, k2]")
            springs = Springs("alternating", tuple(float(v) for v in val))
        else:
            raise SpecError(f"unknown spring kind {kind!r}")
    elif isinstance(raw, list):
        springs = Springs("explicit", tuple(float(v) for v in raw))
    else:
        raise SpecError("'springs' must be {'uniform': k}, {'alternating': [k1, k2]} or a list")
    masses = d.get("masses", "uniform")
    if masses == "uniform":
        masses = float(d.get("mass", 1.0))
    elif isinstance(masses, (int, float)):
        masses = float(masses)
    elif isinstance(masses, list):
        masses = tuple(float(v) for v in masses)
    else:
        raise SpecError("'masses' must be 'uniform', a number or a list")
    return OscillatorSystem(n, springs, masses, d.get("boundary", "periodic"), d.get("label", ""))


def load_system(path) -> OscillatorSystem:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as e:
        raise SpecError(f"{path}: invalid JSON ({e})") from None
    except OSError as e:
        raise SpecError(f"{path}: {e.strerror}") from None
    try:
        return system_from_dict(data)
    except (TypeError, ValueError) as e:
        if isinstance(e, SpecError):
            raise
        raise SpecError(str(e)) from None


def system_to_dict(sys: OscillatorSystem) -> dict:
    if sys.springs.kind == "explicit":
        springs = list(sys.springs.values)
    elif sys.springs.kind == "uniform":
        springs = {"uniform": sys.springs.values[0]}
    else:
        springs = {"alternating": list(sys.springs.values)}
    m = sys.masses
    masses = list(m) if isinstance(m, (tuple, list, np.ndarray)) else float(m)
    return {"n": sys.n, "springs": springs, "masses": masses, "boundary": sys.boundary}
