"""Surface-code cost model for the phase-estimation circuits.

Logical qubits sit in a block of b tiles, each tile costing 2 d^2 physical
qubits; Toffolis are fed by CCZ factories, and the code distance is the
smallest odd d keeping the accumulated logical error below the budget.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

from .encoding import VARIANTS, controlled_walk_toffolis, walk_qubits

BLOCKS = ("compact", "fast")
FACTORY_QUBITS = 0.5e5
FACTORY_CYCLES = 60  # code cycles per CCZ state per factory
MAX_DISTANCE = 99


class DistanceError(ValueError):
    """No code distance up to the search limit meets the failure budget."""


@dataclass(frozen=True)
class ResourceParams:
    eps_prec: float = 1e-4
    eps_fail: float = 1e-2
    p_phys: float = 1e-3
    t_cycle: float = 1e-6  # seconds
    n_factory: int = 2
    block: str = "fast"
    runs: int = 2

    def __post_init__(self):
        for name in ("eps_prec", "eps_fail", "p_phys", "t_cycle", "n_factory", "runs"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.block not in BLOCKS:
            raise ValueError(f"block must be one of {BLOCKS}")

    def with_(self, **kw) -> "ResourceParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class ResourceEstimate:
    variant: str
    n: int
    d_code: int
    n_logical: int
    b: int
    n_toffoli: int
    n_phys: float
    runtime_seconds: float

    @property
    def runtime_minutes(self) -> float:
        return self.runtime_seconds / 60

    def as_dict(self) -> dict:
        d = asdict(self)
        d["runtime_minutes"] = self.runtime_minutes
        return d


def logical_error_rate(p_phys: float, d: int) -> float:
    if d < 3:
        raise ValueError("d must be >= 3")
    return 0.1 * (100 * p_phys) ** math.ceil(d / 2)


def fast_block(n_logical: int) -> tuple[int, int]:
    """(b, k) minimizing (2k+1)(ceil(n/k)+1); ties go to the smaller k."""
    best = None
    for k in range(1, n_logical + 1):
        b = (2 * k + 1) * (-(-n_logical // k) + 1)
        if best is None or b < best[0]:
            best = (b, k)
    return best


def block_size(block: str, n_logical: int) -> tuple[int, int]:
    """(b, c_consume in units of d_code)."""
    if n_logical < 1:
        raise ValueError("n_logical must be >= 1")
    if block == "compact":
        return -(-(n_logical + 2) // 2) * 3, 9
    if block == "fast":
        return fast_block(n_logical)[0], 1
    raise ValueError(f"block must be one of {BLOCKS}")


def phase_bits(eps_prec: float) -> int:
    return max(1, math.ceil(math.log2(1 / eps_prec) - 1e-12))


def algorithm_footprint(variant: str, n: int, eps_prec: float = 1e-4) -> tuple[int, int]:
    """(logical qubits, Toffolis) of the phase estimation over 2^t - 1 controlled walks."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    t = phase_bits(eps_prec)
    return walk_qubits(variant, n) + t, controlled_walk_toffolis(variant, n) * (2 ** t - 1)


def cycles_per_toffoli(params: ResourceParams, d: int) -> float:
    _, c = block_size(params.block, 1)
    return max(c * d, FACTORY_CYCLES / params.n_factory)


def failure_bound(params: ResourceParams, d: int, n_logical: int, n_toffoli: int) -> float:
    b, _ = block_size(params.block, n_logical)
    return logical_error_rate(params.p_phys, d) * b * cycles_per_toffoli(params, d) * n_toffoli


def choose_code_distance(params: ResourceParams, n_logical: int, n_toffoli: int) -> int:
    for d in range(3, MAX_DISTANCE + 1, 2):
        if failure_bound(params, d, n_logical, n_toffoli) < params.eps_fail:
            return d
    raise DistanceError(f"no odd d <= {MAX_DISTANCE} meets eps_fail={params.eps_fail}")


def estimate(params: ResourceParams, variant: str, n: int) -> ResourceEstimate:
    n_logical, n_toff = algorithm_footprint(variant, n, params.eps_prec)
    d = choose_code_distance(params, n_logical, n_toff)
    b, _ = block_size(params.block, n_logical)
    n_phys = b * 2 * d ** 2 + FACTORY_QUBITS * params.n_factory
    runtime = cycles_per_toffoli(params, d) * n_toff * params.t_cycle * params.runs
    return ResourceEstimate(variant, n, d, n_logical, b, n_toff, n_phys, runtime)


def rotation_t_estimate(eps_prec: float = 1e-4) -> float:
    """Side estimate of T gates for the rotations (not folded into totals)."""
    L = math.log2(1 / eps_prec)
    return 3 * L * (4 / eps_prec + 0.5 * L ** 2)


# Published rows: (variant, n) -> (d_code, b, n_phys, n_toffoli, runtime minutes)
PUBLISHED = {
    ("example1", 32): (23, 330, 4.5e5, 0.6e7, 6),
    ("example1", 64): (25, 594, 8.4e5, 1.2e7, 12),
    ("example1", 128): (25, 1128, 15.1e5, 2.3e7, 24),
    ("example2", 32): (25, 336, 5.2e5, 2.3e7, 23),
    ("example2", 64): (25, 608, 8.6e5, 4.5e7, 45),
    ("example2", 128): (27, 1134, 17.5e5, 8.9e7, 90),
    ("speedrun", 32): (23, 198, 3.1e5, 2.5e6, 3),
    ("speedrun", 64): (23, 336, 4.6e5, 4.6e6, 5),
    ("speedrun", 128): (25, 608, 8.6e5, 8.8e7, 9),  # printed Toffoli value; the closed form gives 8.8e6
}


def table_rows(variant: str, ns=(32, 64, 128), params: ResourceParams | None = None):
    params = params or ResourceParams()
    return [estimate(params, variant, n) for n in ns]


def format_table(rows, fmt: str = "md") -> str:
    head = ["variant", "N", "d_code", "logical", "physical", "toffoli", "runtime_min"]
    lines = []
    if fmt == "csv":
        lines.append(",".join(head))
        for r in rows:
            lines.append(f"{r.variant},2^{r.n},{r.d_code},{r.b},{r.n_phys:.6g},{r.n_toffoli},"
                         f"{r.runtime_minutes:.4f}")
    elif fmt == "md":
        lines.append("| " + " | ".join(head) + " |")
        lines.append("|" + "---|" * len(head))
        for r in rows:
            lines.append(f"| {r.variant} | 2^{r.n} | {r.d_code} | {r.b} | {r.n_phys:.2e} | "
                         f"{r.n_toffoli:.2e} | {r.runtime_minutes:.1f} |")
    else:
        raise ValueError("fmt must be csv or md")
    return "\n".join(lines) + "\n"
