import math

import pytest
from hypothesis import given, strategies as st

from qmodal.encoding import controlled_walk_toffolis
from qmodal.resources import (PUBLISHED, DistanceError, ResourceParams, algorithm_footprint, block_size,
                              choose_code_distance, estimate, failure_bound, fast_block, format_table,
                              logical_error_rate, phase_bits, rotation_t_estimate, table_rows)

DEFAULT = ResourceParams()
ROWS = sorted(PUBLISHED)


def test_logical_error_rate():
    assert logical_error_rate(1e-3, 23) == pytest.approx(1e-13, rel=1e-12)
    assert logical_error_rate(1e-3, 3) == pytest.approx(1e-3, rel=1e-12)
    rates = [logical_error_rate(1e-3, d) for d in range(3, 40, 2)]
    assert all(b < a for a, b in zip(rates, rates[1:]))
    with pytest.raises(ValueError):
        logical_error_rate(1e-3, 1)


def test_block_sizes():
    assert block_size("compact", 148) == (225, 9)
    assert fast_block(148) == (336, 10)
    assert fast_block(1) == (6, 1)
    with pytest.raises(ValueError):
        block_size("huge", 10)


@given(st.integers(1, 400))
def test_fast_block_is_minimal(nl):
    b, k = fast_block(nl)
    assert b == min((2 * j + 1) * (math.ceil(nl / j) + 1) for j in range(1, nl + 1))
    assert b == (2 * k + 1) * (math.ceil(nl / k) + 1)


@pytest.mark.parametrize("variant,n,toff", [("example1", 32, 354 * 16383), ("example2", 32, 1374 * 16383),
                                            ("speedrun", 32, 152 * 16383)])
def test_footprint_examples(variant, n, toff):
    assert algorithm_footprint(variant, n)[1] == toff
    assert phase_bits(1e-4) == 14


@pytest.mark.parametrize("key", ROWS, ids=lambda k: f"{k[0]}-{k[1]}")
def test_distance_matches_table(key):
    assert estimate(DEFAULT, *key).d_code == PUBLISHED[key][0]


@pytest.mark.parametrize("key", ROWS, ids=lambda k: f"{k[0]}-{k[1]}")
def test_distance_is_minimal(key):
    nl, nt = algorithm_footprint(*key)
    d = choose_code_distance(DEFAULT, nl, nt)
    assert failure_bound(DEFAULT, d, nl, nt) < DEFAULT.eps_fail
    assert failure_bound(DEFAULT, d - 2, nl, nt) >= DEFAULT.eps_fail


@pytest.mark.parametrize("key", ROWS, ids=lambda k: f"{k[0]}-{k[1]}")
def test_physical_qubits_within_5pct(key):
    assert estimate(DEFAULT, *key).n_phys == pytest.approx(PUBLISHED[key][2], rel=0.05)


@pytest.mark.parametrize("key", [k for k in ROWS if k != ("speedrun", 128)], ids=lambda k: f"{k[0]}-{k[1]}")
def test_toffolis_match_published(key):
    # exact closed form; the table prints one or two significant digits
    variant, n = key
    got = estimate(DEFAULT, variant, n).n_toffoli
    assert got == controlled_walk_toffolis(variant, n) * (2 ** 14 - 1)
    assert got == pytest.approx(PUBLISHED[key][3], rel=0.05)


def test_speedrun_128_toffoli_misprint():
    got = estimate(DEFAULT, "speedrun", 128).n_toffoli
    assert got == 536 * 16383
    assert got / PUBLISHED[("speedrun", 128)][3] == pytest.approx(0.1, rel=0.01)


def test_logical_block_delta_flagged():
    # fast-block scan gives 323 for 144 logical qubits where the table prints 330
    r = estimate(DEFAULT, "example1", 32)
    assert r.n_logical == 144 and r.b == 323
    assert r.b != PUBLISHED[("example1", 32)][1]
    assert r.b == pytest.approx(PUBLISHED[("example1", 32)][1], rel=0.05)


@pytest.mark.parametrize("key", ROWS, ids=lambda k: f"{k[0]}-{k[1]}")
def test_logical_block_close(key):
    assert estimate(DEFAULT, *key).b == pytest.approx(PUBLISHED[key][1], rel=0.05)


RUNTIME_OK = [k for k in ROWS if k != ("speedrun", 32)]


@pytest.mark.parametrize("key", RUNTIME_OK, ids=lambda k: f"{k[0]}-{k[1]}")
def test_runtime_within_10pct(key):
    assert estimate(DEFAULT, *key).runtime_minutes == pytest.approx(PUBLISHED[key][4], rel=0.10)


@pytest.mark.xfail(strict=True, reason="30 cycles x 2.49e6 Toffolis x 2 runs = 2.49 min; the table prints ~3")
def test_runtime_speedrun_32():
    assert estimate(DEFAULT, "speedrun", 32).runtime_minutes == pytest.approx(3, rel=0.10)


def test_runtime_formula():
    r = estimate(DEFAULT, "speedrun", 32)
    assert r.runtime_seconds == pytest.approx(30 * 152 * 16383 * 1e-6 * 2)
    r = estimate(DEFAULT.with_(n_factory=1), "speedrun", 32)
    assert r.runtime_seconds == pytest.approx(60 * 152 * 16383 * 1e-6 * 2)


@pytest.mark.parametrize("variant", ["example1", "example2", "speedrun"])
def test_monotone_in_n(variant):
    rows = table_rows(variant, ns=(8, 16, 32, 64, 128, 256))
    assert all(b.runtime_seconds >= a.runtime_seconds for a, b in zip(rows, rows[1:]))
    assert all(b.n_phys >= a.n_phys for a, b in zip(rows, rows[1:]))


def test_compact_block_slower():
    fast = estimate(DEFAULT, "example1", 32)
    compact = estimate(DEFAULT.with_(block="compact"), "example1", 32)
    assert compact.b < fast.b and compact.runtime_seconds > fast.runtime_seconds


def test_params_validation():
    with pytest.raises(ValueError):
        ResourceParams(p_phys=0)
    with pytest.raises(ValueError):
        ResourceParams(block="other")
    with pytest.raises(DistanceError):
        estimate(ResourceParams(p_phys=0.01), "example1", 32)


def test_rotation_side_estimate():
    assert rotation_t_estimate(1e-4) == pytest.approx(1.598e6, rel=1e-3)


def test_format_table():
    rows = table_rows("example1")
    csv = format_table(rows, "csv").splitlines()
    assert csv[0] == "variant,N,d_code,logical,physical,toffoli,runtime_min"
    assert csv[1].startswith("example1,2^32,23,323,")
    assert format_table(rows, "md").count("\n") == 5
    with pytest.raises(ValueError):
        format_table(rows, "xml")
