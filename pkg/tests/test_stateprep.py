import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qmodal.reference import alternating_ring, eig, encoded_block, uniform_ring
from qmodal.simulator import apply
from qmodal.stateprep import (CoarseState, build_prep_circuit, coarse_eigenvector, coarse_system,
                              exact_mode, expand, fundamental_index, infidelity, infidelity_sweep,
                              overlap_squared, prep_angles, state_circuit)

RING = uniform_ring(3)


def cosine_oracle(n, m):
    """Infidelity of the expanded cos(2 pi X / 2^m) profile against span{cos, sin} of the fine ring."""
    M, N = 2 ** m, 2 ** n
    X = np.arange(M)
    c = np.cos(2 * np.pi * X / M) if M > 2 else np.array([1.0, -1.0])
    c /= np.linalg.norm(c)
    psi = np.repeat(c, N // M) / math.sqrt(N // M)
    x = np.arange(N)
    B = np.stack([np.cos(2 * np.pi * x / N), np.sin(2 * np.pi * x / N)], 1) if N > 2 else np.array([[1.0, -1.0]]).T
    Q, _ = np.linalg.qr(B)
    return 1 - float(np.sum((Q.T @ psi) ** 2))


@pytest.mark.parametrize("n", range(1, 11))
def test_infidelity_matches_cosine_oracle(n):
    for m in range(1, n + 1):
        assert infidelity(RING, n, m) == pytest.approx(cosine_oracle(n, m), abs=1e-12)


# frozen values of the fundamental-mode curve (uniform ring)
FROZEN = {
    (3, 2): (2 - math.sqrt(2)) / 4,
    (4, 3): 0.038060233744,
    (6, 3): 0.049595685974,
    (10, 3): 0.050355816979,
    (10, 4): 0.012782071878,
    (10, 5): 0.003205508553,
}


@pytest.mark.parametrize("nm", sorted(FROZEN))
def test_infidelity_frozen(nm):
    assert infidelity(RING, *nm) == pytest.approx(FROZEN[nm], abs=1e-11)


@pytest.mark.parametrize("n", range(3, 11))
def test_m3_threshold_and_monotone(n):
    vals = [infidelity(RING, n, m) for m in range(1, n + 1)]
    assert vals[2] <= 0.12
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(0, abs=1e-12)


def test_sweep_rows():
    rows = infidelity_sweep(RING, [3, 4], modes=("fundamental", 0))
    assert len(rows) == 2 * (3 + 4)
    assert all(r[3] == pytest.approx(0, abs=1e-12) for r in rows if r[2] == 0)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_top_mode_is_uniform(m):
    cs = coarse_eigenvector(RING, m, 0)
    assert np.allclose(cs.amplitudes, 2 ** (-m / 2))


def test_fundamental_skips_zero_mode():
    sys = uniform_ring(4)
    k = fundamental_index(sys)
    w, v, basis = exact_mode(sys, "fundamental")
    assert k == 1
    assert w == pytest.approx(math.cos(2 * math.pi / 16) * 2, abs=1e-12)
    assert basis.shape == (16, 2)
    x = np.arange(16)
    assert overlap_squared(np.cos(2 * np.pi * x / 16) / math.sqrt(8), basis) == pytest.approx(1)


def test_coarse_4ring_spectrum():
    w, _ = eig(encoded_block(uniform_ring(2)))
    assert np.allclose(w, [1, 0, 0, -1], atol=1e-12)


def test_coarse_system_of_alternating():
    cs = coarse_system(alternating_ring(4, 0.5, 1.0), 2)
    assert cs == uniform_ring(2, 0.75)


def test_mode_out_of_range():
    with pytest.raises(ValueError):
        coarse_eigenvector(RING, 2, 4)
    with pytest.raises(ValueError):
        coarse_eigenvector(RING, 0)


def test_expand_examples():
    cs = CoarseState(2, np.array([0.1, 0.3, 0.5, math.sqrt(1 - 0.35)]))
    sv = expand(cs, 4)
    assert np.allclose(sv.amplitudes[:4], 0.05)
    assert np.allclose(sv.amplitudes.reshape(4, 4), cs.amplitudes[:, None] / 2)
    assert np.allclose(expand(cs, 2).amplitudes, cs.amplitudes)
    with pytest.raises(ValueError):
        expand(cs, 1)


def test_coarse_state_validation():
    with pytest.raises(ValueError):
        CoarseState(2, np.ones(4))
    with pytest.raises(ValueError):
        CoarseState(2, np.ones(3) / math.sqrt(3))


def test_angles_examples():
    uni = CoarseState(2, np.full(4, 0.5))
    assert np.allclose(prep_angles(uni), math.pi / 2)
    assert prep_angles(CoarseState(2, np.array([1.0, 0, 0, 0])))[0] == 0
    a = CoarseState(2, np.sqrt([0.4, 0.3, 0.2, 0.1]))
    want = [2 * math.acos(math.sqrt(0.7)), 2 * math.acos(math.sqrt(4 / 7)), 2 * math.acos(math.sqrt(2 / 3))]
    assert np.allclose(prep_angles(a), want, atol=1e-14)


def test_zero_subtree_angle():
    assert prep_angles(CoarseState(2, np.array([1.0, 0, 0, 0])))[2] == 0.0


def test_m1_plus_state():
    c = build_prep_circuit([math.pi / 2], 1)
    assert np.allclose(apply(c).amplitudes, [1 / math.sqrt(2)] * 2)


def test_prep_angle_count_checked():
    with pytest.raises(ValueError):
        build_prep_circuit([0.1, 0.2], 2)


@given(st.lists(st.floats(0, 1), min_size=8, max_size=8).filter(lambda v: sum(v) > 1e-3))
def test_prep_nonnegative_amplitudes(v):
    a = np.sqrt(np.array(v) / sum(v))
    cs = CoarseState(3, a / np.linalg.norm(a))
    out = apply(build_prep_circuit(prep_angles(cs), 3)).amplitudes
    assert np.allclose(out, cs.amplitudes, atol=1e-10)


@given(st.lists(st.floats(-1, 1), min_size=8, max_size=8).filter(lambda v: np.linalg.norm(v) > 1e-2))
def test_prep_signed_amplitudes(v):
    a = np.array(v) / np.linalg.norm(v)
    cs = CoarseState(3, a)
    out = apply(state_circuit(cs, 3)).amplitudes
    assert np.allclose(out, a, atol=1e-10)


@pytest.mark.parametrize("n", [3, 5])
def test_circuit_equals_expansion(n):
    cs = coarse_eigenvector(RING, 3)
    out = apply(state_circuit(cs, n)).amplitudes
    assert np.allclose(out, expand(cs, n).amplitudes, atol=1e-10)
    assert abs(np.vdot(out, out) - 1) < 1e-12


def test_fidelity_m3_fundamental():
    cs = coarse_eigenvector(RING, 3)
    out = apply(state_circuit(cs, 3)).amplitudes
    assert abs(np.vdot(cs.amplitudes, out)) ** 2 > 1 - 1e-10
