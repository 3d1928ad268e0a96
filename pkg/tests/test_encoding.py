import math

import numpy as np
import pytest

from qmodal.circuit import Qubit, gate_counts
from qmodal.encoding import (VARIANTS, build_block_encoding, build_controlled_walk, build_walk,
                             controlled_walk_toffolis, default_system, extract_block, walk_qubits)
from qmodal.qpe import folded_walk_spectrum, walk_eigenphases
from qmodal.reference import alternating_ring, eig, shifted_scaled, uniform_ring
from qmodal.simulator import Statevector, _run, apply, basis_index

CASES = [(v, n) for v in VARIANTS for n in (1, 2, 3)] + [("example1", 4)]


def _be(variant, n, **kw):
    return build_block_encoding(default_system(variant, n, **kw), variant)


@pytest.mark.parametrize("variant,n", CASES)
def test_block_matches_reference(variant, n):
    be = _be(variant, n)
    H = shifted_scaled(be.system)[0]
    assert np.max(np.abs(be.alpha * extract_block(be) - H)) < 1e-10


def test_example1_block_is_half_adjacency():
    be = _be("example1", 2)
    A = np.array([[0, 1, 0, 1], [1, 0, 1, 0], [0, 1, 0, 1], [1, 0, 1, 0]])
    assert be.alpha == 2
    assert np.allclose(extract_block(be), A / 2, atol=1e-12)


@pytest.mark.parametrize("k1", [0.25, 0.5, 0.75])
def test_speedrun_block_equals_example2(k1):
    sys = alternating_ring(2, k1, 1.0)
    b2 = build_block_encoding(sys, "example2")
    bs = build_block_encoding(sys, "speedrun")
    assert bs.alpha == b2.alpha == 2
    assert np.allclose(extract_block(bs), extract_block(b2), atol=1e-10)


def test_speedrun_equal_springs_is_uniform_ring():
    bs = build_block_encoding(alternating_ring(2, 1.0, 1.0), "speedrun")
    b1 = build_block_encoding(uniform_ring(2), "example1")
    assert np.allclose(extract_block(bs), extract_block(b1), atol=1e-10)


@pytest.mark.parametrize("variant", ["example1", "example2"])
def test_u1_amplitudes(variant):
    be = _be(variant, 2)
    H = shifted_scaled(be.system)[0]
    top = H.max()
    u1 = be.u1
    zero_anc = {q.register: 0 for q in be.ancilla_qubits if q.register != "a_s"}
    for x in range(4):
        st = apply(u1, Statevector.basis(u1, {"s": x}))
        for y in range(4):
            amp = st.amplitudes[basis_index(u1, {"s": x, "a_s": y, **zero_anc})]
            assert amp == pytest.approx(math.sqrt(H[y, x] / top / 2), abs=1e-12)


def test_u2_differs_only_at_the_end():
    be = _be("example2", 2)
    g1, g2 = be.u1.gates, be.u2.gates
    assert len(g2) >= len(g1)
    assert any(g.kind == "SWAP" for g in g2[len(g1) // 2:])


def test_variant_mismatch():
    with pytest.raises(ValueError):
        build_block_encoding(alternating_ring(2, 0.5, 1.0), "example1")
    with pytest.raises(ValueError):
        build_block_encoding(uniform_ring(2), "nope")


@pytest.mark.parametrize("variant,n", [(v, n) for v in VARIANTS for n in (1, 2, 3)])
def test_walk_spectrum(variant, n):
    w = build_walk(_be(variant, n))
    want = eig(shifted_scaled(w.encoding.system)[0] / w.encoding.alpha)[0]
    got = folded_walk_spectrum(w)
    assert got.shape == want.shape
    assert np.allclose(got, want, atol=1e-8)


def test_walk_phases_pair_up():
    w = build_walk(_be("example1", 2))
    th, leak = walk_eigenphases(w)
    assert leak < 1e-9
    # +/- pairs around 0; arccos of {1, 0, 0, -1}
    assert sorted(np.round(np.abs(th), 9)) == sorted(np.round([0, np.pi / 2, np.pi / 2, np.pi / 2, np.pi / 2, np.pi], 9))


def test_walk_on_top_mode_is_stationary():
    w = build_walk(_be("example1", 2))
    c = w.circuit
    psi = np.zeros(2 ** c.num_qubits, dtype=complex)
    lay = c.layout()
    for x in range(4):
        idx = (1 << lay[w.sign_qubit])
        for k in range(2):
            idx |= ((x >> k) & 1) << lay[Qubit("s", k)]
        psi[idx] += 0.5 / math.sqrt(2)
        psi[idx | (1 << lay[w.flip_qubit])] += 0.5 / math.sqrt(2)
    out = _run(c.gates, lay, c.num_qubits, _run(c.gates, lay, c.num_qubits, psi.copy()))
    assert np.allclose(out, psi, atol=1e-10)


@pytest.mark.parametrize("variant", VARIANTS)
@pytest.mark.parametrize("n", [1, 2])
def test_controlled_walk_semantics(variant, n, rng):
    w = build_walk(_be(variant, n))
    ctrl = Qubit("phase", 0)
    c = build_controlled_walk(w, ctrl)
    lay, q = c.layout(), c.num_qubits
    psi = rng.normal(size=(2 ** q, 3)) + 1j * rng.normal(size=(2 ** q, 3))
    out = _run(c.gates, lay, q, psi.copy())
    idx = np.arange(2 ** q)
    on = ((idx >> lay[ctrl]) & 1) == 1
    wl = w.circuit.layout()
    sub = np.zeros(2 ** q, dtype=np.int64)
    for qb, p in wl.items():
        sub |= ((idx >> lay[qb]) & 1) << p
    want = psi.copy()
    blk = np.zeros((2 ** (q - 1), 3), complex)
    blk[sub[on]] = psi[on]
    want[on] = _run(w.circuit.gates, wl, q - 1, blk)[sub[on]]
    assert np.max(np.abs(out - want)) < 1e-10


@pytest.mark.parametrize("variant", VARIANTS)
@pytest.mark.parametrize("n", range(2, 9))
def test_controlled_walk_toffolis(variant, n):
    w = build_walk(_be(variant, n))
    assert gate_counts(build_controlled_walk(w)).toffoli == controlled_walk_toffolis(variant, n)


@pytest.mark.parametrize("variant,n,want", [("example1", 4, 46), ("example2", 4, 198), ("speedrun", 4, 40)])
def test_controlled_walk_examples(variant, n, want):
    assert controlled_walk_toffolis(variant, n) == want


@pytest.mark.parametrize("variant", VARIANTS)
@pytest.mark.parametrize("n", range(2, 9))
def test_walk_width(variant, n):
    w = build_walk(_be(variant, n))
    assert w.circuit.num_qubits == walk_qubits(variant, n)
    assert walk_qubits(variant, n) == {"example1": 4 * n + 2, "example2": 4 * n + 6,
                                       "speedrun": 2 * n + 6}[variant]
