import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def basis_outputs(c, inputs):
    """Run basis inputs (dicts of register values) in one batch; returns output dicts.

    Fails if any input does not map to a single basis state.
    """
    from qmodal.circuit import Qubit
    from qmodal.simulator import _run, basis_index, register_values

    q = c.num_qubits
    cols = [basis_index(c, v) for v in inputs]
    psi = np.zeros((2 ** q, len(cols)), dtype=complex)
    psi[cols, np.arange(len(cols))] = 1
    out = _run(c.gates, c.layout(), q, psi)
    assert np.allclose(np.max(np.abs(out), axis=0), 1, atol=1e-10), "not a basis permutation"
    return [register_values(c, int(i)) for i in np.argmax(np.abs(out), axis=0)]
