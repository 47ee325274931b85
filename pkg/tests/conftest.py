import numpy as np
import pytest

from hsqd import LatticeHamiltonian, map_to_electronic


@pytest.fixture
def dimer_lattice():
    """Two-site repulsive dimer: t = -1, U = 4, V = 0."""
    return LatticeHamiltonian(2, [[0.0, -1.0], [-1.0, 0.0]], [4.0, 4.0], np.zeros((2, 2)))


@pytest.fixture
def dimer_ints(dimer_lattice):
    return map_to_electronic(dimer_lattice)


def make_chain(m, t=-1.0, u=4.0, v=0.0):
    hop = np.zeros((m, m))
    vin = np.zeros((m, m))
    for i in range(m - 1):
        hop[i, i + 1] = hop[i + 1, i] = t
        vin[i, i + 1] = vin[i + 1, i] = v
    return LatticeHamiltonian(m, hop, [u] * m, vin)


def random_lattice(rng, m=None, complex_hopping=False):
    if m is None:
        m = int(rng.integers(2, 7))
    if complex_hopping:
        t = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
        t = (t + t.conj().T) / 2
    else:
        t = rng.normal(size=(m, m))
        t = (t + t.T) / 2
    u = rng.uniform(0.0, 4.0, size=m)
    v = rng.normal(size=(m, m)) * 0.5
    v = (v + v.T) / 2
    np.fill_diagonal(v, 0.0)
    return LatticeHamiltonian(m, t, u, v)


DIMER_E = {
    (1, 0): -1.0,
    (0, 1): -1.0,
    (1, 1): 2.0 - 2.0 * np.sqrt(2.0),  # (U - sqrt(U^2 + 16 t^2)) / 2
    (2, 1): 3.0,  # U - |t|
}
