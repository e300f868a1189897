"""Random-state generators shared by the test modules."""

import numpy as np


def ginibre_dm(rng, dim):
    """Random full-rank density matrix from a complex Ginibre matrix."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = g @ g.conj().T
    return m / np.trace(m).real


def haar_unitary(rng, dim):
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_pure(rng, dim):
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)


def bell_state():
    psi = np.zeros(4, dtype=complex)
    psi[[0, 3]] = 1.0 / np.sqrt(2.0)
    return psi


def w_state():
    psi = np.zeros(8, dtype=complex)
    psi[[1, 2, 4]] = 1.0 / np.sqrt(3.0)
    return psi


def ghz_state():
    psi = np.zeros(8, dtype=complex)
    psi[[0, 7]] = 1.0 / np.sqrt(2.0)
    return psi


def random_biseparable_3q(rng, n_terms=4):
    """Mixture of states product across randomly chosen bipartitions of 3 qubits.

    The two-qubit factor may be entangled inside its block, so the mixture is
    generically biseparable but not separable.
    """
    from icoent.qstate import reorder_sites

    weights = rng.dirichlet(np.ones(n_terms))
    out = np.zeros((8, 8), dtype=complex)
    for w in weights:
        single_site = int(rng.integers(1, 4))
        pair_sites = tuple(s for s in (1, 2, 3) if s != single_site)
        block_single = ginibre_dm(rng, 2)
        block_pair = ginibre_dm(rng, 4)
        term = np.kron(block_single, block_pair)
        out += w * reorder_sites(term, (single_site,) + pair_sites)
    return out
