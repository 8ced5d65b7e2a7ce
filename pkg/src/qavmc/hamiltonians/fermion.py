"""Fermionic ladder-operator algebra on packed configurations.

Jordan-Wigner ordering: ``a_k`` acting on a configuration picks up the sign
(-1)**(number of occupied spin-orbitals with index < k).
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .basis import SectorBasis


def _popcount(x: np.ndarray) -> np.ndarray:
    return np.bitwise_count(x.astype(np.uint64)).astype(np.int64)


def hop(states: np.ndarray, p: int, q: int):
    """Apply a^dagger_p a_q to every configuration in ``states``.

    Returns ``(ok, new_states, signs)``; entries where ``ok`` is False are
    annihilated by the operator.
    """
    states = np.asarray(states, dtype=np.int64)
    occ_q = ((states >> q) & 1).astype(bool)
    if p == q:
        return occ_q, states.copy(), np.ones(states.shape, dtype=np.int64)
    mid = states & ~np.int64(1 << q)
    ok = occ_q & (((mid >> p) & 1) == 0)
    parity = _popcount(states & np.int64((1 << q) - 1)) + _popcount(mid & np.int64((1 << p) - 1))
    signs = 1 - 2 * (parity & 1)
    return ok, mid | np.int64(1 << p), signs


def excitation_matrix(basis: SectorBasis, p: int, q: int) -> sp.csr_matrix:
    """Sector matrix of a^dagger_p a_q; p and q must have the same spin."""
    if (p - q) % 2:
        raise ValueError("a^dagger_p a_q with different spins leaves the sector")
    ok, new, signs = hop(basis.states, p, q)
    cols = np.nonzero(ok)[0]
    rows = basis.indices(new[cols])
    n = basis.size
    return sp.csr_matrix((signs[cols].astype(np.float64), (rows, cols)), shape=(n, n))


def spatial_excitation(basis: SectorBasis, p: int, q: int) -> sp.csr_matrix:
    """Spin-summed E_pq = sum_sigma a^dagger_{p sigma} a_{q sigma}."""
    return excitation_matrix(basis, 2 * p, 2 * q) + excitation_matrix(basis, 2 * p + 1, 2 * q + 1)


def number_counts(basis: SectorBasis) -> np.ndarray:
    """(size, n_qubits) occupation numbers."""
    return basis.occupations().astype(np.float64)
