"""Configurations and fixed-(N_alpha, N_beta) sector bases.

Spin-orbitals are interleaved: spin-orbital ``2*p`` is spatial orbital ``p``
with spin alpha, ``2*p + 1`` the same orbital with spin beta.  A configuration
is stored as an integer bitmask with bit ``i`` set when spin-orbital ``i`` is
occupied (qubit |1>, spin value s=+1).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np


def alpha_mask(n_orb: int) -> int:
    return sum(1 << (2 * p) for p in range(n_orb))


def beta_mask(n_orb: int) -> int:
    return alpha_mask(n_orb) << 1


def to_spins(state: int, n_qubits: int) -> np.ndarray:
    """Bitmask -> array of spin values in {-1, +1} (+1 = occupied)."""
    bits = (int(state) >> np.arange(n_qubits)) & 1
    return (2 * bits - 1).astype(np.int8)


def from_spins(spins) -> int:
    spins = np.asarray(spins)
    if not np.all(np.abs(spins) == 1):
        raise ValueError("spin values must be +1 or -1")
    return int(sum(1 << i for i, s in enumerate(spins) if s > 0))


def to_bitstring(state: int, n_qubits: int) -> str:
    """Occupation string with spin-orbital 0 first."""
    return "".join(str((int(state) >> i) & 1) for i in range(n_qubits))


def spin_flip(state: int, n_orb: int | None = None) -> int:
    """Exchange alpha and beta occupations on every spatial orbital."""
    state = int(state)
    if n_orb is None:
        n_orb = max(1, (state.bit_length() + 1) // 2)
    a = state & alpha_mask(n_orb)
    b = state & beta_mask(n_orb)
    return (a << 1) | (b >> 1)


def hamming(s_i: int, s_j: int, n_qubits: int | None = None) -> int:
    if n_qubits is not None and (int(s_i) >> n_qubits or int(s_j) >> n_qubits):
        raise ValueError("configuration longer than n_qubits")
    return (int(s_i) ^ int(s_j)).bit_count()


def hamming_spins(s_i, s_j) -> int:
    """Hamming distance between two +-1 spin sequences."""
    s_i, s_j = np.asarray(s_i), np.asarray(s_j)
    if s_i.shape != s_j.shape:
        raise ValueError(f"length mismatch: {s_i.shape} vs {s_j.shape}")
    return int(np.count_nonzero(s_i != s_j))


def counts(state: int, n_orb: int) -> tuple[int, int]:
    state = int(state)
    return (state & alpha_mask(n_orb)).bit_count(), (state & beta_mask(n_orb)).bit_count()


@dataclass(frozen=True)
class SectorBasis:
    """All configurations with fixed alpha and beta electron counts.

    States are sorted by their integer encoding, so ``states[index(s)] == s``.
    """

    n_orb: int
    n_alpha: int
    n_beta: int
    states: np.ndarray = field(repr=False, compare=False)

    @classmethod
    def build(cls, n_orb: int, n_alpha: int, n_beta: int) -> "SectorBasis":
        if n_orb < 1:
            raise ValueError("need at least one orbital")
        if not (0 <= n_alpha <= n_orb and 0 <= n_beta <= n_orb):
            raise ValueError(f"sector ({n_alpha}, {n_beta}) impossible with {n_orb} orbitals")
        if 2 * n_orb > 62:
            raise ValueError("at most 31 orbitals fit in the 64-bit encoding")
        alphas = [sum(1 << (2 * p) for p in occ) for occ in combinations(range(n_orb), n_alpha)]
        betas = [sum(1 << (2 * p + 1) for p in occ) for occ in combinations(range(n_orb), n_beta)]
        states = np.array(sorted(a | b for a in alphas for b in betas), dtype=np.int64)
        if states.size == 0:
            raise ValueError("empty sector")
        states.setflags(write=False)
        return cls(n_orb, n_alpha, n_beta, states)

    @property
    def n_qubits(self) -> int:
        return 2 * self.n_orb

    @property
    def size(self) -> int:
        return int(self.states.size)

    def __len__(self) -> int:
        return self.size

    def index(self, state: int) -> int:
        i = int(np.searchsorted(self.states, state))
        if i >= self.size or self.states[i] != state:
            raise KeyError(f"configuration {to_bitstring(state, self.n_qubits)} not in sector")
        return i

    def indices(self, states) -> np.ndarray:
        states = np.asarray(states, dtype=np.int64)
        idx = np.searchsorted(self.states, states)
        idx = np.minimum(idx, self.size - 1)
        if not np.all(self.states[idx] == states):
            raise KeyError("configuration outside the sector")
        return idx

    def contains(self, state: int) -> bool:
        i = int(np.searchsorted(self.states, state))
        return i < self.size and self.states[i] == state

    def spins(self) -> np.ndarray:
        """(size, n_qubits) array of +-1 spin values."""
        bits = (self.states[:, None] >> np.arange(self.n_qubits)) & 1
        return (2 * bits - 1).astype(np.float64)

    def occupations(self) -> np.ndarray:
        return ((self.states[:, None] >> np.arange(self.n_qubits)) & 1).astype(np.int8)

    def spin_flip_permutation(self) -> np.ndarray:
        """perm[i] = index of spin_flip(states[i]); only for n_alpha == n_beta."""
        if self.n_alpha != self.n_beta:
            raise ValueError("spin flip leaves the sector unless n_alpha == n_beta")
        a = self.states & alpha_mask(self.n_orb)
        b = self.states & beta_mask(self.n_orb)
        return self.indices((a << 1) | (b >> 1))

    def hamming_matrix(self) -> np.ndarray:
        x = self.states[:, None] ^ self.states[None, :]
        return np.bitwise_count(x.astype(np.uint64)).astype(np.int64)
