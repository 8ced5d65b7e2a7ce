"""Proposal kernels Q(S_i, .) for Metropolis-Hastings inside a particle-number sector.

Every kernel works on basis indices and offers three things: ``row(i)`` (the
full proposal distribution), ``matrix()`` (all rows stacked) and
``sample(i, rng)`` (one proposed move).  All kernels here are symmetric,
Q = Q^T, so the acceptance reduces to min(1, pi_j / pi_i).
"""
from __future__ import annotations

import logging
from math import comb

import numpy as np

from .hamiltonians import SectorBasis, alpha_mask, hamming
from .spectral import Spectrum, transition_probabilities

log = logging.getLogger(__name__)

CLASSICAL_KINDS = ("Uniform", "Exchange", "ExcitationSD", "ExcitationSDFlip")
QUANTUM_KINDS = ("Quantum", "Effective", "QuantumAveraged")
KINDS = CLASSICAL_KINDS + QUANTUM_KINDS

__all__ = [
    "CLASSICAL_KINDS", "QUANTUM_KINDS", "KINDS", "ProposalKernel", "UniformKernel", "ExchangeKernel",
    "ExcitationSDKernel", "ExcitationSDFlipKernel", "QuantumKernel", "EffectiveKernel",
    "QuantumAveragedKernel", "classical_kernel", "classical_row", "classical_sample", "quantum_row",
    "effective_row", "effective_matrix", "averaged_quantum_row", "hamming",
]


def _draw(weights: np.ndarray, u: float) -> int:
    c = np.cumsum(weights)
    return int(min(np.searchsorted(c, u * c[-1], side="right"), c.size - 1))


class ProposalKernel:
    kind = "abstract"

    def __init__(self, basis: SectorBasis):
        self.basis = basis
        self.exhausted = False  # True when some branch has no valid move and collapses to a self-move

    @property
    def size(self) -> int:
        return self.basis.size

    def row(self, i: int) -> np.ndarray:
        raise NotImplementedError

    def matrix(self) -> np.ndarray:
        return np.array([self.row(i) for i in range(self.size)])

    def sample(self, i: int, rng: np.random.Generator) -> int:
        return _draw(self.row(i), rng.random())

    def row_for(self, state: int) -> np.ndarray:
        return self.row(self.basis.index(state))

    def describe(self) -> dict:
        return {"kind": self.kind}


# ----------------------------------------------------------------------------- classical


class UniformKernel(ProposalKernel):
    """Any other configuration of the sector with equal probability."""

    kind = "Uniform"

    def __init__(self, basis):
        super().__init__(basis)
        self.exhausted = basis.size == 1

    def row(self, i):
        n = self.size
        if n == 1:
            return np.ones(1)
        r = np.full(n, 1.0 / (n - 1))
        r[i] = 0.0
        return r

    def matrix(self):
        n = self.size
        if n == 1:
            return np.ones((1, 1))
        return (np.ones((n, n)) - np.eye(n)) / (n - 1)

    def sample(self, i, rng):
        n = self.size
        if n == 1:
            return i
        j = int(rng.integers(n - 1))
        return j + (j >= i)


class _HammingKernel(ProposalKernel):
    """Kernels whose rows depend only on the Hamming distance to S_i (and spin content)."""

    def __init__(self, basis):
        super().__init__(basis)
        n, na, nb = basis.n_orb, basis.n_alpha, basis.n_beta
        self._amask = alpha_mask(n)
        self.occ = (na, nb)
        self.virt = (n - na, n - nb)

    def _weights(self, dist: np.ndarray, removed_alpha: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _row_from(self, s_i: int, states: np.ndarray) -> np.ndarray:
        x = (states ^ s_i).astype(np.uint64)
        dist = np.bitwise_count(x).astype(np.int64)
        removed = np.int64(s_i) & ~states & np.int64(self._amask)
        removed_alpha = np.bitwise_count(removed.astype(np.uint64)).astype(np.int64)
        return self._weights(dist, removed_alpha)

    def row(self, i):
        r = self._row_from(int(self.basis.states[i]), self.basis.states)
        r[i] = 0.0
        r[i] = max(0.0, 1.0 - r.sum())
        return r

    def matrix(self):
        return np.array([self.row(i) for i in range(self.size)])


class ExchangeKernel(_HammingKernel):
    """Swap the occupations of a random pair of same-spin spin-orbitals."""

    kind = "Exchange"

    def __init__(self, basis):
        super().__init__(basis)
        self.n_pairs = 2 * comb(basis.n_orb, 2)
        self.exhausted = self.n_pairs == 0 or all(o * v == 0 for o, v in zip(self.occ, self.virt))

    def _weights(self, dist, removed_alpha):
        if self.n_pairs == 0:
            return np.zeros(dist.shape)
        return np.where(dist == 2, 1.0 / self.n_pairs, 0.0)

    def sample(self, i, rng):
        n = self.basis.n_orb
        k = int(rng.integers(self.n_pairs)) if self.n_pairs else 0
        if not self.n_pairs:
            return i
        spin, k = divmod(k, comb(n, 2))
        # k-th unordered pair (p < q) in lexicographic order
        p = 0
        while k >= n - 1 - p:
            k -= n - 1 - p
            p += 1
        q = p + 1 + k
        a, b = 2 * p + spin, 2 * q + spin
        s = int(self.basis.states[i])
        if ((s >> a) & 1) == ((s >> b) & 1):
            return i
        return self.basis.index(s ^ (1 << a) ^ (1 << b))


class ExcitationSDKernel(_HammingKernel):
    """Half single excitations, half double excitations, each uniform.

    Singles: uniform over all same-spin (occupied, virtual) pairs.
    Doubles: a uniform unordered pair of occupied spin-orbitals, then a uniform
    unordered pair of virtual spin-orbitals with the same spin content.  The
    move counts are constant over the sector, which makes Q symmetric.
    """

    kind = "ExcitationSD"

    def __init__(self, basis):
        super().__init__(basis)
        (oa, ob), (va, vb) = self.occ, self.virt
        self.n_singles = oa * va + ob * vb
        self.n_occ_pairs = comb(oa + ob, 2)
        # virtual pairs available for an occupied pair with 0, 1, 2 alpha electrons
        self.n_virt_pairs = {0: comb(vb, 2), 1: va * vb, 2: comb(va, 2)}
        self.exhausted = self.n_singles == 0 or self.n_occ_pairs == 0 or any(
            self.n_virt_pairs[k] == 0 for k in self._occ_pair_types())

    def _occ_pair_types(self):
        oa, ob = self.occ
        out = set()
        if ob >= 2:
            out.add(0)
        if oa and ob:
            out.add(1)
        if oa >= 2:
            out.add(2)
        return out

    def _weights(self, dist, removed_alpha):
        w = np.zeros(dist.shape)
        if self.n_singles:
            w[dist == 2] = 0.5 / self.n_singles
        if self.n_occ_pairs:
            nv = np.array([self.n_virt_pairs[k] for k in (0, 1, 2)], dtype=np.float64)
            with np.errstate(divide="ignore"):
                per_type = np.where(nv > 0, 0.5 / (self.n_occ_pairs * nv), 0.0)
            d4 = dist == 4
            w[d4] = per_type[removed_alpha[d4]]
        return w

    def _orbitals(self, s: int):
        n = self.basis.n_orb
        occ = ([2 * p for p in range(n) if (s >> (2 * p)) & 1], [2 * p + 1 for p in range(n) if (s >> (2 * p + 1)) & 1])
        virt = ([2 * p for p in range(n) if not (s >> (2 * p)) & 1], [2 * p + 1 for p in range(n) if not (s >> (2 * p + 1)) & 1])
        return occ, virt

    def sample(self, i, rng):
        s = int(self.basis.states[i])
        (occ_a, occ_b), (virt_a, virt_b) = self._orbitals(s)
        if rng.random() < 0.5:
            if not self.n_singles:
                return i
            k = int(rng.integers(self.n_singles))
            na = len(occ_a) * len(virt_a)
            if k < na:
                o, v = occ_a[k // len(virt_a)], virt_a[k % len(virt_a)]
            else:
                k -= na
                o, v = occ_b[k // len(virt_b)], virt_b[k % len(virt_b)]
            return self.basis.index(s ^ (1 << o) ^ (1 << v))
        if not self.n_occ_pairs:
            return i
        occ = occ_a + occ_b
        a, b = rng.choice(len(occ), size=2, replace=False)
        o1, o2 = occ[a], occ[b]
        n_alpha_removed = (o1 % 2 == 0) + (o2 % 2 == 0)
        if n_alpha_removed == 2:
            pool = [(x, y) for k, x in enumerate(virt_a) for y in virt_a[k + 1:]]
        elif n_alpha_removed == 0:
            pool = [(x, y) for k, x in enumerate(virt_b) for y in virt_b[k + 1:]]
        else:
            pool = [(x, y) for x in virt_a for y in virt_b]
        if not pool:
            return i
        v1, v2 = pool[int(rng.integers(len(pool)))]
        return self.basis.index(s ^ (1 << o1) ^ (1 << o2) ^ (1 << v1) ^ (1 << v2))


class ExcitationSDFlipKernel(ExcitationSDKernel):
    """With probability 1/2 a global spin flip, otherwise an ExcitationSD move."""

    kind = "ExcitationSDFlip"

    def __init__(self, basis):
        super().__init__(basis)
        self.flip = basis.spin_flip_permutation()

    def row(self, i):
        r = 0.5 * super().row(i)
        r[self.flip[i]] += 0.5
        return r

    def sample(self, i, rng):
        if rng.random() < 0.5:
            return int(self.flip[i])
        return super().sample(i, rng)


_CLASSICAL = {k.kind: k for k in (UniformKernel, ExchangeKernel, ExcitationSDKernel, ExcitationSDFlipKernel)}


def classical_kernel(kind: str, basis: SectorBasis) -> ProposalKernel:
    try:
        k = _CLASSICAL[kind](basis)
    except KeyError:
        raise ValueError(f"unknown classical proposal {kind!r}; choose from {CLASSICAL_KINDS}") from None
    if k.exhausted:
        log.warning("%s proposal has no valid move for some branch in sector %s; mass goes to self-moves",
                    kind, (basis.n_alpha, basis.n_beta))
    return k


def classical_row(kind: str, basis: SectorBasis, state: int) -> np.ndarray:
    return classical_kernel(kind, basis).row_for(state)


def classical_sample(kind: str, basis: SectorBasis, state: int, rng: np.random.Generator) -> int:
    """Propose a configuration from ``state``; returns the new configuration."""
    k = classical_kernel(kind, basis)
    return int(basis.states[k.sample(basis.index(state), rng)])


# ----------------------------------------------------------------------------- quantum


def quantum_row(spec: Spectrum, i: int, tau: float) -> np.ndarray:
    """|<S_j|exp(-i H tau)|S_i>|**2 over the sector, for basis index ``i``."""
    v = spec.eigenvectors
    phase = spec.eigenvalues * tau
    parts = v @ np.stack([np.cos(phase) * v[i], np.sin(phase) * v[i]], axis=1)  # real and imaginary amplitudes
    return (parts * parts).sum(axis=1)


def effective_row(spec: Spectrum, i: int) -> np.ndarray:
    """Infinite-time average of the quantum row.

    Each degenerate level L contributes |<S_j|P_L|S_i>|**2 with P_L its
    projector; for non-degenerate levels this is p_n(S_i) p_n(S_j).
    """
    v = spec.eigenvectors
    out = np.zeros(spec.size)
    for lev in spec.levels():
        proj = v[:, lev] @ v[i, lev]
        out += proj * proj
    return out


def effective_matrix(spec: Spectrum) -> np.ndarray:
    v = spec.eigenvectors
    levels = spec.levels()
    single = np.concatenate([lev for lev in levels if lev.size == 1] or [np.zeros(0, dtype=int)])
    w = v[:, single] ** 2
    q = w @ w.T
    for lev in levels:
        if lev.size > 1:
            proj = v[:, lev] @ v[:, lev].T
            q += proj * proj
    return q


class QuantumKernel(ProposalKernel):
    """Measurement distribution after exp(-i H tau) applied to |S_i>.

    ``tau`` is either a fixed time or a ``(low, high)`` interval from which a
    fresh time is drawn uniformly at every proposal.  ``row``/``matrix`` of an
    interval kernel are midpoint-rule averages over ``n_quad`` times.
    """

    kind = "Quantum"
    cache_limit = 2500

    def __init__(self, spec: Spectrum, tau, n_quad: int = 256, label: str | None = None):
        super().__init__(spec.basis)
        self.spec = spec
        self.label = label
        if np.ndim(tau) == 0:
            self.tau, self.interval = float(tau), None
        else:
            lo, hi = (float(x) for x in tau)
            if not hi > lo:
                raise ValueError(f"empty tau interval ({lo}, {hi})")
            self.tau, self.interval = None, (lo, hi)
        self.n_quad = n_quad
        self._cum = None

    def _taus(self) -> np.ndarray:
        if self.interval is None:
            return np.array([self.tau])
        lo, hi = self.interval
        return lo + (np.arange(self.n_quad) + 0.5) * (hi - lo) / self.n_quad

    def row(self, i):
        return np.mean([quantum_row(self.spec, i, t) for t in self._taus()], axis=0)

    def matrix(self):
        return np.mean([transition_probabilities(self.spec, t) for t in self._taus()], axis=0)

    def sample(self, i, rng):
        if self.interval is None:
            if self._cum is None and self.size <= self.cache_limit:
                self._cum = np.cumsum(transition_probabilities(self.spec, self.tau), axis=1)
            if self._cum is not None:
                c = self._cum[i]
                return int(min(np.searchsorted(c, rng.random() * c[-1], side="right"), c.size - 1))
            return _draw(quantum_row(self.spec, i, self.tau), rng.random())
        lo, hi = self.interval
        t = lo + (hi - lo) * rng.random()
        return _draw(quantum_row(self.spec, i, t), rng.random())

    def describe(self):
        d = {"kind": self.kind, "tag": self.spec.tag}
        d["tau"] = self.tau if self.interval is None else list(self.interval)
        if self.label:
            d["label"] = self.label
        return d


class EffectiveKernel(ProposalKernel):
    kind = "Effective"

    def __init__(self, spec: Spectrum, label: str | None = None):
        super().__init__(spec.basis)
        self.spec = spec
        self.label = label
        self._cum = None

    def row(self, i):
        return effective_row(self.spec, i)

    def matrix(self):
        return effective_matrix(self.spec)

    def sample(self, i, rng):
        if self._cum is None:
            self._cum = np.cumsum(self.matrix(), axis=1)
        c = self._cum[i]
        return int(min(np.searchsorted(c, rng.random() * c[-1], side="right"), c.size - 1))

    def describe(self):
        return {"kind": self.kind, "tag": self.spec.tag, **({"label": self.label} if self.label else {})}


class QuantumAveragedKernel(ProposalKernel):
    """Uniform mixture of quantum kernels over several spectra and evolution times.

    Used for randomized effective Hamiltonians (one spectrum per gamma_e grid
    point) and for tau averaging.  ``taus`` is either a grid of fixed times or
    a ``(low, high)`` interval given through ``tau_interval``.  Sampling picks
    a component uniformly, then measures.
    """

    kind = "QuantumAveraged"

    def __init__(self, specs, taus=None, tau_interval=None, label: str | None = None, n_quad: int = 256):
        specs = list(specs) if isinstance(specs, (list, tuple)) else [specs]
        if not specs:
            raise ValueError("empty averaging grid")
        b0 = specs[0].basis
        for s in specs[1:]:
            if (s.basis.n_orb, s.basis.n_alpha, s.basis.n_beta) != (b0.n_orb, b0.n_alpha, b0.n_beta):
                raise ValueError("spectra live in different sectors")
        super().__init__(b0)
        if tau_interval is not None:
            self.components = [QuantumKernel(s, tuple(tau_interval), n_quad=n_quad) for s in specs]
        else:
            taus = np.atleast_1d(np.asarray(taus, dtype=np.float64))
            if taus.size == 0:
                raise ValueError("empty averaging grid")
            self.components = [QuantumKernel(s, float(t)) for s in specs for t in taus]
        self.specs, self.label = specs, label

    def row(self, i):
        return np.mean([k.row(i) for k in self.components], axis=0)

    def matrix(self):
        return np.mean([k.matrix() for k in self.components], axis=0)

    def sample(self, i, rng):
        k = self.components[int(rng.integers(len(self.components)))]
        if k.interval is None:
            return _draw(quantum_row(k.spec, i, k.tau), rng.random())
        return k.sample(i, rng)

    def describe(self):
        return {"kind": self.kind, "tags": [s.tag for s in self.specs],
                "components": [k.describe()["tau"] for k in self.components[: len(self.components) // len(self.specs)]],
                **({"label": self.label} if self.label else {})}


def averaged_quantum_row(specs, i: int, taus) -> np.ndarray:
    return QuantumAveragedKernel(specs, taus).row(i)
