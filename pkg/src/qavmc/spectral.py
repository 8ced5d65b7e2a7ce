"""Exact eigendecomposition, state-vector time evolution and ground-state statistics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hamiltonians import SectorBasis, SectorHamiltonian

PROB_FLOOR = 1e-300
DEGENERACY_RTOL = 1e-9


class SpectralError(RuntimeError):
    pass


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)  # columns <S|Psi_n>
    basis: SectorBasis
    tag: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.eigenvalues.size

    def levels(self, rtol: float = DEGENERACY_RTOL) -> list[np.ndarray]:
        """Eigenvalue indices grouped into degenerate levels."""
        e = self.eigenvalues
        tol = rtol * max(1.0, float(np.abs(e).max()))
        breaks = np.nonzero(np.diff(e) > tol)[0] + 1
        return np.split(np.arange(e.size), breaks)

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


def eigendecompose(H: SectorHamiltonian) -> Spectrum:
    try:
        w, v = np.linalg.eigh(H.matrix)
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"symmetric eigensolver failed: {exc}") from exc
    w.setflags(write=False)
    v.setflags(write=False)
    return Spectrum(w, v, H.basis, dict(H.tag))


def evolve_index(spec: Spectrum, i: int, tau: float) -> np.ndarray:
    """exp(-i H tau)|S_i> for basis index ``i``."""
    v = spec.eigenvectors
    return v @ (np.exp(-1j * spec.eigenvalues * tau) * v[i])


def evolve_row(spec: Spectrum, state: int, tau: float) -> np.ndarray:
    """exp(-i H tau)|S> as an amplitude vector over the sector; ``state`` is a configuration."""
    return evolve_index(spec, spec.basis.index(state), tau)


def evolution_matrix(spec: Spectrum, tau: float) -> np.ndarray:
    v = spec.eigenvectors
    return (v * np.exp(-1j * spec.eigenvalues * tau)) @ v.T


def transition_probabilities(spec: Spectrum, tau: float) -> np.ndarray:
    """|<S_j|exp(-i H tau)|S_i>|**2 for all pairs, using two real products."""
    v = spec.eigenvectors
    phase = spec.eigenvalues * tau
    re = (v * np.cos(phase)) @ v.T
    im = (v * np.sin(phase)) @ v.T
    return re * re + im * im


@dataclass(frozen=True)
class GroundStateDistribution:
    amplitudes: np.ndarray = field(repr=False)
    probabilities: np.ndarray = field(repr=False)
    e0: float
    degenerate: bool
    basis: SectorBasis

    @property
    def support(self) -> np.ndarray:
        return self.probabilities >= PROB_FLOOR

    def energy(self, state: int) -> float:
        return config_energy(self.probabilities[self.basis.index(state)])

    def delta_epsilon(self, s_i: int, s_j: int) -> float:
        b = self.basis
        return delta_epsilon(self.probabilities[b.index(s_i)], self.probabilities[b.index(s_j)])

    def dominant(self, k: int = 2) -> np.ndarray:
        """Indices of the ``k`` most probable configurations, most probable first (stable)."""
        return np.argsort(-self.probabilities, kind="stable")[:k]


def ground_distribution(spec: Spectrum) -> GroundStateDistribution:
    amp = spec.eigenvectors[:, 0].copy()
    p = amp * amp
    p /= p.sum()
    e = spec.eigenvalues
    degenerate = e.size > 1 and (e[1] - e[0]) < 1e-10 * max(1.0, float(np.abs(e).max()))
    return GroundStateDistribution(amp, p, float(e[0]), bool(degenerate), spec.basis)


def config_energy(p):
    """Configuration 'energy' -log10 P, with P clamped at PROB_FLOOR."""
    return -np.log10(np.maximum(p, PROB_FLOOR))


def delta_epsilon(p_i, p_j):
    """log10(P(S_i) / P(S_j)): the 'energy' increase of the move S_i -> S_j."""
    return np.log10(np.maximum(p_i, PROB_FLOOR)) - np.log10(np.maximum(p_j, PROB_FLOOR))
