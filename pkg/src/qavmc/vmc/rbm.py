"""Two-RBM wavefunction: one real RBM for the amplitude, one for the phase.

psi(S) = A(S) exp(i ln B(S)) with, for each block and hidden units traced out,
ln A(S) = sum_i a_i s_i + sum_mu ln(2 cosh(b_mu + sum_i W_mu,i s_i)).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def log2cosh(x):
    """ln(2 cosh x) without overflow."""
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax))


@dataclass
class RbmParams:
    a: np.ndarray
    b: np.ndarray
    W: np.ndarray
    a_phase: np.ndarray
    b_phase: np.ndarray
    W_phase: np.ndarray

    @classmethod
    def zeros(cls, n_visible: int, n_hidden: int) -> "RbmParams":
        z = np.zeros
        return cls(z(n_visible), z(n_hidden), z((n_hidden, n_visible)),
                   z(n_visible), z(n_hidden), z((n_hidden, n_visible)))

    @classmethod
    def init(cls, n_visible: int, alpha: float, rng: np.random.Generator, sigma: float = 0.01) -> "RbmParams":
        """Zero biases, Gaussian weights of width ``sigma``."""
        m = int(round(alpha * n_visible))
        p = cls.zeros(n_visible, m)
        p.W = sigma * rng.standard_normal((m, n_visible))
        p.W_phase = sigma * rng.standard_normal((m, n_visible))
        return p

    @property
    def n_visible(self) -> int:
        return self.a.size

    @property
    def n_hidden(self) -> int:
        return self.b.size

    @property
    def alpha(self) -> float:
        return self.n_hidden / self.n_visible

    @property
    def n_params(self) -> int:
        return 2 * (self.n_visible + self.n_hidden + self.n_visible * self.n_hidden)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.a, self.b, self.W.ravel(), self.a_phase, self.b_phase, self.W_phase.ravel()])

    @classmethod
    def from_vector(cls, vec: np.ndarray, n_visible: int, n_hidden: int) -> "RbmParams":
        n, m = n_visible, n_hidden
        sizes = [n, m, n * m] * 2
        parts = np.split(np.asarray(vec, dtype=np.float64), np.cumsum(sizes)[:-1])
        return cls(parts[0], parts[1], parts[2].reshape(m, n), parts[3], parts[4], parts[5].reshape(m, n))

    def to_json(self) -> dict:
        return {name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
                for name, arr in vars(self).items()}

    @classmethod
    def from_json(cls, d: dict) -> "RbmParams":
        return cls(**{k: np.asarray(v["data"], dtype=np.float64).reshape(v["shape"]) for k, v in d.items()})

    def check_finite(self):
        if not np.all(np.isfinite(self.to_vector())):
            raise FloatingPointError("non-finite RBM parameters")


def _block_log(a, b, W, spins):
    theta = spins @ W.T + b
    return spins @ a + log2cosh(theta).sum(axis=-1), theta


def log_psi(params: RbmParams, spins) -> np.ndarray:
    """Complex ln psi for one configuration (shape (N,)) or a batch (shape (B, N)) of +-1 spins."""
    spins = np.asarray(spins, dtype=np.float64)
    if spins.shape[-1] != params.n_visible:
        raise ValueError(f"configuration length {spins.shape[-1]} != {params.n_visible}")
    params.check_finite()
    amp, _ = _block_log(params.a, params.b, params.W, spins)
    phase, _ = _block_log(params.a_phase, params.b_phase, params.W_phase, spins)
    return amp + 1j * phase


def grad_log_psi(params: RbmParams, spins) -> np.ndarray:
    """d ln psi / d theta for every parameter, ordered as :meth:`RbmParams.to_vector`.

    Returns shape (P,) for one configuration or (B, P) for a batch.  Amplitude
    derivatives are real, phase derivatives purely imaginary.
    """
    spins = np.asarray(spins, dtype=np.float64)
    single = spins.ndim == 1
    s = np.atleast_2d(spins)
    t_amp = np.tanh(s @ params.W.T + params.b)
    t_ph = np.tanh(s @ params.W_phase.T + params.b_phase)
    B = s.shape[0]
    amp = np.concatenate([s, t_amp, (t_amp[:, :, None] * s[:, None, :]).reshape(B, -1)], axis=1)
    ph = np.concatenate([s, t_ph, (t_ph[:, :, None] * s[:, None, :]).reshape(B, -1)], axis=1)
    out = np.concatenate([amp, 1j * ph], axis=1)
    return out[0] if single else out
