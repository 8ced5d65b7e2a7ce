"""Stochastic reconfiguration and Adam."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


def sr_matrix(O: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
    """Real part of <O_k* O_k'> - <O_k*><O_k'> for log-derivatives O (samples x params)."""
    if weights is None:
        weights = np.full(O.shape[0], 1.0 / O.shape[0])
    mean = weights @ O
    d = O - mean
    S = (d.conj().T * weights) @ d
    return S.real


def sr_precondition(O: np.ndarray, gradient: np.ndarray, shift: float = 0.01,
                    weights: np.ndarray | None = None) -> np.ndarray:
    """Solve (S + shift I) x = g; falls back to the plain gradient if the solve fails."""
    if shift <= 0:
        raise ValueError("SR diagonal shift must be positive")
    S = sr_matrix(O, weights)
    try:
        x = np.linalg.solve(S + shift * np.eye(S.shape[0]), gradient)
    except np.linalg.LinAlgError:
        log.warning("SR linear solve failed, using the raw gradient")
        return gradient
    if not np.all(np.isfinite(x)):
        log.warning("SR solve produced non-finite values, using the raw gradient")
        return gradient
    return x


@dataclass
class Adam:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: np.ndarray | None = field(default=None, repr=False)
    v: np.ndarray | None = field(default=None, repr=False)
    t: int = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.m is None:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
