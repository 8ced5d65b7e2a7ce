"""Metropolis-Hastings transition matrices, spectral gaps, mixing times and chains."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from math import log

import numpy as np
import scipy.sparse.linalg as spla

from .hamiltonians import to_bitstring
from .spectral import PROB_FLOOR

log_ = logging.getLogger(__name__)

DENSE_GAP_LIMIT = 2000


class MarkovError(RuntimeError):
    pass


def acceptance_symmetric(pi_i: float, pi_j: float) -> float:
    if pi_i <= 0:
        raise MarkovError("current state has zero target probability")
    return min(1.0, pi_j / pi_i)


def acceptance_general(pi_i: float, pi_j: float, q_ij: float, q_ji: float) -> float:
    if pi_i <= 0:
        raise MarkovError("current state has zero target probability")
    if q_ij <= 0:
        raise MarkovError("proposed move has zero proposal probability")
    return min(1.0, pi_j * q_ji / (pi_i * q_ij))


def _check_rows(Q: np.ndarray, tol: float = 1e-10) -> None:
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError(f"proposal matrix must be square, got {Q.shape}")
    err = np.abs(Q.sum(axis=1) - 1.0).max()
    if err > tol or Q.min() < -tol:
        raise ValueError(f"proposal rows are not probability vectors (row-sum error {err:.2e})")


def _acceptance_matrix(pi: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.minimum(1.0, pi[None, :] / pi[:, None])
    a[pi <= 0, :] = 1.0
    return a


@dataclass(frozen=True)
class TransitionMatrix:
    P: np.ndarray = field(repr=False)
    pi: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.pi.size

    def detailed_balance_error(self) -> float:
        """max |pi_i P_ij - pi_j P_ji| relative to max pi_i P_ij."""
        flow = self.pi[:, None] * self.P
        return float(np.abs(flow - flow.T).max() / max(flow.max(), 1e-300))

    def stationarity_error(self) -> float:
        return float(np.abs(self.pi @ self.P - self.pi).max())


def build_transition_matrix(Q: np.ndarray, pi: np.ndarray, symmetric: bool = True) -> TransitionMatrix:
    """P_ij = Q_ij A_ij off the diagonal, P_ii = 1 - sum_{j != i} P_ij.

    With ``symmetric=False`` the general Hastings ratio including Q_ji/Q_ij is used.
    """
    Q = np.asarray(Q, dtype=np.float64)
    pi = np.asarray(pi, dtype=np.float64)
    _check_rows(Q)
    if pi.shape != (Q.shape[0],) or pi.min() < 0:
        raise ValueError("target distribution must be a nonnegative vector matching Q")
    pi = pi / pi.sum()
    if symmetric:
        A = _acceptance_matrix(pi)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = (pi[None, :] * Q.T) / (pi[:, None] * Q)
        A = np.where(Q > 0, np.minimum(1.0, np.nan_to_num(ratio, nan=0.0, posinf=1.0)), 0.0)
    P = Q * A
    np.fill_diagonal(P, 0.0)
    np.fill_diagonal(P, 1.0 - P.sum(axis=1))
    return TransitionMatrix(P, pi)


def support_mask(pi: np.ndarray, floor: float = PROB_FLOOR) -> np.ndarray:
    mask = np.asarray(pi) >= floor
    if not mask.all():
        log_.warning("excluding %d states with probability below %g from the support", (~mask).sum(), floor)
    return mask


def symmetrized_mh(Q: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """D^{1/2} P D^{-1/2} of the MH chain for a symmetric kernel Q, built without forming P.

    ``pi`` must be strictly positive.
    """
    ratio = pi[None, :] / pi[:, None]
    off = Q * np.minimum(1.0, ratio)
    np.fill_diagonal(off, 0.0)
    diag = 1.0 - off.sum(axis=1)
    s = np.sqrt(np.minimum(ratio, 1.0 / ratio))
    out = Q * s
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, diag)
    return out


def _second_modulus(A: np.ndarray, top: np.ndarray) -> float:
    """Largest |lambda| of symmetric A after removing the eigenvector ``top`` (eigenvalue 1)."""
    n = A.shape[0]
    if n == 1:
        return 0.0
    if n <= DENSE_GAP_LIMIT:
        w = np.linalg.eigvalsh(A)
        return float(max(abs(w[0]), abs(w[-2])))
    B = A - np.outer(top, top)
    v0 = np.cos(np.arange(n) * 0.7071) + 1.0  # fixed start vector keeps results reproducible
    try:
        w = spla.eigsh(B, k=2, which="LM", v0=v0, tol=1e-12, return_eigenvectors=False)
    except spla.ArpackNoConvergence as exc:
        raise MarkovError("eigensolver did not converge for the spectral gap") from exc
    return float(np.abs(w).max())


def gap_from_symmetrized(A: np.ndarray, pi: np.ndarray) -> float:
    lam2 = _second_modulus(A, np.sqrt(pi / pi.sum()))
    return float(min(1.0, max(0.0, 1.0 - lam2)))


def spectral_gap(T: TransitionMatrix) -> float:
    """Absolute spectral gap 1 - |lambda_2| of a reversible transition matrix.

    Returns 0 when the chain is reducible or periodic within rounding.
    """
    mask = support_mask(T.pi)
    P, pi = T.P[np.ix_(mask, mask)].copy(), T.pi[mask]
    if not mask.all():
        np.fill_diagonal(P, 0.0)
        np.fill_diagonal(P, 1.0 - P.sum(axis=1))
    s = np.sqrt(pi)
    A = s[:, None] * P / s[None, :]
    A = 0.5 * (A + A.T)
    return gap_from_symmetrized(A, pi)


def kernel_gap(Q: np.ndarray, pi: np.ndarray) -> float:
    """Spectral gap of the MH chain of symmetric kernel ``Q`` targeting ``pi``."""
    mask = support_mask(pi)
    Q = Q[np.ix_(mask, mask)]
    p = pi[mask] / pi[mask].sum()
    return gap_from_symmetrized(symmetrized_mh(Q, p), p)


def mixing_time_bounds(delta: float, pi: np.ndarray, eps: float) -> tuple[float, float]:
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if delta <= 0.0:
        raise MarkovError("zero spectral gap: mixing time is unbounded")
    if delta > 1.0:
        raise ValueError("spectral gap cannot exceed 1")
    pi_min = float(np.min(np.asarray(pi)[np.asarray(pi) >= PROB_FLOOR]))
    lower = (1.0 / delta - 1.0) * log(1.0 / (2.0 * eps))
    upper = (1.0 / delta) * log(1.0 / (eps * pi_min))
    return lower, upper


def tv_distance_max(Pt: np.ndarray, pi: np.ndarray) -> float:
    return float(0.5 * np.abs(Pt - pi[None, :]).sum(axis=1).max())


def exact_mixing_time(T: TransitionMatrix, eps: float, t_max: int = 2 ** 20) -> int:
    """Smallest t with max_i ||P^t(i, .) - pi||_TV <= eps.

    The worst-case distance is non-increasing in t, so the answer is located
    by repeated squaring followed by a binary descent over the stored powers.
    Starting states are restricted to the support of pi, as for the gap.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    mask = support_mask(T.pi)
    P, pi = T.P[np.ix_(mask, mask)].copy(), T.pi[mask]
    if not mask.all():
        np.fill_diagonal(P, 0.0)
        np.fill_diagonal(P, 1.0 - P.sum(axis=1))
    powers = [P]
    if tv_distance_max(P, pi) <= eps:
        return 1
    while True:
        t = 1 << (len(powers) - 1)
        if 2 * t > t_max:
            raise MarkovError(f"mixing time exceeds t_max={t_max}")
        nxt = powers[-1] @ powers[-1]
        if tv_distance_max(nxt, pi) <= eps:
            break
        powers.append(nxt)
    # d(t) > eps at t = 2**(len(powers)-1), d(2t) <= eps
    cur, t = powers[-1], 1 << (len(powers) - 1)
    for k in range(len(powers) - 2, -1, -1):
        cand = cur @ powers[k]
        if tv_distance_max(cand, pi) > eps:
            cur, t = cand, t + (1 << k)
    return t + 1


# ----------------------------------------------------------------------------- chains


@dataclass
class ChainSample:
    states: np.ndarray
    accepted: np.ndarray
    observables: dict
    seed: object
    proposal: dict
    burn_in: int = 0

    @property
    def steps(self) -> int:
        return int(self.states.size)

    @property
    def acceptance_count(self) -> int:
        return int(self.accepted.sum())

    @property
    def acceptance_rate(self) -> float:
        return self.acceptance_count / max(1, self.steps)

    def to_csv(self, path, basis) -> None:
        names = sorted(self.observables)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "state", "accepted", *names])
            for k, i in enumerate(self.states):
                w.writerow([k, to_bitstring(int(basis.states[i]), basis.n_qubits), int(self.accepted[k]),
                            *(repr(float(self.observables[n][k])) for n in names)])


def _as_log_weights(target) -> np.ndarray:
    t = np.asarray(target, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return np.where(t > 0, np.log(np.maximum(t, 0.0)), -np.inf)


def run_chain(kernel, target, start: int, steps: int, seed=None, burn_in: int | None = None,
              observables: dict | None = None, log_target: bool = False,
              rng: np.random.Generator | None = None) -> ChainSample:
    """Metropolis-Hastings with a symmetric kernel.

    ``target`` is a probability (or unnormalized weight) vector over the basis,
    or log-weights when ``log_target`` is set.  ``observables`` maps names to
    per-configuration value arrays; they are recorded after burn-in only.
    """
    logw = np.asarray(target, dtype=np.float64) if log_target else _as_log_weights(target)
    if not np.isfinite(logw[start]):
        raise MarkovError("chain starts outside the support of the target")
    if burn_in is None:
        burn_in = steps // 10
    if rng is None:
        rng = np.random.default_rng(seed)
    observables = observables or {}
    states = np.empty(steps, dtype=np.int64)
    accepted = np.zeros(steps, dtype=bool)
    i = int(start)
    for k in range(burn_in + steps):
        j = kernel.sample(i, rng)
        acc = False
        u = rng.random()
        if j != i:
            diff = logw[j] - logw[i]
            if diff >= 0 or u < np.exp(diff):
                i, acc = j, True
        if k >= burn_in:
            states[k - burn_in] = i
            accepted[k - burn_in] = acc
    obs = {name: np.asarray(vals)[states] for name, vals in observables.items()}
    return ChainSample(states, accepted, obs, seed, kernel.describe(), burn_in)


def chain_seeds(master_seed: int, n: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(master_seed).spawn(n)


def run_chains(kernel, target, start, steps: int, n_chains: int, master_seed: int, **kw) -> list[ChainSample]:
    """Independent chains with spawned random streams; ``start`` may be per-chain."""
    starts = np.broadcast_to(np.asarray(start), (n_chains,))
    return [run_chain(kernel, target, int(starts[c]), steps, seed=s, **kw)
            for c, s in enumerate(chain_seeds(master_seed, n_chains))]
