"""Chain diagnostics: autocorrelation, observable spread, proposal histograms and gap scaling."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .markov import kernel_gap
from .proposals import effective_matrix
from .spectral import GroundStateDistribution, Spectrum, delta_epsilon, transition_probabilities

log = logging.getLogger(__name__)

SOKAL_C = 5.0


def autocovariance(series, lag: int) -> float:
    """c(lag) = sum_{i < N-lag} (x_i - mu)(x_{i+lag} - mu) / (N - lag), mu the full-series mean."""
    x = np.asarray(series, dtype=np.float64)
    n = x.size
    if n == 0:
        raise ValueError("empty series")
    if not 0 <= lag < n:
        raise ValueError(f"lag {lag} outside [0, {n})")
    d = x - x.mean()
    return float(np.dot(d[: n - lag], d[lag:]) / (n - lag))


def autocovariance_function(series) -> np.ndarray:
    """All lags at once via FFT, same normalization as :func:`autocovariance`."""
    x = np.asarray(series, dtype=np.float64)
    n = x.size
    if n == 0:
        raise ValueError("empty series")
    d = x - x.mean()
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(d, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n]
    return acov / (n - np.arange(n))


@dataclass
class AutocorrResult:
    tau: float
    window: int
    rho: np.ndarray = field(repr=False)
    n_samples: int
    low_confidence: bool = False

    @property
    def n_eff(self) -> float:
        return self.n_samples / self.tau


def integrated_autocorr(series, c: float = SOKAL_C) -> AutocorrResult:
    """Integrated autocorrelation time with Sokal's self-consistent window.

    The window W is the smallest lag with W >= c * tau(W), where
    tau(W) = 1 + 2 sum_{t=1}^{W} rho(t).
    """
    x = np.asarray(series, dtype=np.float64)
    n = x.size
    low = n < 100
    if low:
        log.warning("autocorrelation estimate from only %d samples", n)
    acov = autocovariance_function(x)
    if acov[0] <= 0:
        return AutocorrResult(1.0, 0, np.ones(1), n, low)
    rho = acov / acov[0]
    taus = 1.0 + 2.0 * np.cumsum(rho[1:])
    lags = np.arange(1, n)
    ok = np.nonzero(lags >= c * taus)[0]
    if ok.size:
        w = int(ok[0])
        return AutocorrResult(float(taus[w]), int(lags[w]), rho[: lags[w] + 1], n, low)
    log.warning("no self-consistent window found; series too short for its correlation time")
    return AutocorrResult(float(taus[-1]), n - 1, rho, n, True)


@dataclass
class ObservableEstimate:
    chain_means: np.ndarray
    pooled_mean: float
    max_abs_error: float
    std: float


def estimate_observable(chains, name: str, reference: float | None = None) -> ObservableEstimate:
    """Per-chain means, their pooled mean, max |mean - reference| and the cross-chain std."""
    if not chains:
        raise ValueError("empty chain set")
    means = np.array([np.mean(ch.observables[name]) for ch in chains])
    ref = means.mean() if reference is None else reference
    return ObservableEstimate(means, float(means.mean()), float(np.abs(means - ref).max()), float(means.std()))


@dataclass
class ProposalHistogram:
    counts: np.ndarray = field(repr=False)  # [hamming, de_bin]
    hamming_edges: np.ndarray = field(repr=False)
    de_edges: np.ndarray = field(repr=False)  # includes -inf / +inf overflow edges
    self_mass: float

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    def hamming_marginal(self) -> np.ndarray:
        return self.counts.sum(axis=1)


def proposal_histogram(row: np.ndarray, dist: GroundStateDistribution, i: int,
                       de_range: tuple[float, float] = (-10.0, 10.0), de_width: float = 0.5) -> ProposalHistogram:
    """Weight every S_j != S_i by Q(S_i, S_j) into (Hamming distance, delta-epsilon) bins."""
    basis = dist.basis
    lo, hi = de_range
    inner = np.arange(lo, hi + 0.5 * de_width, de_width)
    de_edges = np.concatenate([[-np.inf], inner, [np.inf]])
    ham = np.bitwise_count((basis.states ^ basis.states[i]).astype(np.uint64)).astype(np.int64)
    de = delta_epsilon(dist.probabilities[i], dist.probabilities)
    mask = np.arange(basis.size) != i
    h_edges = np.arange(basis.n_qubits + 2) - 0.5
    counts, _, _ = np.histogram2d(ham[mask], de[mask], bins=[h_edges, de_edges], weights=row[mask])
    return ProposalHistogram(counts, h_edges, de_edges, float(row[i]))


@dataclass
class ScalingFit:
    a: float
    k: float
    residual: float
    points: list

    def __call__(self, n):
        return self.a * 2.0 ** (-self.k * np.asarray(n, dtype=np.float64))


def fit_scaling(points) -> ScalingFit:
    """Least squares fit of log2(delta) = log2(a) - k N."""
    pts = [(float(n), float(d)) for n, d in points]
    if len(pts) < 2:
        raise ValueError("need at least two (N, delta) points")
    n = np.array([p[0] for p in pts])
    d = np.array([p[1] for p in pts])
    if np.any(d <= 0):
        raise ValueError("spectral gaps must be positive to fit an exponential")
    y = np.log2(d)
    A = np.column_stack([np.ones_like(n), -n])
    (log2a, k), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = float(np.sqrt(np.mean((A @ np.array([log2a, k]) - y) ** 2)))
    return ScalingFit(float(2.0 ** log2a), float(k), res, pts)


def quantum_gap_scan(spec: Spectrum, pi: np.ndarray, taus) -> np.ndarray:
    """Spectral gap of the quantum-proposal MH chain at every tau."""
    return np.array([kernel_gap(transition_probabilities(spec, t), pi) for t in taus])


def effective_gap(spec: Spectrum, pi: np.ndarray) -> float:
    return kernel_gap(effective_matrix(spec), pi)


def tau_threshold(taus, gaps, delta_eff: float, c: float) -> float:
    """First tau on the grid where the quantum gap reaches c * delta_eff; NaN if never."""
    if not 0.0 < c <= 1.0:
        raise ValueError("c must lie in (0, 1]")
    gaps = np.asarray(gaps)
    hit = np.nonzero(gaps >= c * delta_eff)[0]
    return float(np.asarray(taus)[hit[0]]) if hit.size else float("nan")


def tau_thresholds(spec: Spectrum, pi: np.ndarray, taus, cs) -> dict:
    """Threshold times for several c from one tau scan."""
    gaps = quantum_gap_scan(spec, pi, taus)
    d_eff = effective_gap(spec, pi)
    return {c: tau_threshold(taus, gaps, d_eff, c) for c in cs}


def effective_runtime_ratio(fit_c: ScalingFit, fit_q: ScalingFit, t_sc: float, t_sq: float, n) -> float:
    """T_eff,classical / T_eff,quantum for gaps a 2^{-kN} and per-move runtimes t_s."""
    if t_sc <= 0 or t_sq <= 0:
        raise ValueError("per-move runtimes must be positive")
    return (fit_q.a * t_sc) / (fit_c.a * t_sq) * 2.0 ** ((fit_c.k - fit_q.k) * np.asarray(n, dtype=np.float64))
