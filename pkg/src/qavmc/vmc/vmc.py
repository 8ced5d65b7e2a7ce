"""Local energies, energy gradients and the VMC optimization loop."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..hamiltonians import SectorHamiltonian
from ..markov import run_chain
from .optim import Adam, sr_precondition
from .rbm import RbmParams, grad_log_psi, log_psi

log = logging.getLogger(__name__)


class VmcDivergence(FloatingPointError):
    pass


def local_energy(row_indices, row_values, log_psi_fn, i: int) -> complex:
    """E_loc(S_i) = sum_j H_ij psi(S_j) / psi(S_i) from one sparse Hamiltonian row.

    ``log_psi_fn`` maps an array of basis indices to complex ln psi.
    """
    lp_i = log_psi_fn(np.array([i]))[0]
    if not np.isfinite(lp_i.real):
        raise ZeroDivisionError("psi(S) = 0: local energy undefined")
    lp = log_psi_fn(np.asarray(row_indices))
    return complex(np.sum(row_values * np.exp(lp - lp_i)))


def local_energies(H_csr: sp.csr_matrix, logpsi: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Vectorized E_loc for sampled basis indices, given ln psi on the whole basis."""
    rows = H_csr[idx]
    nnz = np.diff(rows.indptr)
    ratio = np.exp(logpsi[rows.indices] - np.repeat(logpsi[idx], nnz))
    out = np.zeros(idx.size, dtype=np.complex128)
    np.add.at(out, np.repeat(np.arange(idx.size), nnz), rows.data * ratio)
    return out


@dataclass
class EnergyGradient:
    energy: float
    gradient: np.ndarray
    O: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    e_loc: np.ndarray = field(repr=False)
    variance: float = 0.0


def energy_and_gradient(params: RbmParams, H: SectorHamiltonian, samples=None,
                        H_csr: sp.csr_matrix | None = None, spins: np.ndarray | None = None) -> EnergyGradient:
    """Energy estimate and dE/dtheta = 2 Re <(E_loc - E) d ln psi*/d theta>.

    ``samples`` are basis indices; ``None`` switches to exact enumeration with
    weights |psi|^2 over the full sector.
    """
    if spins is None:
        spins = H.basis.spins()
    if H_csr is None:
        H_csr = sp.csr_matrix(H.matrix)
    logpsi = log_psi(params, spins)
    if samples is None:
        idx = np.arange(H.basis.size)
        lw = 2.0 * logpsi.real
        w = np.exp(lw - lw.max())
        w /= w.sum()
    else:
        idx = np.asarray(samples, dtype=np.int64)
        if idx.size == 0:
            raise ValueError("no samples")
        w = np.full(idx.size, 1.0 / idx.size)
    eloc = local_energies(H_csr, logpsi, idx)
    energy = complex(w @ eloc)
    O = grad_log_psi(params, spins[idx])
    grad = 2.0 * ((w * (eloc - energy)) @ O.conj()).real
    var = float(w @ np.abs(eloc - energy) ** 2)
    return EnergyGradient(energy.real, grad, O, w, eloc, var)


def exact_energy(params: RbmParams, H: SectorHamiltonian, spins: np.ndarray | None = None) -> float:
    """<psi|H|psi>/<psi|psi> by dense contraction over the sector."""
    if spins is None:
        spins = H.basis.spins()
    lp = log_psi(params, spins)
    psi = np.exp(lp - lp.real.max())
    return float((psi.conj() @ H.matrix @ psi).real / (psi.conj() @ psi).real)


@dataclass
class VmcConfig:
    alpha: float = 3.0
    n_samples: int = 1000
    n_chains: int = 1
    iterations: int = 500
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    sr_shift: float = 0.01
    init_sigma: float = 0.01
    burn_in_fraction: float = 0.1
    exact: bool = False
    warm_start: bool = True
    track_exact: bool = False
    seed: int = 0


@dataclass
class VmcResult:
    trajectory: list
    params: RbmParams
    config: VmcConfig

    def to_csv(self, path) -> None:
        if not self.trajectory:
            return
        keys = list(self.trajectory[0])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(keys)
            for rec in self.trajectory:
                w.writerow([repr(rec[k]) if isinstance(rec[k], float) else rec[k] for k in keys])


def vmc_optimize(H: SectorHamiltonian, kernel=None, config: VmcConfig | None = None,
                 observables: dict | None = None, params: RbmParams | None = None,
                 callback=None) -> VmcResult:
    """Optimize an RBM wavefunction for ``H``.

    Each iteration samples |psi|^2 with Metropolis-Hastings using ``kernel``
    (or weights the whole sector exactly when ``config.exact``), estimates the
    energy and gradient, preconditions with SR and takes an Adam step.
    ``observables`` maps names to diagonal values over the basis.
    """
    cfg = config or VmcConfig()
    if not cfg.exact and kernel is None:
        raise ValueError("sampling mode needs a proposal kernel")
    ss = np.random.SeedSequence(cfg.seed)
    init_ss, chain_ss = ss.spawn(2)
    basis = H.basis
    spins = basis.spins()
    H_csr = sp.csr_matrix(H.matrix)
    if params is None:
        params = RbmParams.init(basis.n_qubits, cfg.alpha, np.random.default_rng(init_ss), cfg.init_sigma)
    n, m = params.n_visible, params.n_hidden
    vec = params.to_vector()
    adam = Adam(cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps)
    observables = observables or {}
    rngs = [np.random.default_rng(s) for s in chain_ss.spawn(cfg.n_chains)]
    per_chain = max(1, cfg.n_samples // cfg.n_chains)
    burn = int(round(cfg.burn_in_fraction * per_chain))
    starts = [int(r.integers(basis.size)) for r in rngs]
    traj = []
    for it in range(cfg.iterations):
        params = RbmParams.from_vector(vec, n, m)
        acc_rate = float("nan")
        if cfg.exact:
            samples = None
        else:
            logw = 2.0 * log_psi(params, spins).real
            chains = [run_chain(kernel, logw, starts[c], per_chain, burn_in=burn, log_target=True, rng=rngs[c])
                      for c in range(cfg.n_chains)]
            samples = np.concatenate([ch.states for ch in chains])
            acc_rate = float(np.mean([ch.acceptance_rate for ch in chains]))
            if cfg.warm_start:
                starts = [int(ch.states[-1]) for ch in chains]
            else:
                starts = [int(r.integers(basis.size)) for r in rngs]
        eg = energy_and_gradient(params, H, samples, H_csr, spins)
        if not np.isfinite(eg.energy) or not np.all(np.isfinite(eg.gradient)):
            raise VmcDivergence(f"non-finite energy or gradient at iteration {it}")
        rec = {"iteration": it, "energy": eg.energy}
        idx = np.arange(basis.size) if samples is None else samples
        for name, vals in observables.items():
            rec[name] = float(eg.weights @ np.asarray(vals)[idx])
        rec["acceptance_rate"] = acc_rate
        if cfg.track_exact:
            rec["energy_exact"] = exact_energy(params, H, spins)
        traj.append(rec)
        if callback is not None:
            callback(rec)
        x = sr_precondition(eg.O, eg.gradient, cfg.sr_shift, eg.weights)
        vec = adam.step(vec, x)
    params = RbmParams.from_vector(vec, n, m)
    return VmcResult(traj, params, cfg)
