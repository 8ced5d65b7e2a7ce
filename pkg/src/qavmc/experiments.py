"""Experiment pipelines behind the CLI subcommands.

Each pipeline takes a validated :class:`RunConfig` and returns plain tables
(lists of dicts) plus JSON-ready summaries; the CLI writes them to disk.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, stream
from .diagnostics import (effective_gap, estimate_observable, fit_scaling, integrated_autocorr,
                          proposal_histogram, quantum_gap_scan, tau_threshold)
from .hamiltonians import (LatticeSpec, apply_hopping_mix, build_hubbard, build_molecular, half_filling,
                           load_fcidump, sector_from_header, to_bitstring)
from .markov import (build_transition_matrix, exact_mixing_time, kernel_gap, mixing_time_bounds, run_chain,
                     spectral_gap)
from .proposals import (CLASSICAL_KINDS, EffectiveKernel, QuantumAveragedKernel, QuantumKernel, classical_kernel,
                        effective_matrix)
from .spectral import Spectrum, eigendecompose, ground_distribution, transition_probabilities
from .vmc import VmcConfig, vmc_optimize

log = logging.getLogger(__name__)


@dataclass
class System:
    """A target Hamiltonian with its exact spectrum and ground-state distribution."""

    label: str
    kind: str  # "hubbard" | "molecule"
    params: dict
    H: object = field(repr=False)
    spec: Spectrum = field(repr=False)
    ints: object = field(default=None, repr=False)

    @property
    def basis(self):
        return self.H.basis

    @property
    def ground(self):
        return ground_distribution(self.spec)

    @property
    def n_sites(self) -> int:
        return self.basis.n_orb


_SPEC_CACHE: dict = {}


def _cached_spec(key, build):
    if key not in _SPEC_CACHE:
        if len(_SPEC_CACHE) > 64:
            _SPEC_CACHE.clear()
        _SPEC_CACHE[key] = build()
    return _SPEC_CACHE[key]


def hubbard_system(block: dict, U: float | None = None, n_sites: int | None = None) -> System:
    lat = dict(block.get("lattice", {}))
    kind = lat.get("kind", "chain")
    dims = [n_sites] if n_sites is not None else list(lat["dims"])
    lattice = LatticeSpec(kind, tuple(dims))
    U = float(block["U"] if U is None else U)
    t = float(block.get("t", 1.0))
    sector = tuple(block["sector"]) if block.get("sector") and n_sites is None else half_filling(lattice.n_sites)
    key = ("hubbard", kind, tuple(dims), t, U, sector)

    def build():
        H = build_hubbard(lattice, t, U, sector)
        return H, eigendecompose(H)

    H, spec = _cached_spec(key, build)
    label = f"hubbard-{kind}{'x'.join(map(str, dims))}-U{U:g}"
    return System(label, "hubbard", {"U": U, "t": t, "dims": dims, "sector": list(sector)}, H, spec)


def molecule_system(block: dict, cfg: RunConfig, fcidump=None, gamma_e: float = 0.0) -> System:
    path = cfg.resolve(fcidump or block["fcidump"])
    ints, info = load_fcidump(path)
    sector = tuple(block["sector"]) if block.get("sector") and fcidump is None else sector_from_header(info)
    key = ("molecule", str(Path(path).resolve()), sector, float(gamma_e))

    def build():
        mixed = apply_hopping_mix(ints, gamma_e) if gamma_e else ints
        H = build_molecular(mixed, sector, nelec=info.get("nelec"),
                            tag={"model": "molecule", "fcidump": Path(path).name, "gamma_e": gamma_e})
        return H, eigendecompose(H)

    H, spec = _cached_spec(key, build)
    return System(Path(path).stem, "molecule", {"fcidump": Path(path).name, "sector": list(sector)}, H, spec, ints)


def base_system(cfg: RunConfig, U=None, n_sites=None, fcidump=None) -> System:
    if "hubbard" in cfg.system:
        return hubbard_system(cfg.system["hubbard"], U=U, n_sites=n_sites)
    return molecule_system(cfg.system["molecule"], cfg, fcidump=fcidump)


# ----------------------------------------------------------------------------- proposals


@dataclass
class ResolvedProposal:
    label: str
    kind: str
    block: dict
    specs: list = field(default_factory=list, repr=False)

    @property
    def quantum(self) -> bool:
        return self.kind not in CLASSICAL_KINDS


def _label(block: dict, system: System) -> str:
    if block.get("label"):
        return str(block["label"])
    kind = block["kind"]
    if kind in CLASSICAL_KINDS:
        return kind
    name = "Quantum" if kind == "QuantumAveraged" else kind
    if system.kind == "hubbard":
        if "U_e_grid" in block:
            return f"{name}(U_e=random)"
        ue = block.get("U_e", "U")
        return f"{name}(U_e={ue if isinstance(ue, str) else format(float(ue), 'g')})"
    if "gamma_e_grid" in block or "gamma_e_interval" in block:
        return f"{name}(hopping,random)"
    if block.get("gamma_e") is not None:
        return f"{name}(hopping,gamma_e={float(block['gamma_e']):g})"
    if block.get("fcidump"):
        return f"{name}(R_e={Path(block['fcidump']).stem})"
    return f"{name}(R_e=R)"


def _gamma_grid(block: dict) -> list[float]:
    if "gamma_e_grid" in block:
        grid = [float(g) for g in block["gamma_e_grid"]]
    else:
        lo, hi = (float(x) for x in block["gamma_e_interval"])
        grid = list(np.linspace(lo, hi, int(block.get("gamma_e_points", 4))))
    if not grid or any(not 0.0 <= g <= 1.0 for g in grid):
        raise ConfigError("gamma_e grid must be nonempty and inside [0, 1]")
    return grid


def resolve_proposal(block: dict, system: System, cfg: RunConfig) -> ResolvedProposal:
    kind = block["kind"]
    label = _label(block, system)
    if kind in CLASSICAL_KINDS:
        return ResolvedProposal(label, kind, block)
    specs = []
    if system.kind == "hubbard":
        hub = cfg.system["hubbard"]
        n = system.n_sites if len(system.params["dims"]) == 1 else None
        if "U_e_grid" in block:
            ues = [float(u) for u in block["U_e_grid"]]
        else:
            ue = block.get("U_e", "U")
            ues = [system.params["U"] if ue == "U" else float(ue)]
        for ue in ues:
            specs.append(hubbard_system(hub, U=ue, n_sites=n).spec if n is not None
                         else hubbard_system(hub, U=ue).spec)
    else:
        mol = cfg.system["molecule"]
        fcid = cfg.resolve(block["fcidump"]) if block.get("fcidump") else _system_path(system, cfg)
        gammas = _gamma_grid(block) if ("gamma_e_grid" in block or "gamma_e_interval" in block) \
            else [float(block.get("gamma_e") or 0.0)]
        for g in gammas:
            specs.append(molecule_system(mol, cfg, fcidump=fcid, gamma_e=g).spec)
    for s in specs:
        if (s.basis.n_orb, s.basis.n_alpha, s.basis.n_beta) != (system.basis.n_orb, system.basis.n_alpha,
                                                                 system.basis.n_beta):
            raise ConfigError(f"proposal {label}: effective Hamiltonian lives in a different sector")
    if kind in ("Quantum", "Effective") and len(specs) > 1:
        kind = "QuantumAveraged" if kind == "Quantum" else kind
    return ResolvedProposal(label, kind, block, specs)


def _system_path(system: System, cfg: RunConfig):
    fcid = system.params["fcidump"]
    for cand in [cfg.system["molecule"]["fcidump"], *[(f["path"] if isinstance(f, dict) else f)
                                                      for f in cfg.experiment.get("fcidumps", []) or []]]:
        if Path(cand).name == fcid:
            return cfg.resolve(cand)
    raise ConfigError(f"cannot locate FCIDUMP {fcid}")


def _quantum_Q(rp: ResolvedProposal, tau: float) -> np.ndarray:
    return np.mean([transition_probabilities(s, tau) for s in rp.specs], axis=0)


def proposal_gap(rp: ResolvedProposal, system: System, taus) -> tuple[float, float]:
    """Spectral gap of the proposal's MH chain on the exact ground state; (delta, best tau)."""
    pi = system.ground.probabilities
    if not rp.quantum:
        return kernel_gap(classical_kernel(rp.kind, system.basis).matrix(), pi), float("nan")
    if rp.kind == "Effective":
        Q = np.mean([effective_matrix(s) for s in rp.specs], axis=0)
        return kernel_gap(Q, pi), float("nan")
    if len(rp.specs) == 1:
        gaps = quantum_gap_scan(rp.specs[0], pi, taus)
    else:
        gaps = np.array([kernel_gap(_quantum_Q(rp, t), pi) for t in taus])
    k = int(np.argmax(gaps))
    return float(gaps[k]), float(taus[k])


def chain_kernel(rp: ResolvedProposal, system: System, cfg: RunConfig, fixed_tau: float | None = None):
    if not rp.quantum:
        return classical_kernel(rp.kind, system.basis)
    if rp.kind == "Effective":
        if len(rp.specs) != 1:
            raise ConfigError("Effective chains support a single effective Hamiltonian")
        return EffectiveKernel(rp.specs[0], label=rp.label)
    if fixed_tau is not None:
        tau_kw = {"taus": [fixed_tau]}
    elif "tau" in rp.block:
        tau_kw = {"taus": [float(rp.block["tau"])]}
    else:
        tau_kw = {"tau_interval": cfg.tau_interval(rp.block)}
    if len(rp.specs) == 1:
        tau = tau_kw.get("taus", [None])[0]
        return QuantumKernel(rp.specs[0], tau if tau is not None else tau_kw["tau_interval"], label=rp.label)
    return QuantumAveragedKernel(rp.specs, label=rp.label, **tau_kw)


def _proposals(cfg: RunConfig, system: System) -> list[ResolvedProposal]:
    if not cfg.proposals:
        raise ConfigError("proposals: at least one proposal is required")
    return [resolve_proposal(b, system, cfg) for b in cfg.proposals]


def _fcidump_entries(cfg: RunConfig) -> list[tuple[str, str]]:
    out = []
    for f in cfg.experiment.get("fcidumps", []) or []:
        if isinstance(f, dict):
            out.append((f["path"], str(f.get("label", Path(f["path"]).stem))))
        else:
            out.append((f, Path(f).stem))
    if not out:
        raise ConfigError("experiment.fcidumps: list of FCIDUMP files required for molecular sweeps")
    return out


# ----------------------------------------------------------------------------- pipelines


def _pool_map(fn, items, workers: int):
    """Order-preserving map, optionally over a process pool; results are identical either way."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _scan_point(arg) -> list[dict]:
    cfg, pname, pval = arg
    if pname == "U":
        system = hubbard_system(cfg.system["hubbard"], U=pval)
    else:
        path = dict((lab, p) for p, lab in _fcidump_entries(cfg))[pval]
        system = molecule_system(cfg.system["molecule"], cfg, fcidump=cfg.resolve(path))
    rows = []
    for rp in _proposals(cfg, system):
        delta, best = proposal_gap(rp, system, cfg.taus(rp.block))
        rows.append({pname: pval, "system": system.label, "n_states": system.basis.size,
                     "proposal": rp.label, "delta": delta, "tau_best": best})
    return rows


def gap_scan(cfg: RunConfig) -> dict:
    """Spectral gap of every proposal across a parameter sweep (U, or geometry via FCIDUMP files)."""
    if "hubbard" in cfg.system:
        values = cfg.experiment.get("U_values") or [cfg.system["hubbard"]["U"]]
        points = [(cfg, "U", float(u)) for u in values]
    else:
        points = [(cfg, "geometry", lab) for _, lab in _fcidump_entries(cfg)]
    chunks = _pool_map(_scan_point, points, int(cfg.experiment.get("workers", 1)))
    return {"tables": {"gap-scan": [r for c in chunks for r in c]}}


def _size_systems(cfg: RunConfig):
    if "hubbard" in cfg.system:
        sizes = cfg.experiment.get("sizes")
        if not sizes:
            raise ConfigError("experiment.sizes: list of site counts required")
        return [hubbard_system(cfg.system["hubbard"], n_sites=int(n)) for n in sizes]
    return [molecule_system(cfg.system["molecule"], cfg, fcidump=cfg.resolve(p)) for p, _ in _fcidump_entries(cfg)]


def _size_point(arg) -> list[dict]:
    cfg, k = arg
    system = _size_system(cfg, k)
    rows = []
    for rp in _proposals(cfg, system):
        delta, best = proposal_gap(rp, system, cfg.taus(rp.block))
        rows.append({"n_sites": system.n_sites, "n_qubits": system.basis.n_qubits, "system": system.label,
                     "n_states": system.basis.size, "proposal": rp.label, "delta": delta, "tau_best": best})
    return rows


def _size_system(cfg: RunConfig, k: int) -> System:
    if "hubbard" in cfg.system:
        return hubbard_system(cfg.system["hubbard"], n_sites=int(cfg.experiment["sizes"][k]))
    return molecule_system(cfg.system["molecule"], cfg, fcidump=cfg.resolve(_fcidump_entries(cfg)[k][0]))


def gap_size(cfg: RunConfig) -> dict:
    """Gap versus system size and the fit delta = a 2^(-k N), N = number of sites/orbitals."""
    if "hubbard" in cfg.system:
        if not cfg.experiment.get("sizes"):
            raise ConfigError("experiment.sizes: list of site counts required")
        n_points = len(cfg.experiment["sizes"])
    else:
        n_points = len(_fcidump_entries(cfg))
    chunks = _pool_map(_size_point, [(cfg, k) for k in range(n_points)], int(cfg.experiment.get("workers", 1)))
    rows = [r for c in chunks for r in c]
    per: dict = {}
    for r in rows:
        per.setdefault(r["proposal"], []).append((r["n_sites"], r["delta"]))
    fits = {}
    for label, pts in per.items():
        try:
            f = fit_scaling(pts)
            fits[label] = {"a": f.a, "k": f.k, "residual": f.residual, "points": [list(p) for p in pts]}
        except ValueError as exc:
            fits[label] = {"error": str(exc), "points": [list(p) for p in pts]}
    return {"tables": {"gap-size": rows}, "json": {"gap-size-fits": {"fits": fits}}}


def tau_threshold_pipeline(cfg: RunConfig) -> dict:
    cs = [float(c) for c in cfg.experiment.get("c", [0.6, 0.7, 0.8])]
    rows = []
    for system in _size_systems(cfg):
        pi = system.ground.probabilities
        for rp in _proposals(cfg, system):
            if rp.kind != "Quantum" or len(rp.specs) != 1:
                continue
            taus = cfg.taus(rp.block)
            gaps = quantum_gap_scan(rp.specs[0], pi, taus)
            d_eff = effective_gap(rp.specs[0], pi)
            for c in cs:
                rows.append({"n_sites": system.n_sites, "system": system.label, "proposal": rp.label, "c": c,
                             "delta_eff": d_eff, "tau": tau_threshold(taus, gaps, d_eff, c)})
    if not rows:
        raise ConfigError("tau-threshold needs at least one single-Hamiltonian Quantum proposal")
    return {"tables": {"tau-threshold": rows}}


def histogram_pipeline(cfg: RunConfig) -> dict:
    system = base_system(cfg)
    ground = system.ground
    state = cfg.experiment.get("state", "dominant")
    if state == "dominant":
        i = int(ground.dominant(1)[0])
    else:
        bits = str(state)
        if len(bits) != system.basis.n_qubits or set(bits) - {"0", "1"}:
            raise ConfigError("experiment.state: occupation bitstring with one digit per spin-orbital expected")
        i = system.basis.index(int(bits[::-1], 2))
    de_range = tuple(float(x) for x in cfg.experiment.get("de_range", (-10.0, 10.0)))
    width = float(cfg.experiment.get("de_width", 0.5))
    rows, meta = [], {}
    for rp in _proposals(cfg, system):
        tau = None
        if rp.quantum and rp.kind != "Effective":
            tau = float(rp.block["tau"]) if "tau" in rp.block else proposal_gap(rp, system, cfg.taus(rp.block))[1]
        kern = chain_kernel(rp, system, cfg, fixed_tau=tau)
        row = kern.row(i)
        h = proposal_histogram(row, ground, i, de_range, width)
        meta[rp.label] = {"self_mass": h.self_mass, "tau": tau}
        for hb in range(h.counts.shape[0]):
            for db in range(h.counts.shape[1]):
                w = h.counts[hb, db]
                if w > 0:
                    rows.append({"proposal": rp.label, "hamming": hb, "de_low": float(h.de_edges[db]),
                                 "de_high": float(h.de_edges[db + 1]), "weight": float(w)})
    bitstring = to_bitstring(int(system.basis.states[i]), system.basis.n_qubits)
    return {"tables": {"histogram": rows}, "json": {"histogram": {"state": bitstring, "proposals": meta}}}


def observable_values(system: System, name: str) -> np.ndarray:
    """Diagonal observable values over the basis; ``n1a_nNb`` = n_{1 alpha} n_{N beta}."""
    occ = system.basis.occupations().astype(np.float64)
    n = system.n_sites
    if name == "n1a_nNb":
        return occ[:, 0] * occ[:, 2 * n - 1]
    m = re.fullmatch(r"n(\d+)([ab])_n(\d+)([ab])", name)
    if m:
        p, sp, q, sq = int(m[1]), m[2], int(m[3]), m[4]
        if not (1 <= p <= n and 1 <= q <= n):
            raise ConfigError(f"observable {name}: site index out of range 1..{n}")
        return occ[:, 2 * (p - 1) + (sp == "b")] * occ[:, 2 * (q - 1) + (sq == "b")]
    raise ConfigError(f"unknown observable {name!r}")


def mcmc_observable(cfg: RunConfig) -> dict:
    system = base_system(cfg)
    ground = system.ground
    pi = ground.probabilities
    name = cfg.experiment.get("observable", "n1a_nNb")
    values = observable_values(system, name)
    reference = float(pi @ values)
    n_chains = int(cfg.experiment.get("n_chains", 100))
    n_samples = int(cfg.experiment.get("n_samples", 10_000))
    burn = cfg.experiment.get("burn_in")
    burn = int(burn) if burn is not None else n_samples // 10
    support = np.nonzero(ground.support)[0]
    rows, summary = [], {}
    for rp in _proposals(cfg, system):
        kern = chain_kernel(rp, system, cfg)
        seeds = stream(cfg.seed, f"experiment.mcmc-observable.{rp.label}").spawn(n_chains)
        chains = []
        for c, ss in enumerate(seeds):
            rng = np.random.default_rng(ss)
            start = int(support[rng.integers(support.size)])
            ch = run_chain(kern, pi, start, n_samples, seed=None, burn_in=burn, observables={name: values}, rng=rng)
            chains.append(ch)
            ac = integrated_autocorr(ch.observables[name])
            rows.append({"proposal": rp.label, "chain": c, "mean": float(np.mean(ch.observables[name])),
                         "tau_int": ac.tau, "acceptance_rate": ch.acceptance_rate})
        est = estimate_observable(chains, name, reference)
        taus = [r["tau_int"] for r in rows if r["proposal"] == rp.label]
        summary[rp.label] = {"pooled_mean": est.pooled_mean, "max_abs_error": est.max_abs_error, "std": est.std,
                             "tau_int_mean": float(np.mean(taus)),
                             "acceptance_rate": float(np.mean([c.acceptance_rate for c in chains]))}
    return {"tables": {"mcmc-observable": rows},
            "json": {"mcmc-observable": {"observable": name, "reference": reference, "n_chains": n_chains,
                                         "n_samples": n_samples, "proposals": summary}}}


_VMC_KEYS = set(VmcConfig.__dataclass_fields__) - {"seed"}


def vmc_pipeline(cfg: RunConfig) -> dict:
    system = base_system(cfg)
    opts = {k: v for k, v in cfg.experiment.items() if k in _VMC_KEYS}
    obs_names = cfg.experiment.get("observables", ["n1a_nNb"])
    observables = {n: observable_values(system, n) for n in obs_names}
    e0 = float(system.spec.eigenvalues[0])
    exact_obs = {n: float(system.ground.probabilities @ v) for n, v in observables.items()}
    runs = []
    if cfg.experiment.get("exact_reference", False):
        runs.append(("exact-gradient", None))
    for rp in _proposals(cfg, system):
        runs.append((rp.label, chain_kernel(rp, system, cfg)))
    tables, js = {}, {}
    for label, kern in runs:
        seed = int(stream(cfg.seed, f"experiment.vmc.{label}").generate_state(1)[0])
        vc = VmcConfig(**{**opts, "exact": kern is None, "seed": seed})
        res = vmc_optimize(system.H, kern, vc, observables=observables)
        tag = _file_tag(label)
        tables[f"vmc-{tag}"] = res.trajectory
        js[f"vmc-{tag}"] = {"label": label, "e0": e0, "exact_observables": exact_obs,
                            "final_energy": res.trajectory[-1]["energy"],
                            "params": res.params.to_json(), "alpha": res.params.alpha}
    return {"tables": tables, "json": js}


def mixing_time_pipeline(cfg: RunConfig) -> dict:
    eps = float(cfg.experiment.get("eps", 0.01))
    max_states = int(cfg.experiment.get("max_states", 500))
    t_max = int(cfg.experiment.get("t_max", 2 ** 20))
    systems = _size_systems(cfg) if cfg.experiment.get("sizes") or cfg.experiment.get("fcidumps") else [base_system(cfg)]
    rows = []
    for system in systems:
        pi = system.ground.probabilities
        for rp in _proposals(cfg, system):
            if rp.quantum and rp.kind != "Effective":
                _, tau = proposal_gap(rp, system, cfg.taus(rp.block))
                Q = _quantum_Q(rp, tau)
            else:
                tau = float("nan")
                Q = np.mean([effective_matrix(s) for s in rp.specs], axis=0) if rp.kind == "Effective" \
                    else classical_kernel(rp.kind, system.basis).matrix()
            T = build_transition_matrix(Q, pi)
            delta = spectral_gap(T)
            lo, hi = mixing_time_bounds(delta, pi, eps) if delta > 0 else (float("inf"), float("inf"))
            t_mix = exact_mixing_time(T, eps, t_max) if system.basis.size <= max_states and delta > 0 else -1
            rows.append({"system": system.label, "n_states": system.basis.size, "proposal": rp.label, "tau": tau,
                         "delta": delta, "eps": eps, "lower": lo, "t_mix": t_mix, "upper": hi})
    return {"tables": {"mixing-time": rows}}


def _file_tag(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.=-]+", "_", label).strip("_")


PIPELINES = {
    "gap-scan": gap_scan,
    "gap-size": gap_size,
    "tau-threshold": tau_threshold_pipeline,
    "histogram": histogram_pipeline,
    "mcmc-observable": mcmc_observable,
    "vmc": vmc_pipeline,
    "mixing-time": mixing_time_pipeline,
}
