import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from qavmc.hamiltonians import SectorBasis, hubbard_chain, spin_flip
from qavmc.proposals import (CLASSICAL_KINDS, EffectiveKernel, QuantumAveragedKernel, QuantumKernel,
                             averaged_quantum_row, classical_kernel, classical_row, classical_sample, effective_matrix,
                             effective_row, quantum_row)
from qavmc.spectral import eigendecompose, transition_probabilities
from qavmc.hamiltonians import apply_hopping_mix, build_molecular

import oracles
from systems import hubbard, molecule

SECTORS = [(4, 2, 2), (4, 3, 1), (3, 1, 1), (5, 2, 3)]


def _tau_average_row(spec, i, T=1000.0, n=4096):
    taus = -T + (np.arange(n) + 0.5) * (2 * T / n)
    return np.mean([quantum_row(spec, i, t) for t in taus], axis=0)


# ------------------------------------------------------------------ classical kernels

def test_uniform_row_four_states():
    b = SectorBasis.build(2, 1, 1)
    row = classical_row("Uniform", b, int(b.states[2]))
    assert row[2] == 0.0
    assert np.allclose(np.delete(row, 2), 1 / 3)


@pytest.mark.parametrize("kind", CLASSICAL_KINDS)
@pytest.mark.parametrize("sector", SECTORS)
def test_rows_match_move_enumeration(kind, sector):
    if kind == "ExcitationSDFlip" and sector[1] != sector[2]:
        pytest.skip("spin flip needs n_alpha == n_beta")
    b = SectorBasis.build(*sector)
    k = classical_kernel(kind, b)
    Q = k.matrix()
    for i in range(b.size):
        ref = oracles.enumerate_row(kind, b, i)
        assert np.abs(k.row(i) - ref).max() < 1e-14
        assert np.abs(Q[i] - ref).max() < 1e-14
    assert np.abs(Q - Q.T).max() < 1e-10
    assert np.abs(Q.sum(axis=1) - 1).max() < 1e-10
    assert Q.min() >= 0


def test_spin_flip_kernel_has_half_mass_on_partner():
    b = SectorBasis.build(4, 2, 2)
    k = classical_kernel("ExcitationSDFlip", b)
    for i, s in enumerate(b.states):
        f = spin_flip(int(s), 4)
        if f != int(s):
            assert k.row(i)[b.index(f)] >= 0.5


def test_spin_flip_kernel_needs_balanced_sector():
    with pytest.raises(ValueError):
        classical_kernel("ExcitationSDFlip", SectorBasis.build(4, 3, 1))


@pytest.mark.parametrize("sector", SECTORS)
def test_excitation_move_counts_are_sector_constant(sector):
    n, na, nb = sector
    b = SectorBasis.build(*sector)
    for s in b.states:
        occ = [k for k in range(2 * n) if (int(s) >> k) & 1]
        vir = [k for k in range(2 * n) if not (int(s) >> k) & 1]
        singles = sum(1 for o in occ for v in vir if o % 2 == v % 2)
        doubles = sum(1 for o in itertools.combinations(occ, 2) for v in itertools.combinations(vir, 2)
                      if sorted(x % 2 for x in o) == sorted(x % 2 for x in v))
        assert singles == oracles.n_singles(n, na, nb)
        assert doubles == oracles.n_doubles_sector_constant(n, na, nb)


def test_uniform_two_states_forced_move():
    b = SectorBasis.build(2, 1, 0)
    rng = np.random.default_rng(0)
    for s in b.states:
        other = int(b.states[1 - b.index(int(s))])
        assert all(classical_sample("Uniform", b, int(s), rng) == other for _ in range(20))


def test_exchange_from_spin_polarized_state_never_moves():
    b = SectorBasis.build(3, 3, 0)
    s = int(b.states[0])
    rng = np.random.default_rng(1)
    assert all(classical_sample("Exchange", b, s, rng) == s for _ in range(50))


@pytest.mark.parametrize("kind", CLASSICAL_KINDS)
def test_sampler_matches_row_chi_square(kind):
    b = SectorBasis.build(4, 2, 2)
    k = classical_kernel(kind, b)
    rng = np.random.default_rng(2024)
    i = 7
    draws = np.array([k.sample(i, rng) for _ in range(100_000)])
    row = k.row(i)
    support = row > 0
    counts = np.bincount(draws, minlength=b.size)
    assert counts[~support].sum() == 0
    _, p = chisquare(counts[support], row[support] * draws.size)
    assert p > 1e-3


def test_unknown_kind():
    with pytest.raises(ValueError):
        classical_kernel("Teleport", SectorBasis.build(2, 1, 1))


# ------------------------------------------------------------------ quantum kernels

def test_quantum_row_zero_time():
    _, spec, _ = hubbard(4, 8.0)
    row = quantum_row(spec, 3, 0.0)
    assert row[3] == pytest.approx(1.0) and np.abs(np.delete(row, 3)).max() < 1e-14


@given(st.floats(0.0, 100.0), st.integers(0, 35))
@settings(max_examples=30, deadline=None)
def test_quantum_row_normalized(tau, i):
    _, spec, _ = hubbard(4, 8.0)
    assert abs(quantum_row(spec, i, tau).sum() - 1) < 1e-10


def test_quantum_row_against_expm():
    H, spec, _ = hubbard(2, 8.0)
    ref = oracles.expm_probabilities(H.matrix, 1.0)
    for i in range(4):
        assert np.abs(quantum_row(spec, i, 1.0) - ref[:, i]).max() < 1e-8


def test_effective_identity_for_diagonal_hamiltonian():
    spec = eigendecompose(hubbard_chain(3, 4.0, t=0.0))
    assert np.abs(effective_matrix(spec) - np.eye(spec.size)).max() < 1e-14
    for i in range(spec.size):
        assert np.abs(effective_row(spec, i) - np.eye(spec.size)[i]).max() < 1e-14


def test_effective_is_long_time_average_two_sites():
    _, spec, _ = hubbard(2, 8.0)
    Q = effective_matrix(spec)
    assert np.abs(Q.sum(axis=1) - 1).max() < 1e-10
    for i in range(spec.size):
        assert np.abs(_tau_average_row(spec, i) - Q[i]).max() < 1e-3
        assert np.abs(effective_row(spec, i) - Q[i]).max() < 1e-12


def test_effective_is_long_time_average_four_sites():
    # near-degenerate levels (gap ~0.056) converge like 1/T; check the grid average against the
    # closed-form finite-T average, and the closed form against the effective row at large T
    _, spec, _ = hubbard(4, 8.0)
    Q = effective_matrix(spec)
    for i in range(spec.size):
        finite = oracles.finite_time_average(spec.eigenvalues, spec.eigenvectors, i, 1000.0)
        assert np.abs(_tau_average_row(spec, i) - finite).max() < 5e-5
        late = oracles.finite_time_average(spec.eigenvalues, spec.eigenvectors, i, 1e5)
        assert np.abs(late - Q[i]).max() < 1e-4
        assert np.abs(effective_row(spec, i) - Q[i]).max() < 1e-12


def test_effective_kernel_symmetric_on_degenerate_spectrum():
    spec = eigendecompose(hubbard_chain(4, 0.0))
    assert any(len(l) > 1 for l in spec.levels())
    Q = EffectiveKernel(spec).matrix()
    assert np.abs(Q - Q.T).max() < 1e-10 and np.abs(Q.sum(axis=1) - 1).max() < 1e-10


def test_single_point_average_is_quantum_row():
    _, spec, _ = hubbard(4, 8.0)
    assert np.abs(averaged_quantum_row([spec], 5, [2.3]) - quantum_row(spec, 5, 2.3)).max() < 1e-15


def test_mixture_of_kernels_stays_stochastic_symmetric():
    _, s1, _ = hubbard(4, 8.0)
    _, s2, _ = hubbard(4, 2.0)
    Q = QuantumAveragedKernel([s1, s2], taus=[0.7, 3.1]).matrix()
    assert np.abs(Q - Q.T).max() < 1e-10 and np.abs(Q.sum(axis=1) - 1).max() < 1e-10


def test_gamma_grid_average_on_h2():
    _, _, _, ints = molecule("h2_r0.74_cmo.fcidump")
    specs = [eigendecompose(build_molecular(apply_hopping_mix(ints, g), (1, 1))) for g in (0.1, 0.25, 0.4)]
    k = QuantumAveragedKernel(specs, taus=[1.7])
    for i in range(4):
        ref = np.mean([quantum_row(s, i, 1.7) for s in specs], axis=0)
        assert np.abs(k.row(i) - ref).max() < 1e-12


def test_interval_kernel_row_is_quadrature_average():
    _, spec, _ = hubbard(4, 8.0)
    k = QuantumKernel(spec, (0.1, 20.0), n_quad=64)
    taus = 0.1 + (np.arange(64) + 0.5) * (19.9 / 64)
    ref = np.mean([quantum_row(spec, 2, t) for t in taus], axis=0)
    assert np.abs(k.row(2) - ref).max() < 1e-14
    with pytest.raises(ValueError):
        QuantumKernel(spec, (1.0, 1.0))


@pytest.mark.parametrize("factory", [
    lambda s: QuantumKernel(s, 2.5),
    lambda s: EffectiveKernel(s),
    lambda s: QuantumAveragedKernel([s], taus=[0.5, 2.5]),
])
def test_quantum_samplers_match_rows(factory):
    _, spec, _ = hubbard(4, 8.0)
    k = factory(spec)
    rng = np.random.default_rng(11)
    i = 4
    draws = np.bincount([k.sample(i, rng) for _ in range(50_000)], minlength=spec.size)
    row = k.row(i)
    keep = row * 50_000 > 5
    assert draws[row == 0].sum() == 0
    expected = row[keep] * 50_000
    _, p = chisquare(draws[keep], expected * draws[keep].sum() / expected.sum())
    assert p > 1e-3


def test_interval_sampler_draws_fresh_times():
    _, spec, _ = hubbard(2, 8.0)
    k = QuantumKernel(spec, (0.1, 20.0), n_quad=2048)
    rng = np.random.default_rng(5)
    draws = np.bincount([k.sample(0, rng) for _ in range(40_000)], minlength=4)
    row = k.row(0)
    _, p = chisquare(draws, row * 40_000)
    assert p > 1e-3


@pytest.mark.parametrize("name", ["h4_r2.0_oao.fcidump", "h2_r0.74_cmo.fcidump"])
def test_molecular_quantum_kernel_laws(name):
    _, spec, _, _ = molecule(name)
    for tau in (0.4, 7.9):
        Q = transition_probabilities(spec, tau)
        assert np.abs(Q - Q.T).max() < 1e-10 and np.abs(Q.sum(axis=1) - 1).max() < 1e-10
