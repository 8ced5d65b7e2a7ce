"""Jordan-Wigner mapping of second-quantized operators to Pauli sums.

A fermionic term is ``(coeff, ((k, dagger), ...))``, the ladder operators
multiplied left to right.  A Pauli sum maps strings such as ``"XZYI"`` (one
letter per qubit, qubit 0 first) to complex coefficients.
"""
from __future__ import annotations

from collections import defaultdict
from itertools import product

import numpy as np

from .hubbard import LatticeSpec
from .molecular import MolecularIntegrals

# (a, b) -> (phase, a*b)
_MUL = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}


def _mul_strings(a: str, b: str) -> tuple[complex, str]:
    phase, out = 1, []
    for x, y in zip(a, b):
        ph, z = _MUL[x, y]
        phase *= ph
        out.append(z)
    return phase, "".join(out)


def _mul_sums(a: dict, b: dict) -> dict:
    out = defaultdict(complex)
    for (sa, ca), (sb, cb) in product(a.items(), b.items()):
        ph, s = _mul_strings(sa, sb)
        out[s] += ph * ca * cb
    return out


def ladder(k: int, dagger: bool, n_qubits: int) -> dict:
    """JW image of a_k or a^dagger_k (occupied = |1>)."""
    if not 0 <= k < n_qubits:
        raise IndexError(f"spin-orbital {k} out of range for {n_qubits} qubits")
    pre, post = "Z" * k, "I" * (n_qubits - k - 1)
    return {pre + "X" + post: 0.5, pre + "Y" + post: (-0.5j if dagger else 0.5j)}


def jordan_wigner(terms, n_qubits: int, tol: float = 1e-13) -> dict:
    """Map a list of fermionic terms to a Pauli sum with negligible terms dropped."""
    total = defaultdict(complex)
    identity = "I" * n_qubits
    for coeff, ops in terms:
        acc = {identity: complex(coeff)}
        for k, dagger in ops:
            acc = _mul_sums(acc, ladder(k, dagger, n_qubits))
        for s, c in acc.items():
            total[s] += c
    return {s: c for s, c in total.items() if abs(c) > tol}


def is_real(pauli_sum: dict, tol: float = 1e-12) -> bool:
    """Hermitian real Hamiltonian: real coefficients and an even number of Y's per string."""
    return all(abs(c.imag) < tol and s.count("Y") % 2 == 0 for s, c in pauli_sum.items())


def pauli_dense(pauli_sum: dict, n_qubits: int) -> np.ndarray:
    """Dense 2**n matrix; basis index is the occupation bitmask (qubit 0 = LSB)."""
    dim = 1 << n_qubits
    cols = np.arange(dim, dtype=np.int64)
    out = np.zeros((dim, dim), dtype=np.complex128)
    for s, c in pauli_sum.items():
        xmask = sum(1 << i for i, ch in enumerate(s) if ch in "XY")
        zmask = sum(1 << i for i, ch in enumerate(s) if ch in "YZ")
        ny = s.count("Y")
        parity = np.bitwise_count((cols & zmask).astype(np.uint64)) & 1
        vals = c * (1j ** ny) * (1 - 2 * parity.astype(np.int64))
        out[cols ^ xmask, cols] += vals
    return out


def pauli_sector_matrix(pauli_sum: dict, basis) -> np.ndarray:
    full = pauli_dense(pauli_sum, basis.n_qubits)
    sub = full[np.ix_(basis.states, basis.states)]
    if np.abs(sub.imag).max(initial=0.0) > 1e-12:
        raise ValueError("Pauli Hamiltonian is not real on the sector")
    return sub.real


def hubbard_terms(lattice: LatticeSpec, t: float, U: float) -> list:
    terms = []
    for i, j in lattice.edges():
        for sigma in (0, 1):
            a, b = 2 * i + sigma, 2 * j + sigma
            terms.append((-t, ((a, True), (b, False))))
            terms.append((-t, ((b, True), (a, False))))
    for i in range(lattice.n_sites):
        terms.append((U, ((2 * i, True), (2 * i, False), (2 * i + 1, True), (2 * i + 1, False))))
    return terms


def molecular_terms(ints: MolecularIntegrals, tol: float = 1e-14) -> list:
    n = ints.n_orb
    terms = [(ints.e_nuc, ())] if ints.e_nuc else []
    for p, q in product(range(n), repeat=2):
        if abs(ints.h[p, q]) > tol:
            for sigma in (0, 1):
                terms.append((ints.h[p, q], ((2 * p + sigma, True), (2 * q + sigma, False))))
    for p, q, r, s in product(range(n), repeat=4):
        v = ints.g[p, q, r, s]
        if abs(v) <= tol:
            continue
        for sigma, tau in product((0, 1), repeat=2):
            ops = ((2 * p + sigma, True), (2 * r + tau, True), (2 * s + tau, False), (2 * q + sigma, False))
            terms.append((0.5 * v, ops))
    return terms
