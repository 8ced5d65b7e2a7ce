"""Molecular Hamiltonians from FCIDUMP integrals, plus the hopping-augmented variant."""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .basis import SectorBasis
from .fermion import spatial_excitation
from .sector import SectorHamiltonian

log = logging.getLogger(__name__)


class FCIDumpError(ValueError):
    pass


@dataclass(frozen=True)
class MolecularIntegrals:
    """One- and two-electron integrals in Hartree; ``g`` in chemists' notation (pq|rs)."""

    n_orb: int
    h: np.ndarray = field(repr=False)
    g: np.ndarray = field(repr=False)
    e_nuc: float = 0.0

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.float64)
        g = np.asarray(self.g, dtype=np.float64)
        n = self.n_orb
        if h.shape != (n, n) or g.shape != (n, n, n, n):
            raise ValueError(f"integral shapes {h.shape}, {g.shape} do not match n_orb={n}")
        h.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "g", g)

    def check_symmetry(self, atol: float = 1e-12) -> bool:
        g = self.g
        images = (
            g.transpose(1, 0, 2, 3), g.transpose(0, 1, 3, 2), g.transpose(1, 0, 3, 2),
            g.transpose(2, 3, 0, 1), g.transpose(3, 2, 0, 1), g.transpose(2, 3, 1, 0),
            g.transpose(3, 2, 1, 0),
        )
        return np.allclose(self.h, self.h.T, atol=atol) and all(np.allclose(g, x, atol=atol) for x in images)


_HEADER_INT = re.compile(r"(NORB|NELEC|MS2)\s*=\s*(-?\d+)", re.IGNORECASE)


def load_fcidump(path) -> tuple[MolecularIntegrals, dict]:
    """Read a Molpro-style FCIDUMP.

    Returns the integrals (8-fold images filled in, 0-based indices) and a
    dict with ``nelec`` and ``ms2`` from the namelist header.
    """
    text = Path(path).read_text()
    lines = text.splitlines()
    header, body_start = [], None
    for k, line in enumerate(lines):
        header.append(line)
        stripped = line.strip().upper()
        if stripped.startswith("&END") or stripped == "/" or stripped.endswith("&END") or stripped.endswith("/"):
            body_start = k + 1
            break
    if body_start is None or "&FCI" not in header[0].upper():
        raise FCIDumpError(f"{path}: missing &FCI ... &END namelist header")
    fields = {key.upper(): int(val) for key, val in _HEADER_INT.findall(" ".join(header))}
    if "NORB" not in fields:
        raise FCIDumpError(f"{path}: header lacks NORB")
    n = fields["NORB"]
    if n < 1:
        raise FCIDumpError(f"{path}: NORB must be positive")
    info = {"nelec": fields.get("NELEC"), "ms2": fields.get("MS2", 0)}

    h = np.zeros((n, n))
    g = np.zeros((n, n, n, n))
    e_nuc = None
    for lineno, line in enumerate(lines[body_start:], start=body_start + 1):
        parts = line.replace(",", " ").split()
        if not parts:
            continue
        if len(parts) != 5:
            raise FCIDumpError(f"{path}:{lineno}: expected 'value p q r s', got {line!r}")
        try:
            val = float(parts[0].replace("D", "E").replace("d", "e"))
            p, q, r, s = (int(x) for x in parts[1:])
        except ValueError as exc:
            raise FCIDumpError(f"{path}:{lineno}: cannot parse {line!r}") from exc
        if any(i < 0 or i > n for i in (p, q, r, s)):
            raise FCIDumpError(f"{path}:{lineno}: orbital index out of range 1..{n}")
        if p == q == r == s == 0:
            e_nuc = val
        elif r == 0 and s == 0:
            if q == 0:
                continue  # orbital energy record
            h[p - 1, q - 1] = h[q - 1, p - 1] = val
        elif p and q and r and s:
            p, q, r, s = p - 1, q - 1, r - 1, s - 1
            for a, b, c, d in ((p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r)):
                g[a, b, c, d] = g[c, d, a, b] = val
        else:
            raise FCIDumpError(f"{path}:{lineno}: malformed index pattern {parts[1:]}")
    if e_nuc is None:
        log.warning("%s: no core-energy record, using e_nuc = 0", path)
        e_nuc = 0.0
    return MolecularIntegrals(n, h, g, e_nuc), info


def write_fcidump(path, ints: MolecularIntegrals, nelec: int, ms2: int = 0, tol: float = 1e-15) -> None:
    n = ints.n_orb
    out = [f" &FCI NORB={n},NELEC={nelec},MS2={ms2},", "  ORBSYM=" + "1," * n, "  ISYM=1,", " &END"]
    for p in range(n):
        for q in range(p + 1):
            for r in range(n):
                for s in range(r + 1):
                    if p * (p + 1) // 2 + q < r * (r + 1) // 2 + s:
                        continue
                    v = ints.g[p, q, r, s]
                    if abs(v) > tol:
                        out.append(f"{float(v)!r} {p + 1} {q + 1} {r + 1} {s + 1}")
    for p in range(n):
        for q in range(p + 1):
            if abs(ints.h[p, q]) > tol:
                out.append(f"{float(ints.h[p, q])!r} {p + 1} {q + 1} 0 0")
    out.append(f"{float(ints.e_nuc)!r} 0 0 0 0")
    Path(path).write_text("\n".join(out) + "\n")


def sector_from_header(info: dict) -> tuple[int, int]:
    nelec, ms2 = info["nelec"], info.get("ms2", 0) or 0
    if nelec is None or (nelec + ms2) % 2:
        raise FCIDumpError(f"cannot derive (n_alpha, n_beta) from NELEC={nelec}, MS2={ms2}")
    return (nelec + ms2) // 2, (nelec - ms2) // 2


def hopping_scale(h: np.ndarray) -> float:
    n = h.shape[0]
    if n < 2:
        raise ValueError("hopping normalization needs at least two orbitals")
    return float(np.linalg.norm(h) / np.sqrt(n * (n - 1)))


def apply_hopping_mix(ints: MolecularIntegrals, gamma_e: float) -> MolecularIntegrals:
    """Blend the one-body integrals with a uniform all-to-all hopping term.

    h -> (1 - gamma_e) h + gamma_e * alpha * T, with T = -1 off the diagonal,
    0 on it, and alpha = ||h||_F / sqrt(n (n - 1)).  Two-body integrals and
    the core energy are passed through unchanged.
    """
    if not 0.0 <= gamma_e <= 1.0:
        raise ValueError(f"gamma_e={gamma_e} outside [0, 1]")
    alpha = hopping_scale(ints.h)
    if gamma_e == 0.0:
        return ints
    hop = -(np.ones_like(ints.h) - np.eye(ints.n_orb))
    return replace(ints, h=(1.0 - gamma_e) * ints.h + gamma_e * alpha * hop)


def build_molecular(ints: MolecularIntegrals, sector: tuple[int, int], nelec: int | None = None,
                    tag: dict | None = None) -> SectorHamiltonian:
    n_alpha, n_beta = sector
    if nelec is not None and n_alpha + n_beta != nelec:
        raise ValueError(f"sector {sector} inconsistent with NELEC={nelec}")
    basis = SectorBasis.build(ints.n_orb, n_alpha, n_beta)
    n = ints.n_orb
    E = [[spatial_excitation(basis, p, q) for q in range(n)] for p in range(n)]
    # sum_pq h_pq E_pq + 1/2 sum_pqrs g_pqrs (E_pq E_rs - delta_qr E_ps)
    k = ints.h - 0.5 * np.einsum("pqqs->ps", ints.g)
    H = sp.csr_matrix((basis.size, basis.size))
    for p in range(n):
        for q in range(n):
            F = sp.csr_matrix((basis.size, basis.size))
            for r in range(n):
                for s in range(n):
                    if ints.g[p, q, r, s] != 0.0:
                        F = F + ints.g[p, q, r, s] * E[r][s]
            term = 0.5 * (E[p][q] @ F)
            if k[p, q] != 0.0:
                term = term + k[p, q] * E[p][q]
            H = H + term
    matrix = H.toarray() + ints.e_nuc * np.eye(basis.size)
    return SectorHamiltonian(basis, matrix, dict(tag or {"model": "molecular"}))
