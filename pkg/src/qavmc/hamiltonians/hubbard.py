"""Fermi-Hubbard model on open-boundary chains and grids."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import SectorBasis, alpha_mask
from .fermion import spatial_excitation
from .sector import SectorHamiltonian


@dataclass(frozen=True)
class LatticeSpec:
    kind: str = "chain"
    dims: tuple[int, ...] = (2,)
    boundary: str = "open"

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if self.kind not in ("chain", "grid"):
            raise ValueError(f"unknown lattice kind {self.kind!r}")
        if self.boundary != "open":
            raise ValueError("only open boundary conditions are supported")
        if self.kind == "chain" and len(self.dims) != 1:
            raise ValueError("a chain has exactly one dimension")
        if self.kind == "grid" and len(self.dims) != 2:
            raise ValueError("a grid has exactly two dimensions")
        if any(d < 1 for d in self.dims):
            raise ValueError(f"inconsistent dims {self.dims}")

    @classmethod
    def chain(cls, n: int) -> "LatticeSpec":
        return cls("chain", (n,))

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.dims))

    def edges(self) -> list[tuple[int, int]]:
        """Nearest-neighbour bonds (i < j), row-major site numbering."""
        if self.kind == "chain":
            return [(i, i + 1) for i in range(self.dims[0] - 1)]
        nx, ny = self.dims
        out = []
        for x in range(nx):
            for y in range(ny):
                i = x * ny + y
                if y + 1 < ny:
                    out.append((i, i + 1))
                if x + 1 < nx:
                    out.append((i, i + ny))
        return sorted(out)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n_sites, self.n_sites))
        for i, j in self.edges():
            a[i, j] = a[j, i] = 1.0
        return a


def double_occupancy(basis: SectorBasis) -> np.ndarray:
    """Number of doubly occupied sites for each basis state."""
    a = basis.states & alpha_mask(basis.n_orb)
    both = a & (basis.states >> 1)
    return np.bitwise_count(both.astype(np.uint64)).astype(np.float64)


def build_hubbard(lattice: LatticeSpec, t: float, U: float, sector: tuple[int, int]) -> SectorHamiltonian:
    n_alpha, n_beta = sector
    basis = SectorBasis.build(lattice.n_sites, n_alpha, n_beta)
    h = np.diag(U * double_occupancy(basis))
    if t != 0.0:
        for i, j in lattice.edges():
            hop = spatial_excitation(basis, i, j)
            h -= t * (hop + hop.T).toarray()
    tag = {"model": "hubbard", "kind": lattice.kind, "dims": list(lattice.dims), "t": t, "U": U}
    return SectorHamiltonian(basis, h, tag)


def half_filling(n_sites: int) -> tuple[int, int]:
    return (n_sites + 1) // 2, n_sites // 2


def hubbard_chain(n_sites: int, U: float, t: float = 1.0) -> SectorHamiltonian:
    """Half-filled open chain, the workhorse system of the experiments."""
    return build_hubbard(LatticeSpec.chain(n_sites), t, U, half_filling(n_sites))
