from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import SectorBasis


@dataclass(frozen=True)
class SectorHamiltonian:
    """Real symmetric Hamiltonian matrix on a sector basis.

    ``matrix[j, i] = <S_j|H|S_i>`` with ``S = basis.states``.
    """

    basis: SectorBasis
    matrix: np.ndarray = field(repr=False)
    tag: dict = field(default_factory=dict)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (self.basis.size, self.basis.size):
            raise ValueError(f"matrix shape {m.shape} does not match sector size {self.basis.size}")
        if not np.all(np.isfinite(m)):
            raise ValueError("Hamiltonian has non-finite entries")
        # exact symmetrization; builders already produce symmetric matrices up to rounding
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def size(self) -> int:
        return self.basis.size

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Connected (indices, values) of row ``i``; used by local energies."""
        r = self.matrix[i]
        nz = np.nonzero(r)[0]
        return nz, r[nz]
