from .basis import (SectorBasis, alpha_mask, beta_mask, counts, from_spins, hamming, hamming_spins,
                    spin_flip, to_bitstring, to_spins)
from .hubbard import LatticeSpec, build_hubbard, double_occupancy, half_filling, hubbard_chain
from .jordan_wigner import (hubbard_terms, is_real, jordan_wigner, molecular_terms, pauli_dense,
                            pauli_sector_matrix)
from .molecular import (FCIDumpError, MolecularIntegrals, apply_hopping_mix, build_molecular, hopping_scale,
                        load_fcidump, sector_from_header, write_fcidump)
from .sector import SectorHamiltonian

__all__ = [
    "SectorBasis", "SectorHamiltonian", "LatticeSpec", "MolecularIntegrals", "FCIDumpError",
    "alpha_mask", "beta_mask", "counts", "from_spins", "hamming", "hamming_spins", "spin_flip",
    "to_bitstring", "to_spins", "build_hubbard", "double_occupancy", "half_filling", "hubbard_chain",
    "hubbard_terms", "is_real", "jordan_wigner", "molecular_terms", "pauli_dense", "pauli_sector_matrix",
    "apply_hopping_mix", "build_molecular", "hopping_scale", "load_fcidump", "sector_from_header",
    "write_fcidump",
]
