from .optim import Adam, sr_matrix, sr_precondition
from .rbm import RbmParams, grad_log_psi, log2cosh, log_psi
from .vmc import (EnergyGradient, VmcConfig, VmcDivergence, VmcResult, energy_and_gradient, exact_energy,
                  local_energies, local_energy, vmc_optimize)

__all__ = [
    "Adam", "sr_matrix", "sr_precondition", "RbmParams", "grad_log_psi", "log2cosh", "log_psi",
    "EnergyGradient", "VmcConfig", "VmcDivergence", "VmcResult", "energy_and_gradient", "exact_energy",
    "local_energies", "local_energy", "vmc_optimize",
]
