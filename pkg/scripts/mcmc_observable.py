"""Independent Metropolis-Hastings chains estimating <n_1a n_Nb> on the exact ground state.

The full config runs 100 chains of 10^4 samples per proposal (about half an hour);
shrink it for a smoke run:

    python3 scripts/mcmc_observable.py --set experiment.n_chains=10 --set experiment.n_samples=2000
"""
import sys

from _runner import parser, run_all

if __name__ == "__main__":
    sys.exit(run_all("mcmc-observable", ["hubbard_mcmc.yaml"], parser(__doc__).parse_args()))
