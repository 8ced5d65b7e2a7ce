"""Smallest evolution time at which the quantum proposal reaches a fraction c of its best gap."""
import sys

from _runner import parser, run_all

if __name__ == "__main__":
    sys.exit(run_all("tau-threshold", ["hubbard_tau_threshold.yaml"], parser(__doc__).parse_args()))
