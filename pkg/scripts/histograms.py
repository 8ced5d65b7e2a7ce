"""Proposal-probability histograms over configuration-energy differences from a fixed state."""
import sys

from _runner import parser, run_all

if __name__ == "__main__":
    sys.exit(run_all("histogram", ["hubbard_histogram.yaml"], parser(__doc__).parse_args()))
