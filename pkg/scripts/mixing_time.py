"""Exact mixing times next to the spectral-gap bounds for every proposal."""
import sys

from _runner import parser, run_all

if __name__ == "__main__":
    sys.exit(run_all("mixing-time", ["hubbard_mixing_time.yaml"], parser(__doc__).parse_args()))
