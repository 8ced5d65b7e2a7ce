"""RBM optimization trajectories for classical and quantum proposals, with the exact-gradient reference."""
import sys

from _runner import parser, run_all

if __name__ == "__main__":
    sys.exit(run_all("vmc", ["hubbard_vmc.yaml", "h2_vmc.yaml"], parser(__doc__).parse_args(), every=50))
