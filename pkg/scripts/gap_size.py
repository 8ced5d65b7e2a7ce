"""Spectral gap versus system size with log2-linear fits delta = a 2^(-kN).

The 8-site systems have 4900 states; each tau on the grid costs a dense
transition matrix, so a coarser grid is a useful first pass:

    python3 scripts/gap_size.py --quick
"""
import sys

from _runner import parser, run_all

if __name__ == "__main__":
    ap = parser(__doc__)
    ap.add_argument("--quick", action="store_true", help="tau step 1.0 instead of the default grid")
    args = ap.parse_args()
    configs = {"hubbard_gap_size.yaml": "{start: 0.1, stop: 20, step: 1.0}",
               "hchain_gap_size.yaml": "{start: 0.1, stop: 60, step: 1.0}"}
    status = 0
    for name, grid in configs.items():
        extra = [f"experiment.tau_grid={grid}"] if args.quick else []
        status = run_all("gap-size", [name], args, extra) or status
    sys.exit(status)
