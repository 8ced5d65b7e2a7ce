"""Spectral gap of every proposal versus interaction strength (Hubbard) and bond length (H4).

    python3 scripts/gap_scans.py [--output-root out] [--set experiment.workers=4]
"""
import sys

from _runner import parser, run_all

if __name__ == "__main__":
    args = parser(__doc__).parse_args()
    sys.exit(run_all("gap-scan", ["hubbard_gap_scan.yaml", "hchain_gap_scan.yaml"], args))
