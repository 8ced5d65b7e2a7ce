"""Shared driver: run one CLI subcommand over a list of configs and print the resulting tables."""
import argparse
import sys
from pathlib import Path

from qavmc.cli import read_csv, run

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def parser(doc: str) -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(description=doc)
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override applied to every config")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--output-root", default="out", help="directory receiving one subdirectory per config")
    return ap


def run_all(subcommand: str, configs, args, extra=(), every: int = 1) -> int:
    status = 0
    for name in configs:
        out = Path(args.output_root) / Path(name).stem
        argv = [subcommand, "--config", str(CONFIGS / name), "--output", str(out)]
        for item in [*extra, *args.set]:
            argv += ["--set", item]
        if args.seed is not None:
            argv += ["--seed", str(args.seed)]
        print(f"== {subcommand}: {name} -> {out}", flush=True)
        code = run(argv)
        if code:
            print(f"   failed with exit code {code}", file=sys.stderr)
            status = status or code
            continue
        for csv_path in sorted(out.glob("*.csv")):
            show(csv_path, every=every)
    return status


def show(path: Path, limit: int = 40, every: int = 1) -> None:
    _, rows = read_csv(path)
    rows = rows[::every]
    if not rows:
        return
    cols = list(rows[0])
    print(f"-- {path.name}")
    print("  " + "  ".join(cols))
    for r in rows[:limit]:
        print("  " + "  ".join(_fmt(r[c]) for c in cols))
    if len(rows) > limit:
        print(f"  ... {len(rows) - limit} more rows")


def _fmt(v) -> str:
    try:
        x = float(v)
    except (TypeError, ValueError):
        return str(v)
    return str(v) if x.is_integer() and "." not in str(v) else f"{x:.5g}"
