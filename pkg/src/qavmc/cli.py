"""Command-line entry point: ``qavmc <subcommand> --config run.yaml``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

from .config import SCHEMA_VERSION, SUBCOMMANDS, ConfigError, load_config
from .hamiltonians import FCIDumpError
from .markov import MarkovError
from .spectral import SpectralError
from .vmc import VmcDivergence

log = logging.getLogger("qavmc")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2
NUMERICAL_ERRORS = (SpectralError, MarkovError, VmcDivergence, np.linalg.LinAlgError, FloatingPointError)


def _cell(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def write_csv(path: Path, rows: list, provenance: dict) -> None:
    """CSV with one ``# key=value ...`` provenance comment line, then a header row."""
    keys: list = []
    for r in rows:
        keys.extend(k for k in r if k not in keys)
    with open(path, "w", newline="") as fh:
        fh.write("# " + " ".join(f"{k}={provenance[k]}" for k in sorted(provenance)) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for r in rows:
            w.writerow([_cell(r.get(k, "")) for k in keys])


def read_csv(path) -> tuple[dict, list[dict]]:
    """Inverse of :func:`write_csv`: (provenance, rows as strings)."""
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("#"):
            fh.seek(0)
            return {}, list(csv.DictReader(fh))
        prov = dict(item.split("=", 1) for item in first[1:].split())
        return prov, list(csv.DictReader(fh))


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (np.floating, float)):
        o = float(o)
        return o if math.isfinite(o) else str(o)
    if isinstance(o, np.integer):
        return int(o)
    return o


def write_json(path: Path, payload: dict, provenance: dict) -> None:
    doc = {"provenance": provenance, **_jsonable(payload)}
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def write_outputs(out_dir: Path, result: dict, provenance: dict) -> list[Path]:
    """Write everything into a scratch directory first so a failure leaves no partial files."""
    out_dir.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".partial-", dir=out_dir))
    written = []
    try:
        for name, rows in result.get("tables", {}).items():
            write_csv(tmp / f"{name}.csv", rows, provenance)
        for name, payload in result.get("json", {}).items():
            write_json(tmp / f"{name}.json", payload, provenance)
        for f in sorted(tmp.iterdir()):
            dest = out_dir / f.name
            f.replace(dest)
            written.append(dest)
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
    return written


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qavmc", description="Quantum-assisted MCMC proposals: gaps, chains and VMC.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config entry, e.g. system.hubbard.U=4 (repeatable)")
        p.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
        p.add_argument("--output", default=None, help="output directory (overrides the config)")
    return ap


def run(argv=None) -> int:
    from .experiments import PIPELINES

    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.subcommand, args.overrides, args.seed, args.output)
        result = PIPELINES[args.subcommand](cfg)
    except (ConfigError, FCIDumpError) as exc:
        print(f"qavmc: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"qavmc: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    prov = {**cfg.provenance(), "schema_version": SCHEMA_VERSION}
    for path in write_outputs(cfg.output, result, prov):
        log.info("wrote %s", path)
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
