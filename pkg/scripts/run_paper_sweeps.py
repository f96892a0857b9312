#!/usr/bin/env python3
"""Reproduce the full sharing-vs-defection experiment matrix.

Runs both market domains over the requested population sizes with the
reference hyperparameters and writes one output directory per (domain,
size) combination. The defaults keep to the quick 10-agent setup; pass
``--sizes 10 50 100`` for the complete matrix (the 100-agent sweeps take
a while). If the separate dos-figures package is installed, each sweep's
three figures are rendered next to its CSVs.
"""

import argparse
import shutil
import subprocess
import sys
from pathlib import Path

from dos_lab.cli import main as dos_lab_main


def render_figures(out_dir: Path) -> None:
    exe = shutil.which("dos-figures")
    if exe is None:
        return
    for kind in ("curves", "shares", "schelling"):
        subprocess.run([exe, "--kind", kind, "--in", str(out_dir),
                        "--out", str(out_dir / f"{kind}.png")], check=True)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results", help="root output directory")
    parser.add_argument("--sizes", type=int, nargs="+", default=[10], help="population sizes")
    parser.add_argument("--domains", nargs="+", default=["simple", "logistic"],
                        choices=["simple", "logistic"])
    parser.add_argument("--runs", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    root = Path(args.out)
    for domain in args.domains:
        for n in args.sizes:
            out_dir = root / f"{domain}_{n}_agents"
            print(f"==> {domain} market, {n} agents -> {out_dir}", flush=True)
            code = dos_lab_main(["run", "--domain", domain, "--agents", str(n),
                                 "--runs", str(args.runs), "--seed", str(args.seed),
                                 "--out", str(out_dir)])
            if code != 0:
                return code
            render_figures(out_dir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
