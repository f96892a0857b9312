"""Command-line front end: resolve a sweep spec, run it, write artifacts.

Outputs are plain text and fully deterministic for a given resolved spec:

* ``curves.csv``  -- one row per (run, sharer count, iteration) with the
  batch-mean global utility and mean share of that iteration.
* ``schelling.csv`` -- final mean utility per (sharer count, role) with
  0.95 confidence bounds.
* ``meta.json``   -- the fully resolved spec plus the tool version; it
  parses back through ``parse_config`` unchanged.

Exit codes: 0 success, 2 configuration error, 3 runtime/numeric error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

from . import __version__
from .engine import CeConfig
from .experiment import SweepResult, run_sweep, schelling_points, sweep_workers

DOMAIN_KINDS = ("simple", "logistic")

# Resolved-spec keys as they appear in config files and meta.json.
_SPEC_FIELDS = (
    "domain_kind",
    "n",
    "sharer_counts",
    "runs",
    "master_seed",
    "output_dir",
    "n_iter",
    "n_sample",
    "mu0",
    "sigma0",
    "sigma_min",
    "psi",
    "alpha",
    "a_min",
    "a_max",
)
# Accepted in config files but not part of the executable spec.
_INFORMATIONAL_KEYS = ("tool_version",)


class ConfigError(ValueError):
    """Invalid, unknown, or out-of-range configuration input."""


@dataclass(frozen=True)
class ExperimentSpec:
    """A fully resolved sweep: no field is optional past this point."""

    domain_kind: str
    n: int
    sharer_counts: tuple[int, ...]
    runs: int
    master_seed: int
    output_dir: str
    ce: CeConfig

    def to_dict(self) -> dict:
        return {
            "domain_kind": self.domain_kind,
            "n": self.n,
            "sharer_counts": list(self.sharer_counts),
            "runs": self.runs,
            "master_seed": self.master_seed,
            "output_dir": self.output_dir,
            "n_iter": self.ce.n_iter,
            "n_sample": self.ce.n_sample,
            "mu0": self.ce.mu0,
            "sigma0": self.ce.sigma0,
            "sigma_min": self.ce.sigma_min,
            "psi": self.ce.psi,
            "alpha": self.ce.alpha,
            "a_min": self.ce.a_min,
            "a_max": self.ce.a_max,
        }


def default_sharer_counts(n: int) -> tuple[int, ...]:
    """About eleven evenly spaced counts, always including 0 and n."""
    return tuple(sorted({round(i * n / 10) for i in range(11)}))


def _coerce(key: str, value, kind, where: str):
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ConfigError(f"{where}: field '{key}' must be {kind.__name__}, got {value!r}")
    return value


def _load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path} is not valid JSON: {err}") from err
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    unknown = sorted(set(raw) - set(_SPEC_FIELDS) - set(_INFORMATIONAL_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return {key: raw[key] for key in _SPEC_FIELDS if key in raw}


def parse_config(flags: dict, config_path: str | None = None) -> ExperimentSpec:
    """Resolve a spec with precedence flags > config file > defaults.

    ``flags`` maps spec field names to values; entries that are ``None``
    count as "not given". Unknown config-file keys and out-of-range
    values raise :class:`ConfigError` naming the offender.
    """
    merged: dict = {}
    if config_path is not None:
        merged.update(_load_config_file(config_path))
    merged.update({key: value for key, value in flags.items() if value is not None})

    if "domain_kind" not in merged:
        raise ConfigError("missing required field 'domain_kind' (--domain)")
    domain_kind = merged["domain_kind"]
    if domain_kind not in DOMAIN_KINDS:
        raise ConfigError(f"field 'domain_kind' must be one of {DOMAIN_KINDS}, got {domain_kind!r}")

    n = _coerce("n", merged.get("n", 10), int, "config")
    if n < 2:
        raise ConfigError(f"field 'n' must be >= 2, got {n}")

    raw_counts = merged.get("sharer_counts", default_sharer_counts(n))
    if not isinstance(raw_counts, (list, tuple)) or not raw_counts:
        raise ConfigError("field 'sharer_counts' must be a non-empty list of integers")
    counts = tuple(_coerce("sharer_counts", k, int, "config") for k in raw_counts)
    for k in counts:
        if not 0 <= k <= n:
            raise ConfigError(f"field 'sharer_counts': count {k} outside [0, {n}]")
    if len(set(counts)) != len(counts):
        raise ConfigError("field 'sharer_counts' contains duplicates")

    runs = _coerce("runs", merged.get("runs", 10), int, "config")
    if runs < 1:
        raise ConfigError(f"field 'runs' must be >= 1, got {runs}")
    master_seed = _coerce("master_seed", merged.get("master_seed", 0), int, "config")
    if master_seed < 0:
        raise ConfigError(f"field 'master_seed' must be >= 0, got {master_seed}")
    output_dir = _coerce("output_dir", merged.get("output_dir", "out"), str, "config")

    ce_fields = ("n_iter", "n_sample", "mu0", "sigma0", "sigma_min", "psi", "alpha", "a_min", "a_max")
    defaults = CeConfig()
    kwargs = {}
    for key in ce_fields:
        default = getattr(defaults, key)
        kind = int if isinstance(default, int) else float
        kwargs[key] = _coerce(key, merged.get(key, default), kind, "config")
    try:
        ce = CeConfig(**kwargs)
    except ValueError as err:
        raise ConfigError(str(err)) from err

    return ExperimentSpec(domain_kind=domain_kind, n=n, sharer_counts=counts, runs=runs,
                          master_seed=master_seed, output_dir=output_dir, ce=ce)


def _fmt(value) -> str:
    """CSV/JSON cell rendering; floats carry 17 significant digits."""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _json_text(obj, indent: int = 0) -> str:
    """Serialize with explicit float formatting and stable key order."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        items = ",\n".join(f"{inner}{json.dumps(key)}: {_json_text(val, indent + 1)}" for key, val in obj.items())
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_json_text(val) for val in obj) + "]"
    if isinstance(obj, str):
        return json.dumps(obj)
    return _fmt(obj)


def emit_outputs(result: SweepResult, spec: ExperimentSpec) -> None:
    """Write curves.csv, schelling.csv, and meta.json into the output dir."""
    out = spec.output_dir
    lines = ["domain,n,run,k_sharers,iteration,global_utility,mean_share"]
    for r in range(result.runs):
        for k in sorted(result.sharer_counts):
            trace = result.traces[(r, k)]
            for t in range(result.n_iter):
                lines.append(
                    f"{result.domain_kind},{result.n},{r},{k},{t},"
                    f"{_fmt(float(trace.global_utility[t]))},{_fmt(float(trace.mean_share[t]))}"
                )
    with open(os.path.join(out, "curves.csv"), "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")

    lines = ["domain,n,k_sharers,role,mean_utility,ci_lo,ci_hi"]
    for row in schelling_points(result):
        lines.append(
            f"{result.domain_kind},{result.n},{row.k},{row.role},"
            f"{_fmt(row.mean_utility)},{_fmt(row.ci_lo)},{_fmt(row.ci_hi)}"
        )
    with open(os.path.join(out, "schelling.csv"), "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")

    meta = spec.to_dict()
    meta["tool_version"] = __version__
    with open(os.path.join(out, "meta.json"), "w", encoding="utf-8", newline="\n") as handle:
        handle.write(_json_text(meta) + "\n")


def _ensure_writable_dir(path: str) -> None:
    try:
        os.makedirs(path, exist_ok=True)
        probe = os.path.join(path, ".dos-lab-write-probe")
        with open(probe, "w", encoding="utf-8"):
            pass
        os.remove(probe)
    except OSError as err:
        raise ConfigError(f"output directory {path!r} is not writable: {err}") from err


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dos-lab",
                                     description="Sharing-vs-defection sweeps for self-interested optimizers")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a sweep and write CSV/JSON outputs")
    run.add_argument("--config", help="JSON config file; flags override its values")
    run.add_argument("--domain", choices=DOMAIN_KINDS, help="market domain")
    run.add_argument("--agents", type=int, help="number of agents (n >= 2)")
    run.add_argument("--sharers", help="comma-separated sharer counts, e.g. 0,5,10")
    run.add_argument("--runs", type=int, help="independent seeded repetitions")
    run.add_argument("--seed", type=int, help="master seed")
    run.add_argument("--out", help="output directory")
    run.add_argument("--iters", type=int, help="optimization rounds per run")
    run.add_argument("--samples", type=int, help="policy samples per round")
    run.add_argument("--elite-frac", type=float, help="fraction of samples kept per round")
    run.add_argument("--lr", type=float, help="policy update blend rate")
    run.add_argument("--sigma-min", type=float, help="standard deviation floor")
    run.add_argument("--mu0", type=float, help="prior policy mean")
    run.add_argument("--sigma0", type=float, help="prior policy standard deviation")
    run.add_argument("--amin", type=float, help="action box lower bound")
    run.add_argument("--amax", type=float, help="action box upper bound")

    validate = sub.add_parser("validate", help="resolve a config file and print the full spec")
    validate.add_argument("config", help="JSON config file")
    return parser


def _flags_from_args(args: argparse.Namespace) -> dict:
    counts = None
    if args.sharers is not None:
        try:
            counts = [int(piece) for piece in args.sharers.split(",") if piece.strip() != ""]
        except ValueError as err:
            raise ConfigError(f"--sharers must be comma-separated integers: {err}") from err
    return {
        "domain_kind": args.domain,
        "n": args.agents,
        "sharer_counts": counts,
        "runs": args.runs,
        "master_seed": args.seed,
        "output_dir": args.out,
        "n_iter": args.iters,
        "n_sample": args.samples,
        "psi": args.elite_frac,
        "alpha": args.lr,
        "sigma_min": args.sigma_min,
        "mu0": args.mu0,
        "sigma0": args.sigma0,
        "a_min": args.amin,
        "a_max": args.amax,
    }


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            spec = parse_config({}, config_path=args.config)
            print(_json_text(spec.to_dict()))
            return 0
        spec = parse_config(_flags_from_args(args), config_path=args.config)
        workers = sweep_workers()
        _ensure_writable_dir(spec.output_dir)
    except (ConfigError, ValueError) as err:
        print(f"dos-lab: config error: {err}", file=sys.stderr)
        return 2
    try:
        result = run_sweep(spec.domain_kind, spec.n, spec.sharer_counts, spec.runs,
                           spec.ce, spec.master_seed, workers=workers)
        emit_outputs(result, spec)
    except Exception as err:  # noqa: BLE001 - boundary: report and set exit code
        print(f"dos-lab: run failed: {err}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
