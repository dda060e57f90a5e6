"""Command-line front end: scans, region boundaries, bounds, finite-size plans, self-checks.

Every subcommand writes a table to stdout, either CSV (a ``#`` comment
line with the run's config hash, then a header row) or JSON. Numbers carry
12 significant digits. Exit status is 0 on success, 1 when a computation or
verification fails and 2 on bad usage.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .boundary import DEFAULT_MAX_STEPS, boundary_curve, diagonal_threshold
from .bounds import distance_upper_bound, rate_upper_bound
from .channel import PRESETS, ChannelParams
from .decoy import SchemeConfig
from .fluctuations import DEFAULT_N_SIGMA, DEFAULT_N_TOTAL, finite_max_distance, optimize_plan
from .optimize import max_secure_distance, rate_curve
from .oracle import run_verification

log = logging.getLogger("twoway_qkd")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
FIG4_SCHEMES = ("oneway", "bsteps:1", "recurrence")

SCAN_COLUMNS = ("distance_km", "scheme", "mu_star", "rate")
BOUNDS_COLUMNS = ("distance_km", "mu", "rate_upper")
BOUNDARY_COLUMNS = ("delta_b", "delta_p_max", "witness")
FLUCT_COLUMNS = ("distance_km", "scheme", "frac_signal", "frac_vacuum", "frac_weak", "mu", "nu", "rate")
SUMMARY_COLUMNS = ("scheme", "max_distance_km")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a run's output (worker count excluded)."""

    channel: ChannelParams
    schemes: tuple[str, ...] = ()
    d_from: float = 0.0
    d_to: float = 200.0
    d_step: float = 1.0
    mu: float | None = None
    f_ec: float = 1.22
    q_sift: float = 0.5
    decoy: str = "asymptotic"
    nu: float = 0.05
    max_steps: int = DEFAULT_MAX_STEPS
    n_total: float = DEFAULT_N_TOTAL
    n_sigma: float = DEFAULT_N_SIGMA
    seed: int = 0
    fmt: str = "csv"
    workers: int = field(default=1, compare=False)

    def __post_init__(self):
        if not self.d_step > 0:
            raise UsageError("--step must be positive")
        if self.d_from > self.d_to:
            raise UsageError("--from must not exceed --to")
        if self.fmt not in ("csv", "json"):
            raise UsageError("--format must be csv or json")
        for s in self.schemes:
            try:
                SchemeConfig(scheme=s)
            except ValueError as exc:
                raise UsageError(str(exc)) from None

    def scheme_config(self, scheme: str) -> SchemeConfig:
        return SchemeConfig(
            q_sift=self.q_sift, f_ec=self.f_ec, scheme=scheme, mu=self.mu, decoy=self.decoy, nu=self.nu
        )

    def distances(self) -> list[float]:
        n = int(math.floor((self.d_to - self.d_from) / self.d_step + 1e-9))
        return [round(self.d_from + k * self.d_step, 9) for k in range(n + 1)]

    def digest(self) -> str:
        d = asdict(self)
        d.pop("workers")
        d["channel"] = self.channel.to_json_dict()
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    if x is None:
        return ""
    return str(x)


def _json_value(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return float(f"{x:.12g}") if math.isfinite(x) else str(x)
    return x


def emit(command: str, cfg: RunConfig, columns, rows, out=None, meta: dict | None = None) -> None:
    out = out or sys.stdout
    meta = meta or {}
    if cfg.fmt == "json":
        doc = {
            "command": command,
            "config_sha256": cfg.digest(),
            **{k: _json_value(v) for k, v in meta.items()},
            "columns": list(columns),
            "rows": [[_json_value(v) for v in r] for r in rows],
        }
        json.dump(doc, out, indent=1)
        out.write("\n")
        return
    extra = "".join(f" {k}={_fmt(v)}" for k, v in meta.items())
    out.write(f"# twoway-qkd {command} config_sha256={cfg.digest()}{extra}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows([_fmt(v) for v in r] for r in rows)


def cmd_scan(cfg: RunConfig, out=None) -> int:
    if not cfg.schemes:
        raise UsageError("scan needs at least one --scheme (oneway, bsteps:<n>, recurrence)")
    ds = cfg.distances()
    rows = []
    curves = {}
    for s in sorted(cfg.schemes):
        log.info("scanning %s over %d distances", s, len(ds))
        curves[s] = rate_curve(cfg.channel, cfg.scheme_config(s), ds, workers=cfg.workers)
    for i, d in enumerate(ds):
        for s in sorted(cfg.schemes):
            opt = curves[s][i]
            rows.append((float(d), s, opt.mu_star, opt.rate_star))
    emit("scan", cfg, SCAN_COLUMNS, rows, out)
    return EXIT_OK


def cmd_bounds(cfg: RunConfig, out=None) -> int:
    try:
        d_max = distance_upper_bound(cfg.channel)
    except ValueError as exc:
        log.error("distance bound undefined: %s", exc)
        return EXIT_FAIL
    mu = cfg.mu if cfg.mu is not None else 1.0
    rows = [(float(d), mu, float(rate_upper_bound(cfg.channel, d, mu))) for d in cfg.distances()]
    meta = {"distance_upper_km": d_max if math.isfinite(d_max) else "unbounded"}
    emit("bounds", cfg, BOUNDS_COLUMNS, rows, out, meta)
    return EXIT_OK


def cmd_boundary(cfg: RunConfig, out=None) -> int:
    n = int(math.floor((min(cfg.d_to, 0.25) - cfg.d_from) / cfg.d_step + 1e-9))
    dbs = [round(cfg.d_from + k * cfg.d_step, 9) for k in range(n + 1)]
    dbs = [x for x in dbs if x < 0.25]
    pts = boundary_curve(cfg.max_steps, dbs, workers=cfg.workers)
    rows = [(p.delta_b, p.delta_p, p.witness) for p in pts]
    meta = {"max_steps": cfg.max_steps, "diagonal_threshold": diagonal_threshold(cfg.max_steps)}
    emit("boundary", cfg, BOUNDARY_COLUMNS, rows, out, meta)
    return EXIT_OK


def cmd_fluct(cfg: RunConfig, out=None, max_distance: bool = False) -> int:
    schemes = sorted(cfg.schemes or FIG4_SCHEMES)
    if max_distance:
        rows = []
        for s in schemes:
            log.info("finite-size maximal distance for %s", s)
            d = finite_max_distance(cfg.channel, cfg.scheme_config(s), cfg.n_total, cfg.n_sigma)
            rows.append((s, d))
        emit("fluct", cfg, SUMMARY_COLUMNS, rows, out)
        return EXIT_OK
    rows = []
    for d in cfg.distances():
        for s in schemes:
            opt = optimize_plan(cfg.channel, cfg.scheme_config(s), d, cfg.n_total, cfg.n_sigma)
            p = opt.plan
            if p is None:
                rows.append((float(d), s, None, None, None, None, None, 0.0))
            else:
                rows.append((float(d), s, p.frac_signal, p.frac_vacuum, p.frac_weak, p.mu, p.nu, opt.rate))
    emit("fluct", cfg, FLUCT_COLUMNS, rows, out)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out=None) -> int:
    checks = run_verification(seed=cfg.seed)
    rows = [(c.name, "pass" if c.passed else "FAIL", c.detail) for c in checks]
    emit("verify", cfg, ("check", "status", "detail"), rows, out)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def cmd_maxdist(cfg: RunConfig, out=None) -> int:
    if not cfg.schemes:
        raise UsageError("maxdist needs at least one --scheme")
    rows = []
    for s in sorted(cfg.schemes):
        res = max_secure_distance(cfg.channel, cfg.scheme_config(s))
        rows.append((s, res.distance_km))
    emit("maxdist", cfg, SUMMARY_COLUMNS, rows, out)
    return EXIT_OK


COMMANDS = {
    "scan": cmd_scan,
    "bounds": cmd_bounds,
    "boundary": cmd_boundary,
    "fluct": cmd_fluct,
    "verify": cmd_verify,
    "maxdist": cmd_maxdist,
}

_DESCRIPTIONS = {
    "scan": "Optimized key rate per pulse versus distance. Columns: " + ", ".join(SCAN_COLUMNS) + ".",
    "bounds": "Protocol-independent distance bound (in the leading comment line) and single-photon rate bound. "
    "Columns: " + ", ".join(BOUNDS_COLUMNS) + ".",
    "boundary": "Largest tolerable phase error for each bit error under B/P sequences of at most "
    "--n-bsteps steps; --from/--to/--step select the bit-error grid (default 0..0.24 step 0.01). "
    "Columns: " + ", ".join(BOUNDARY_COLUMNS) + ".",
    "fluct": "Finite-size rates with the best pulse allocation and intensities at each distance. Columns: "
    + ", ".join(FLUCT_COLUMNS)
    + "; with --max-distance: "
    + ", ".join(SUMMARY_COLUMNS)
    + ".",
    "verify": "Enumeration and Monte Carlo checks of the step formulas. Columns: check, status, detail.",
    "maxdist": "Asymptotic maximal secure distance per scheme. Columns: " + ", ".join(SUMMARY_COLUMNS) + ".",
}

_RANGE_DEFAULTS = {
    "boundary": (0.0, 0.24, 0.01),
    "fluct": (0.0, 140.0, 20.0),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--config", type=Path, help="JSON run configuration")
    src.add_argument("--preset", choices=sorted(PRESETS), help="built-in channel parameters (default gys)")
    common.add_argument(
        "--scheme", action="append", default=None, help="oneway, bsteps:<n> or recurrence (repeatable)"
    )
    common.add_argument("--from", dest="d_from", type=float, help="first distance in km")
    common.add_argument("--to", dest="d_to", type=float, help="last distance in km")
    common.add_argument("--step", dest="d_step", type=float, help="distance step in km")
    common.add_argument("--mu", type=float, help="fixed signal intensity instead of optimizing it")
    common.add_argument("--f-ec", type=float, help="error-correction inefficiency (default 1.22)")
    common.add_argument("--decoy", choices=("asymptotic", "practical"), help="decoy estimate mode")
    common.add_argument("--nu", type=float, help="weak decoy intensity in practical mode")
    common.add_argument("--n-bsteps", type=int, help="longest B/P sequence for boundary (default 12)")
    common.add_argument("--n-total", type=float, help="pulses sent, finite-size analysis (default 6e9)")
    common.add_argument("--n-sigma", type=float, help="standard deviations of fluctuation (default 10)")
    common.add_argument("--seed", type=int, help="Monte Carlo seed for verify")
    common.add_argument("--format", dest="fmt", choices=("csv", "json"), help="output format (default csv)")
    common.add_argument("--workers", type=int, default=1, help="worker processes")
    common.add_argument("-v", "--verbose", action="store_true", help="diagnostics on stderr")

    parser = argparse.ArgumentParser(prog="twoway-qkd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in _DESCRIPTIONS.items():
        p = sub.add_parser(name, parents=[common], help=text.split(".")[0], description=text)
        if name == "fluct":
            p.add_argument("--max-distance", action="store_true", help="report maximal distances instead")
    return parser


def _load_config_file(path: Path) -> dict:
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError("config must be a JSON object")
    return doc


_FILE_KEYS = {
    "preset", "channel", "schemes", "from", "to", "step", "mu", "f_ec", "q_sift",
    "decoy", "nu", "n_bsteps", "n_total", "n_sigma", "seed", "format",
}  # fmt: skip


def config_from_args(args: argparse.Namespace) -> RunConfig:
    doc = _load_config_file(args.config) if args.config else {}
    unknown = set(doc) - _FILE_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    if "channel" in doc:
        try:
            channel = ChannelParams.from_json_dict(doc["channel"])
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"bad channel in config: {exc}") from None
    else:
        name = (args.preset or doc.get("preset", "gys")).lower()
        if name not in PRESETS:
            raise UsageError(f"unknown preset {name!r}; valid: {sorted(PRESETS)}")
        channel = PRESETS[name]

    lo, hi, step = _RANGE_DEFAULTS.get(args.command, (0.0, 200.0, 1.0))

    def pick(flag, key, default):
        v = getattr(args, flag)
        return v if v is not None else doc.get(key, default)

    try:
        return RunConfig(
            channel=channel,
            schemes=tuple(args.scheme if args.scheme is not None else doc.get("schemes", ())),
            d_from=float(pick("d_from", "from", lo)),
            d_to=float(pick("d_to", "to", hi)),
            d_step=float(pick("d_step", "step", step)),
            mu=pick("mu", "mu", None),
            f_ec=float(pick("f_ec", "f_ec", 1.22)),
            q_sift=float(doc.get("q_sift", 0.5)),
            decoy=pick("decoy", "decoy", "asymptotic"),
            nu=float(pick("nu", "nu", 0.05)),
            max_steps=int(pick("n_bsteps", "n_bsteps", DEFAULT_MAX_STEPS)),
            n_total=float(pick("n_total", "n_total", DEFAULT_N_TOTAL)),
            n_sigma=float(pick("n_sigma", "n_sigma", DEFAULT_N_SIGMA)),
            seed=int(pick("seed", "seed", 0)),
            fmt=pick("fmt", "format", "csv"),
            workers=args.workers,
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.DEBUG if args.verbose else logging.WARNING)
    try:
        cfg = config_from_args(args)
        if args.verbose:
            log.debug("config %s", json.dumps({**asdict(cfg), "channel": cfg.channel.to_json_dict()}))
        if args.command == "fluct":
            return cmd_fluct(cfg, max_distance=args.max_distance)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"twoway-qkd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
