"""Command line runner for the verification suites.

Exit status: 0 when every tolerance holds, 1 on a tolerance failure,
2 on a malformed config or unknown suite.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .experiments import SUITES, ConfigError, Report, report_csv, run_suite

log = logging.getLogger("calderonlab")

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def emit_report(rep: Report, fmt: str, out: Path) -> Path:
    """Write ``<suite>.json`` or ``<suite>.csv`` plus a ``<suite>.meta.json`` sidecar."""
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{rep.suite}.{fmt}"
    path.write_text(rep.to_json() + "\n" if fmt == "json" else report_csv(rep))
    meta = {"written": dt.datetime.now(dt.timezone.utc).isoformat(), "version": __version__, "report": path.name}
    (out / f"{rep.suite}.meta.json").write_text(json.dumps(meta, sort_keys=True) + "\n")
    return path


def plot_report(rep: Report, out: Path) -> Path | None:
    if not rep.rows:
        return None
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    vals = [r["value"] for r in rep.rows]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.hist(vals, bins=min(30, max(5, len(vals) // 3)), color="0.35")
    ax.set_xlabel(rep.rows[0]["metric"])
    ax.set_ylabel("trials")
    ax.set_title(rep.suite)
    fig.tight_layout()
    path = out / f"{rep.suite}.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def cmd_run(args) -> int:
    try:
        raw = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rep = run_suite(raw, args.seed, args.trials)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    path = emit_report(rep, args.format, out)
    if args.plots:
        plot_report(rep, out)
    status = "PASS" if rep.passed else "FAIL"
    print(f"{rep.suite}: {status} ({len(rep.rows)} trials) -> {path}")
    for msg in rep.failures:
        print(f"  {msg}")
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_list(args) -> int:
    for name, s in SUITES.items():
        print(f"{name:22s} {s.summary.split('.')[0]}")
    return EXIT_PASS


def cmd_explain(args) -> int:
    s = SUITES.get(args.suite)
    if s is None:
        print(f"error: unknown suite {args.suite!r}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{s.name}\n\n{s.summary}\n\ncontract: {s.contract}")
    print(f"default trials: {s.default_trials}")
    print("tolerances: " + ", ".join(f"{k}={v:g}" for k, v in sorted(s.tolerance.items())))
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="calderonlab", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the suite named in a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--trials", type=int)
    run.add_argument("--out", default="reports")
    run.add_argument("--format", choices=("csv", "json"), default="json")
    run.add_argument("--plots", action="store_true", help="write a histogram of the per-trial metric")
    run.set_defaults(func=cmd_run)

    ls = sub.add_parser("list-suites", help="list the available suites")
    ls.set_defaults(func=cmd_list)

    ex = sub.add_parser("explain", help="describe a suite and its tolerance contract")
    ex.add_argument("suite")
    ex.set_defaults(func=cmd_explain)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
