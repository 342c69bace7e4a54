"""Command-line entry point ``dielectric-limit``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import io
from .checks import run_checks
from .config import ConfigError, load_config
from .experiment import RunError, rate_checks, run_pair, sweep_epsilon
from .mms import mms_verify

log = logging.getLogger("dielectric_limit")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dielectric-limit",
        description="Euler-Maxwell to MHD limit experiments on the periodic box.",
    )
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="TOML experiment configuration")
        p.add_argument("--out", type=Path, help="output directory (overrides [output] dir)")
        p.add_argument("--seed", type=int, help="perturbation seed (unsigned 64-bit)")
        p.add_argument("--workers", type=int, help="parallel worker processes")

    p = sub.add_parser("run", help="one Euler-Maxwell/MHD pair")
    common(p)
    p.add_argument("--epsilon", type=float, required=True)
    common(sub.add_parser("sweep", help="epsilon sweep and rate fits"))
    p = sub.add_parser("mms", help="manufactured-solution verification")
    common(p)
    p.add_argument("--epsilon", type=float, default=5e-2)
    common(sub.add_parser("check", help="identity and invariant suite"))
    return ap


def _load(args):
    cfg = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.out is not None:
        changes["output_dir"] = str(args.out)
    return cfg.with_(**changes) if changes else cfg


def _report(results) -> int:
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "run":
            res = run_pair(cfg, args.epsilon)
            out = Path(cfg.output_dir)
            out.mkdir(parents=True, exist_ok=True)
            io.write_series(out / io.series_name(args.epsilon), res.series, cfg.hash())
            for k, v in res.summary.items():
                print(f"{k} = {v:.6g}")
            return 0
        if args.command == "sweep":
            report = sweep_epsilon(cfg, out_dir=cfg.output_dir, workers=cfg.workers)
            for name, fit in report.fits.items():
                print(f"slope {name} = {fit.slope:.4f} [{fit.ci[0]:.4f}, {fit.ci[1]:.4f}]")
            for flag in report.flags:
                print(f"flag: {flag}")
            return _report(rate_checks(report))
        if args.command == "mms":
            rep = mms_verify(eps=args.epsilon, gamma=cfg.gamma)
            for line in rep.lines():
                print(line)
            print("PASS" if rep.passed else "FAIL")
            return 0 if rep.passed else 1
        if args.command == "check":
            return _report(run_checks(cfg))
    except RunError as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
