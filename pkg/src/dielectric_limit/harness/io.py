"""CSV output for run series and sweep reports."""

from __future__ import annotations

import csv
from pathlib import Path

__all__ = [
    "SERIES_COLUMNS",
    "MixedConfigError",
    "read_series",
    "series_name",
    "write_series",
    "write_sweep_report",
]

SERIES_COLUMNS = (
    "t",
    "norm_s0",
    "norm_s2",
    "norm_s4",
    "weighted_s0",
    "weighted_s2",
    "f_norm_s0",
    "damping_accum",
    "gamma",
    "min_p",
    "min_S",
    "div_H",
)

REPORT_COLUMNS = (
    "epsilon",
    "sup_norm_s0",
    "sup_norm_s2",
    "sup_norm_s4",
    "sup_sqrt_eps_F_s0",
    "sup_sqrt_eps_F_s2",
    "sup_F_s0",
    "sup_F_s2",
    "damping",
    "sup_gamma_s0",
    "sup_gamma_s2",
    "max_div_H",
    "max_div_G",
    "t_reached",
    "n_steps",
    "dt",
)


class MixedConfigError(ValueError):
    """Rows from runs with different configurations were combined."""


def _fmt(x) -> str:
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return format(float(x), ".17g")


def series_name(epsilon: float) -> str:
    return f"series_{epsilon:g}.csv"


def write_series(path: Path, rows: list, config_hash: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_COLUMNS + ("config_hash",))
        for row in rows:
            w.writerow([_fmt(row[c]) for c in SERIES_COLUMNS] + [config_hash])


def read_series(paths) -> dict:
    """Load several series files, refusing to mix configurations.

    Returns ``{path: list of row dicts}``.
    """
    out, seen = {}, set()
    for p in paths:
        with open(p, newline="") as fh:
            rows = list(csv.DictReader(fh))
        seen.update(r["config_hash"] for r in rows)
        out[Path(p)] = [
            {k: (v if k == "config_hash" else float(v)) for k, v in r.items()} for r in rows
        ]
    if len(seen) > 1:
        raise MixedConfigError(f"series come from {len(seen)} different configurations: {sorted(seen)}")
    return out


def write_sweep_report(path: Path, report) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS + ("config_hash",))
        for row in report.rows:
            w.writerow([_fmt(row[c]) for c in REPORT_COLUMNS] + [report.config_hash])
        fh.write("# fitted log-log slopes (95% jackknife interval)\n")
        for name, fit in report.fits.items():
            fh.write(
                f"# slope {name} = {fit.slope:.6f} [{fit.ci[0]:.6f}, {fit.ci[1]:.6f}]"
                f" n={fit.n_used} outliers={list(fit.outliers)}\n"
            )
        fh.write(f"# gamma_constant C = {report.gamma_constant:.9g}\n")
        fh.write(f"# max sup_gamma/(C eps^2) = {report.gamma_bound_ratio:.6f}\n")
        for flag in report.flags:
            fh.write(f"# flag: {flag}\n")
