"""Command-line entry point: simulate, verify, sweep, inequalities, fit.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure,
3 at least one verified claim failed.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence

from . import analysis as an
from .claims import ClaimId, parse_claims, verdict_table, verify, write_verdicts
from .config import ConfigError, ExperimentConfig, load_config, serialize_config, set_value
from .inequality_lab import (
    CaseId,
    InequalityCase,
    applicable_cases,
    estimate_constants,
    generate_corpus,
    write_report_csv,
)
from .kinetics import ModelKind
from .stepper import NonFiniteMomentError, StepFailure, TimeSeries, run, write_snapshot

log = logging.getLogger("rdlab")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_CLAIM_FAILED = 0, 1, 2, 3


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg = cfg.replace(seed=args.seed)
    if getattr(args, "out", None):
        cfg = cfg.replace(output_dir=args.out)
    return cfg


def _outdir(cfg: ExperimentConfig) -> Path:
    p = Path(cfg.output_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = _outdir(cfg)
    series, snaps = run(cfg.domain, cfg.model, cfg.initial, cfg.stepper, cfg.schedule.build(), seed=cfg.seed or 0)
    series.to_csv(out / "series.csv")
    for t, f in snaps.items():
        write_snapshot(out / f"snapshot_t{t:.6g}.txt", f, t)
    (out / "config.ini").write_text(serialize_config(cfg))
    print(f"wrote {out / 'series.csv'} ({len(series)} records)")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _load(args)
    claims = parse_claims(args.claims)
    verdicts = verify(cfg, claims)
    out = _outdir(cfg)
    write_verdicts(out / "verdicts.csv", verdicts)
    print(verdict_table(verdicts))
    return EXIT_OK if all(v.passed for v in verdicts) else EXIT_CLAIM_FAILED


def _parse_axis(spec: str):
    if "=" not in spec:
        raise ConfigError("axis spec must look like section.key=v1,v2,...")
    key, vals = spec.split("=", 1)
    try:
        values = [float(v) for v in vals.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"axis values must be numeric: {vals!r}") from None
    if not values:
        raise ConfigError("axis needs at least one value")
    return key.strip(), values


SWEEP_COLUMNS = ("axis_value", "final_t", "final_mean", "lambda_prime_emp", "exponent", "regime", "rate")


def sweep_point(cfg: ExperimentConfig) -> List[str]:
    """Run one sweep configuration and summarise it as a sweep.csv row (minus the axis value)."""
    series, _ = run(cfg.domain, cfg.model, cfg.initial, cfg.stepper, cfg.schedule.build(), seed=cfg.seed or 0)
    m = cfg.model
    rate_prime = exponent = rate = float("nan")
    regime = ""
    if m.kind is ModelKind.PCPD:
        v = an.classify_pcpd_regime(series, m)
        regime = v.regime.value
        if v.regime is an.Regime.EXPONENTIAL:
            rate = v.value
        else:
            exponent = v.value
    else:
        rate_prime = an.check_decay_sandwich(series, m, cfg.analysis.window, cfg.analysis.tol_disc).rate_prime
        exponent = an.fit_power_law(series, "mean", cfg.analysis.window).exponent
    f = lambda x: format(x, ".17g")  # noqa: E731
    return [f(series.t[-1]), f(series.mean[-1]), f(rate_prime), f(exponent), regime, f(rate)]


def cmd_sweep(args) -> int:
    cfg = _load(args)
    key, values = _parse_axis(args.axis)
    configs = [set_value(cfg, key, v) for v in values]
    workers = max(1, min(len(configs), args.jobs))
    if workers == 1:
        rows = [sweep_point(c) for c in configs]
    else:
        with ProcessPoolExecutor(workers) as ex:
            rows = list(ex.map(sweep_point, configs))
    out = _outdir(cfg)
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow((key,) + SWEEP_COLUMNS[1:])
        for v, row in zip(values, rows):
            w.writerow([format(v, ".17g")] + row)
    print(f"wrote {out / 'sweep.csv'} ({len(rows)} rows)")
    return EXIT_OK


def cmd_inequalities(args) -> int:
    cfg = _load(args)
    iq = cfg.inequalities
    counts = {1: iq.count_1d, 2: iq.count_2d, 3: iq.count_3d}
    out = _outdir(cfg)
    reports, corpus_all = [], []
    for n in iq.dims:
        corpus = generate_corpus(n, iq.sizes, counts[n], seed=cfg.seed or 0)
        corpus_all += corpus
        if iq.cases:
            cases = []
            for c in iq.cases:
                try:
                    cases.append(InequalityCase(CaseId(c), n))
                except ValueError as exc:
                    raise ConfigError(str(exc)) from None
        else:
            cases = applicable_cases(n)
        for case in cases:
            rep = estimate_constants(case, corpus)
            reports.append(rep)
            print(f"n={n} {case.id.value:<18} max_ratio={rep.max_ratio:.6g} skipped={len(rep.skipped)}"
                  f" dilation_spread={rep.dilation_spread:.3g} violations={len(rep.violations)}")
    write_report_csv(out / "inequalities.csv", reports, corpus_all)
    return EXIT_OK


def cmd_fit(args) -> int:
    path = Path(args.series)
    if not path.is_file():
        raise ConfigError(f"series file not found: {path}")
    s = TimeSeries.from_csv(path)
    window = None
    if args.window:
        lo, hi = (float(x) for x in args.window.split(","))
        window = (lo, hi)
    fit = an.fit_power_law(s, args.column, window)
    print(f"exponent={fit.exponent:.17g} amplitude={fit.amplitude:.17g} r2={fit.r2:.17g}"
          f" window=[{fit.window[0]:.6g}, {fit.window[1]:.6g}] samples={fit.samples}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rdlab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="experiment config file (defaults used when omitted)")
        sp.add_argument("--out", help="output directory (overrides [output] dir)")
        sp.add_argument("--seed", type=int, help="override the config seed")

    sp = sub.add_parser("simulate", help="run one simulation, write series.csv")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="check claims, write verdicts.csv")
    common(sp)
    sp.add_argument("--claims", default="", help="comma-separated claim ids (default: all)")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("sweep", help="parallel runs along one numeric config axis")
    common(sp)
    sp.add_argument("--axis", required=True, help="section.key=v1,v2,...")
    sp.add_argument("--jobs", type=int, default=4)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("inequalities", help="corpus report for the interpolation inequalities")
    common(sp)
    sp.set_defaults(func=cmd_inequalities)

    sp = sub.add_parser("fit", help="power-law fit of a column of an existing series.csv")
    sp.add_argument("--series", required=True)
    sp.add_argument("--column", default="mean")
    sp.add_argument("--window", help="lo,hi (default: last decade)")
    sp.set_defaults(func=cmd_fit)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (StepFailure, NonFiniteMomentError) as exc:
        print(f"numerical failure: {exc} (last good time {exc.last_time:.6g})", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
