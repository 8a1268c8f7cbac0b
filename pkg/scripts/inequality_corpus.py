"""Corpus estimates of the interpolation-inequality constants in n = 1, 2 (and optionally 3)."""
import argparse
from pathlib import Path

from rdlab.inequality_lab import (
    applicable_cases,
    calibrate_chain_constants,
    check_gradient_bound_chain,
    estimate_constants,
    generate_corpus,
    write_report_csv,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--count", type=int, default=None, help="families per dimension")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    reports, fields = [], []
    for n in args.dims:
        count = args.count or {1: 70, 2: 40, 3: 12}[n]
        corpus = generate_corpus(n, count=count, seed=args.seed)
        fields += corpus
        print(f"n={n}: {len(corpus)} fields")
        for case in applicable_cases(n):
            rep = estimate_constants(case, corpus)
            reports.append(rep)
            print(f"  {case.id.value:<18} max={rep.max_ratio:11.5g} spread={rep.dilation_spread:.4f}"
                  f" skipped={len(rep.skipped):3d} violations={len(rep.violations)}  argmax={rep.argmax}")
        K, K3 = calibrate_chain_constants(corpus, n)
        chain = [check_gradient_bound_chain(cf.field, K, K3) for cf in corpus if cf.field.values.mean() > 0]
        applicable = [c for c in chain if c.side_condition and c.cubic_side_condition]
        print(f"  chain: K={K:.4g} K3={K3:.4g}; both side conditions hold for {len(applicable)}/{len(chain)},"
              f" final bounds hold for {sum(c.passed for c in applicable)} of those")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        write_report_csv(args.out / "inequalities.csv", reports, fields)


if __name__ == "__main__":
    main()
