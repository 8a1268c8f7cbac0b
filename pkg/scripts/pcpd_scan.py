"""PCPD regime scan over lambda: classification, relaxation rate, variance decay."""
import argparse

import numpy as np

from rdlab import analysis as an
from rdlab.grid import DomainSpec
from rdlab.kinetics import ModelSpec, pcpd_relaxation_rate
from rdlab.stepper import InitialCondition, RunSchedule, StepperConfig, run


def end_time(lam: float) -> float:
    # exponential relaxation needs little time; the power laws need several decades
    return 200.0 if lam > 0 else (2000.0 if lam == 0 else 10000.0)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lams", type=float, nargs="+", default=[0.5, 0.25, 0.0, -0.25, -0.5])
    ap.add_argument("--mu", type=float, default=1.0)
    ap.add_argument("--length", type=float, default=200.0)
    ap.add_argument("--h", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    dom = DomainSpec.box(1, args.length, args.h)
    ic = InitialCondition("uniform_noise", {"lo": 0.0, "hi": 2.0})
    print(f"{'lam':>6} {'regime':>13} {'value':>9} {'expected':>9} {'sandwich':>9} {'var':>22}")
    for lam in args.lams:
        m = ModelSpec.pcpd(lam, args.mu)
        s, _ = run(dom, m, ic, StepperConfig(), RunSchedule.geometric(end_time(lam), growth=1.05), seed=args.seed)
        v = an.classify_pcpd_regime(s, m)
        var = an.check_variance_decay(s, m)
        expected = pcpd_relaxation_rate(m) if lam > 0 else (-0.5 if lam == 0 else -1.0)
        var_txt = (f"rate {var.detail['rate']:.3f}" if lam > 0 else f"exponent {var.detail['exponent']:.2f}")
        print(f"{lam:6.2f} {v.regime.value:>13} {v.value:9.4f} {expected:9.4f} "
              f"{'ok' if v.sandwich_ok else 'FAIL':>9} {var_txt:>22}")
    print("final means follow a_inf = max(lam, 0)/mu:", np.round([max(l, 0) / args.mu for l in args.lams], 3))


if __name__ == "__main__":
    main()
