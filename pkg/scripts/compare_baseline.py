"""Subspace decoder against pilot-based coherent detection on the same grid.

Prints one line per decoder with the fitted slope, its target and the
worst block error rate over rows that carry a codebook.

    python3 scripts/compare_baseline.py configs/example_t3_q2.cfg --trials 500
"""

import argparse

from nldof.config import load_spec
from nldof.dof import calibrate_sigma0, estimate_dof, run_sweep, trial_seed
from nldof.schemes import Scheme


def sweep(spec, decoder):
    scheme = Scheme(decoder, spec.profile, spec.n_t, spec.n_r)
    cal = calibrate_sigma0(scheme, n_probe=spec.n_probe, epsilon=spec.epsilon,
                           seed=trial_seed(spec.seed, 1), method=spec.sigma0_method)
    table = run_sweep(spec.dof_config(cal.sigma0), scheme, seed=trial_seed(spec.seed, 2))
    return scheme, cal.sigma0, table


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("spec")
    ap.add_argument("--trials", type=int)
    args = ap.parse_args()
    spec = load_spec(args.spec).with_overrides(trials=args.trials)

    for decoder in (spec.decoder, "baseline"):
        if spec.with_overrides(decoder=decoder).regime_error():
            print(f"{decoder:>12}: outside its regime, skipped")
            continue
        scheme, sigma0, table = sweep(spec, decoder)
        slope = estimate_dof(table, spec.error_ceiling)
        worst = max((r.bler for r in table.rows if r.grid), default=float("nan"))
        print(f"{decoder:>12}: D={scheme.D} sigma0={sigma0:.4g} slope={slope:.3f} "
              f"target={scheme.predicted_dof(spec.delta):.3f} "
              f"per-use={slope / spec.T:.3f} max_bler={worst:.4f}")


if __name__ == "__main__":
    main()
