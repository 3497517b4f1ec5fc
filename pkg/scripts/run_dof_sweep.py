"""SNR sweep for one experiment file, writing the table next to a slope summary.

    python3 scripts/run_dof_sweep.py configs/example_t3_q2.cfg --out results/simo.csv
"""

import argparse
import time
from pathlib import Path

from nldof.config import load_spec
from nldof.dof import calibrate_sigma0, estimate_dof, run_sweep, trial_seed
from nldof.schemes import Scheme


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("spec")
    ap.add_argument("--decoder")
    ap.add_argument("--trials", type=int)
    ap.add_argument("--sigma0-method", choices=("decoder", "canonical"))
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    spec = load_spec(args.spec).with_overrides(decoder=args.decoder, trials=args.trials,
                                               sigma0_method=args.sigma0_method)
    err = spec.regime_error()
    if err:
        raise SystemExit(f"error: {err}")
    scheme = Scheme(spec.decoder, spec.profile, spec.n_t, spec.n_r)
    t0 = time.perf_counter()
    sigma0 = spec.sigma0
    if sigma0 is None:
        cal = calibrate_sigma0(scheme, n_probe=spec.n_probe, epsilon=spec.epsilon,
                               seed=trial_seed(spec.seed, 1), method=spec.sigma0_method)
        sigma0 = cal.sigma0
    table = run_sweep(spec.dof_config(sigma0), scheme, seed=trial_seed(spec.seed, 2))

    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(table.to_csv())
    else:
        print(table.to_csv(), end="")
    try:
        slope = f"{estimate_dof(table, spec.error_ceiling):.4f}"
    except ValueError as exc:
        slope = f"unavailable ({exc})"
    print(f"# decoder={spec.decoder} D={scheme.D} sigma0={sigma0:.4g} "
          f"slope={slope} target={scheme.predicted_dof(spec.delta):.4f} "
          f"elapsed={time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
