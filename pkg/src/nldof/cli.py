"""Command line front end: ``nldof check | simulate | sweep``.

Exit status: 0 on success, 1 when recovery conditions or the decoder fail,
2 on usage or validation errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import defaultdict
from contextlib import contextmanager

import numpy as np

from nldof.config import SpecError, load_spec, validate
from nldof.dof import (
    calibrate_sigma0,
    dmin_for,
    estimate_dof,
    qam_codebook,
    run_sweep,
    run_trial,
    synthetic_table,
    trial_seed,
)
from nldof.schemes import Scheme, check_conditions

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# seed streams derived from the master seed
_CALIBRATION_STREAM = 1
_TRIAL_STREAM = 2


def _parse_grid(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad SNR grid {text!r}") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", required=True, help="experiment description file")
    common.add_argument("--seed", type=int, help="master seed (overrides the spec)")
    common.add_argument("--decoder", choices=("simo", "simo-reduced", "mimo", "baseline"))
    common.add_argument("--force", action="store_true",
                        help="run even outside the decoder regime or with failed conditions")
    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--trials", type=int, help="trials per SNR point")
    run.add_argument("--snr-grid", type=_parse_grid, help="comma separated SNRs in dB")
    run.add_argument("--noiseless", action="store_true", help="skip receiver noise")
    run.add_argument("--out", help="output path (default: stdout)")

    parser = argparse.ArgumentParser(prog="nldof", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="check recovery conditions")
    sub.add_parser("simulate", parents=[common, run], help="stream trial records")
    sw = sub.add_parser("sweep", parents=[common, run], help="SNR sweep and DOF slope")
    sw.add_argument("--format", choices=("csv", "json"), default="csv")
    sw.add_argument("--synthetic", action="store_true",
                    help="skip the channel; rate = D ln(snr) exactly")
    return parser


def _load(args):
    spec = load_spec(args.spec)
    spec = spec.with_overrides(
        seed=args.seed,
        decoder=args.decoder,
        trials=getattr(args, "trials", None),
        snr_grid_db=getattr(args, "snr_grid", None),
        out=getattr(args, "out", None),
    )
    if getattr(args, "noiseless", False):
        spec = spec.with_overrides(noiseless=True)
    validate(spec)
    return spec


@contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _prepare(spec, args):
    """Scheme and sigma0, or an exit status when the run must not start."""
    err = spec.regime_error()
    if err and not args.force:
        print(f"error: {err}", file=sys.stderr)
        return None, None, EXIT_USAGE
    report = check_conditions(spec.decoder, spec.profile, spec.n_t)
    if not report.passed and not args.force:
        print(report.describe(), file=sys.stderr)
        return None, None, EXIT_FAIL
    scheme = Scheme(spec.decoder, spec.profile, spec.n_t, spec.n_r)
    sigma0 = spec.sigma0
    if sigma0 is None:
        cal = calibrate_sigma0(scheme, n_probe=spec.n_probe, epsilon=spec.epsilon,
                               seed=trial_seed(spec.seed, _CALIBRATION_STREAM),
                               method=spec.sigma0_method)
        sigma0 = cal.sigma0
    return scheme, sigma0, EXIT_OK


def cmd_check(args):
    spec = _load(args)
    err = spec.regime_error()
    report = check_conditions(spec.decoder, spec.profile, spec.n_t)
    print(f"profile {spec.profile.name or '<unnamed>'}: Q={spec.Q} T={spec.T} "
          f"n_t={spec.n_t} n_r={spec.n_r} decoder={spec.decoder}")
    if err:
        print(f"regime: {err}")
    print(report.describe())
    payload = report.to_dict()
    payload["regime_error"] = err
    print(json.dumps(payload, sort_keys=True))
    if err and not args.force:
        return EXIT_USAGE
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_simulate(args):
    spec = _load(args)
    scheme, sigma0, status = _prepare(spec, args)
    if status != EXIT_OK:
        return status
    summary = defaultdict(lambda: {"trials": 0, "errors": 0, "guards": defaultdict(int),
                                   "pivot_cond": []})
    with _output(spec.out) as out:
        for i, snr in enumerate(spec.snr_grid):
            codebook = qam_codebook(scheme.D, min(dmin_for(snr, sigma0, spec.delta), 1.0))
            for j in range(spec.trials):
                seed = trial_seed(spec.seed, _TRIAL_STREAM, i, j)
                rec = run_trial(scheme, codebook, snr, seed, noiseless=spec.noiseless)
                out.write(rec.to_json() + "\n")
                s = summary[i]
                s["trials"] += 1
                s["errors"] += not rec.success
                if rec.guard:
                    s["guards"][rec.guard] += 1
                if "pivot_cond" in rec.diagnostics:
                    s["pivot_cond"].append(rec.diagnostics["pivot_cond"])
    dest = sys.stderr if spec.out is None else sys.stdout
    print(f"decoder={spec.decoder} payload={scheme.D} symbols/block T={spec.T} "
          f"sigma0={sigma0:.6g} noiseless={spec.noiseless}", file=dest)
    for i, db in enumerate(spec.snr_grid_db):
        s = summary[i]
        cond = np.mean(s["pivot_cond"]) if s["pivot_cond"] else float("nan")
        guards = ",".join(f"{k}:{v}" for k, v in sorted(s["guards"].items())) or "-"
        print(f"snr_db={db:g} trials={s['trials']} successes={s['trials'] - s['errors']} "
              f"bler={s['errors'] / s['trials']:.4g} mean_pivot_cond={cond:.4g} "
              f"guards={guards}", file=dest)
    return EXIT_OK


def cmd_sweep(args):
    spec = _load(args)
    if args.synthetic:
        scheme = Scheme(spec.decoder, spec.profile, spec.n_t, spec.n_r)
        table = synthetic_table(spec.snr_grid, scheme.D)
        target = float(scheme.D)
    else:
        scheme, sigma0, status = _prepare(spec, args)
        if status != EXIT_OK:
            return status
        table = run_sweep(spec.dof_config(sigma0), scheme,
                          seed=trial_seed(spec.seed, _TRIAL_STREAM), noiseless=spec.noiseless)
        target = scheme.predicted_dof(spec.delta)
    with _output(spec.out) as out:
        if args.format == "csv":
            out.write(table.to_csv())
        else:
            out.write(json.dumps(table.to_records(), sort_keys=True) + "\n")
    dest = sys.stderr if spec.out is None else sys.stdout
    try:
        slope = estimate_dof(table, spec.error_ceiling)
    except ValueError as exc:
        print(f"slope: unavailable ({exc})", file=dest)
        return EXIT_FAIL
    per_use = target / spec.T
    print(f"estimated slope {slope:.4f} nats/block per ln(snr); target {target:.4f} "
          f"({per_use:.4f} per channel use); D={scheme.D}", file=dest)
    return EXIT_OK


COMMANDS = {"check": cmd_check, "simulate": cmd_simulate, "sweep": cmd_sweep}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
