"""Command line entry point: ``manifold-mc <subcommand>`` or ``python -m manifold_mc``.

Exit status is 0 on success, 1 when ``verify`` reports a failed check and 2 on
usage errors.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .harness import ExperimentConfig, ResultManifest, default_jobs, load_config, run_sweep
from .lattice import LatticeShape, build_spectrum_1d
from .observables import fit_scaling_exponent, theoretical_exponents

log = logging.getLogger("manifold_mc")


class UsageError(Exception):
    pass


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _model_args(p, gamma=True):
    p.add_argument("--N", type=int, required=True, help="half-width of the lattice")
    p.add_argument("--d", type=int, default=2, help="domain dimension")
    p.add_argument("--D", type=int, default=1, help="range dimension")
    p.add_argument("--beta", type=float, default=1.0)
    if gamma:
        p.add_argument("--gamma", type=float, default=0.0)


def _out(path):
    return open(path, "w", encoding="utf-8", newline="") if path else sys.stdout


def cmd_spectrum(args):
    shape = LatticeShape(args.N, args.d)
    spec = build_spectrum_1d(args.N)
    import itertools

    with _out(args.out) as fh:
        fh.write("mode,k_tuple,lambda\n")
        for m, k in enumerate(itertools.product(range(shape.sites_per_axis), repeat=shape.d)):
            lam = float(sum(spec.eigenvalues[v] for v in k))
            fh.write(f"{m},{';'.join(map(str, k))},{lam!r}\n")
        if fh is sys.stdout:
            fh.flush()
    return 0


def cmd_sample(args):
    from .gff import ModelParams, apply_drift, sample_prior, write_field_csv

    params = ModelParams.create(args.N, args.d, args.D, args.beta, args.gamma, args.drift)
    _, field = sample_prior(params, args.seed)
    field = apply_drift(field, args.drift)
    if args.out is None:
        raise UsageError("sample requires --out PATH")
    write_field_csv(args.out, field, params, args.seed)
    return 0


def cmd_localtime(args):
    from .gff import ModelParams, read_field_csv, sample_prior
    from .localtime import local_time_histogram, write_histogram_csv

    if args.field:
        field, _ = read_field_csv(args.field)
    elif args.N is not None:
        params = ModelParams.create(args.N, args.d, args.D, args.beta)
        _, field = sample_prior(params, args.seed)
    else:
        raise UsageError("localtime needs --field PATH or --N")
    hist = local_time_histogram(field)
    if args.out:
        write_histogram_csv(args.out, hist)
    else:
        sys.stdout.write("z_tuple,count\n")
        for z, c in hist.items():
            sys.stdout.write(f"{';'.join(map(str, z))},{c}\n")
    return 0


def cmd_mcmc(args):
    from .gff import ModelParams
    from .mcmc import McmcSchedule, run_chain

    if args.config:
        cfg = load_config(args.config)
        params, schedule = cfg.model(cfg.N_values[0]), cfg.schedule
    else:
        if args.N is None:
            raise UsageError("mcmc needs --config PATH or --N")
        params = ModelParams.create(args.N, args.d, args.D, args.beta, args.gamma)
        schedule = McmcSchedule(n_sweeps=args.sweeps, burn_in=args.burn_in, thinning=args.thin)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    trace = run_chain(params, schedule, args.seed)
    trace.write_csv(out / "trace.csv")
    trace.write_sidecar(out / "trace.json")
    rad = trace.diagnostics.get("radius", {})
    print(f"radius {rad.get('mean', float('nan')):.6g} +/- {rad.get('stderr', float('nan')):.3g} "
          f"(ESS {rad.get('ess', float('nan')):.1f})")
    return 0


def cmd_sweep(args):
    if not args.config:
        raise UsageError("sweep requires --config PATH")
    cfg = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    jobs = args.jobs if args.jobs is not None else default_jobs()
    manifest = run_sweep(cfg, jobs=jobs)
    for w in manifest.warnings:
        log.warning(w)
    if manifest.fit:
        print(f"exponent {manifest.fit['exponent']:.4f} +/- {manifest.fit['stderr']:.4f}")
    print(manifest.path)
    return 0


def cmd_verify(args):
    from .verify import run_checks

    report = run_checks(args.level, args.seed if args.seed is not None else 0)
    text = json.dumps(report, indent=2, default=float)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "verify.json").write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0 if report["passed"] else 1


def cmd_fit(args):
    if not args.manifest:
        raise UsageError("fit requires --manifest PATH")
    manifest = ResultManifest.load(args.manifest)
    pts = [(a["N"], a["mean_radius"], a["stderr"]) for a in manifest.aggregates]
    fit = fit_scaling_exponent(pts, args.rho)
    d, D = manifest.config["d"], manifest.config["D"]
    print(f"exponent {fit.exponent:.4f} +/- {fit.stderr:.4f} (rho={fit.rho:g}, R^2={fit.r_squared:.4f})")
    try:
        lo, hi = theoretical_exponents(d, D)
        print(f"target exponents: lower {lo:.4f}, upper {hi:.4f}")
    except ValueError as exc:
        print(f"target exponents: n/a ({exc})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="manifold-mc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="dump Neumann Laplacian eigenvalues as CSV")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sample", help="draw one prior field and write it as CSV")
    _model_args(p)
    p.add_argument("--drift", type=float, default=0.0, help="linear drift amplitude a")
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("localtime", help="local time histogram of a field")
    p.add_argument("--field", help="field CSV written by `sample`")
    p.add_argument("--N", type=int)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--D", type=int, default=1)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_localtime)

    p = sub.add_parser("mcmc", help="run a single chain")
    p.add_argument("--config")
    p.add_argument("--N", type=int)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--D", type=int, default=1)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--sweeps", type=int, default=2000)
    p.add_argument("--burn-in", type=int, default=500)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_mcmc)

    p = sub.add_parser("sweep", help="scaling experiment across N")
    p.add_argument("--config")
    p.add_argument("--seed", type=_u64)
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, help="worker processes (default: $MANIFOLD_MC_JOBS or 1)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the self-check suite and print a JSON report")
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    p.add_argument("--seed", type=_u64)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fit", help="fit the radius exponent from a sweep manifest")
    p.add_argument("--manifest")
    p.add_argument("--rho", type=float, default=0.0, help="fixed log-correction exponent")
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ValueError, FileNotFoundError) as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2


cli_main = main
