"""
A small scaling sweep
=====================

Replicated chains across N, aggregated radii and a log-log fit of the radius
exponent, with a gamma = 0 control.  The acceptance-grade run uses longer chains
and N up to 16; this one finishes in a few minutes.
"""
import tempfile

from manifold_mc import ExperimentConfig, McmcSchedule, run_sweep, theoretical_exponents

schedule = McmcSchedule(n_sweeps=8000, burn_in=2000, thinning=10)
with tempfile.TemporaryDirectory() as out:
    for gamma in (1.0, 0.0):
        cfg = ExperimentConfig(N_values=(3, 4, 6, 8), gamma=gamma, schedule=schedule, replicas=2,
                               seed=5, out=f"{out}/g{gamma}")
        m = run_sweep(cfg)
        for a in m.aggregates:
            print(f"  gamma={gamma} N={a['N']}: R={a['mean_radius']:.2f}+/-{a['stderr']:.2f}")
        if m.fit:
            print(f"gamma={gamma}: exponent {m.fit['exponent']:.3f}+/-{m.fit['stderr']:.3f}")
        for w in m.warnings:
            print("  warning:", w)
print("theory for d=2, D=1:", theoretical_exponents(2, 1))
