"""Command-line front end: run scenarios, print spectra, verify invariants.

Subcommands
-----------
run       simulate a scenario and write births.csv, diagnostics.csv,
          decayfit.json and the requested snapshot files
spectral  print the growth rate, residuals and an x,N,phi table
distance  print the flat distance between two snapshot files
verify    run the invariant suite for a scenario, exit nonzero on failure

Exit codes: 0 ok, 1 config error, 2 numerical failure, 3 verification
failure.  ``RENEWAL_THREADS`` caps the number of worker threads used by
``verify`` (0, the default, means fully sequential); reports are always
emitted in a fixed order regardless of threading.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .convergence import fit_decay_rate, mk_sequence_check, reshetnyak_harness
from .entropy import dissipation_J, gre_functional, verify_B_dominates_phi
from .errors import RenewalError, ScenarioError
from .measures import (
    flat_distance,
    integrate,
    linear_combination,
    read_snapshot,
    weighted_variation,
    write_snapshot,
)
from .scenarios import Scenario, load_scenario
from .spectral import solve_spectral, stationary_measure
from .transport import birth_series, evolve, tail_phi_mass

_F = "{:.17g}".format


def _sample_times(sc: Scenario):
    count = int(math.floor(sc.horizon / sc.sample_dt + 1e-9)) + 1
    return [k * sc.sample_dt for k in range(count)]


def _simulate(sc: Scenario):
    spectral = solve_spectral(sc.birth_law)
    traj = birth_series(sc.initial, sc.birth_law, spectral, sc.dt, sc.horizon)
    return spectral, traj


def cmd_run(sc: Scenario, out_dir: str, quiet: bool) -> int:
    spectral, traj = _simulate(sc)
    os.makedirs(out_dir, exist_ok=True)

    with open(os.path.join(out_dir, "births.csv"), "w", encoding="ascii") as fh:
        fh.write("t,b\n")
        for t, b in zip(traj.times, traj.births):
            fh.write(f"{_F(t)},{_F(b)}\n")

    for ts in sc.snapshot_times:
        snap = evolve(traj, ts)
        write_snapshot(snap, os.path.join(out_dir, f"snapshot_{ts:g}.csv"))

    integrands = sc.integrands()
    m0 = integrate(traj.initial, spectral.phi)
    n_zero = spectral.N(0.0)
    times = _sample_times(sc)
    names = ["t", "D_phi", "D_one", "m_k", "conserved_phi_mass"]
    names += [f"gre_{H.name}" for H in integrands]
    names += [f"J_{H.name}" for H in integrands]

    d_phi_series = []
    with open(os.path.join(out_dir, "diagnostics.csv"), "w", encoding="ascii") as fh:
        fh.write(",".join(names) + "\n")
        for t in times:
            snap = evolve(traj, t)
            eq = stationary_measure(spectral, snap.x_max, snap.h, mass=m0)
            diff = linear_combination(1.0, snap, -1.0, eq)
            d_phi = weighted_variation(diff, spectral.phi, (t,))
            d_one = weighted_variation(diff, None, (t,))
            m_k = integrate(snap, sc.birth_law.quad_values) / n_zero
            conserved = integrate(snap, spectral.phi) + tail_phi_mass(traj, t)
            row = [t, d_phi, d_one, m_k, conserved]
            row += [gre_functional(snap, spectral, H) for H in integrands]
            row += [dissipation_J(snap, sc.birth_law, spectral, H) for H in integrands]
            fh.write(",".join(_F(v) for v in row) + "\n")
            d_phi_series.append((t, d_phi))

    lo = 0.2 * sc.horizon
    window = [(t, d) for t, d in d_phi_series if t >= lo]
    fit_payload = {
        "eta_name": "phi", "sigma_hat": None, "y0_hat": None,
        "r_squared": None, "m0": m0, "sample_count": 0,
    }
    try:
        fit = fit_decay_rate(window, eta_name="phi", m0=m0)
        fit_payload.update(
            sigma_hat=fit.sigma_hat, y0_hat=fit.y0_hat,
            r_squared=fit.r_squared, sample_count=len(fit.samples),
        )
    except RenewalError:
        pass  # stationary data: nothing above the floating floor to fit
    with open(os.path.join(out_dir, "decayfit.json"), "w", encoding="ascii") as fh:
        json.dump(fit_payload, fh, sort_keys=True, indent=2)
        fh.write("\n")

    if not quiet:
        print(f"wrote births.csv, diagnostics.csv, decayfit.json to {out_dir}")
    return 0


def cmd_spectral(sc: Scenario) -> int:
    spectral = solve_spectral(sc.birth_law)
    print(f"lambda0 = {_F(spectral.lambda0)}")
    print(f"phi0 = {_F(spectral.phi0)}")
    print(f"residual_euler_lotka = {_F(spectral.residual_euler_lotka)}")
    print(f"residual_normalization = {_F(spectral.residual_normalization)}")
    print("x,N,phi")
    xs = np.arange(int(round(sc.x_max / sc.h)) + 1) * sc.h
    Ns = spectral.N(xs)
    phis = spectral.phi(xs)
    for x, nv, pv in zip(xs, Ns, phis):
        print(f"{_F(x)},{_F(nv)},{_F(pv)}")
    return 0


def cmd_distance(path_a: str, path_b: str) -> int:
    mu = read_snapshot(path_a)
    nu = read_snapshot(path_b)
    print(_F(flat_distance(mu, nu)))
    return 0


def _verify_checks(sc: Scenario):
    spectral, traj = _simulate(sc)
    times = _sample_times(sc)
    m0 = integrate(traj.initial, spectral.phi)
    integrands = sc.integrands()

    def conservation():
        scale = max(abs(m0), 1e-30)
        worst = max(
            abs(integrate(evolve(traj, t), spectral.phi) + tail_phi_mass(traj, t) - m0)
            for t in times
        )
        return worst / scale <= 1e-6, f"max relative drift {worst / scale:.3e}"

    def gre_monotone():
        worst = -math.inf
        snaps = [evolve(traj, t) for t in times]
        for H in integrands:
            vals = [gre_functional(s, spectral, H) for s in snaps]
            worst = max(worst, max(b - a for a, b in zip(vals[:-1], vals[1:])))
        return worst <= 1e-8, f"max sampled increase {worst:.3e}"

    def dissipation():
        min_j = math.inf
        cum_ok = True
        detail = []
        snaps = [evolve(traj, t) for t in times]
        for H in integrands:
            js = [dissipation_J(s, sc.birth_law, spectral, H) for s in snaps]
            min_j = min(min_j, min(js))
            total = float(np.trapezoid(js, dx=sc.sample_dt))
            bound = gre_functional(traj.initial, spectral, H) + 1e-6
            cum_ok = cum_ok and total <= bound
            detail.append(f"{H.name}: int J = {total:.6g} <= {bound:.6g}")
        ok = min_j >= -1e-10 and cum_ok
        return ok, f"min J {min_j:.3e}; " + "; ".join(detail)

    def mollification():
        if not (traj.initial.atoms and sc.eps_list):
            return True, "skipped: no atoms or no eps ladder"
        H = integrands[0]
        rep = reshetnyak_harness(traj.initial, spectral, H, sc.eps_list)
        return rep.passed, (
            f"entropy gaps {rep.gre_gaps[0]:.3e} -> {rep.gre_gaps[-1]:.3e}"
        )

    def domination():
        holds, c = verify_B_dominates_phi(sc.birth_law, spectral)
        return holds, f"C = {c:.6g}"

    def birth_integral():
        rep = mk_sequence_check(traj, sc.birth_law, spectral,
                                times[:: max(1, len(times) // 20)][1:] or times[1:])
        return rep.passed, f"final |m_k - m0| = {rep.final_deviation:.3e}"

    return [
        ("conservation", conservation),
        ("gre_monotonicity", gre_monotone),
        ("dissipation", dissipation),
        ("mollification", mollification),
        ("birth_dominates_phi", domination),
        ("birth_integral_limit", birth_integral),
    ]


def cmd_verify(sc: Scenario) -> int:
    checks = _verify_checks(sc)
    threads = int(os.environ.get("RENEWAL_THREADS", "0") or 0)
    if threads > 0:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda c: c[1](), checks))
    else:
        results = [fn() for _, fn in checks]
    failed = False
    for (name, _), (ok, detail) in zip(checks, results):
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failed = failed or not ok
    return 3 if failed else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="renewalsim",
        description="Age-renewal simulator for measure-valued initial data",
    )
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="simulate a scenario and write artifacts")
    run_p.add_argument("--scenario", required=True)
    run_p.add_argument("--out", default=None, help="override the scenario output dir")

    spec_p = sub.add_parser("spectral", help="print eigendata for a scenario")
    spec_p.add_argument("--scenario", required=True)

    dist_p = sub.add_parser("distance", help="flat distance between two snapshots")
    dist_p.add_argument("file_a")
    dist_p.add_argument("file_b")

    ver_p = sub.add_parser("verify", help="run the invariant suite")
    ver_p.add_argument("--scenario", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            sc = load_scenario(args.scenario)
            return cmd_run(sc, args.out or sc.out_dir, args.quiet)
        if args.command == "spectral":
            return cmd_spectral(load_scenario(args.scenario))
        if args.command == "distance":
            return cmd_distance(args.file_a, args.file_b)
        if args.command == "verify":
            return cmd_verify(load_scenario(args.scenario))
    except ScenarioError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return 1
    except RenewalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 0
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
