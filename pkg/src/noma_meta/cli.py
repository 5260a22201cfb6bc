"""Command-line front end: scenario JSON in, tables and curves out.

Subcommands
    moments   : analytical CSP moments M_b vs theta per rank (+ gain table)
    meta      : exact / beta-fit / bounds (and optional empirical) curves
    delay     : local-delay statistics and the retransmission transform
    simulate  : Monte Carlo estimates (moments, meta, pcf, second moment)
    optimize  : power-allocation problems P1/P2/P3
    validate  : run the acceptance suite

Values cross the CLI boundary in dB; everything below it is linear scale.
Every command writes a manifest.json capturing the scenario, overrides,
seed, and library versions, sufficient to reproduce the outputs
byte-for-byte.  CSV cells use 10 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, downlink, metadist, uplink
from .geometry import DOWNLINK, UPLINK, InterfererModel, NetworkParams, pcf_fit, \
    normalized_second_moment
from .optimizer import solve_p1, solve_p2, solve_p3
from .scenario import Scenario, ScenarioError, linear_to_db
from .simulator import SimConfig, coverage_curves, csp_table, empirical_meta, \
    estimate_pcf, estimate_second_moment, run_manifest

_FMT = "%.10g"


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if value is None:
        return ""
    return _FMT % value


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_manifest(outdir: Path, command: str, scenario: Scenario, args, extra=None):
    payload = {
        "command": command,
        "scenario": scenario.raw,
        "overrides": {
            "seed": args.seed,
            "grid": args.grid,
            "threads": args.threads,
        },
        "versions": {
            "noma_meta": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    payload["config_hash"] = hashlib.sha256(blob).hexdigest()
    if extra:
        payload.update(extra)
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)


def _analytic_moment(scenario: Scenario, order: complex, m: int, theta: float):
    if scenario.direction == DOWNLINK:
        betas = scenario.betas or downlink.PowerAllocation.single()
        return downlink.csp_moment(order, m, scenario.params, betas, theta)
    return uplink.csp_moment(order, m, theta, scenario.params, scenario.default_model())


def cmd_moments(scenario: Scenario, outdir: Path, args) -> int:
    thetas_db = scenario.theta_grid_db(args.grid)
    thetas = scenario.theta_grid(args.grid)
    rows = []
    for theta_db, theta in zip(thetas_db, thetas):
        for m in scenario.ranks():
            for order in scenario.orders():
                if order.real < 0 and order.imag == 0 and scenario.direction == DOWNLINK:
                    betas = scenario.betas or downlink.PowerAllocation.single()
                    mv = downlink.neg_moment(-order.real, m, scenario.params, betas, theta)
                else:
                    mv = _analytic_moment(scenario, order, m, theta)
                rows.append((theta_db, m, order.real, order.imag,
                             mv.value.real, mv.value.imag, mv.classification.value))
    _write_csv(outdir / "moments.csv",
               ["theta_db", "rank", "order_re", "order_im",
                "value_re", "value_im", "classification"], rows)

    gain_rows = []
    if any(o == 1 for o in scenario.orders()):
        for theta_db, theta in zip(thetas_db, thetas):
            g = metadist.gain(theta, scenario.params, scenario.direction,
                              betas=scenario.betas, model=scenario.default_model())
            gain_rows.append((theta_db, g))
        _write_csv(outdir / "gain.csv", ["theta_db", "gain"], gain_rows)
    _write_manifest(outdir, "moments", scenario, args)
    print(f"moments: wrote {len(rows)} rows to {outdir/'moments.csv'}"
          + (f" and {len(gain_rows)} gains" if gain_rows else ""))
    return 0


def _meta_inputs(scenario: Scenario, m: int, theta: float):
    m1 = _analytic_moment(scenario, 1, m, theta)
    m2 = _analytic_moment(scenario, 2, m, theta)
    return m1, m2


def cmd_meta(scenario: Scenario, outdir: Path, args) -> int:
    theta = float(scenario.theta_grid(args.grid)[0])
    xs = scenario.x_grid()
    curve_rows, bound_rows, exact_rows = [], [], []
    sup_dist = {}
    for m in scenario.ranks():
        m1, m2 = _meta_inputs(scenario, m, theta)
        if not m1.is_finite or m1.value.real <= 0.0:
            # threshold regime: the CSP is a.s. zero and the meta curve flat
            fit = metadist.MetaCurve(xs, np.zeros_like(xs), metadist.BETA_FIT,
                                     note="threshold regime")
            exact = metadist.MetaCurve(xs, np.zeros_like(xs), metadist.EXACT,
                                       note="threshold regime")
            lo = hi = np.zeros_like(xs)
        else:
            fit = metadist.beta_approx_meta(m1.value.real, m2.value.real, xs)
            if scenario.direction == DOWNLINK:
                betas = scenario.betas or downlink.PowerAllocation.single()
                moment_fn = downlink.moment_jt_fn(m, scenario.params, betas, theta)
            else:
                moment_fn = metadist.vectorized_moment(
                    lambda t, _m=m: uplink.csp_moment(
                        1j * t, _m, theta, scenario.params, scenario.default_model()
                    ).value
                )
            exact = metadist.exact_meta_curve(moment_fn, xs)
            moments = {1: m1.value.real, 2: m2.value.real}
            band = np.array([metadist.meta_bounds(moments, float(x)) for x in xs])
            lo, hi = band[:, 0], band[:, 1]
        sup_dist[m] = float(np.max(np.abs(exact.values - fit.values)))
        for x, v in zip(xs, fit.values):
            curve_rows.append((x, v, fit.kind, m))
        for x, v in zip(xs, exact.values):
            exact_rows.append((x, v, exact.kind, m))
        for x, l, h in zip(xs, lo, hi):
            bound_rows.append((x, l, h, m))
    _write_csv(outdir / "meta_beta_fit.csv", ["x", "value", "kind", "rank"], curve_rows)
    _write_csv(outdir / "meta_exact.csv", ["x", "value", "kind", "rank"], exact_rows)
    _write_csv(outdir / "meta_bounds.csv", ["x", "lower", "upper", "rank"], bound_rows)

    sim_block = scenario.simulation()
    if sim_block:
        workers = args.threads
        for m in scenario.ranks():
            curve = empirical_meta(_sim_config(scenario, args, (theta,)), m, theta,
                                   grid=xs, workers=workers)
            _write_csv(outdir / f"meta_empirical_rank{m}.csv",
                       ["x", "value", "kind"], list(curve.rows()))
    _write_manifest(outdir, "meta", scenario, args,
                    extra={"sup_distance_exact_vs_fit": sup_dist})
    print(f"meta: theta={linear_to_db(theta):.3g} dB; "
          + "; ".join(f"rank {m}: sup|exact-fit|={d:.4f}" for m, d in sup_dist.items()))
    return 0


def cmd_delay(scenario: Scenario, outdir: Path, args) -> int:
    theta = float(scenario.theta_grid(args.grid)[0])
    stat_rows, rel_rows = [], []
    attempts = scenario.raw.get("attempts", [1, 2, 3])
    reliability = scenario.raw.get("reliability", 0.95)
    for m in scenario.ranks():
        if scenario.direction == DOWNLINK:
            betas = scenario.betas or downlink.PowerAllocation.single()
            m_1 = downlink.neg_moment(1.0, m, scenario.params, betas, theta)
            m_2 = downlink.neg_moment(2.0, m, scenario.params, betas, theta)
            stats = metadist.delay_stats(m_1.value.real, m_2.value.real)
            classification = m_1.classification.value
        else:
            mv = uplink.csp_moment(-1.0, m, theta, scenario.params, scenario.default_model())
            stats = metadist.delay_stats(mv.value.real, math.inf)
            classification = mv.classification.value
        stat_rows.append((m, stats.mean, stats.variance, classification))

        m1, m2 = _meta_inputs(scenario, m, theta)
        if m1.is_finite and 0.0 < m1.value.real < 1.0 and m2.value.real < m1.value.real:
            fit = metadist.beta_approx_meta(m1.value.real, m2.value.real,
                                            np.linspace(0.0, 1.0, 401))
            for k in attempts:
                frac = metadist.delay_reliability(fit, int(k), float(reliability))
                rel_rows.append((m, int(k), reliability, frac))
    _write_csv(outdir / "delay_stats.csv",
               ["rank", "mean_delay", "delay_variance", "classification"], stat_rows)
    _write_csv(outdir / "delay_reliability.csv",
               ["rank", "attempts", "reliability", "fraction"], rel_rows)
    _write_manifest(outdir, "delay", scenario, args)
    print(f"delay: wrote {len(stat_rows)} stat rows, {len(rel_rows)} reliability rows")
    return 0


def _sim_config(scenario: Scenario, args, thetas) -> SimConfig:
    block = scenario.simulation()
    if not block:
        raise ScenarioError("scenario has no simulation block")
    seed = args.seed if args.seed is not None else block.get("seed", 0)
    return SimConfig(
        params=scenario.params,
        direction=scenario.direction,
        realizations=block["realizations"],
        seed=seed,
        window_radius=block.get("window_radius"),
        theta_grid=tuple(float(t) for t in thetas),
        betas=scenario.betas,
    )


def cmd_simulate(scenario: Scenario, outdir: Path, args) -> int:
    thetas_db = scenario.theta_grid_db(args.grid)
    thetas = scenario.theta_grid(args.grid)
    config = _sim_config(scenario, args, thetas)
    block = scenario.simulation()
    estimates = block.get("estimate", ["moments"])
    workers = args.threads
    t_start = time.time()
    summary: dict = {}

    if "moments" in estimates:
        means, ses, counts = coverage_curves(config, workers=workers)
        rows = []
        for j, theta_db in enumerate(thetas_db):
            for m in range(1, scenario.params.n_users + 1):
                rows.append((theta_db, m, means[m - 1, j], ses[m - 1, j], counts[m - 1]))
        _write_csv(outdir / "moments_sim.csv",
                   ["theta_db", "rank", "m1_hat", "std_error", "n_samples"], rows)
        summary["coverage"] = {
            "theta_db": [float(t) for t in thetas_db],
            "m1_hat": means.tolist(),
            "std_error": ses.tolist(),
        }
    if "meta" in estimates:
        xs = scenario.x_grid()
        for m in scenario.ranks():
            curve = empirical_meta(config, m, float(thetas[0]), grid=xs, workers=workers)
            _write_csv(outdir / f"meta_empirical_rank{m}.csv",
                       ["x", "value", "kind"], list(curve.rows()))
    if "pcf" in estimates or "second_moment" in estimates:
        if scenario.direction != UPLINK:
            raise ScenarioError("point-process estimates are uplink-only")
        radii_spec = block.get("radii")
        scale = 1.0 / math.sqrt(scenario.params.lambda_b)
        radii = (np.linspace(radii_spec["start"], radii_spec["stop"], radii_spec["num"])
                 if radii_spec else np.linspace(0.0, 2.0 * scale, 41))
        if "pcf" in estimates:
            mids, g_hat = estimate_pcf(config, radii, workers=workers)
            _write_csv(outdir / "pcf.csv", ["r", "g_hat", "g_fit"],
                       zip(mids, g_hat, pcf_fit(mids, scenario.params)))
        if "second_moment" in estimates:
            radii_sm, mean_sq, rho = estimate_second_moment(config, radii, workers=workers)
            rho1 = normalized_second_moment(radii_sm, scenario.params,
                                            InterfererModel.CLUSTERED)
            rho2 = normalized_second_moment(radii_sm, scenario.params,
                                            InterfererModel.INDEPENDENT)
            _write_csv(outdir / "rho.csv",
                       ["r", "count_sq_mean", "rho_sim", "rho_clustered", "rho_independent"],
                       zip(radii_sm, mean_sq, rho, rho1, rho2))
    if block.get("emit_csp"):
        rows = csp_table(config, workers=workers)
        header = ["index", "rank"] + [f"csp_{i}" for i in range(len(rows[0][2]))]
        _write_csv(outdir / "csp.csv", header,
                   [(idx, rank, *vals) for idx, rank, vals in rows])

    summary["elapsed_seconds"] = time.time() - t_start
    manifest = run_manifest(config, command="simulate", extra={"estimates": estimates})
    summary["manifest"] = manifest
    with open(outdir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    _write_manifest(outdir, "simulate", scenario, args,
                    extra={"sim_config_hash": config.config_hash()})
    print(f"simulate: {config.realizations} realizations in {summary['elapsed_seconds']:.1f}s "
          f"({', '.join(estimates)})")
    return 0


def cmd_optimize(scenario: Scenario, outdir: Path, args) -> int:
    block = scenario.optimization()
    problem = block["problem"]
    if "theta_db" in block:
        thetas_db = np.atleast_1d(
            np.linspace(block["theta_db"]["start"], block["theta_db"]["stop"],
                        block["theta_db"]["num"])
            if isinstance(block["theta_db"], dict)
            else np.asarray(block["theta_db"], dtype=float)
        )
    else:
        thetas_db = scenario.theta_grid_db(args.grid)
    results = []
    n = scenario.params.n_users
    for theta_db in thetas_db:
        theta = float(10.0 ** (theta_db / 10.0))
        if problem == "P1":
            res = solve_p1(theta, block.get("target", 0.5), scenario.params)
        elif problem == "P2":
            res = solve_p2(theta, block.get("target", 0.5), scenario.params)
        else:
            res = solve_p3(theta, block.get("targets", [0.0] * n),
                           block.get("maximize_rank", n), scenario.params,
                           delay_constraints=block.get("delay_constraints", True))
        results.append({
            "theta_db": float(theta_db),
            "problem": problem,
            "feasible": res.feasible,
            "betas": list(res.betas.betas) if res.betas else None,
            "achieved": list(res.achieved),
            "objective": res.objective,
            "binding": list(res.binding),
        })
    with open(outdir / "optimize.json", "w") as fh:
        json.dump(results, fh, indent=2, sort_keys=True)
    rows = []
    for r in results:
        betas = r["betas"] if r["feasible"] else [0.0] * n  # zeros mark infeasible
        achieved = r["achieved"] if r["feasible"] else [0.0] * n
        rows.append((r["theta_db"], int(r["feasible"]), *betas, *achieved))
    _write_csv(outdir / "optimize.csv",
               ["theta_db", "feasible"] + [f"beta_{i+1}" for i in range(n)]
               + [f"m1_rank{i+1}" for i in range(n)], rows)
    _write_manifest(outdir, "optimize", scenario, args)
    feas = sum(r["feasible"] for r in results)
    print(f"optimize[{problem}]: {feas}/{len(results)} feasible thresholds")
    return 0


def cmd_validate(args) -> int:
    """Run the acceptance suite via pytest."""
    root = Path(__file__).resolve().parents[2]
    test_file = root / "tests" / "test_acceptance.py"
    if not test_file.exists():
        print(f"acceptance suite not found at {test_file}", file=sys.stderr)
        return 2
    cmd = [sys.executable, "-m", "pytest", str(test_file), "-v"]
    if args.threads > 1:
        os.environ["NOMA_META_THREADS"] = str(args.threads)
    return subprocess.call(cmd, cwd=root)


def _default_threads() -> int:
    env = os.environ.get("NOMA_META_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noma-meta",
        description="Meta distribution and power allocation toolkit for NOMA "
                    "Poisson cellular networks",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_scenario in [("moments", True), ("meta", True), ("delay", True),
                                 ("simulate", True), ("optimize", True), ("validate", False)]:
        p = sub.add_parser(name)
        if needs_scenario:
            p.add_argument("--scenario", required=True, type=Path,
                           help="scenario JSON file")
            p.add_argument("--out", required=True, type=Path, help="output directory")
            p.add_argument("--grid", default=None,
                           help="theta grid override, 'start:stop:num' in dB or "
                                "comma-separated dB values")
            p.add_argument("--seed", type=int, default=None,
                           help="simulation seed override")
        p.add_argument("--threads", type=int, default=_default_threads(),
                       help="worker processes (default: NOMA_META_THREADS or 1)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        return cmd_validate(args)
    try:
        scenario = Scenario.from_file(args.scenario)
    except (ScenarioError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    outdir = args.out
    outdir.mkdir(parents=True, exist_ok=True)
    handler = {
        "moments": cmd_moments,
        "meta": cmd_meta,
        "delay": cmd_delay,
        "simulate": cmd_simulate,
        "optimize": cmd_optimize,
    }[args.command]
    try:
        return handler(scenario, outdir, args)
    except ScenarioError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
