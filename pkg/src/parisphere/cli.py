"""Command-line front end.

Subcommands: solve, certify, cs-eval, chaos {thm1, thm2, demo-frsb},
simulate, covariance-selftest.  Results are printed as JSON; with
--output-dir they are also written to files together with rendered
figures and a run manifest.  Mixture coefficients on the command line
are the amplitudes gamma_p (NOT squared): "2:0.9644,4:0.2646" means
xi(x) ~= 0.93 x^2 + 0.07 x^4.

Exit codes: 0 success, 2 usage/parse error, 3 numerical non-convergence,
4 resource guard.  The environment variable PARISI_SPHERE_SEED overrides
--seed everywhere.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import os
import sys
from pathlib import Path

from parisphere import __version__
from parisphere.chaos import frsb_coupling_demo, theorem1_check, theorem2_check
from parisphere.functional import certify, cs_value
from parisphere.measures import FrsbClosedForm, measure_from_json
from parisphere.mixture import parse_mixture
from parisphere.montecarlo import (
    BudgetExceeded,
    McmcParams,
    SimConfig,
    chaos_experiment,
    covariance_selftest,
)
from parisphere.solver import NoInteriorSolution, PreconditionFailed, SolveOptions, parisi_solve

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NONCONVERGENCE = 3
EXIT_BUDGET = 4


def _resolve_seed(args) -> int:
    env = os.environ.get("PARISI_SPHERE_SEED")
    if env is not None:
        return int(env)
    return getattr(args, "seed", 0)


def _dumps(payload: dict, compact: bool) -> str:
    if compact:
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return json.dumps(payload, sort_keys=True, indent=2)


def make_manifest(command: str, parameters: dict, seed: int) -> dict:
    """Run manifest; the hash covers everything except timestamps and outputs."""
    core = {
        "command": command,
        "parameters": parameters,
        "version": __version__,
        "master_seed": seed,
    }
    digest = hashlib.sha256(json.dumps(core, sort_keys=True).encode()).hexdigest()
    manifest = dict(core)
    manifest["manifest_hash"] = digest
    manifest["created_at"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    manifest["outputs"] = []
    return manifest


def _write_outputs(outdir: Path, manifest: dict, payload: dict, name: str, compact: bool) -> Path:
    outdir.mkdir(parents=True, exist_ok=True)
    payload = dict(payload)
    payload["manifest_hash"] = manifest["manifest_hash"]
    target = outdir / name
    target.write_text(_dumps(payload, compact) + "\n")
    manifest["outputs"].append(target.name)
    return target


def _finish(outdir: Path | None, manifest: dict, compact: bool) -> None:
    if outdir is None:
        return
    path = outdir / "manifest.json"
    path.write_text(_dumps(manifest, compact) + "\n")


def _load_measure(path: str):
    with open(path) as fh:
        return measure_from_json(json.load(fh))


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--output-dir", type=Path, default=None, help="write results and figures here")
    parser.add_argument("--json", action="store_true", help="compact JSON on stdout")
    parser.add_argument("--seed", type=int, default=0)


# ----------------------------------------------------------------------
# Subcommand handlers
# ----------------------------------------------------------------------


def _cmd_solve(args) -> int:
    spec = parse_mixture(args.xi)
    seed = _resolve_seed(args)
    opts = SolveOptions(seed=seed, restarts=args.restarts, certify_grid=args.certify_grid)
    try:
        solution = parisi_solve(spec, args.beta, opts)
    except (NoInteriorSolution, PreconditionFailed) as exc:
        print(_dumps({"error": str(exc)}, args.json))
        return EXIT_NONCONVERGENCE
    payload = solution.to_json_dict()
    manifest = make_manifest("solve", {"xi": args.xi, "beta": args.beta, "restarts": args.restarts}, seed)
    if args.output_dir is not None:
        _write_outputs(args.output_dir, manifest, payload, "solution.json", args.json)
        from parisphere.plots import save_measure_cdf

        fig = save_measure_cdf(solution.measure, args.output_dir / "measure_cdf.png")
        manifest["outputs"].append(fig.name)
        _finish(args.output_dir, manifest, args.json)
    print(_dumps(payload, args.json))
    return EXIT_OK if solution.converged else EXIT_NONCONVERGENCE


def _cmd_certify(args) -> int:
    spec = parse_mixture(args.xi)
    measure = _load_measure(args.measure)
    cert = certify(spec, args.beta, measure, grid=args.grid, tol_sup=args.tol_sup, tol_supp=args.tol_supp)
    payload = cert.to_json_dict()
    manifest = make_manifest(
        "certify",
        {"xi": args.xi, "beta": args.beta, "measure": str(args.measure), "grid": args.grid},
        _resolve_seed(args),
    )
    if args.output_dir is not None:
        _write_outputs(args.output_dir, manifest, payload, "certificate.json", args.json)
        _finish(args.output_dir, manifest, args.json)
    print(_dumps(payload, args.json))
    return EXIT_OK


def _cmd_cs_eval(args) -> int:
    spec = parse_mixture(args.xi)
    measure = _load_measure(args.measure)
    note = ""
    if isinstance(measure, FrsbClosedForm):
        alpha = measure.discretize(args.resolution)
        note = f"closed-form measure discretized at resolution {args.resolution}"
    else:
        alpha = measure
    value = cs_value(spec, args.beta, alpha, shat=args.shat)
    payload = {"cs_value": value, "shat": args.shat, "note": note}
    manifest = make_manifest(
        "cs-eval", {"xi": args.xi, "beta": args.beta, "measure": str(args.measure)}, _resolve_seed(args)
    )
    if args.output_dir is not None:
        _write_outputs(args.output_dir, manifest, payload, "cs_value.json", args.json)
        _finish(args.output_dir, manifest, args.json)
    print(_dumps(payload, args.json))
    return EXIT_OK


def _cmd_chaos(args) -> int:
    params: dict
    if args.mode == "thm1":
        report = theorem1_check(args.p0, args.p, args.a, args.beta1, args.beta2)
        params = {"p0": args.p0, "p": args.p, "a": args.a, "beta1": args.beta1, "beta2": args.beta2}
    elif args.mode == "thm2":
        spec = parse_mixture(args.xi)
        report = theorem2_check(spec, args.beta1, args.beta2, assert_generic=args.assert_generic)
        params = {
            "xi": args.xi,
            "beta1": args.beta1,
            "beta2": args.beta2,
            "assert_generic": args.assert_generic,
        }
    else:
        report = frsb_coupling_demo(args.c, args.p, args.beta1, args.beta2)
        params = {"c": args.c, "p": args.p, "beta1": args.beta1, "beta2": args.beta2}
    payload = report.to_json_dict()
    manifest = make_manifest(f"chaos-{args.mode}", params, _resolve_seed(args))
    if args.output_dir is not None:
        _write_outputs(args.output_dir, manifest, payload, "chaos_report.json", args.json)
        _finish(args.output_dir, manifest, args.json)
    print(_dumps(payload, args.json))
    return EXIT_OK


def _write_hist_csv(path: Path, edges, counts, manifest_hash: str) -> None:
    lines = [f"# manifest_hash={manifest_hash}", "bin_left,bin_right,count"]
    for left, right, count in zip(edges[:-1], edges[1:], counts):
        lines.append(f"{left!r},{right!r},{count}")
    path.write_text("\n".join(lines) + "\n")


def _cmd_simulate(args) -> int:
    spec = parse_mixture(args.xi)
    seed = _resolve_seed(args)
    perturbation = None
    if args.perturb:
        try:
            p0_s, p_s, a_s = args.perturb.split(",")
            perturbation = (int(p0_s), int(p_s), float(a_s))
        except ValueError:
            print("--perturb expects 'p0,p,a'", file=sys.stderr)
            return EXIT_USAGE
    config = SimConfig(
        spec=spec,
        n=args.N,
        betas=(args.beta1, args.beta2),
        mcmc=McmcParams(
            burn_in=args.burn_in, thin=args.thin, n_samples=args.samples, proposal_step=args.step
        ),
        perturbation=perturbation,
        n_disorder=args.disorders,
        master_seed=seed,
    )
    try:
        stats = chaos_experiment(config, jobs=args.jobs, keep_raw=args.dump_overlaps)
    except BudgetExceeded as exc:
        print(_dumps({"error": str(exc)}, args.json))
        return EXIT_BUDGET

    outdir = args.output_dir or Path("parisphere_out")
    manifest = make_manifest(
        "simulate",
        {
            "xi": args.xi,
            "N": args.N,
            "beta1": args.beta1,
            "beta2": args.beta2,
            "samples": args.samples,
            "disorders": args.disorders,
            "burn_in": args.burn_in,
            "thin": args.thin,
            "step": args.step,
            "perturb": list(perturbation) if perturbation else None,
        },
        seed,
    )
    summary = _write_outputs(outdir, manifest, stats.to_json_dict(), "summary.json", args.json)
    for key in ("same_beta1", "same_beta2", "cross"):
        path = outdir / f"hist_{key}.csv"
        _write_hist_csv(path, stats.bin_edges, stats.histograms[key], manifest["manifest_hash"])
        manifest["outputs"].append(path.name)
    if args.dump_overlaps and stats.raw_overlaps is not None:
        path = outdir / "overlaps_raw.csv"
        lines = [f"# manifest_hash={manifest['manifest_hash']}", "pair_type,disorder,abs_overlap"]
        for key in ("same_beta1", "same_beta2", "cross"):
            for d, v in stats.raw_overlaps[key]:
                lines.append(f"{key},{d},{v!r}")
        path.write_text("\n".join(lines) + "\n")
        manifest["outputs"].append(path.name)
    from parisphere.plots import save_overlap_histograms

    fig = save_overlap_histograms(stats, outdir / "overlaps.png")
    manifest["outputs"].append(fig.name)
    _finish(outdir, manifest, args.json)
    print(str(summary))
    return EXIT_OK


def _cmd_covariance(args) -> int:
    spec = parse_mixture(args.xi)
    seed = _resolve_seed(args)
    try:
        report = covariance_selftest(spec, args.N, args.pairs, args.disorders, seed)
    except BudgetExceeded as exc:
        print(_dumps({"error": str(exc)}, args.json))
        return EXIT_BUDGET
    manifest = make_manifest(
        "covariance-selftest",
        {"xi": args.xi, "N": args.N, "pairs": args.pairs, "disorders": args.disorders},
        seed,
    )
    if args.output_dir is not None:
        _write_outputs(args.output_dir, manifest, report, "covariance_selftest.json", args.json)
        _finish(args.output_dir, manifest, args.json)
    print(_dumps(report, args.json))
    return EXIT_OK


# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parisphere",
        description="Parisi measures, temperature-chaos conditions, and sphere Monte Carlo "
        "for mixed p-spin models.  Mixtures are given as 'p:gamma,...' with amplitudes "
        "gamma_p (xi uses their squares).",
    )
    parser.add_argument("--version", action="version", version=f"parisphere {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="compute the Parisi measure for (xi, beta)")
    p_solve.add_argument("--xi", required=True)
    p_solve.add_argument("--beta", type=float, required=True)
    p_solve.add_argument("--restarts", type=int, default=8)
    p_solve.add_argument("--certify-grid", type=int, default=2000)
    _add_common(p_solve)
    p_solve.set_defaults(func=_cmd_solve)

    p_cert = sub.add_parser("certify", help="run the optimality certificate on a measure JSON")
    p_cert.add_argument("--xi", required=True)
    p_cert.add_argument("--beta", type=float, required=True)
    p_cert.add_argument("--measure", required=True, help="path to a measure JSON file")
    p_cert.add_argument("--grid", type=int, default=2000)
    p_cert.add_argument("--tol-sup", type=float, default=1e-6)
    p_cert.add_argument("--tol-supp", type=float, default=1e-6)
    _add_common(p_cert)
    p_cert.set_defaults(func=_cmd_certify)

    p_cs = sub.add_parser("cs-eval", help="evaluate the functional at a measure JSON")
    p_cs.add_argument("--xi", required=True)
    p_cs.add_argument("--beta", type=float, required=True)
    p_cs.add_argument("--measure", required=True)
    p_cs.add_argument("--shat", type=float, default=None)
    p_cs.add_argument("--resolution", type=int, default=2000, help="discretization for closed-form measures")
    _add_common(p_cs)
    p_cs.set_defaults(func=_cmd_cs_eval)

    p_chaos = sub.add_parser("chaos", help="temperature-chaos condition checks")
    chaos_sub = p_chaos.add_subparsers(dest="mode", required=True)
    c1 = chaos_sub.add_parser("thm1", help="perturbed pure even-p model hypotheses")
    c1.add_argument("--p0", type=int, required=True)
    c1.add_argument("--p", type=int, required=True)
    c1.add_argument("--a", type=float, required=True)
    c1.add_argument("--beta1", type=float, required=True)
    c1.add_argument("--beta2", type=float, required=True)
    _add_common(c1)
    c1.set_defaults(func=_cmd_chaos)
    c2 = chaos_sub.add_parser("thm2", help="generic-mixture uncoupled conditions")
    c2.add_argument("--xi", required=True)
    c2.add_argument("--beta1", type=float, required=True)
    c2.add_argument("--beta2", type=float, required=True)
    c2.add_argument("--assert-generic", action="store_true")
    _add_common(c2)
    c2.set_defaults(func=_cmd_chaos)
    c3 = chaos_sub.add_parser("demo-frsb", help="full-RSB pair violating the uncoupled condition")
    c3.add_argument("--c", type=float, required=True)
    c3.add_argument("--p", type=int, required=True)
    c3.add_argument("--beta1", type=float, required=True)
    c3.add_argument("--beta2", type=float, required=True)
    _add_common(c3)
    c3.set_defaults(func=_cmd_chaos)

    p_sim = sub.add_parser("simulate", help="two-temperature overlap experiment")
    p_sim.add_argument("--xi", required=True)
    p_sim.add_argument("--N", type=int, required=True)
    p_sim.add_argument("--beta1", type=float, required=True)
    p_sim.add_argument("--beta2", type=float, required=True)
    p_sim.add_argument("--samples", type=int, default=200)
    p_sim.add_argument("--disorders", type=int, default=10)
    p_sim.add_argument("--burn-in", type=int, default=500)
    p_sim.add_argument("--thin", type=int, default=10)
    p_sim.add_argument("--step", type=float, default=0.1)
    p_sim.add_argument("--perturb", default=None, help="perturbation 'p0,p,a'")
    p_sim.add_argument("--jobs", type=int, default=1)
    p_sim.add_argument("--dump-overlaps", action="store_true")
    _add_common(p_sim)
    p_sim.set_defaults(func=_cmd_simulate)

    p_cov = sub.add_parser("covariance-selftest", help="Monte Carlo check of E H H = N xi(R)")
    p_cov.add_argument("--xi", required=True)
    p_cov.add_argument("--N", type=int, required=True)
    p_cov.add_argument("--pairs", type=int, default=20)
    p_cov.add_argument("--disorders", type=int, default=20000)
    _add_common(p_cov)
    p_cov.set_defaults(func=_cmd_covariance)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, PreconditionFailed, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NoInteriorSolution as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
