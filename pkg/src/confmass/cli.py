"""Command-line front end: mass computations, exact-series verification,
discrete-form checks, oracle comparisons, and parameter sweeps.

Exit codes: 0 when every reported check passes, 1 when a check fails or a
sweep row errors, 2 for invalid configuration.  The worker fan-out for sweeps
is capped by the CM_THREADS environment variable; rows are always written in
input order, and all randomness derives from the configured seed.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from . import dec, kernels, series, spectral
from .geometry import (
    InadmissibleModelError,
    InvalidModelError,
    check_conformal_class_admissible,
    model_from_json,
    model_to_json,
    CylinderQuotient,
    FlatTorus,
    ProjectiveSpace,
    RoundSphere,
)
from .numerics import ExtrapolationError
from .report import (
    DEC_SCHEMA,
    SERIES_SCHEMA,
    CheckResult,
    MassReport,
    render_csv,
    render_json,
    write_output,
)


class ConfigError(ValueError):
    pass


def _build_model(args):
    obj = {"model": args.model, "n": args.n}
    if args.model == "cylinder":
        if args.L is None:
            raise ConfigError("cylinder model needs --L")
        obj["L"] = args.L
    if args.model == "torus":
        obj["periods"] = [1.0] * args.n
    try:
        return model_from_json(obj)
    except InvalidModelError as exc:
        raise ConfigError(str(exc)) from exc


_AGREEMENT_TOL = {"sphere": 1e-8, "projective": 1e-4, "cylinder": 1e-3}


def _closed_form_report(model, args) -> tuple[float, float, list]:
    expansion = kernels.flat_gauge_expansion(model, tol=None)
    checks = [
        CheckResult("kernels.extract_mass.extrapolation-spread",
                    expansion.error_estimate, 0.0, args.tol),
        CheckResult("kernels.flat_kernel_flux.normalization",
                    kernels.flat_kernel_flux(model.n, 0.5), 1.0, 1e-8),
    ]
    if isinstance(model, RoundSphere):
        checks.append(CheckResult("kernels.extract_mass.rigidity-mass",
                                  expansion.mass, 0.0, 1e-8))
    else:
        checks.append(CheckResult("kernels.closed_form_mass.nonnegative",
                                  min(expansion.mass, 0.0), 0.0, 1e-6))
    return expansion.mass, expansion.error_estimate, checks


def _spectral_report(model, args) -> tuple[float, float, list]:
    sol = spectral.solve_regular_part(model, degree=args.degree)
    checks = [
        CheckResult("spectral.solve_regular_part.residual",
                    sol.residual, 0.0, max(args.tol, 1e-3)),
        CheckResult("spectral.solve_regular_part.extrapolation-spread",
                    sol.mass_spread, 0.0, max(args.tol, 1e-6)),
    ]
    if isinstance(model, RoundSphere):
        checks.append(CheckResult("spectral.solve_regular_part.rigidity-mass",
                                  sol.mass, 0.0, 1e-8))
    else:
        checks.append(CheckResult("spectral.solve_regular_part.nonnegative",
                                  min(sol.mass, 0.0), 0.0, 1e-6))
    return sol.mass, sol.mass_spread, checks


def cmd_mass(args) -> int:
    model = _build_model(args)
    if not check_conformal_class_admissible(model):
        raise ConfigError(
            "conformal Laplacian of the flat torus is not invertible "
            "(constants lie in its kernel); no Green function exists"
        )
    t0 = time.perf_counter()
    checks = []
    if args.method in ("closed-form", "both"):
        mass, err, more = _closed_form_report(model, args)
        method = "closed-form" if not isinstance(model, CylinderQuotient) else "image-sum"
        checks.extend(more)
    if args.method in ("spectral", "both"):
        s_mass, s_err, s_checks = _spectral_report(model, args)
        checks.extend(s_checks)
        if args.method == "spectral":
            mass, err, method = s_mass, s_err, "eigen-sum"
        else:
            agree = _AGREEMENT_TOL[args.model]
            checks.append(CheckResult("kernels-vs-spectral.mass-agreement",
                                      abs(mass - s_mass), 0.0, agree))
    report = MassReport(
        model=model_to_json(model),
        n=args.n,
        params={"L": args.L} if args.L is not None else {},
        method=method,
        mass=mass,
        error_estimate=err,
        checks=checks,
        seed=args.seed,
        wall_time_s=round(time.perf_counter() - t0, 3) if args.timing else None,
    )
    if args.emit == "json":
        write_output(render_json(report.to_dict()), args.out)
    else:
        rows = [[args.model, args.n, args.L if args.L is not None else "",
                 report.method, report.mass, report.error_estimate, report.passed]]
        write_output(render_csv(rows, ["model", "n", "L", "method", "mass",
                                       "error", "pass"]), args.out)
    return 0 if report.passed else 1


def cmd_series_verify(args) -> int:
    checks = []
    for verification, tag in (
        (series.verify_mass_derivative(args.n, args.order), "mass-derivative"),
        (series.verify_flux_limit(args.n, args.order), "flux-limit"),
    ):
        for c in verification.checks:
            checks.append({
                "name": f"series.verify_{tag.replace('-', '_')}.{c.name}",
                "measured": repr(c.measured),
                "expected": repr(c.expected),
                "pass": c.passed,
            })
    passed = all(c["pass"] for c in checks)
    payload = {
        "schema": SERIES_SCHEMA,
        "n": args.n,
        "order": args.order if args.order is not None else series.default_order(args.n),
        "checks": checks,
        "pass": passed,
    }
    if args.emit == "json":
        write_output(render_json(payload), args.out)
    else:
        rows = [[c["name"], c["measured"], c["expected"], c["pass"]] for c in checks]
        write_output(render_csv(rows, ["name", "measured", "expected", "pass"]), args.out)
    return 0 if passed else 1


def _dec_star_invariance(args):
    grid = dec.CubicalGrid.torus(args.n, args.grid)
    flat = dec.MetricField.flat()
    rnd = dec.MetricField.random(grid, seed=args.seed, scale=0.4)
    p = args.n // 2
    s_flat = dec.build_star(grid, flat, p)
    s_rnd = dec.build_star(grid, rnd, p)
    import numpy as np

    rel = float(np.max(np.abs(s_rnd - s_flat) / np.abs(s_flat)))
    off = float(np.max(np.abs(dec.build_star(grid, rnd, 1) - dec.build_star(grid, flat, 1))))
    return [
        {"name": "dec.build_star.middle-degree-conformal-invariance",
         "measured": rel, "expected": 0.0, "tolerance": 1e-15},
        {"name": "dec.build_star.off-middle-degree-depends-on-metric",
         "measured": 1.0 if off > 0 else 0.0, "expected": 1.0, "tolerance": 0.0},
    ]


def _dec_harmonic_dim(args):
    grid = dec.CubicalGrid.torus(args.n, args.grid)
    flat = dec.MetricField.flat()
    rnd = dec.MetricField.random(grid, seed=args.seed, scale=0.4)
    p = args.n // 2
    dim_flat, _ = dec.harmonic_space(grid, flat, p)
    dim_rnd, _ = dec.harmonic_space(grid, rnd, p)
    residual = dec.kernel_equality_residual(grid, flat, rnd, p)
    expected = float(math.comb(args.n, p))
    return [
        {"name": "dec.harmonic_space.flat-dimension",
         "measured": float(dim_flat), "expected": expected, "tolerance": 0.0},
        {"name": "dec.harmonic_space.conformal-dimension",
         "measured": float(dim_rnd), "expected": expected, "tolerance": 0.0},
        {"name": "dec.kernel_equality_residual.conformal-invariance",
         "measured": residual, "expected": 0.0, "tolerance": 1e-10},
    ]


def _dec_inversion(args):
    import numpy as np

    form = dec.unit_middle_form(args.n)
    coarse = dec.CubicalGrid.box(args.n, args.grid, 0.40, origin=(0.55,) * args.n)
    fine = dec.CubicalGrid.box(args.n, 2 * args.grid, 0.40, origin=(0.55,) * args.n)
    res_c = dec.dec_residuals(coarse, dec.inversion_pullback(coarse, form))
    res_f = dec.dec_residuals(fine, dec.inversion_pullback(fine, form))
    rng = np.random.default_rng(args.seed)
    dirs = rng.standard_normal((8, args.n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    pts = np.concatenate([dirs, 2.0 * dirs])
    norm_dev = float(np.max(np.abs(
        dec.pullback_norm(pts, form) - np.linalg.norm(pts, axis=1) ** (-args.n)
    )))
    return [
        {"name": "dec.pullback_norm.inverse-power-law",
         "measured": norm_dev, "expected": 0.0, "tolerance": 1e-12},
        {"name": "dec.dec_residuals.d-convergence-order",
         "measured": math.log2(res_c["d"] / res_f["d"]),
         "expected": 2.0, "tolerance": 0.3},
        {"name": "dec.dec_residuals.delta-convergence-order",
         "measured": math.log2(res_c["delta"] / res_f["delta"]),
         "expected": 2.0, "tolerance": 0.3},
    ]


def _dec_weitzenboeck(args):
    grid = dec.CubicalGrid.torus(args.n, args.grid)
    disc = dec.flat_weitzenboeck_check(grid, seed=args.seed)
    wave = (1,) + (0,) * (args.n - 2) + (2,)
    cochain = dec.plane_wave_cochain(grid, args.n // 2, wave, (0, 1))
    lam = dec.stencil_eigenvalue(grid, wave)
    import numpy as np

    lap = dec.hodge_laplacian(grid, dec.MetricField.flat(), args.n // 2)
    mask = np.abs(cochain.values) > 0.5
    eig_dev = float(np.max(np.abs((lap @ cochain.values)[mask] / cochain.values[mask] - lam)))
    return [
        {"name": "dec.flat_weitzenboeck_check.operator-discrepancy",
         "measured": disc, "expected": 0.0, "tolerance": 1e-12},
        {"name": "dec.hodge_laplacian.plane-wave-eigenvalue",
         "measured": eig_dev, "expected": 0.0, "tolerance": 1e-10},
    ]


_DEC_TESTS = {
    "star-invariance": _dec_star_invariance,
    "harmonic-dim": _dec_harmonic_dim,
    "inversion": _dec_inversion,
    "weitzenboeck": _dec_weitzenboeck,
}


def cmd_dec_check(args) -> int:
    if args.n % 2 or args.n < 4:
        raise ConfigError("the form checks need an even dimension >= 4")
    entries = _DEC_TESTS[args.test](args)
    for e in entries:
        e["pass"] = abs(e["measured"] - e["expected"]) <= e["tolerance"]
    passed = all(e["pass"] for e in entries)
    payload = {
        "schema": DEC_SCHEMA,
        "n": args.n,
        "grid": args.grid,
        "test": args.test,
        "seed": args.seed,
        "checks": entries,
        "pass": passed,
    }
    if args.emit == "json":
        write_output(render_json(payload), args.out)
    else:
        rows = [[e["name"], e["measured"], e["expected"], e["tolerance"], e["pass"]]
                for e in entries]
        write_output(render_csv(rows, ["name", "measured", "expected",
                                       "tolerance", "pass"]), args.out)
    return 0 if passed else 1


def cmd_oracle_compare(args) -> int:
    model = _build_model(args)
    if not check_conformal_class_admissible(model):
        raise ConfigError("flat torus has no Green function to compare")
    closed = kernels.closed_form_mass(model)
    sol = spectral.solve_regular_part(model, degree=args.degree)
    rows = [
        ["closed-form" if not isinstance(model, CylinderQuotient) else "image-sum",
         closed, 0.0],
        ["eigen-sum", sol.mass, abs(sol.mass - closed)],
    ]
    write_output(render_csv(rows, ["method", "mass", "abs_delta"]), args.out)
    tol = _AGREEMENT_TOL[args.model]
    return 0 if abs(sol.mass - closed) <= tol else 1


def _sweep_point(model_name, n, value, method, degree):
    try:
        if model_name == "cylinder":
            model = CylinderQuotient(n, value)
            if method == "spectral":
                sol = spectral.solve_regular_part(model, degree=degree)
                return [value, sol.mass, "eigen-sum", sol.mass_spread]
            mass = kernels.cylinder_mass(n, value)
            expansion = kernels.flat_gauge_expansion(model)
            return [value, mass, "image-sum", abs(expansion.mass - mass)]
        if model_name == "projective":
            seed = int(value)
            pert = spectral.random_zonal_perturbation(n, seed, mirror=True)
            sol = spectral.perturbed_mass(ProjectiveSpace(n), pert, degree=degree)
            return [seed, sol.mass, "eigen-sum-perturbed", sol.mass_spread]
        raise ConfigError(f"sweep supports cylinder and projective, not {model_name}")
    except (ExtrapolationError, spectral.SolverError,
            spectral.PerturbationError) as exc:
        return [value, "", method, f"failed: {exc}"]


def cmd_sweep(args) -> int:
    if args.model == "cylinder":
        values = [float(x) for x in args.L.split(",") if x.strip()] if args.L else []
    elif args.model == "projective":
        values = list(range(args.seeds))
    else:
        raise ConfigError("sweep supports --model cylinder (over --L) and "
                          "projective (over --seeds)")
    workers = max(1, int(os.environ.get("CM_THREADS", "1")))
    rows = []
    if workers == 1 or len(values) <= 1:
        for v in values:
            rows.append(_sweep_point(args.model, args.n, v, args.method, args.degree))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_point, args.model, args.n, v,
                                   args.method, args.degree) for v in values]
            rows = [f.result() for f in futures]  # input order
    write_output(render_csv(rows, ["param", "mass", "method", "error"]), args.out)
    failed = any(isinstance(r[3], str) and str(r[3]).startswith("failed") for r in rows)
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="confmass",
        description="Green-function masses of conformally flat model manifolds, "
                    "exact series identities, and discrete form checks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--emit", choices=["json", "csv"], default="json")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--seed", type=int, default=0)

    p_mass = sub.add_parser("mass", help="mass constant of a model geometry")
    p_mass.add_argument("--model", required=True,
                        choices=["sphere", "projective", "cylinder", "torus"])
    p_mass.add_argument("--n", type=int, required=True)
    p_mass.add_argument("--L", type=float, default=None)
    p_mass.add_argument("--method", choices=["closed-form", "spectral", "both"],
                        default="closed-form")
    p_mass.add_argument("--degree", type=int, default=200)
    p_mass.add_argument("--tol", type=float, default=1e-6)
    p_mass.add_argument("--timing", action="store_true",
                        help="include wall time (breaks byte-reproducibility)")
    common(p_mass)
    p_mass.set_defaults(func=cmd_mass)

    p_series = sub.add_parser("series-verify",
                              help="exact symbolic verification of the radial identities")
    p_series.add_argument("--n", type=int, required=True)
    p_series.add_argument("--order", type=int, default=None)
    common(p_series)
    p_series.set_defaults(func=cmd_series_verify)

    p_dec = sub.add_parser("dec-check", help="discrete exterior calculus checks")
    p_dec.add_argument("--n", type=int, default=4)
    p_dec.add_argument("--grid", type=int, default=6)
    p_dec.add_argument("--test", required=True, choices=sorted(_DEC_TESTS))
    common(p_dec)
    p_dec.set_defaults(func=cmd_dec_check)

    p_oracle = sub.add_parser("oracle-compare",
                              help="closed form versus eigen expansion masses")
    p_oracle.add_argument("--model", required=True,
                          choices=["sphere", "projective", "cylinder", "torus"])
    p_oracle.add_argument("--n", type=int, required=True)
    p_oracle.add_argument("--L", type=float, default=None)
    p_oracle.add_argument("--degree", type=int, default=200)
    common(p_oracle)
    p_oracle.set_defaults(func=cmd_oracle_compare)

    p_sweep = sub.add_parser("sweep", help="parameter sweep emitting one CSV row per value")
    p_sweep.add_argument("--model", required=True, choices=["cylinder", "projective"])
    p_sweep.add_argument("--n", type=int, required=True)
    p_sweep.add_argument("--L", default=None,
                         help="comma-separated cylinder periods")
    p_sweep.add_argument("--seeds", type=int, default=0,
                         help="number of seeded perturbations (projective sweep)")
    p_sweep.add_argument("--method", choices=["closed-form", "spectral"],
                         default="closed-form")
    p_sweep.add_argument("--degree", type=int, default=160)
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InvalidModelError, InadmissibleModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
