"""polydet command line: scmap / det / var / wz / validate.

Exit codes: 0 success, 2 input validation, 3 numerical non-convergence,
4 internal error.  Reports carry the config hash; identical inputs and
config reproduce the payload bit-identically.
"""

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import validation
from .config import RunConfig, Report, Timer, config_from_file
from .eigensolve import EigConfig, dirichlet_eigenvalues, polygon_hash
from .errors import NumericalFailure, ValidationFailure
from .geometry import field_from_json_dict, polygon_from_json_dict
from .scmap import SCMap, solve_parameter_problem
from .smoothwz import alvarez_logdet, domain_from_json_dict, wz_variation
from .varform import contour_shift_integral, main_formula
from .zetadet import heat_coefficients, zeta_logdet


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _cache_dir(args):
    d = args.cache_dir or os.environ.get("POLYDET_CACHE")
    if d:
        Path(d).mkdir(parents=True, exist_ok=True)
    return d


def _emit(report, args):
    text = report.to_csv() if args.format == "csv" else report.to_json()
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)


def _load_polygon(path):
    return polygon_from_json_dict(_load_json(path))


def _solve_map_cached(p, cfg, cache):
    key = f"scmap_{polygon_hash(p)}_{cfg.hash()}.json"
    if cache:
        f = Path(cache) / key
        if f.exists():
            d = json.loads(f.read_text())
            m = SCMap(
                prevertices=tuple(d["prevertices"]),
                exponents=tuple(np.asarray(p.angles) / np.pi - 1.0),
                prefactor=complex(*d["C"]),
                base_point=complex(*d["base"]),
                polygon=p,
                residual=d.get("residual", 0.0),
            )
            from .scmap import map_forward
            object.__setattr__(m, "anchor_x", map_forward(m, 1j))
            return m, True
    m = solve_parameter_problem(p, cfg.sc)
    if cache:
        d = m.to_json_dict()
        d["residual"] = m.residual
        (Path(cache) / key).write_text(json.dumps(d))
    return m, False


def _spectrum_cached(p, lam_max, cfg, cache):
    from .eigensolve import Spectrum, weyl_count_check

    key = f"spectrum_{polygon_hash(p)}_{cfg.hash()}"
    if cache:
        csv_f = Path(cache) / (key + ".csv")
        side_f = Path(cache) / (key + ".json")
        if csv_f.exists() and side_f.exists():
            side = json.loads(side_f.read_text())
            rows = [line.split(",") for line in csv_f.read_text().splitlines()[1:] if line]
            eigs = tuple(float(r[0]) for r in rows)
            errs = tuple(float(r[1]) for r in rows)
            return Spectrum(eigenvalues=eigs, errors=errs,
                            lambda_max=side["lambda_max"],
                            count_check=side["count_check"],
                            polygon_hash=side["polygon_hash"],
                            meta=side.get("meta", {})), True
    spec = dirichlet_eigenvalues(p, lam_max, cfg.eig)
    if cache:
        lines = ["lambda,error_estimate"]
        lines += [f"{l!r},{e!r}" for l, e in zip(spec.eigenvalues, spec.errors)]
        (Path(cache) / (key + ".csv")).write_text("\n".join(lines) + "\n")
        (Path(cache) / (key + ".json")).write_text(json.dumps({
            "polygon_hash": spec.polygon_hash,
            "lambda_max": spec.lambda_max,
            "count_check": spec.count_check,
            "meta": spec.meta,
            "config_hash": cfg.hash(),
        }))
    return spec, False


def cmd_scmap(args, cfg):
    timer = Timer()
    p = _load_polygon(args.polygon)
    m, hit = _solve_map_cached(p, cfg, _cache_dir(args))
    timer.mark("solve")
    return Report(
        command=["scmap", args.polygon],
        config_hash=cfg.hash(),
        payload={
            "prevertices": list(m.prevertices),
            "C": [m.prefactor.real, m.prefactor.imag],
            "base": [m.base_point.real, m.base_point.imag],
            "residual": m.residual,
        },
        diagnostics={"cache_hit": hit},
        timings=timer.marks,
    )


def cmd_det(args, cfg):
    timer = Timer()
    p = _load_polygon(args.polygon)
    lam_max, zcfg = cfg.pipeline_zeta(p)
    spec, hit = _spectrum_cached(p, lam_max, cfg, _cache_dir(args))
    timer.mark("eigensolve")
    ld = zeta_logdet(spec, heat_coefficients(p), zcfg)
    timer.mark("zeta")
    return Report(
        command=["det", args.polygon],
        config_hash=cfg.hash(),
        payload=ld.to_json_dict(),
        diagnostics={"cache_hit": hit, "weyl": spec.count_check,
                     "lambda_max": lam_max},
        timings=timer.marks,
    )


def _fd_logdet_derivative(p, f, cfg, cache):
    """Richardson central difference of the determinant pipeline along f."""
    from .geometry import move_polygon

    lam_max, zcfg = cfg.pipeline_zeta(p)

    def logdet_at(t):
        pt = move_polygon(p, f, t)
        spec, _ = _spectrum_cached(pt, lam_max, cfg, cache)
        return zeta_logdet(spec, heat_coefficients(pt), zcfg).value

    t = cfg.fd_step
    d1 = (logdet_at(t) - logdet_at(-t)) / (2 * t)
    d2 = (logdet_at(t / 2) - logdet_at(-t / 2)) / t
    return (4 * d2 - d1) / 3


def cmd_var(args, cfg):
    timer = Timer()
    p = _load_polygon(args.polygon)
    f = field_from_json_dict(p, _load_json(args.field))
    payload = {}
    diagnostics = {}
    if args.route in ("formula", "both"):
        m, _ = _solve_map_cached(p, cfg, _cache_dir(args))
        dv = main_formula(p, m, f, cfg.var)
        payload["formula"] = {
            "boundary_term": dv.boundary_term,
            "corner_term": dv.corner_term,
            "total": dv.total,
            "route": dv.route,
        }
        diagnostics["formula"] = dv.residual_diagnostics
        # the interior-contour route applies to pure parallel shifts
        if all(abs(c1) * L < 1e-12 for (c0, c1), L in
               zip(f.side_normal_velocity, p.side_lengths)):
            active = [j for j, (c0, c1) in enumerate(f.side_normal_velocity)
                      if abs(c0) > 1e-12]
            if active and all(j < p.n - 1 for j in active):
                payload["formula"]["contour_route"] = contour_shift_integral(m, f, cfg.var)
        timer.mark("formula")
    if args.route in ("fd", "both"):
        payload["fd"] = _fd_logdet_derivative(p, f, cfg, _cache_dir(args))
        timer.mark("fd")
    if args.route == "both":
        payload["discrepancy"] = abs(payload["formula"]["total"] - payload["fd"])
    return Report(
        command=["var", args.polygon, args.field, "--route", args.route],
        config_hash=cfg.hash(),
        payload=payload,
        diagnostics=diagnostics,
        timings=timer.marks,
    )


def cmd_wz(args, cfg):
    timer = Timer()
    d = domain_from_json_dict(_load_json(args.domain))
    payload = {"alvarez_logdet_upto_constant": alvarez_logdet(d, args.n_grid)}
    if args.field:
        V = [complex(x, y) for x, y in _load_json(args.field)["taylor"]]
        payload["wz_variation"] = wz_variation(d, V, args.n_grid)
    timer.mark("wz")
    return Report(
        command=["wz", args.domain] + (["--field", args.field] if args.field else []),
        config_hash=cfg.hash(),
        payload=payload,
        timings=timer.marks,
    )


def cmd_validate(args, cfg):
    timer = Timer()
    records = validation.run_suite(args.suite)
    timer.mark("suite")
    n_fail = sum(not r["passed"] for r in records)
    width = max(len(r["criterion"]) for r in records)
    lines = []
    for r in records:
        status = "PASS" if r["passed"] else "FAIL"
        lines.append(f"{status}  {r['criterion']:<{width}}  "
                     f"measured {r['measured']:9.3e}  tol {r['tolerance']:7.1e}")
    print("\n".join(lines))
    report = Report(
        command=["validate", args.suite],
        config_hash=cfg.hash(),
        payload={"records": records, "failures": n_fail},
        timings=timer.marks,
    )
    return report, (0 if n_fail == 0 else 3)


def build_parser():
    ap = argparse.ArgumentParser(prog="polydet",
                                 description="zeta-determinants of polygon Laplacians "
                                             "and their variations")
    ap.add_argument("--cfg", help="JSON config file")
    ap.add_argument("--out", help="write the report to this file")
    ap.add_argument("--format", choices=["json", "csv"], default="json")
    ap.add_argument("--cache-dir", help="cache directory (env POLYDET_CACHE)")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=None,
                    help="seed for randomized collocation points")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("scmap", help="solve the Schwarz-Christoffel parameter problem")
    sp.add_argument("polygon")
    sp = sub.add_parser("det", help="zeta-regularized log-determinant")
    sp.add_argument("polygon")
    sp = sub.add_parser("var", help="variation of log det under a deformation field")
    sp.add_argument("polygon")
    sp.add_argument("field")
    sp.add_argument("--route", choices=["formula", "fd", "both"], default="formula")
    sp = sub.add_parser("wz", help="smooth-domain (Taylor map) determinant tools")
    sp.add_argument("domain")
    sp.add_argument("--field", help="holomorphic perturbation V as Taylor JSON")
    sp.add_argument("--n-grid", type=int, default=512)
    sp = sub.add_parser("validate", help="run a validation suite")
    sp.add_argument("suite", choices=sorted(validation.SUITES))
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_file(args.cfg) if args.cfg else RunConfig()
        if args.seed is not None or args.threads != 1:
            cfg = _with_overrides(cfg, args.seed, args.threads)
        if args.command == "validate":
            report, code = cmd_validate(args, cfg)
            _emit(report, args)
            return code
        handler = {"scmap": cmd_scmap, "det": cmd_det,
                   "var": cmd_var, "wz": cmd_wz}[args.command]
        report = handler(args, cfg)
        _emit(report, args)
        return 0
    except ValidationFailure as e:
        print(f"error ({type(e).__name__}): {e}", file=sys.stderr)
        return 2
    except NumericalFailure as e:
        print(f"numerical failure ({type(e).__name__}): {e}", file=sys.stderr)
        return 3
    except Exception as e:  # noqa: BLE001 - internal assertion surface
        print(f"internal error ({type(e).__name__}): {e}", file=sys.stderr)
        return 4


def _with_overrides(cfg, seed, threads):
    d = cfg.to_dict()
    eig_kwargs = dict(d["eig"])
    if seed is not None:
        eig_kwargs["seed"] = seed
    eig_kwargs["threads"] = threads
    return RunConfig(sc=cfg.sc, eig=EigConfig(**eig_kwargs), zeta=cfg.zeta,
                     var=cfg.var, lambda_max=cfg.lambda_max,
                     lambda_max_factor=cfg.lambda_max_factor,
                     fd_step=cfg.fd_step, cache_dir=cfg.cache_dir,
                     out_format=cfg.out_format, threads=threads,
                     seed=seed if seed is not None else cfg.seed)


if __name__ == "__main__":
    sys.exit(main())
