"""Command-line entry point: ``eig``, ``predict``, ``study`` and ``oracle``.

Exit codes: 0 on success, 2 on configuration errors, 1 on numerical
failures.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import FORMS, StudyConfig, load_config
from .errors import ConfigError, NumericalError, ValidationError
from .fem import richardson
from .geometry import Rectangle, zero_field
from .harness import (
    ExperimentReport,
    _solve,
    perturbation_field,
    perturbed_domain,
    quadrature_nodes,
    run_config,
    study_resolution,
)
from .meshing import dump_mesh, radial_for, refine
from .oracles import disk_neumann_eigs, rect_neumann_eigs
from .perturbation import find_cluster, kappa_boundary, tau_volume
from .svgplot import loglog_svg

log = logging.getLogger("neumann_hadamard")

CSV_SCHEMA_VERSION = 1
CSV_HEADER = "epsilon,d,Lambda_m,J_m,k,Lambda_prime_k,kappa_k,remainder_k,fem_floor,masked"
WORKERS_ENV = "HADAMARD_WORKERS"


def _num(x: float) -> str:
    return format(float(x), ".17e") if math.isfinite(x) else "nan"


def report_csv(report: ExperimentReport) -> str:
    """Versioned CSV text, one line per (epsilon, cluster member)."""
    lines = [
        f"# neumann-hadamard report schema={CSV_SCHEMA_VERSION} family={report.family} "
        f"form={report.form} target={_num(report.target)}",
        CSV_HEADER,
    ]
    for r in report.rows:
        if not r.remainder:
            lines.append(",".join([_num(r.epsilon), _num(r.d), "nan", "0", "0", "nan", "nan", "nan", "nan", "1"]))
            continue
        for k in range(r.multiplicity):
            lines.append(",".join([
                _num(r.epsilon), _num(r.d), _num(r.lambda_m), str(r.multiplicity), str(k + 1),
                _num(r.lambda_prime[k]), _num(r.kappa[k]), _num(r.remainder[k]), _num(r.floor[k]),
                "1" if r.masked[k] else "0",
            ]))
    return "\n".join(lines) + "\n"


def report_svg(report: ExperimentReport) -> str:
    rows = [r for r in report.rows if r.remainder]
    x = [r.epsilon for r in rows]
    y = [max(abs(v) for v in r.remainder) for r in rows]
    masked = [not r.usable for r in rows]
    fit = report.fit
    return loglog_svg(
        x, y, masked,
        slope=fit.slope if fit else None,
        intercept=fit.intercept if fit else None,
        title=f"{report.family}, {report.form} form",
    )


def _workers(args, cfg: StudyConfig) -> int:
    if getattr(args, "workers", None) is not None:
        n = args.workers
    elif os.environ.get(WORKERS_ENV):
        try:
            n = int(os.environ[WORKERS_ENV])
        except ValueError:
            raise ValidationError("workers", f"{WORKERS_ENV} must be an integer") from None
    else:
        n = cfg.run.workers
    if n < 1:
        raise ValidationError("workers", "must be >= 1")
    return n


def _fmt(values, digits: int = 10) -> str:
    return ", ".join(f"{v:.{digits}g}" for v in values)


def _reference_resolution(cfg: StudyConfig, omega1):
    if isinstance(omega1, Rectangle):
        return study_resolution(cfg, None, omega1, 1.0)
    n_a = cfg.mesh.min_angular
    return (radial_for(n_a), n_a)


# ---------------------------------------------------------------------------
# subcommands


def cmd_eig(args) -> int:
    cfg = load_config(args.config)
    omega1 = cfg.domain.build()
    res = tuple(args.resolution) if args.resolution else _reference_resolution(cfg, omega1)
    count = args.count or cfg.solver.count
    cfg_count = replace(cfg, solver=replace(cfg.solver, count=count))
    coarse = _solve(cfg_count, omega1, res)
    if args.mesh_dump:
        dump_mesh(coarse.mesh, args.mesh_dump)
    if args.raw:
        values = coarse.eigenvalues
    else:
        fine = _solve(cfg_count, omega1, refine(res))
        values, _ = richardson(coarse.eigenvalues, fine.eigenvalues)
    print(_fmt(values))
    return 0


def cmd_predict(args) -> int:
    cfg = load_config(args.config)
    eps = cfg.epsilon.start if args.epsilon is None else args.epsilon
    if not math.isfinite(eps):
        raise ValidationError("epsilon", "must be finite")
    family = cfg.family.build()
    omega1 = cfg.domain.build()
    # negative amplitudes flip the profile (inward displacement)
    h = zero_field() if eps == 0 else perturbation_field(cfg, family, omega1, abs(eps)).scaled(math.copysign(1.0, eps))
    res = study_resolution(cfg, family, omega1, abs(eps) if eps else cfg.epsilon.start)
    form = args.form or ("volume" if cfg.run.form == "volume" else "boundary")
    omega2 = perturbed_domain(cfg, omega1, h) if form == "volume" and eps != 0 else omega1
    preds = []
    lam = []
    for r in (res, refine(res)):
        sol = _solve(cfg, omega1, r)
        cl = find_cluster(sol, cfg.cluster.target, cfg.cluster.rel_tol)
        lam.append(cl.value)
        if form == "volume":
            preds.append(tau_volume(cl, sol, omega2, h, (cfg.run.n_t, 0)).values)
        else:
            preds.append(kappa_boundary(cl, sol, h, quadrature_nodes(sol.mesh, h)).values)
    if len(preds[0]) != len(preds[1]):
        raise NumericalError("cluster multiplicity changes under refinement")
    kap, _ = richardson(*preds)
    lam_m, _ = richardson(*lam)
    print(f"epsilon = {eps!r}")
    print(f"Lambda_m = {lam_m:.10g}  J_m = {len(kap)}  form = {form}")
    print("kappa = " + _fmt(kap))
    return 0


def cmd_study(args) -> int:
    cfg = load_config(args.config)
    if args.form:
        cfg = replace(cfg, run=replace(cfg.run, form=args.form))
    out = Path(args.output or cfg.output_dir)
    workers = _workers(args, cfg)
    reports = run_config(cfg, workers)
    out.mkdir(parents=True, exist_ok=True)
    primary = "volume" if cfg.run.form == "volume" else "boundary"
    written = []
    for form, report in reports.items():
        name = "report.csv" if form == primary else f"report_{form}.csv"
        (out / name).write_text(report_csv(report), encoding="utf-8")
        written.append(out / name)
        if args.plot:
            svg = "report.svg" if form == primary else f"report_{form}.svg"
            (out / svg).write_text(report_svg(report), encoding="utf-8")
            written.append(out / svg)
        fit = report.fit
        if fit is None:
            print(f"{form}: fewer than 4 unmasked rows, no order fit")
        else:
            print(f"{form}: slope {fit.slope:.3f} +/- {fit.half_width:.3f}; |R|/eps = {_fmt(fit.ratios, 4)}")
    for p in written:
        print(f"wrote {p}")
    return 0


def cmd_oracle(args) -> int:
    if args.shape == "square":
        vals = rect_neumann_eigs(1.0, 1.0, args.count)
    elif args.shape == "rectangle":
        vals = rect_neumann_eigs(args.width, args.height, args.count)
    else:
        vals = disk_neumann_eigs(args.count, args.radius)
    text = []
    for v in vals:
        s = f"{v:.{args.digits}f}"
        if "." in s:
            s = s.rstrip("0").rstrip(".")
        text.append(s)
    print(", ".join(text))
    return 0


def _positive_float(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _resolution(s: str):
    try:
        a, b = (int(x) for x in s.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected N_RADIAL,N_ANGULAR") from None
    return a, b


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hadamard", description="Neumann eigenvalue perturbation toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eig", help="eigenvalues of the reference domain")
    e.add_argument("--config", required=True)
    e.add_argument("--count", type=int)
    e.add_argument("--resolution", type=_resolution, help="N_RADIAL,N_ANGULAR (rectangle: NY,NX)")
    e.add_argument("--raw", action="store_true", help="single mesh, no extrapolation")
    e.add_argument("--mesh-dump", metavar="PATH", help="write the coarse mesh as text")
    e.set_defaults(func=cmd_eig)

    pr = sub.add_parser("predict", help="first-order shifts for one amplitude")
    pr.add_argument("--config", required=True)
    pr.add_argument("--epsilon", type=float, help="signed amplitude (default: first of the sweep)")
    pr.add_argument("--form", choices=("boundary", "volume"))
    pr.set_defaults(func=cmd_predict)

    s = sub.add_parser("study", help="remainder sweep and order fit")
    s.add_argument("--config", required=True)
    s.add_argument("--form", choices=FORMS)
    s.add_argument("--workers", type=int)
    s.add_argument("--plot", action="store_true", help="also write report.svg")
    s.add_argument("--output", help="output directory (overrides [output] dir)")
    s.set_defaults(func=cmd_study)

    o = sub.add_parser("oracle", help="analytic Neumann spectra")
    o.add_argument("--shape", choices=("square", "rectangle", "disk"), required=True)
    o.add_argument("--count", type=int, default=4)
    o.add_argument("--width", type=_positive_float, default=1.0)
    o.add_argument("--height", type=_positive_float, default=1.0)
    o.add_argument("--radius", type=_positive_float, default=1.0)
    o.add_argument("--digits", type=int, default=4)
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
