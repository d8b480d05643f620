"""Remainder measurement over amplitude sweeps and asymptotic-order fitting.

For every amplitude ``eps`` the reference and perturbed domains are solved
on two nested meshes. Eigenvalues and predictions are Richardson
extrapolated, the remainder is ``R_k = Lambda'_k - Lambda_m - kappa_k`` and
the FEM floor of a row is ``|R_k(fine) - R_k(coarse)|``. Rows whose floor is
not below ``0.1 |R_k|`` are kept but masked from fitting.
"""

from __future__ import annotations

import functools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .config import StudyConfig
from .errors import AmbiguousCluster, FitResidualTooLarge, InsufficientData
from .fem import EigenSolution, richardson, solve_mesh
from .geometry import (
    PerturbationFamily,
    PerturbationField,
    Rectangle,
    apply_normal_offset,
    family_field,
    hausdorff_distance,
    side_shift_field,
)
from .meshing import TriangleMesh, mesh_for, refine, resolution_for
from .perturbation import BOUNDARY, VOLUME, find_cluster, kappa_boundary, tau_volume

log = logging.getLogger(__name__)

MASK_FRACTION = 0.1


@dataclass(frozen=True)
class StudyRow:
    """One amplitude of a sweep. Per-member tuples are ordered by rank."""

    epsilon: float
    d: float
    resolution: tuple[int, int]
    fine_resolution: tuple[int, int]
    lambda_m: float
    multiplicity: int
    lambda_prime: tuple[float, ...]
    kappa: tuple[float, ...]
    remainder: tuple[float, ...]
    floor: tuple[float, ...]
    masked: tuple[bool, ...]
    note: str = ""

    @property
    def usable(self) -> bool:
        """At least one member is unmasked."""
        return not all(self.masked)

    @property
    def pooled(self) -> float:
        """``max |R_k|`` over unmasked members."""
        vals = [abs(r) for r, m in zip(self.remainder, self.masked) if not m]
        return max(vals) if vals else math.nan


@dataclass(frozen=True)
class OrderFit:
    slope: float
    half_width: float
    epsilons: tuple[float, ...]
    ratios: tuple[float, ...]
    per_k_slopes: tuple[float, ...]
    intercept: float = math.nan

    def ratio_decreasing(self) -> bool:
        r = self.ratios
        return all(b < a for a, b in zip(r, r[1:]))


@dataclass(frozen=True)
class ExperimentReport:
    family: str
    form: str
    target: float
    rows: tuple[StudyRow, ...]
    fit: OrderFit | None = None

    def unmasked(self) -> list[StudyRow]:
        return [r for r in self.rows if r.usable]


def _log_slope(x, y, confidence=0.95):
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.asarray(y, dtype=float))
    n = len(x)
    res = stats.linregress(x, y)
    if n > 2:
        half = float(stats.t.ppf(0.5 + confidence / 2, n - 2) * res.stderr)
    else:
        half = math.inf
    return float(res.slope), half, float(res.intercept)


def fit_order(report: ExperimentReport, min_rows: int = 4) -> OrderFit:
    """Least-squares slope of ``log max_k |R_k|`` against ``log eps``.

    ``half_width`` is the 95% Student-t half-width of the slope. Also
    returns the pooled ratio sequence ``|R| / eps`` (eps descending) and the
    per-member slopes.
    """
    rows = sorted(report.unmasked(), key=lambda r: -r.epsilon)
    rows = [r for r in rows if r.pooled > 0]
    if len(rows) < min_rows:
        raise InsufficientData(f"{len(rows)} unmasked rows, need {min_rows}")
    eps = [r.epsilon for r in rows]
    pooled = [r.pooled for r in rows]
    slope, half, icept = _log_slope(eps, pooled)
    per_k = []
    J = min(r.multiplicity for r in rows)
    for k in range(J):
        sub = [(r.epsilon, abs(r.remainder[k])) for r in rows if not r.masked[k] and r.remainder[k] != 0]
        per_k.append(_log_slope(*zip(*sub))[0] if len(sub) >= 2 else math.nan)
    ratios = tuple(p / e for p, e in zip(pooled, eps))
    return OrderFit(slope, half, tuple(eps), ratios, tuple(per_k), icept)


# ---------------------------------------------------------------------------
# one row


@dataclass(frozen=True)
class _Task:
    config: StudyConfig
    family: PerturbationFamily
    epsilon: float
    target: float
    forms: tuple[str, ...]


@functools.lru_cache(maxsize=4)
def _solve_cached(domain, resolution, count, tol, dense_threshold, max_iter) -> EigenSolution:
    mesh = mesh_for(domain, resolution)
    return solve_mesh(mesh, count, tol, dense_threshold=dense_threshold, max_iter=max_iter)


def _solve(cfg: StudyConfig, domain, resolution, cache=False) -> EigenSolution:
    s = cfg.solver
    args = (domain, tuple(resolution), s.count, s.tol, s.dense_threshold, s.max_iter)
    if cache:
        return _solve_cached(*args)
    return _solve_cached.__wrapped__(*args)


def perturbed_domain(cfg: StudyConfig, domain, h: PerturbationField):
    """``Omega_2``: normal offset of ``domain`` by ``h``.

    For a star domain the fit order starts at ``oscillations + fit_extra``
    and doubles until the fit residual test passes.
    """
    if h.amplitude == 0.0 or h.sup_abs == 0.0:
        return domain
    if isinstance(domain, Rectangle):
        return Rectangle(domain.width + h.amplitude, domain.height)
    order = h.oscillations + cfg.mesh.fit_extra
    for _ in range(6):
        try:
            return apply_normal_offset(domain, h, order)
        except FitResidualTooLarge:
            order = 2 * order + 8
    return apply_normal_offset(domain, h, order)


def perturbation_field(cfg: StudyConfig, family: PerturbationFamily, domain, eps: float):
    if isinstance(domain, Rectangle):
        return side_shift_field(domain, eps)
    return family_field(family, eps)


def domain_distance(cfg: StudyConfig, omega1, omega2) -> float:
    if isinstance(omega1, Rectangle):
        return max(abs(omega2.width - omega1.width), abs(omega2.height - omega1.height))
    return hausdorff_distance(omega1, omega2, cfg.mesh.hausdorff_samples)


def study_resolution(cfg: StudyConfig, family: PerturbationFamily, domain, eps: float):
    if isinstance(domain, Rectangle):
        n = cfg.mesh.rect_cells
        return (n, max(1, round(n * domain.width / domain.height)))
    m = cfg.mesh
    return resolution_for(family, eps, m.per_oscillation, m.min_angular, m.max_vertices)


def quadrature_nodes(mesh: TriangleMesh, h: PerturbationField) -> int:
    """Boundary quadrature size: four nodes per boundary edge, at least 8 per oscillation."""
    n = 4 * len(mesh.boundary_vertices)
    return max(n, 8 * max(h.oscillations, 1))


def _predict(form, cluster, sol, omega2, h, cfg):
    if form == VOLUME:
        return tau_volume(cluster, sol, omega2, h, (cfg.run.n_t, 0)).values
    return kappa_boundary(cluster, sol, h, quadrature_nodes(sol.mesh, h)).values


def _masked_rows(task, d, res, fine, note, forms):
    row = StudyRow(task.epsilon, d, res, fine, math.nan, 0, (), (), (), (), (), note)
    return {f: row for f in forms}


def _study_row(task: _Task) -> dict[str, StudyRow]:
    cfg, eps = task.config, task.epsilon
    omega1 = cfg.domain.build()
    h = perturbation_field(cfg, task.family, omega1, eps)
    omega2 = perturbed_domain(cfg, omega1, h)
    d = domain_distance(cfg, omega1, omega2)
    res = study_resolution(cfg, task.family, omega1, eps)
    fine = refine(res)

    s1 = [_solve(cfg, omega1, r, cache=True) for r in (res, fine)]
    s2 = [s1[i] if omega2 is omega1 else _solve(cfg, omega2, r) for i, r in enumerate((res, fine))]

    try:
        cc = find_cluster(s1[0], task.target, cfg.cluster.rel_tol)
        cf = find_cluster(s1[1], task.target, cfg.cluster.rel_tol)
        if cc.members != cf.members:
            raise AmbiguousCluster(f"cluster changes under refinement: {cc.members} vs {cf.members}")
        # gap must exceed 3x the discretization error estimate
        find_cluster(s1[1], task.target, cfg.cluster.rel_tol, abs(cf.value - cc.value))
    except AmbiguousCluster as exc:
        log.info("eps=%g: %s", eps, exc)
        return _masked_rows(task, d, res, fine, f"ambiguous cluster: {exc}", task.forms)

    members = list(cc.members)
    lam_m, _ = richardson(cc.value, cf.value)
    lp_raw = [np.sort(s.eigenvalues[members]) for s in s2]
    lp, _ = richardson(*lp_raw)
    note = ""
    for s, cl in zip(s2, (cc, cf)):
        shifts = np.abs(np.sort(s.eigenvalues[members]) - cl.value)
        if np.max(shifts) >= 0.5 * cl.gap:
            note = "perturbed cluster not separated from its neighbours"

    out = {}
    for form in task.forms:
        k_raw = [_predict(form, cl, s, omega2, h, cfg) for cl, s in zip((cc, cf), s1)]
        kap, _ = richardson(*k_raw)
        R = lp - lam_m - kap
        R_raw = [lp_raw[i] - cl.value - k_raw[i] for i, cl in enumerate((cc, cf))]
        floor = np.abs(R_raw[1] - R_raw[0])
        masked = tuple(bool(note) or bool(f >= MASK_FRACTION * abs(r)) for f, r in zip(floor, R))
        out[form] = StudyRow(
            eps, d, res, fine, float(lam_m), len(members),
            tuple(map(float, lp)), tuple(map(float, kap)), tuple(map(float, R)),
            tuple(map(float, floor)), masked, note,
        )
    return out


# ---------------------------------------------------------------------------
# sweeps


def _forms(form: str) -> tuple[str, ...]:
    return (BOUNDARY, VOLUME) if form == "both" else (form,)


def run_studies(family: PerturbationFamily, eps_sequence, target: float, config: StudyConfig,
                forms=(BOUNDARY,), workers: int | None = None) -> dict[str, ExperimentReport]:
    """One :class:`ExperimentReport` per prediction form, sharing the eigensolves."""
    eps_sequence = [float(e) for e in eps_sequence]
    if not eps_sequence:
        raise ValueError("empty epsilon sequence")
    if any(e <= 0 for e in eps_sequence):
        raise ValueError("epsilons must be positive")
    if any(b >= a for a, b in zip(eps_sequence, eps_sequence[1:])):
        raise ValueError("epsilon sequence must be strictly decreasing")
    forms = tuple(forms)
    tasks = [_Task(config, family, e, target, forms) for e in eps_sequence]
    workers = config.run.workers if workers is None else workers
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            results = list(pool.map(_study_row, tasks))
    else:
        results = [_study_row(t) for t in tasks]
    label = family.describe()
    if config.domain.shape == "rectangle":
        label = "side_shift"
    reports = {}
    for form in forms:
        rows = tuple(sorted((r[form] for r in results), key=lambda r: -r.epsilon))
        report = ExperimentReport(label, form, target, rows)
        try:
            fit = fit_order(report)
        except InsufficientData:
            fit = None
        reports[form] = ExperimentReport(label, form, target, rows, fit)
    return reports


def run_study(family: PerturbationFamily, eps_sequence, target: float, config: StudyConfig,
              form: str = BOUNDARY, workers: int | None = None) -> ExperimentReport:
    """Measure remainders of ``form`` predictions along ``eps_sequence``."""
    return run_studies(family, eps_sequence, target, config, (form,), workers)[form]


def run_config(config: StudyConfig, workers: int | None = None) -> dict[str, ExperimentReport]:
    return run_studies(config.family.build(), config.epsilons(), config.cluster.target, config,
                       _forms(config.run.form), workers)


__all__ = [
    "ExperimentReport", "OrderFit", "StudyRow", "fit_order", "run_config", "run_studies", "run_study",
    "perturbed_domain", "perturbation_field", "study_resolution", "quadrature_nodes", "MASK_FRACTION",
]
