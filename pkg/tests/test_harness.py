import math
from dataclasses import replace

import numpy as np
import pytest

from neumann_hadamard.config import DomainSpec, FamilySpec, MeshSpec, StudyConfig
from neumann_hadamard.errors import InsufficientData
from neumann_hadamard.geometry import PerturbationFamily
from neumann_hadamard.harness import (
    ExperimentReport,
    StudyRow,
    fit_order,
    run_studies,
    run_study,
)

PI2 = math.pi**2


def _row(eps, R, masked=None):
    R = tuple(R)
    masked = tuple(masked or [False] * len(R))
    z = tuple(0.0 for _ in R)
    return StudyRow(eps, eps, (1, 1), (2, 2), 1.0, len(R), z, z, R, z, masked)


def _report(eps, R_fun, masked=None):
    rows = tuple(_row(e, [R_fun(e)], masked and [masked[i]]) for i, e in enumerate(eps))
    return ExperimentReport("synthetic", "boundary", 1.0, rows)


EPS = [0.1 * 2.0**-i for i in range(6)]


# --- fitting --------------------------------------------------------------------

def test_fit_exact_square():
    fit = fit_order(_report(EPS, lambda e: 3.0 * e**2))
    assert fit.slope == pytest.approx(2.0, abs=1e-6)
    assert fit.half_width < 1e-6
    assert fit.ratio_decreasing()
    assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-9)


def test_fit_three_halves():
    fit = fit_order(_report(EPS, lambda e: e**1.5))
    assert fit.slope == pytest.approx(1.5, abs=1e-9)
    assert fit.ratio_decreasing()


def test_fit_linear_ratio_constant():
    fit = fit_order(_report(EPS, lambda e: 0.7 * e))
    assert fit.slope == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(fit.ratios, 0.7)
    assert not fit.ratio_decreasing()


def test_fit_noisy_half_width_covers(rng):
    noise = np.exp(rng.normal(0, 0.05, len(EPS)))
    fit = fit_order(_report(EPS, lambda e: e**2 * noise[EPS.index(e)]))
    assert abs(fit.slope - 2.0) < fit.half_width + 0.2
    assert fit.half_width > 0


def test_fit_uses_unmasked_only():
    masked = [False, False, True, False, False, False]
    rep = _report(EPS, lambda e: e**2 if e != EPS[2] else 1.0, masked)
    fit = fit_order(rep)
    assert fit.slope == pytest.approx(2.0, abs=1e-9)
    assert len(fit.epsilons) == 5


def test_fit_pools_max_over_members():
    rows = tuple(_row(e, [e**2, -2 * e**2]) for e in EPS)
    fit = fit_order(ExperimentReport("s", "boundary", 1.0, rows))
    np.testing.assert_allclose(fit.ratios, [2 * e for e in EPS])
    assert len(fit.per_k_slopes) == 2


def test_fit_insufficient():
    with pytest.raises(InsufficientData):
        fit_order(_report(EPS[:3], lambda e: e**2))
    masked = [True, True, True, False, False, False]
    with pytest.raises(InsufficientData):
        fit_order(_report(EPS, lambda e: e**2, masked))


def test_row_properties():
    r = _row(0.1, [1e-3, -2e-3], [False, True])
    assert r.usable
    assert r.pooled == pytest.approx(1e-3)
    r = _row(0.1, [1e-3], [True])
    assert not r.usable and math.isnan(r.pooled)


# --- end-to-end sweeps ----------------------------------------------------------

DISK = StudyConfig(mesh=MeshSpec(min_angular=128))
DILATION = PerturbationFamily("smooth", "const")


@pytest.fixture(scope="module")
def dilation_report():
    return run_study(DILATION, [0.04, 0.02, 0.01], 3.39, DISK)


def test_dilation_rows(dilation_report):
    rows = dilation_report.rows
    assert [r.epsilon for r in rows] == [0.04, 0.02, 0.01]
    for r in rows:
        assert r.multiplicity == 2
        assert r.d == pytest.approx(r.epsilon, rel=1e-6)
        assert len(r.remainder) == len(r.kappa) == len(r.floor) == len(r.masked) == 2
        assert r.fine_resolution[1] == 2 * r.resolution[1]
        for lp, k, R in zip(r.lambda_prime, r.kappa, r.remainder):
            assert R == pytest.approx(lp - r.lambda_m - k, abs=1e-12)
        np.testing.assert_allclose(r.kappa, -2 * r.lambda_m * r.epsilon, rtol=1e-2)


def test_dilation_remainder_second_order(dilation_report):
    for r in dilation_report.rows:
        bound = 3 * r.lambda_m * r.epsilon**2
        for R, f in zip(r.remainder, r.floor):
            assert abs(R) <= 1.2 * bound + f
    ratios = [max(abs(x) for x in r.remainder) / r.epsilon for r in dilation_report.rows]
    assert all(b < a for a, b in zip(ratios, ratios[1:]))


def test_side_shift_rectangle():
    cfg = StudyConfig(domain=DomainSpec(shape="rectangle", width=1.0, height=1.0),
                      mesh=MeshSpec(rect_cells=24))
    rep = run_study(PerturbationFamily(), [0.04, 0.02, 0.01], PI2, cfg)
    assert rep.family == "side_shift"
    for r in rep.rows:
        assert r.multiplicity == 2
        np.testing.assert_allclose(sorted(r.kappa), [-2 * PI2 * r.epsilon, 0.0], atol=2e-2 * PI2 * r.epsilon)
        # exact shift of the moving mode is pi^2 / (1 + eps)^2 - pi^2
        exact = PI2 / (1 + r.epsilon) ** 2 - PI2
        assert min(r.lambda_prime) - r.lambda_m == pytest.approx(exact, rel=1e-2)


def test_zero_family_gives_zero_remainder():
    rep = run_study(PerturbationFamily("smooth", "zero"), [0.02, 0.01], 3.39, DISK)
    for r in rep.rows:
        assert r.d == 0.0
        assert all(k == 0.0 for k in r.kappa)
        # the discrete double eigenvalue is split only by round-off
        assert all(abs(R) < 1e-10 * r.lambda_m for R in r.remainder)


def test_ambiguous_target_masks_rows():
    # the last computed eigenvalue cannot be shown to be a complete cluster
    cfg = replace(DISK, solver=replace(DISK.solver, count=4))
    rep = run_study(DILATION, [0.02, 0.01], 9.33, cfg)
    for r in rep.rows:
        assert r.multiplicity == 0
        assert not r.usable
        assert r.note.startswith("ambiguous")
    assert rep.fit is None


def test_both_forms_share_rows():
    reps = run_studies(DILATION, [0.02, 0.01], 3.39, DISK, ("boundary", "volume"))
    b, v = reps["boundary"], reps["volume"]
    for rb, rv in zip(b.rows, v.rows):
        assert rb.lambda_prime == rv.lambda_prime
        np.testing.assert_allclose(rv.kappa, rb.kappa, rtol=3e-2)


def test_worker_determinism():
    eps = [0.04, 0.02]
    a = run_study(DILATION, eps, 3.39, DISK, workers=1)
    b = run_study(DILATION, eps, 3.39, DISK, workers=2)
    assert a.rows == b.rows


@pytest.mark.parametrize("eps", [[], [0.1, 0.1], [0.01, 0.02], [0.1, -0.1]])
def test_bad_epsilon_sequences(eps):
    with pytest.raises(ValueError):
        run_study(DILATION, eps, 3.39, DISK)


def test_c1_family_row_sanity():
    cfg = StudyConfig(family=FamilySpec("c1", "dent"), mesh=MeshSpec(min_angular=128, per_oscillation=8))
    rep = run_study(cfg.family.build(), [0.04], 3.39, cfg)
    r = rep.rows[0]
    assert r.multiplicity == 2
    assert 0 < r.d <= 0.04 * 1.0001
    for lp, k in zip(r.lambda_prime, r.kappa):
        assert lp - r.lambda_m == pytest.approx(k, rel=0.3)
