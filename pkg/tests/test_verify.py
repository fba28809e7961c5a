"""Verification-lemma grid checks: correct barriers pass in both modes,
perturbed barriers fail loudly, and the generator helpers behave."""

import math

import pytest

from fundiv import (
    DomainError,
    MissingParameter,
    SeamError,
    check_injection_lemma,
    check_smooth_fit,
    check_solvency_lemma,
    closed_form_value,
    double_barrier_value,
    generator_apply,
    optimal_barrier_beta0,
    optimal_barrier_beta2,
)
from helpers import P1, make_params


def solvency_params(alpha1=1.2):
    return make_params(alpha1=alpha1)


def injection_params():
    return make_params(kappa=1.05)


def condition(report, condition_id):
    matches = [c for c in report.condition_results if c.condition_id == condition_id]
    assert len(matches) == 1, f"{condition_id!r} not found in {report.condition_results}"
    return matches[0]


@pytest.mark.parametrize("mode", ["analytic", "finite-difference"])
@pytest.mark.parametrize("alpha1", [1.2, 5.0])
def test_solvency_lemma_passes_at_optimum(mode, alpha1):
    # alpha1 = 1.2 leaves the free optimum in charge; alpha1 = 5.0 binds.
    p = solvency_params(alpha1)
    report = check_solvency_lemma(p, mode=mode)
    assert report.problem == "solvency"
    assert report.mode == mode
    expected = max(optimal_barrier_beta0(p), alpha1)
    assert report.barrier == pytest.approx(expected, rel=1e-13)
    assert report.passed
    assert all(c.passed for c in report.condition_results)
    ids = [c.condition_id for c in report.condition_results]
    assert ids == [
        "nonnegative",
        "c1-pasting",
        "bounded-partials",
        "slope-at-least-one",
        "generator-zero-band",
        "generator-nonpositive-above",
    ]


@pytest.mark.parametrize("mode", ["analytic", "finite-difference"])
def test_injection_lemma_passes_at_optimum(mode):
    p = injection_params()
    report = check_injection_lemma(p, mode=mode)
    assert report.problem == "injection"
    assert report.barrier == pytest.approx(optimal_barrier_beta2(p), rel=1e-13)
    assert report.passed
    ids = [c.condition_id for c in report.condition_results]
    assert ids == [
        "c2-pasting",
        "nonnegative",
        "generator-sign",
        "slope-corridor",
        "bounded-dx2",
    ]


def test_fd_mode_alias():
    report = check_solvency_lemma(solvency_params(), mode="fd")
    assert report.mode == "finite-difference"
    assert report.passed


def test_perturbed_solvency_barrier_fails_loudly():
    # A barrier 10% off the optimum must break a sign condition by a margin
    # far above the tolerance, not by a rounding whisker.
    p = solvency_params()
    beta0 = optimal_barrier_beta0(p)

    high = check_solvency_lemma(p, barrier=1.1 * beta0)
    assert not high.passed
    slope = condition(high, "slope-at-least-one")
    assert not slope.passed
    assert slope.worst_violation > 100.0 * slope.tolerance

    low = check_solvency_lemma(p, barrier=0.9 * beta0)
    assert not low.passed
    gen = condition(low, "generator-nonpositive-above")
    assert not gen.passed
    assert gen.worst_violation > 100.0 * gen.tolerance


def test_perturbed_injection_barrier_fails_loudly():
    p = injection_params()
    beta2 = optimal_barrier_beta2(p)

    high = check_injection_lemma(p, barrier=1.1 * beta2)
    assert not high.passed
    pasting = condition(high, "c2-pasting")
    assert not pasting.passed
    assert pasting.worst_violation > 100.0 * pasting.tolerance

    low = check_injection_lemma(p, barrier=0.9 * beta2)
    assert not low.passed
    gen = condition(low, "generator-sign")
    assert not gen.passed
    assert gen.worst_violation > 100.0 * gen.tolerance


def test_smooth_fit_vanishes_at_optimal_barriers():
    fit_solvency = check_smooth_fit(solvency_params(), "solvency")
    assert abs(fit_solvency) <= 1e-6
    fit_injection = check_smooth_fit(injection_params(), "injection")
    assert abs(fit_injection) <= 1e-6


def test_smooth_fit_not_applicable_when_floor_binds():
    assert check_smooth_fit(solvency_params(alpha1=5.0), "solvency") is None


def test_smooth_fit_unknown_problem():
    with pytest.raises(ValueError):
        check_smooth_fit(solvency_params(), "liquidation")


def test_generator_identity_inside_band():
    # (A - delta)V = 0 on the continuation band, so A V = delta V exactly.
    p = make_params()
    cf = closed_form_value(optimal_barrier_beta0(p), p)
    for r in (1.2, 2.0, 3.0):
        av = generator_apply(cf, r, 1.0, p)
        assert av == pytest.approx(p.delta * cf.evaluate(r, 1.0), rel=1e-12)


def test_generator_fd_matches_analytic():
    p = make_params()
    cf = closed_form_value(optimal_barrier_beta0(p), p)
    for r in (2.0, 5.0):
        exact = generator_apply(cf, r, 1.0, p, mode="analytic")
        approx = generator_apply(cf, r, 1.0, p, mode="finite-difference")
        assert approx == pytest.approx(exact, rel=1e-4, abs=1e-8)

    pk = injection_params()
    dv = double_barrier_value(optimal_barrier_beta2(pk), pk.alpha0, pk)
    exact = generator_apply(dv, 1.4, 1.0, pk, mode="analytic")
    approx = generator_apply(dv, 1.4, 1.0, pk, mode="finite-difference")
    assert approx == pytest.approx(exact, rel=1e-4, abs=1e-8)


def test_generator_fd_is_second_order():
    # Central differences: halving h should quarter the error, i.e. the
    # log-error/log-h slope sits near 2.  Step pair chosen large enough that
    # truncation still dominates float rounding in the second differences.
    h_coarse, h_fine = 3e-3, 1e-3

    def slope(value_fn, r, p):
        exact = generator_apply(value_fn, r, 1.0, p, mode="analytic")
        err_coarse = abs(generator_apply(value_fn, r, 1.0, p, mode="fd", h_rel=h_coarse) - exact)
        err_fine = abs(generator_apply(value_fn, r, 1.0, p, mode="fd", h_rel=h_fine) - exact)
        return math.log(err_coarse / err_fine) / math.log(h_coarse / h_fine)

    p = make_params()
    cf = closed_form_value(optimal_barrier_beta0(p), p)
    for r in (1.5, 2.0, 2.8):
        assert 1.8 <= slope(cf, r, p) <= 2.2

    pk = injection_params()
    dv = double_barrier_value(optimal_barrier_beta2(pk), pk.alpha0, pk)
    assert 1.8 <= slope(dv, 1.4, pk) <= 2.2


def test_generator_fd_refuses_to_difference_across_a_kink():
    p = make_params()
    beta0 = optimal_barrier_beta0(p)
    cf = closed_form_value(beta0, p)
    with pytest.raises(SeamError):
        generator_apply(cf, beta0, 1.0, p, mode="finite-difference")
    # An explicit empty seam list overrides the function's own kink report.
    value = generator_apply(cf, beta0, 1.0, p, mode="finite-difference", seams=())
    assert math.isfinite(value)


def test_generator_analytic_needs_exact_partials():
    p = make_params()
    with pytest.raises(TypeError):
        generator_apply(lambda x1, x2: x1 - x2, 2.0, 1.0, p, mode="analytic")


def test_generator_unknown_mode():
    p = make_params()
    cf = closed_form_value(optimal_barrier_beta0(p), p)
    with pytest.raises(ValueError):
        generator_apply(cf, 2.0, 1.0, p, mode="spectral")


def test_lemma_checks_require_their_optional_parameter():
    with pytest.raises(MissingParameter):
        check_solvency_lemma(make_params())
    with pytest.raises(MissingParameter):
        check_injection_lemma(make_params())


def test_report_to_text_shape():
    report = check_solvency_lemma(solvency_params())
    text = report.to_text()
    lines = text.splitlines()
    assert lines[0] == "problem = solvency"
    assert lines[1].startswith("barrier = ")
    assert lines[2] == "mode = analytic"
    assert lines[3].startswith("grid = [")
    for c, line in zip(report.condition_results, lines[4:-1]):
        assert line.startswith(f"{c.condition_id}: worst = ")
        assert "(tol = " in line
        assert line.endswith("PASS")
    assert lines[-1] == "passed = true"

    bad = check_solvency_lemma(solvency_params(), barrier=2.0 * P1["alpha0"])
    bad_text = bad.to_text()
    assert "FAIL" in bad_text
    assert bad_text.splitlines()[-1] == "passed = false"
