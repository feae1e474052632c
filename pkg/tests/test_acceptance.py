"""End-to-end acceptance runs, one test per criterion, at full size."""

import time

import pytest

from stosym.experiments import run_experiment


def _run(record, label, name, checks=None, **params):
    result = run_experiment(name, 0, params)
    chosen = [c for c in result.checks if checks is None or c.name in checks]
    assert chosen, "no checks selected"
    passed = all(c.passed for c in chosen)
    record(label, passed, "; ".join(f"{c.name}={c.value:.3g}" for c in chosen))
    return passed, result


def test_A1_planar_determining_equations(record_criterion):
    ok, _ = _run(record_criterion, "A1", "sec6-determining")
    assert ok


def test_A2_planar_pathwise_symmetry(record_criterion):
    ok, _ = _run(record_criterion, "A2", "sec6-pathwise")
    assert ok


def test_A3_planar_equation_invariance(record_criterion):
    ok, _ = _run(record_criterion, "A3", "sec6-ET-invariance")
    assert ok


def test_A4_gauge_frame_reduction(record_criterion):
    ok, _ = _run(record_criterion, "A4", "sec6-reduction-B")
    assert ok


def test_A5_polar_triangular_form(record_criterion):
    ok, _ = _run(record_criterion, "A5", "sec6-triangular")
    assert ok


def test_A6_bessel_mean(record_criterion):
    start = time.perf_counter()
    ok, _ = _run(record_criterion, "A6", "sec6-bessel")
    elapsed = time.perf_counter() - start
    record_criterion("A6-runtime", elapsed <= 300, f"{elapsed:.1f}s <= 300s")
    assert ok and elapsed <= 300


def test_A7_milstein_gauge_identity(record_criterion):
    ok, _ = _run(record_criterion, "A7", "milstein-gauge-identity")
    assert ok


def test_A8_euler_gauge_law(record_criterion):
    ok, _ = _run(record_criterion, "A8", "euler-gauge")
    assert ok


def test_A9_alpha_stable_time_scaling(record_criterion):
    ok, _ = _run(record_criterion, "A9", "alpha-stable-time")
    assert ok


def test_A10_levy_gauge_triplet(record_criterion):
    ok, _ = _run(record_criterion, "A10", "levy-gauge-isotropic")
    assert ok


def test_A11a_euler_linear_symmetries(record_criterion):
    checks = {"euler_residual_isotropic", "euler_residual_radial"}
    ok, _ = _run(record_criterion, "A11a", "euler-determining", checks)
    assert ok


def test_A11b_quadratic_counterexample_residual(record_criterion):
    # The stated oracle (residual = dW^2) omits the cross term 2 x dW, which is present for Y = x^2
    # on dX = dW. The check is run as stated and left to fail; the full expansion is checked below.
    ok, _ = _run(record_criterion, "A11b", "euler-determining", {"quadratic_residual_minus_dW2"})
    assert ok


def test_quadratic_counterexample_full_expansion():
    result = run_experiment("euler-determining", 0, {})
    (check,) = [c for c in result.checks if c.name == "quadratic_residual_minus_2x_dW_plus_dW2"]
    assert check.passed


def test_A11c_milstein_linear_symmetries(record_criterion):
    checks = {"milstein_residual_isotropic", "milstein_residual_radial"}
    ok, _ = _run(record_criterion, "A11c", "milstein-determining", checks)
    assert ok


def test_A12_transformation_algebra(record_criterion):
    ok, _ = _run(record_criterion, "A12", "transform-algebra")
    assert ok


def test_A13_convergence_slopes(record_criterion):
    ok, _ = _run(record_criterion, "A13", "convergence-order")
    assert ok


@pytest.mark.parametrize("name", ["milstein-determining", "discrete-gauge-conjugation"])
def test_supporting_experiments(name):
    assert run_experiment(name, 0, {}).passed
