import numpy as np
import pytest

from doublephase import (
    Branch,
    NehariKind,
    NoRootError,
    SolverOptions,
    classify_nehari,
    fiber_terms,
    minimize_on_branch,
    norm_1p,
    project_to_nehari,
    solve_two,
    weak_residual,
)
from doublephase.solver import multistart_directions
from doublephase.space import lebesgue_norm

from conftest import rng

LAM = 0.1


def test_project_minus_fixes_unit_function_at_lam4(mesh16, preset_data):
    u = np.ones(mesh16.num_nodes)
    v = project_to_nehari(mesh16, preset_data, u, 4.0, Branch.MINUS)
    assert np.max(np.abs(v - u)) <= 1e-9


def test_project_plus_uses_t1(mesh16, preset_data):
    u = np.ones(mesh16.num_nodes)
    v = project_to_nehari(mesh16, preset_data, u, 4.0, Branch.PLUS)
    t1 = v[0]
    assert 0.55 < t1 < 0.60
    cls = classify_nehari(mesh16, preset_data, v, 4.0)
    assert cls.kind is NehariKind.PLUS
    assert cls.ddpsi1 > 0


def test_project_noroot_above_threshold(mesh16, preset_data):
    u = np.ones(mesh16.num_nodes)
    with pytest.raises(NoRootError):
        project_to_nehari(mesh16, preset_data, u, 10.0, Branch.MINUS)


@pytest.mark.parametrize("branch,sign", [(Branch.PLUS, -1.0), (Branch.MINUS, 1.0)])
def test_minimize_on_branch_converges_with_correct_sign(mesh4, preset_data, branch, sign):
    res = minimize_on_branch(mesh4, preset_data, LAM, branch, np.ones(mesh4.num_nodes))
    assert res.converged
    assert sign * res.energy > 0
    assert res.nehari.kind is branch.nehari_kind
    assert res.residual.residual_norm <= 1e-8
    assert res.u.min() > 0
    assert res.floor_activations == 0


def test_converged_results_satisfy_strict_branch_inequality(mesh4, preset_data):
    d = preset_data
    for branch, sign in ((Branch.PLUS, 1.0), (Branch.MINUS, -1.0)):
        res = minimize_on_branch(mesh4, d, LAM, branch, np.ones(mesh4.num_nodes))
        ft = fiber_terms(mesh4, d, res.u)
        value = (
            (d.p + d.kappa - 1) * ft.a
            + (d.q + d.kappa - 1) * ft.b
            + (d.p_lower_star + d.kappa - 1) * ft.c
            - LAM * (d.q1 + d.kappa - 1) * ft.e
        )
        assert sign * value > 0


def test_minus_branch_norm_floor(mesh4, preset_data):
    # |v|_{q1} >= [(p+k-1)/(lam C^p (q1+k-1))]^{1/(q1-p)} with C the discrete
    # embedding constant estimated over the multi-start samples
    d = preset_data
    c_hat = max(
        lebesgue_norm(mesh4, w, d.q1) / norm_1p(mesh4, d, w)
        for _, w in multistart_directions(mesh4, seed=0)
    )
    res = minimize_on_branch(mesh4, d, LAM, Branch.MINUS, np.ones(mesh4.num_nodes))
    floor = ((d.p + d.kappa - 1) / (LAM * c_hat**d.p * (d.q1 + d.kappa - 1))) ** (
        1.0 / (d.q1 - d.p)
    )
    assert lebesgue_norm(mesh4, res.u, d.q1) >= floor


def test_minimize_rejects_zero_init(mesh4, preset_data):
    with pytest.raises(ValueError):
        minimize_on_branch(mesh4, preset_data, LAM, Branch.PLUS, np.zeros(mesh4.num_nodes))


def test_minimize_propagates_noroot(mesh4, preset_data):
    with pytest.raises(NoRootError):
        minimize_on_branch(mesh4, preset_data, 10.0, Branch.MINUS, np.ones(mesh4.num_nodes))


def test_max_iterations_reports_not_converged(mesh4, preset_data):
    res = minimize_on_branch(
        mesh4, preset_data, LAM, Branch.PLUS, np.ones(mesh4.num_nodes), SolverOptions(max_iter=2)
    )
    assert not res.converged
    assert res.iterations == 2


def test_converged_residual_agrees_with_weak_residual(mesh4, preset_data):
    res = minimize_on_branch(mesh4, preset_data, LAM, Branch.PLUS, np.ones(mesh4.num_nodes))
    report = weak_residual(mesh4, preset_data, res.u, LAM)
    assert report.residual_norm == pytest.approx(res.residual.residual_norm, rel=1e-12)
    assert report.residual_norm <= 1e-8


def test_multistart_set_is_deterministic(mesh4):
    a = multistart_directions(mesh4, seed=3)
    b = multistart_directions(mesh4, seed=3)
    assert [name for name, _ in a] == [
        "ones",
        "ramp",
        "bump",
        "ones_perturbed",
        "ramp_perturbed",
        "bump_perturbed",
    ]
    for (_, u), (_, v) in zip(a, b):
        assert np.array_equal(u, v)
    c = multistart_directions(mesh4, seed=4)
    assert not np.array_equal(a[3][1], c[3][1])


def test_solve_two_signs_and_best_of(mesh4, preset_data):
    report = solve_two(mesh4, preset_data, LAM)
    assert report.sign_ok
    assert report.plus.energy < 0 < report.minus.energy
    assert report.plus.u.min() > 0 and report.minus.u.min() > 0
    # best-of: no individual start beats the merged result
    for _, w in multistart_directions(mesh4, seed=0):
        res = minimize_on_branch(mesh4, preset_data, LAM, Branch.PLUS, w)
        if res.converged:
            assert report.plus.energy <= res.energy + 1e-12


def test_solve_two_reports_minus_failures_at_large_lambda(mesh4, preset_data):
    report = solve_two(mesh4, preset_data, 50.0)
    assert len(report.minus_failures) > 0 or (
        report.minus is not None and not report.minus.converged
    )
    assert not report.sign_ok


def test_solve_two_with_varying_coefficients(mesh4):
    from doublephase import ProblemData

    data = ProblemData(
        p=1.5, q=1.8, kappa=0.5, q1=4.0, lam=0.1,
        mu="0.5 + 0.5*x", alpha="1", beta="abs(y - 0.5)", zeta="0.5 + x*y",
    )
    report = solve_two(mesh4, data, 0.1)
    assert report.sign_ok
    assert report.plus.residual.residual_norm <= 1e-8
    assert report.minus.residual.residual_norm <= 1e-8


def test_solve_two_on_nonunit_rectangle(preset_data):
    from doublephase import build_rect_mesh

    mesh = build_rect_mesh(6, 3, rect=(0.0, 0.0, 2.0, 1.0))
    report = solve_two(mesh, preset_data, 0.1)
    assert report.sign_ok
    assert report.plus.u.min() > 0 and report.minus.u.min() > 0
