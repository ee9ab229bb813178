import math

import numpy as np
import pytest

from cocycle_lab.linalg import DomainError, rzr_decompose_arrays
from cocycle_lab.model import StepProfile
from cocycle_lab.resonance import (PreconditionError, asymptotic_diagnostics,
                                   block_decompose, eta_of_xi, F_of_xi,
                                   find_resonance, lemma3_validate,
                                   lemma4_validate, lemma5_validate, mu_of_F,
                                   select_n_pm)

P1 = StepProfile(-2.0 / 3.0, 0.75, 1.0)
P2 = StepProfile(2.0 / 3.0, -0.5, -1.0)


def test_mu_of_F_values():
    assert mu_of_F(2.0) == pytest.approx(1.0)
    assert mu_of_F(2.5) == pytest.approx(2.0)
    mu = mu_of_F(1e6)
    assert mu + 1.0 / mu == pytest.approx(1e6, rel=1e-12)
    with pytest.raises(DomainError):
        mu_of_F(1.5)


def test_F_floor_and_norm_tie(rng):
    for l1, l2 in ((1e4, 1e2), (1e2, 1e4), (10.0, 7.0), (31.0, 31.0)):
        xi = rng.uniform(0.02, 1.98, 400)
        f = F_of_xi(l1, l2, xi)
        assert np.all(f >= 2.0 - 1e-12)
        phi = np.arccos(np.sqrt(xi / 2.0))
        out = rzr_decompose_arrays(l2, phi, l1)
        mu = mu_of_F(np.maximum(f, 2.0))
        assert np.max(np.abs(mu - out["mu"]) / out["mu"]) <= 1e-9


def test_eta_matches_surd_argument(rng):
    l1, l2 = 1e4, 1e2
    xi = rng.uniform(0.02, 1.98, 400)
    phi = np.arccos(np.sqrt(xi / 2.0))
    out = rzr_decompose_arrays(l2, phi, l1)
    eta_exact = math.sqrt(2.0) * out["b"] / (1.0 - out["c"])
    eta_poly = eta_of_xi(l1, l2, xi)
    assert np.max(np.abs(np.abs(eta_poly) - np.abs(eta_exact))
                  / np.abs(eta_exact)) <= 1e-9


def test_diagnostics_eta_maximizer():
    l1, l2 = 1e4, 1e2
    d = asymptotic_diagnostics(l1, l2, 0.5, k1=1.0, k2=-1.0)
    beta = d.varkappa * 0 + (l1 ** -2 + l2 ** -2) / (1 + (l1 * l2) ** -2)
    assert d.xi_star is not None
    # the eta maximizer sits at 2 beta / l2^2 up to the stated corrections
    assert d.xi_star == pytest.approx(2.0 * beta / l2 ** 2, rel=0.05)
    # cross-check against a dense scan of |eta|
    xi = np.linspace(1e-9, 0.1 / l2 ** 2 * l2 ** 2, 200001) * 1e-3
    xi = np.linspace(d.xi_star * 0.2, d.xi_star * 5.0, 200001)
    vals = np.abs(eta_of_xi(l1, l2, xi))
    assert abs(xi[np.argmax(vals)] - d.xi_star) <= 0.02 * d.xi_star
    # the quartic coefficients of the extremal cubic cancel identically
    assert len(d.B_coeffs) == 4
    assert d.x_star == pytest.approx(math.atan(math.sqrt(beta)) / 1.0, rel=1e-6)


def test_lemma3_case1_true_minimum():
    rep = lemma3_validate(1e4, 1e2)
    # the exact minimum over the angle is the scale gap itself, attained at
    # the quarter turn (xi = 0); the interior candidate does not exist
    assert rep["mu_min"] == pytest.approx(1e2, rel=1e-9)
    assert rep["xi_min"] == pytest.approx(0.0, abs=1e-6)
    assert rep["ratio_to_scale_gap"] == pytest.approx(1.0, rel=1e-9)
    assert rep["ratio_to_case1_bound"] == pytest.approx(2.0 * math.sqrt(2.0) / 3.0, rel=1e-9)
    assert rep["statement_lower_bound_holds"]


def test_lemma3_case2():
    rep = lemma3_validate(1e2, 1e4)
    assert rep["ratio_to_case2_bound"] == pytest.approx(1.0, rel=1e-6)
    assert rep["statement_lower_bound_holds"]


def test_lemma3_preconditions():
    with pytest.raises(PreconditionError):
        lemma3_validate(50.0, 40.0)


def test_lemma4_acceptance_scales():
    rep = lemma4_validate(1e4, 1e2, P1, P2, 0.0)
    assert abs(rep["gap_ratio_proof"] - 1.0) <= 0.1
    assert abs(rep["chi_ratio"] - 1.0) <= 0.1
    assert rep["mu_ratio"] >= 0.9
    assert rep["alpha1_bracket_ok"]
    assert rep["x_star_implicit"] == pytest.approx(rep["x_at_max_phi2"], rel=1e-4)
    assert rep["pass_gap"] and rep["pass_chi"] and rep["pass_mu"]


def test_lemma4_detuning_qualitative():
    # moderate scales admit the Delta = +-0.1 detunings: the angle extremum
    # grows with |Delta| and its location mirrors under Delta -> -Delta
    rep0 = lemma4_validate(10.0, 7.0, P1, P2, 0.0)
    repp = lemma4_validate(10.0, 7.0, P1, P2, 0.1)
    repm = lemma4_validate(10.0, 7.0, P1, P2, -0.1)
    assert repp["max_abs_phi2"] > rep0["max_abs_phi2"]
    assert repm["max_abs_phi2"] > rep0["max_abs_phi2"]
    assert repp["max_abs_phi2"] == pytest.approx(repm["max_abs_phi2"], rel=0.05)
    mid = 0.5 * (repp["x_at_max_phi2"] + repm["x_at_max_phi2"])
    assert abs(mid) <= 0.02


def test_lemma4_delta_refusal():
    with pytest.raises(PreconditionError):
        lemma4_validate(1e4, 1e2, P1, P2, 0.5)
    with pytest.raises(PreconditionError):
        lemma4_validate(1e2, 1e4, P1, P2, 0.0)


def test_lemma5_bounds():
    l3s = np.geomspace(10.0, 1000.0, 17)
    rep = lemma5_validate(1e4, 1e2, l3s, P1, P2)
    assert rep["all_pass_tan"]
    assert rep["all_pass_mu"]
    # the measured growth floor rises linearly in lambda3: the scan's worst
    # point is its lower edge (the predicted interior worst case never
    # materializes for the true product; see the decisions ledger)
    assert rep["worst_lambda3"] == pytest.approx(10.0)
    mins = [r["mu3_min"] for r in rep["rows"]]
    assert all(b > a for a, b in zip(mins, mins[1:]))


def test_lemma5_preconditions():
    with pytest.raises(PreconditionError):
        lemma5_validate(1e2, 1e2, [50.0], P1, P2)
    with pytest.raises(PreconditionError):
        lemma5_validate(1e4, 1e2, [5.0], P1, P2)


def test_select_n_pm_example(resonant_model):
    # constant lambda = 30, C_M = 1/2: ceil(1.5 log 30 / log 15) = 2, and the
    # outgoing margin needs one step; feasible since tau0(0.05) = 13 >= 4
    pick = select_n_pm(resonant_model, 1, 0.05, c_m=0.5)
    assert pick == (2, 1)
    # with the measured plateau floor (c3/2 ~ 0.24) the incoming margin is 3
    pick2 = select_n_pm(resonant_model, 1, 0.05)
    assert pick2 == (3, 1)


def test_select_n_pm_limits(resonant_model):
    # large lambda0 limit: margins approach ceil(3n/2)+1eps and ceil(n/2)
    m = resonant_model.with_t(0.0)
    big = m.builder(**{**m.builder_kwargs, "lambda0": 1e6})
    pick = select_n_pm(big, 1, 0.05, c_m=0.5)
    assert pick == (2, 1)
    # infeasible when the window cannot fit before the primary return
    assert select_n_pm(resonant_model, 1, 0.45, c_m=0.5) is None


def test_block_decomposition_bounds(resonant_model):
    bd = block_decompose(resonant_model, 0.1, 1, 3, 1, 0.05)
    lam0 = resonant_model.lambda0
    assert bd.reconstruction_error <= 1e-9
    assert abs(bd.phi_n) <= 10.0 / lam0 ** 2
    assert abs(bd.chi_n) <= 10.0 / lam0 ** 2
    c_m = 0.5 * 0.4814
    assert (c_m * lam0) ** 1 <= bd.mu_n <= lam0 ** 1 * (1 + 1e-12)
    assert bd.mu_n_minus >= (c_m * lam0) ** 3


def test_block_decompose_preconditions(resonant_model):
    with pytest.raises(DomainError):
        block_decompose(resonant_model, 0.4, 1, 3, 1, 0.05)


def test_find_resonance_order_one(resonant_model):
    win = find_resonance(resonant_model, 1, (-0.01, 0.01), 0.05,
                         horizon=10 ** 6, measure_h=False)
    # order-1 alignment is exact: t_res = t0 and the correction vanishes
    assert win.t0 == pytest.approx(0.0, abs=1e-12)
    assert win.t_res == pytest.approx(win.t0, abs=1e-12)
    assert abs(win.delta_n_res) <= 1e-12
    assert win.delta_n_res_formula == 0.0
    assert win.certified_at_tres
    assert (win.n_minus, win.n_plus) == (3, 1)
    assert win.x1 == pytest.approx(0.1, abs=1e-10)


def test_find_resonance_no_alignment(resonant_model):
    win = find_resonance(resonant_model, 1, (0.2, 0.3), 0.05,
                         horizon=10 ** 6, measure_h=False)
    assert win.t_res is None
