import math

import numpy as np
import pytest

from cocycle_lab.linalg import Mat2
from cocycle_lab.model import constant_angle_model, verify_hypotheses
from cocycle_lab.dynamics import (certify_uh, cocycle, log_norm_grid, lyapunov,
                                  oseledets_directions, validate_lemma2,
                                  window_angle_margin)


def _ident_err(m: Mat2):
    return np.linalg.norm(m.to_array() - np.eye(2))


def test_cocycle_zero_and_one(resonant_model):
    m = resonant_model
    assert _ident_err(cocycle(m, 0.3, 0)) == 0.0
    a = cocycle(m, 0.3, 1)
    assert np.allclose(a.to_array(), m.a_of_x(0.3).to_array(), rtol=1e-14)


def test_cocycle_inverse_identity(golden, rng):
    # direct multiplication can verify M(x,-n) M(x-nw, n) = I only while
    # eps * ||M||^2 stays below the tolerance, i.e. n log(lam) <~ 9; past
    # that the identity is destroyed by float conditioning, not by the code
    from cocycle_lab.model import build_two_bump_model
    m = constant_angle_model(golden, 0.4, 8.0)
    m2 = build_two_bump_model(golden, 0.1, 0.718, +1, 1.0, -1.0, 1e-2, 10.0, t=0.0)
    w = golden.value
    cases = [(m, (1, 2, 4)), (m2, (1, 2, 3))]
    for model, ns in cases:
        for n in ns:
            for _ in range(5):
                x = float(rng.uniform(0, 1))
                prod = cocycle(model, x, -n) @ cocycle(model, (x - n * w) % 1.0, n)
                assert _ident_err(prod) <= 1e-8
    # longer windows at a small expansion rate stay verifiable too
    m3 = constant_angle_model(golden, 0.4, 1.3)
    for n in (10, 30, 50):
        x = float(rng.uniform(0, 1))
        prod = cocycle(m3, x, -n) @ cocycle(m3, (x - n * w) % 1.0, n)
        assert _ident_err(prod) <= 1e-8


def test_cocycle_cadence_matches_direct_product(resonant_model):
    # renormalization cadence must not change the value: compare against a
    # plain high-precision product over a window longer than the cadence
    x = 0.37
    w = resonant_model.omega.value
    direct = np.eye(2)
    for k in range(40):
        direct = resonant_model.a_of_x((x + k * w) % 1.0).to_array() @ direct
    got = cocycle(resonant_model, x, 40).to_array()
    assert np.linalg.norm(got - direct) / np.linalg.norm(direct) <= 1e-12


def test_submultiplicativity(resonant_model, rng):
    m = resonant_model
    w = m.omega.value
    for _ in range(20):
        x = float(rng.uniform(0, 1))
        nn = int(rng.integers(1, 30))
        mm = int(rng.integers(1, 30))
        lhs = log_norm_grid(m, np.array([x]), nn + mm)[0]
        rhs = (log_norm_grid(m, np.array([(x + nn * w) % 1.0]), mm)[0]
               + log_norm_grid(m, np.array([x]), nn)[0])
        assert lhs <= rhs + 1e-9


def test_lyapunov_diagonal(golden):
    m = constant_angle_model(golden, 0.0, 2.0)
    est = lyapunov(m, x0=0.3, n_steps=2000)
    assert est.integrated == pytest.approx(math.log(2.0), rel=1e-3)


def test_lyapunov_quarter_turn_vanishes(golden):
    # R(pi/2) Z(lam) squares to -I: norms stay bounded, the exponent is zero
    m = constant_angle_model(golden, math.pi / 2, 5.0)
    est = lyapunov(m, x0=0.3, n_steps=10000)
    assert abs(est.integrated) <= 1e-6


def test_lyapunov_validation(golden):
    m = constant_angle_model(golden, 0.0, 2.0)
    with pytest.raises(Exception):
        lyapunov(m, x0=0.3, n_steps=10)


def test_oseledets_diagonal(golden):
    m = constant_angle_model(golden, 0.0, 3.0)
    xs, eu, es, eu_res, es_res, conv = oseledets_directions(m, 128, 200)
    assert conv
    assert np.max(np.minimum(eu, math.pi - eu)) <= 1e-9          # horizontal
    assert np.max(np.abs(es - math.pi / 2)) <= 1e-9              # vertical


def test_oseledets_certified_model(resonant_model):
    xs, eu, es, eu_res, es_res, conv = oseledets_directions(resonant_model, 512, 200)
    assert conv and max(eu_res, es_res) <= 1e-6
    d = np.abs(eu - es) % math.pi
    sep = np.minimum(d, math.pi - d)
    assert sep.min() > 0.0


def test_certify_diagonal(golden):
    m = constant_angle_model(golden, 0.0, 2.0)
    cert = certify_uh(m, 20, 1 << 10)
    assert cert.status == "certified"
    assert cert.min_log_norm / cert.block_length == pytest.approx(math.log(2.0), rel=1e-9)


def test_certify_elliptic_not_certified(golden):
    m = constant_angle_model(golden, math.pi / 2, 2.0)
    cert = certify_uh(m, 20, 1 << 10)
    assert cert.status != "certified"


def test_certificate_soundness(resonant_model, rng):
    cert = certify_uh(resonant_model, 52, 1 << 12,
                      window=(1, 3, 1, 0.05))
    assert cert.status == "certified"
    fresh = rng.uniform(0.0, 1.0, 1000)
    logs = log_norm_grid(resonant_model, fresh, cert.block_length)
    assert np.min(logs) >= cert.lambda0_estimate * cert.block_length


def test_window_margin_discriminates(resonant_model):
    m_res = resonant_model
    m_off = resonant_model.with_t(0.01)
    res = window_angle_margin(m_res, 1, 3, 1, 0.05)
    off = window_angle_margin(m_off, 1, 3, 1, 0.05)
    floor = 1.0 / m_res.lambda0
    assert res > floor
    assert off < floor


def test_certify_window_clause(resonant_model):
    good = certify_uh(resonant_model, 52, 1 << 12, window=(1, 3, 1, 0.05))
    assert good.status == "certified"
    bad = certify_uh(resonant_model.with_t(0.01), 52, 1 << 12,
                     window=(1, 3, 1, 0.05))
    assert bad.status != "certified"


def test_lemma2_growth_on_avoiding_segments(resonant_model):
    rep = verify_hypotheses(resonant_model, 1 << 14)
    out = validate_lemma2(resonant_model, c3=rep.c3_witness, n_lengths=(2, 4, 8))
    assert out["c_m"] == pytest.approx(0.5 * rep.c3_witness)
    for n, row in out["lengths"].items():
        assert row["segments"] > 0
        assert row["pass"]
