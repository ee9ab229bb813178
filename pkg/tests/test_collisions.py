import numpy as np
import pytest

from cocycle_lab.model import build_two_bump_model, constant_angle_model
from cocycle_lab.collisions import (WordError, collision_table, collision_time,
                                    critical_set, dominance, word)
from cocycle_lab.model import find_cos_zeros


def brute_collision(omega_value, cj, cjp, delta, horizon):
    base = (cj - cjp) % 1.0
    for k in range(1, horizon + 1):
        d = (base + k * omega_value) % 1.0
        if min(d, 1.0 - d) < delta:
            return k
    return None


def test_critical_set_two_bump(resonant_model):
    pts = critical_set(resonant_model)
    assert len(pts) == 2
    assert pts[0] == pytest.approx(0.1, abs=1e-11)
    assert pts[1] == pytest.approx(resonant_model.bumps[1].center, abs=1e-11)
    shifted = critical_set(resonant_model.with_t(0.07))
    assert shifted[1] == pytest.approx(pts[1] + 0.07, abs=1e-10)


def test_critical_set_empty_for_constant_angle(golden):
    m = constant_angle_model(golden, 0.0, 3.0)
    assert find_cos_zeros(m) == []


def test_collision_time_bruteforce_oracle(golden, rng):
    # frozen reference: golden mean, c0=0, c1=0.5, delta=0.05 hits at k=4
    assert collision_time(golden, 0.0, 0.5, 0.05, 10 ** 6) == 4
    assert brute_collision(golden.value, 0.0, 0.5, 0.05, 10 ** 6) == 4
    for _ in range(100):
        w = float(rng.uniform(0.05, 0.95))
        c = float(rng.uniform(0, 1))
        cp = float(rng.uniform(0, 1))
        d = float(np.exp(rng.uniform(np.log(5e-3), np.log(0.3))))

        class _W:  # bare float stand-in with the omega interface
            value = w

        got = collision_time(_W, c, cp, d, 10 ** 5)
        want = brute_collision(w, c, cp, d, 10 ** 5)
        assert got == want


def test_collision_time_half_circle(golden):
    # delta >= 1/2 swallows the whole circle
    assert collision_time(golden, 0.31, 0.77, 0.5, 100) == 1


def test_primary_time_tracks_qnorm_levels(golden):
    from cocycle_lab.rotation import convergents, qnorm
    conv = convergents(golden, 12)
    for n in (5, 6, 7, 8):
        q = conv[n - 1][1]
        level = qnorm(golden, q)
        assert collision_time(golden, 0.2, 0.2, level * 1.01, 10 ** 5) == q
        later = collision_time(golden, 0.2, 0.2, level * 0.99, 10 ** 5)
        assert later > q


def test_dominance_immediate_secondary(golden):
    m = build_two_bump_model(golden, 0.1, (0.1 + golden.value) % 1.0,
                             +1, 1.0, -1.0, 1e-2, 30.0, t=0.0)
    v = dominance(m, 0.01, 10 ** 5)
    assert v.verdict == "SECONDARY"
    assert v.table.tau[(0, 1)] == 1
    assert v.table.tau0 > 1


def test_dominance_monotone_in_delta(resonant_model):
    big = collision_table(resonant_model, 0.05, 10 ** 5)
    small = collision_table(resonant_model, 0.01, 10 ** 5)
    for key, t_big in big.tau.items():
        t_small = small.tau[key]
        assert t_small is None or t_big is None or t_small >= t_big


def test_dominance_primary_with_large_quotient(omega_cond_a):
    m = build_two_bump_model(omega_cond_a, 0.1,
                             (0.1 + omega_cond_a.value) % 1.0,
                             +1, 1.0, -1.0, 1e-2, 100.0, t=0.237)
    v = dominance(m, 0.0026, 10 ** 5)
    assert v.verdict == "PRIMARY"
    assert v.table.tau0 == 8
    assert all(t > 8 for t in v.table.secondary_times().values())


def test_word_all_g_before_first_entry(resonant_model):
    m = resonant_model
    # start on a plateau whose first four steps stay clear of both centers
    x = 0.35
    fw = word(m, x, 4, 0.05, n=1, n_minus=3, n_plus=1)
    assert fw.letters == "GGGG"
    assert fw.k1 == 0 and fw.k2 == len(fw.letters) + 1
    assert fw.expand() == fw.raw


def test_word_single_h_block(resonant_model):
    m = resonant_model
    w = m.omega.value
    # start n_minus steps before the center: the window anchors at offset 3
    x = (0.1 - 3 * w) % 1.0
    fw = word(m, x, 5, 0.05, n=1, n_minus=3, n_plus=1)
    assert fw.letters == "H"
    assert fw.h_spans == ((0, 5),)
    assert fw.expand() == fw.raw


def test_word_expansion_long(resonant_model):
    fw = word(resonant_model, 0.1, 20000, 0.05, n=1, n_minus=3, n_plus=1)
    assert fw.expand() == fw.raw
    assert fw.k1 < fw.tau0
    assert len(fw.letters) - fw.k2 < fw.tau0
    assert fw.letters.count("B") <= 2
    assert (fw.k2 - fw.k1 - 1) / len(fw.letters) > 0.99
    assert "B" not in fw.truncated()


def test_word_overlap_error(resonant_model):
    # margins that exceed the primary return time must be rejected
    with pytest.raises(WordError):
        word(resonant_model, 0.1, 1000, 0.05, n=1, n_minus=9, n_plus=5)


def test_word_derives_margins(resonant_model):
    fw = word(resonant_model, 0.1, 2000, 0.05)
    assert fw.n == 1
    assert (fw.n_minus, fw.n_plus) == (3, 1)
