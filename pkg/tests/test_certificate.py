import math

import numpy as np
import pytest

from dyadic.certificate import (
    EmptyAdmissibleSet,
    admissible_w,
    beta_max,
    beta_max_closed_form,
    check_initial_data,
    golden_section_max,
    make_certificate,
    optimal_eta,
    theta_window,
    transfer_margin,
)
from dyadic.model import ShellState


def grid_admissible(s, gamma, beta, lam=2.0, n=10_000, w_max=4.0):
    """Sign-evaluation oracle: the grid points w > 1 satisfying every inequality."""
    w = np.linspace(1.0, w_max, n + 1)[1:]
    ok = 1 / w <= lam**-2 * 2.0 ** (2 * s)
    if gamma is not None:
        ok &= 1 / w < lam ** (-4 * gamma)
    ok &= lam**2 / w - np.sqrt(w) > beta * (lam / np.sqrt(w) + w / lam)
    return w[ok]


def test_admissible_s1_inviscid():
    iv = admissible_w(1.0)
    assert iv.lo == 1.0 and not iv.lo_closed
    assert iv.hi == pytest.approx(2 ** (4 / 3), abs=1e-12)
    pts = grid_admissible(1.0, None, 0.0)
    assert pts.min() == pytest.approx(iv.lo, abs=4e-4)
    assert pts.max() == pytest.approx(iv.hi, abs=4e-4)
    assert all(w in iv for w in pts)
    assert 1.0 not in iv and iv.hi not in iv


@pytest.mark.parametrize("s,gamma,beta", [(0.75, None, 0.3), (1.0, 0.25, 0.1), (0.6, 0.1, 0.0), (2.0, 0.3, 0.05)])
def test_admissible_matches_grid(s, gamma, beta):
    iv = admissible_w(s, gamma, beta)
    pts = grid_admissible(s, gamma, beta)
    if iv.empty:
        assert pts.size == 0
        return
    assert all(w in iv for w in pts)
    assert pts.min() - iv.lo < 4e-4 and iv.hi - pts.max() < 4e-4


def test_admissible_lower_bound_closed_when_hs_constraint_binds():
    iv = admissible_w(0.5)
    assert iv.lo == pytest.approx(2.0) and iv.lo_closed
    assert 2.0 in iv


def test_admissible_empty_cases():
    assert admissible_w(1 / 3).empty
    assert admissible_w(1 / 3, beta=0.1).empty
    assert admissible_w(1.0, beta=10.0).empty
    assert admissible_w(1.0, beta=1.3).empty


def test_admissible_measure_shrinks_to_critical_s():
    m = [admissible_w(1 / 3 + 2.0**-k).measure for k in range(3, 11)]
    assert np.all(np.diff(m) < 0)
    assert m[-1] < 1e-2


@pytest.mark.parametrize("kw", [dict(s=0.3), dict(s=1.0, gamma=0.4), dict(s=1.0, gamma=0.0), dict(s=1.0, beta=-1), dict(s=1.0, lam=1.0)])
def test_invalid_parameters(kw):
    with pytest.raises(ValueError):
        admissible_w(**kw)


def test_beta_max_inviscid_values():
    for s in (0.5, 0.75, 1.0):
        assert beta_max(s).value == pytest.approx(beta_max_closed_form(s), abs=1e-6)
    bm = beta_max(1.0)
    assert bm.value == pytest.approx(1.2, abs=1e-9)
    assert not bm.attained
    assert beta_max_closed_form(2 / 3) == pytest.approx((2 ** (2 / 3) - 2 ** (-1 / 3)) / 1.5, rel=1e-15)


def test_beta_max_closed_form_decays_at_critical_s():
    vals = [beta_max_closed_form(1 / 3 + 10.0**-k) for k in range(2, 7)]
    assert np.all(np.diff(vals) < 0) and 0 < vals[-1] < 1e-5


def test_beta_max_against_dense_grid():
    for s in (0.45, 0.7, 1.0, 1.5):
        lo = max(1.0, 4 * 2.0 ** (-2 * s))
        # cubic clustering resolves a supremum sitting on the lower edge
        u = np.linspace(0, 1, 100_001)
        w = lo + (2 ** (4 / 3) - lo) * u**3
        if lo == 1.0:
            w = w[1:]  # w = 1 itself is excluded
        ratio = (4 / w - np.sqrt(w)) / (2 / np.sqrt(w) + w / 2)
        num = beta_max(s).value
        assert num == pytest.approx(ratio.max(), abs=1e-6)
        if s <= 1:
            assert num >= beta_max_closed_form(s) - 1e-12


def test_beta_max_monotone_grid():
    ss = np.linspace(0.4, 1.6, 10)
    gs = np.linspace(0.02, 0.32, 10)
    tab = np.array([[beta_max(s, g).value for g in gs] for s in ss])
    assert np.all(np.diff(tab, axis=0) >= -1e-12)
    assert np.all(np.diff(tab, axis=1) <= 1e-12)


def test_beta_boundary_around_beta_max():
    for s, g in [(0.8, None), (1.0, 0.25), (0.6, 0.1)]:
        bm = beta_max(s, g).value
        make_certificate(s, g, max(bm - 1e-6, 0.0))
        assert admissible_w(s, g, bm + 1e-6).empty
        with pytest.raises(EmptyAdmissibleSet):
            make_certificate(s, g, bm + 1e-6)


def test_inviscid_certificate():
    c = make_certificate(1.0)
    assert c.threshold == 0.0 and c.C2 == 0.0 and c.C1 > 0
    assert c.w in admissible_w(1.0)
    assert check_initial_data(np.array([0.0, 1e-9, 0.0]), c).passes


def test_viscous_closed_form_threshold_at_fixed_w():
    w, g4 = 2**0.5, 0.25
    with pytest.raises(ValueError):
        make_certificate(1.0, g4, w=w)  # 1/w < 2^(-1) fails at w = sqrt 2
    w = 2**1.1
    c = make_certificate(1.0, g4, w=w)
    g = transfer_margin(w)
    d = 1 - 2 ** (4 * g4) / w
    assert c.threshold == pytest.approx(1 / (g * d * math.sqrt(1 - 1 / w)), rel=1e-12)
    # oracle: brute-force eta on a fine grid
    etas = np.linspace(1e-6, g * d * (1 - 1e-9), 200_001)
    thr = np.sqrt((1 / (4 * etas * d)) / ((1 - 1 / w) * (g - etas / d)))
    assert thr.min() == pytest.approx(c.threshold, rel=1e-8)
    assert etas[np.argmin(thr)] == pytest.approx(optimal_eta(w, g4), rel=1e-3)


def test_certificate_invariants_random():
    rng = np.random.default_rng(4)
    made = 0
    for _ in range(100):
        s = float(rng.uniform(0.35, 2.0))
        g = None if rng.random() < 0.3 else float(rng.uniform(0.01, 0.33))
        b = float(rng.uniform(0, 0.5))
        try:
            c = make_certificate(s, g, b)
        except EmptyAdmissibleSet:
            assert admissible_w(s, g, b).empty
            continue
        made += 1
        c.check()
        assert c.threshold**2 * c.C1 == pytest.approx(c.C2, rel=1e-12, abs=0)
        assert c.w in admissible_w(s, g, b)
    assert made > 30


def test_certificate_minimizes_threshold():
    c = make_certificate(1.0, 0.25)
    iv = admissible_w(1.0, 0.25)
    ws = np.linspace(iv.lo, iv.hi, 2002)[1:-1]
    others = [make_certificate(1.0, 0.25, w=float(w)).threshold for w in ws]
    assert c.threshold <= min(others) * (1 + 1e-9)


def test_explicit_eta():
    c = make_certificate(1.0, 0.25, w=2**1.1, eta=0.005)
    assert c.eta == 0.005 and c.check() is c
    with pytest.raises(ValueError):
        make_certificate(1.0, 0.25, w=2**1.1, eta=10.0)


def test_theta_window():
    assert theta_window(1.0, 0.25) == (-4 / 3, -1.0)
    lo, hi = theta_window(0.5, 0.3)
    assert lo == -4 / 3 and hi == pytest.approx(-1.2, abs=1e-15)
    assert theta_window(1 / 3 + 1e-12, 0.1) is None or theta_window(1 / 3 + 1e-12, 0.1)[1] + 4 / 3 < 1e-10
    assert theta_window(1.0, 1 / 3 - 1e-12)[1] + 4 / 3 < 1e-10
    with pytest.raises(ValueError):
        theta_window(1.0, None)


def test_theta_window_matches_admissible_set():
    """w = 2^-theta is admissible (beta = 0, lambda = 2) exactly inside the window."""
    lo, hi = theta_window(1.0, 0.25)
    iv = admissible_w(1.0, 0.25)
    for th in np.linspace(lo, hi, 23)[1:-1]:
        assert 2.0**-th in iv


def test_check_initial_data():
    c = make_certificate(1.0, 0.25, w=2**1.1)
    zero = check_initial_data(ShellState(0, np.zeros(8)), c)
    assert not zero.passes and zero.margin == -c.threshold
    for k in range(4):
        for M in (0.5, 2.0):
            a = np.zeros(8)
            a[k] = M * c.threshold * (c.w / 2) ** k
            res = check_initial_data(a, c)
            assert res.passes == (M * c.threshold > c.threshold)
            assert res.L0 == pytest.approx(M * c.threshold, rel=1e-14)


def test_golden_section():
    x, fx = golden_section_max(lambda x: -(x - 0.3) ** 2, 0, 1, tol=1e-12)
    assert x == pytest.approx(0.3, abs=1e-6) and fx == pytest.approx(0, abs=1e-12)


def test_threshold_increases_with_beta():
    for s, g in [(1.0, 0.05), (0.8, 0.2)]:
        bm = beta_max(s, g).value
        th = [make_certificate(s, g, b).threshold for b in np.linspace(0, 0.95 * bm, 8)]
        assert np.all(np.diff(th) > 0)
