from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyadic.model import (
    LAMBDA_3D,
    ForcingSpec,
    GenericModelCoefficients,
    ModelParams,
    NonFiniteStateError,
    RescaledState,
    ShellState,
    classify_conservative_model,
    from_rescaled,
    nonlinear_rhs,
    rhs,
    rhs_rescaled,
    to_rescaled,
)


def reference_rhs(lam, alpha, beta, nu, gamma, a, f0=0):
    """Term-by-term transcription in exact rationals (dissipation in floats)."""
    J = len(a)
    ext = [Fraction(0)] + [Fraction(x) for x in a] + [Fraction(0)]
    L = Fraction(lam)
    out = []
    for j in range(J):
        am, a0, ap = ext[j], ext[j + 1], ext[j + 2]
        v = Fraction(alpha) * (L**j * am * am - L ** (j + 1) * a0 * ap)
        v += Fraction(beta) * (L**j * am * a0 - L ** (j + 1) * ap * ap)
        v += Fraction(f0) if j == 0 else 0
        out.append(float(v) - nu * lam ** (2 * gamma * j) * float(a0))
    return np.array(out)


def test_rhs_small_example_exact():
    p = ModelParams(lam=2.0, alpha=1.0, beta=0.0, nu=0.0, J=3)
    # a = (-1, 3/2, 1): shell 0 loses 2 * (-1) * 3/2, shell 1 gains 2 * 1 - 4 * 3/2
    got = rhs(p, ShellState(0.0, [-1.0, 1.5, 1.0]))
    np.testing.assert_array_equal(got, [3.0, -4.0, 9.0])
    np.testing.assert_array_equal(got, reference_rhs(2, 1, 0, 0, 0.25, [-1, 1.5, 1]))


@pytest.mark.parametrize("beta,nu,f0", [(0.0, 0.0, 0.0), (0.7, 0.0, 0.3), (0.4, 1.3, 2.0)])
def test_rhs_matches_reference(beta, nu, f0):
    rng = np.random.default_rng(7)
    a = rng.normal(size=9)
    p = ModelParams(lam=2.0, alpha=1.5, beta=beta, nu=nu, gamma=0.3, J=9)
    got = rhs(p, ShellState(0.0, a), ForcingSpec(f0))
    np.testing.assert_allclose(got, reference_rhs(2.0, 1.5, beta, nu, 0.3, a, f0), rtol=1e-13, atol=1e-12)


def test_rhs_generic_lambda():
    a = [0.5, -0.25, 1.0, 0.125]
    p = ModelParams(lam=LAMBDA_3D, alpha=0.6, beta=0.2, J=4)
    want = reference_rhs(LAMBDA_3D, 0.6, 0.2, 0.0, 0.25, a)
    np.testing.assert_allclose(rhs(p, np.array(a)), want, rtol=1e-13)


def test_nonlinear_rhs_out_buffer_and_forcing():
    p = ModelParams(J=4, beta=0.5)
    a = np.array([1.0, 2.0, 0.0, -1.0])
    buf = np.full(4, np.nan)
    res = nonlinear_rhs(p, a, 0.25, out=buf)
    assert res is buf
    np.testing.assert_allclose(res, reference_rhs(2, 1, 0.5, 0, 0.25, a, 0.25))


def test_rhs_rejects_bad_state():
    p = ModelParams(J=3)
    with pytest.raises(ValueError):
        rhs(p, np.zeros(4))
    with pytest.raises(NonFiniteStateError) as exc:
        ShellState(0.0, [0.0, np.inf, 1.0])
    assert exc.value.index == 1


@pytest.mark.parametrize(
    "kw",
    [dict(lam=1.0), dict(alpha=-1.0), dict(beta=-0.1), dict(nu=-1.0), dict(nu=1.0, gamma=0.0), dict(J=1), dict(J=3.5)],
)
def test_params_validation(kw):
    with pytest.raises(ValueError):
        ModelParams(**kw)


def test_states_are_read_only():
    src = np.array([1.0, 2.0])
    s = ShellState(0.0, src)
    src[0] = 9.0
    assert s.a[0] == 1.0
    with pytest.raises(ValueError):
        s.a[0] = 3.0


def test_energy_conserving_closure_random():
    rng = np.random.default_rng(11)
    for _ in range(100):
        J = int(rng.integers(2, 30))
        p = ModelParams(lam=float(rng.uniform(1.1, 6)), alpha=float(rng.uniform(0, 2)), beta=float(rng.uniform(0, 2)), J=J)
        a = rng.normal(size=J)
        dE = 2 * np.dot(a, rhs(p, a))
        scale = np.sum(np.abs(a) ** 3 * p.lam ** np.arange(1, J + 1))
        assert abs(dE) <= 1e-13 * scale


def test_rescaled_consistency_random():
    rng = np.random.default_rng(3)
    for _ in range(100):
        J = int(rng.integers(2, 25))
        p = ModelParams(
            lam=float(rng.uniform(1.2, 4)),
            alpha=float(rng.uniform(0, 2)),
            beta=float(rng.uniform(0, 2)),
            nu=float(rng.choice([0.0, rng.uniform(0, 2)])),
            gamma=float(rng.uniform(0.05, 0.5)),
            J=J,
        )
        s = ShellState(0.0, rng.normal(size=J))
        b = to_rescaled(p, s)
        lam_j = p.lam ** np.arange(J)
        np.testing.assert_allclose(rhs_rescaled(p, b), lam_j * rhs(p, s), rtol=1e-12, atol=1e-12 * np.abs(b.b).max() ** 2 * p.lam**2)
        back = from_rescaled(p, b)
        np.testing.assert_allclose(back.a, s.a, rtol=1e-15)


def test_rescaled_state_validation():
    with pytest.raises(NonFiniteStateError):
        RescaledState(0.0, [np.nan])


def test_normalization_map():
    """a(t) = (nu/alpha) a~(nu t), with a~ solving (1, beta/alpha, 1)."""
    rng = np.random.default_rng(5)
    alpha, beta, nu = 2.5, 0.75, 0.4
    p = ModelParams(alpha=alpha, beta=beta, nu=nu, gamma=0.2, J=8)
    q = ModelParams(alpha=1.0, beta=beta / alpha, nu=1.0, gamma=0.2, J=8)
    at = rng.uniform(0, 1, size=8)
    a = nu / alpha * at
    # d/dt a(t) = nu^2/alpha * (da~/dtau)(nu t)
    np.testing.assert_allclose(rhs(p, a), nu**2 / alpha * rhs(q, at), rtol=1e-12, atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-10, 10), min_size=2, max_size=12),
    st.floats(0.0, 3.0),
    st.floats(0.1, 3.0),
)
def test_scaling_symmetry(values, beta, c):
    """With nu = 0, a -> c a rescales time: rhs(c a) = c^2 rhs(a)."""
    a = np.array(values)
    p = ModelParams(beta=beta, J=a.size)
    np.testing.assert_allclose(rhs(p, c * a), c * c * rhs(p, a), rtol=1e-12, atol=1e-9)


# -- classifier ----------------------------------------------------------------


def test_classify_kp_and_obukhov():
    kp = classify_conservative_model(GenericModelCoefficients((1, 0, 0, 0, -2, 0)))
    assert kp.conservative and (kp.alpha, kp.beta) == (1.0, 0.0)
    ob = classify_conservative_model(GenericModelCoefficients((0, 1, 0, 0, 0, -2)))
    assert ob.conservative and (ob.alpha, ob.beta) == (0.0, 1.0)


def test_classify_roundtrip_random():
    rng = np.random.default_rng(13)
    for _ in range(50):
        alpha = Fraction(int(rng.integers(0, 1000)), int(rng.integers(1, 100)))
        beta = Fraction(int(rng.integers(0, 1000)), int(rng.integers(1, 100)))
        res = classify_conservative_model(GenericModelCoefficients.from_kpo(alpha, beta, 2), 2)
        assert res.conservative
        assert res.alpha == float(alpha) and res.beta == float(beta)


def test_classify_other_lambda():
    lam = Fraction(5, 2)
    res = classify_conservative_model(GenericModelCoefficients.from_kpo(Fraction(1, 3), Fraction(2, 7), lam), 2.5)
    assert res.conservative and res.alpha == 1 / 3 and res.beta == 2 / 7
    # the lambda = 2 coefficients are not conservative at lambda = 2.5
    assert not classify_conservative_model(GenericModelCoefficients.from_kpo(1, 0, 2), 2.5).conservative


def test_classify_perturbation_witness_is_exact():
    from dyadic.model import _energy_rate

    rng = np.random.default_rng(17)
    for _ in range(50):
        base = GenericModelCoefficients.from_kpo(Fraction(int(rng.integers(0, 20)), 4), Fraction(int(rng.integers(0, 20)), 4))
        C = list(base.C)
        C[int(rng.integers(0, 6))] += Fraction(1, 1000)
        coeffs = GenericModelCoefficients(tuple(C))
        res = classify_conservative_model(coeffs)
        assert not res.conservative
        assert res.energy_rate != 0
        assert _energy_rate(coeffs, Fraction(2), res.witness) == res.energy_rate


def test_coefficient_access_is_symmetric():
    c = GenericModelCoefficients.from_mapping({(0, -1): 3, (1, 0): Fraction(1, 2)})
    assert c[(-1, 0)] == 3 and c[(0, -1)] == 3 and c[(0, 1)] == Fraction(1, 2)
    with pytest.raises(ValueError):
        GenericModelCoefficients((1, 2))


@pytest.mark.parametrize(
    "kw,a,want",
    [
        (dict(J=3), [1.0, 0.0, 0.0], [0.0, 2.0, 0.0]),
        (dict(J=3, beta=1.0, nu=1.0, gamma=0.5), [1.0, 0.0, 0.0], [-1.0, 2.0, 0.0]),
        (dict(J=3), [1.0, 0.5, 0.25], [-1.0, 1.5, 1.0]),
    ],
)
def test_rhs_hand_examples(kw, a, want):
    p = ModelParams(**kw)
    np.testing.assert_array_equal(rhs(p, ShellState(0.0, a)), want)
    np.testing.assert_array_equal(want, reference_rhs(p.lam, p.alpha, p.beta, p.nu, p.gamma, a))


def test_rhs_rescaled_hand_examples():
    p = ModelParams(J=3)
    np.testing.assert_array_equal(rhs_rescaled(p, RescaledState(0.0, [1.0, 0.0, 0.0])), [0.0, 4.0, 0.0])
    np.testing.assert_array_equal(rhs_rescaled(p, np.zeros(3)), np.zeros(3))


def test_forcing_zero_is_unforced():
    p = ModelParams(J=5, beta=0.3)
    a = np.linspace(-1, 1, 5)
    np.testing.assert_array_equal(rhs(p, a, ForcingSpec(0.0)), rhs(p, a))


def test_truncation_conservation_termwise():
    rng = np.random.default_rng(23)
    for _ in range(200):
        J = int(rng.integers(2, 40))
        p = ModelParams(alpha=float(rng.uniform(0, 3)), beta=float(rng.uniform(0, 3)), J=J)
        a = rng.normal(size=J) * rng.uniform(0.01, 10)
        terms = a * rhs(p, a)
        assert abs(terms.sum()) <= 1e-12 * np.abs(terms).sum()


def test_classify_single_monomial_witness():
    res = classify_conservative_model(GenericModelCoefficients((0, 0, 0, 1, 0, 0)))
    assert not res.conservative
    assert res.witness == (1,)
    assert res.energy_rate == 2


def test_classify_kpo_alpha_beta_one():
    res = classify_conservative_model(GenericModelCoefficients.from_kpo(1, 1))
    assert res.conservative and (res.alpha, res.beta) == (1.0, 1.0)


def test_classify_rejects_bad_lambda():
    with pytest.raises(ValueError):
        classify_conservative_model(GenericModelCoefficients.from_kpo(1, 0), 1.0)
