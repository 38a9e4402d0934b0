import math

import numpy as np
import pytest

from dyadic.certificate import make_certificate
from dyadic.diagnostics import (
    energy,
    energy_flux,
    positivity_margin,
    riccati_residual,
    sobolev_norm,
    total_energy_rate,
    truncated_energy,
    weighted_functionals,
)
from dyadic.integrator import StepControl, StopCondition, integrate
from dyadic.model import ForcingSpec, ModelParams, ShellState, rhs


def test_sobolev_examples():
    assert sobolev_norm(ShellState(0, [1.0, 0.5, 0.25]), 1.0) == pytest.approx(math.sqrt(3), rel=1e-15)
    assert sobolev_norm(np.zeros(5), 2.0) == 0.0
    rng = np.random.default_rng(0)
    for _ in range(100):
        a = rng.normal(size=int(rng.integers(1, 30)))
        assert sobolev_norm(a, 0.0) == pytest.approx(math.sqrt(energy(a)), rel=1e-14)


def test_sobolev_monotone_in_s():
    rng = np.random.default_rng(1)
    a = rng.normal(size=12)
    vals = [sobolev_norm(a, s) for s in np.linspace(-1, 2, 31)]
    assert np.all(np.diff(vals) > 0)
    only0 = np.zeros(12)
    only0[0] = 2.0
    assert sobolev_norm(only0, 0.0) == sobolev_norm(only0, 3.0) == 2.0


def test_sobolev_rejects_non_finite():
    with pytest.raises(ValueError):
        sobolev_norm(np.array([1.0, np.nan]), 1.0)


def test_energy_examples():
    a = ShellState(0, [3.0, 4.0, 0.0])
    assert energy(a) == 25.0
    assert truncated_energy(a, 0) == 9.0
    assert truncated_energy(a, 2) == energy(a)
    with pytest.raises(IndexError):
        truncated_energy(a, 3)


def test_flux_examples():
    p = ModelParams(J=6)
    assert energy_flux(p, np.ones(6), 0) == -4.0
    q = ModelParams(J=6, beta=0.8)
    a = np.array([1.0, 2.0, 0.0, 0.0, 3.0, 1.0])
    assert energy_flux(q, a, 2) == 0.0
    with pytest.raises(IndexError):
        energy_flux(p, np.ones(6), 5)


def test_flux_matches_direct_rate():
    """Flux at J-2 plus the last shell's own budget equals 2 sum a_j rhs_j."""
    rng = np.random.default_rng(2)
    for _ in range(100):
        J = int(rng.integers(3, 20))
        p = ModelParams(alpha=float(rng.uniform(0, 2)), beta=float(rng.uniform(0, 2)), nu=float(rng.uniform(0, 2)), gamma=0.3, J=J)
        f = ForcingSpec(float(rng.uniform(0, 1)))
        a = rng.normal(size=J)
        for j0 in range(J - 1):
            # derivative of E_{j0} from the full right-hand side, shell by shell
            direct = 2 * math.fsum(a[: j0 + 1] * rhs(p, a, f)[: j0 + 1])
            assert energy_flux(p, a, j0, f) == pytest.approx(direct, rel=1e-12, abs=1e-12 * (1 + abs(direct)))
        # j0 = J-2 plus shell J-1 sees no outgoing transfer under the closure
        last = 2 * a[-1] * rhs(p, a, f)[-1]
        assert energy_flux(p, a, J - 2, f) + last == pytest.approx(total_energy_rate(p, a, f), rel=1e-12, abs=1e-12)


def test_flux_matches_trajectory_finite_difference():
    p = ModelParams(J=12, beta=0.3, nu=0.5)
    ctrl = StepControl(rel_tol=1e-12, abs_tol=1e-14)
    tr = integrate(p, ShellState(0, [0.4, 0.3, 0.2] + [0.0] * 9), None, ctrl, StopCondition(t_end=1.0), 1e-3)
    j0 = 2
    E = np.array([truncated_energy(a, j0) for a in tr.a])
    fd = (E[2:] - E[:-2]) / (tr.t[2:] - tr.t[:-2])
    flux = np.array([energy_flux(p, a, j0) for a in tr.a[1:-1]])
    assert np.max(np.abs(fd - flux)) < 1e-5


def test_weighted_functionals_examples():
    p = ModelParams(J=10)
    wf = weighted_functionals(np.eye(10)[0], p, 1.7)
    assert (wf.L, wf.A) == (1.0, 1.0)
    a = 2.0 ** -np.arange(10)
    wf = weighted_functionals(a, p, 2.0)
    assert wf.L == pytest.approx(2 * (1 - 2.0**-10), rel=1e-15)
    assert wf.A == pytest.approx(2 * (1 - 2.0**-10), rel=1e-15)
    assert wf.tail_energy == pytest.approx(np.sum(a[-3:] ** 2))
    with pytest.raises(ValueError):
        weighted_functionals(a, p, 1.0)


def test_cauchy_schwarz_random():
    rng = np.random.default_rng(3)
    p = ModelParams(J=16)
    for _ in range(1000):
        w = float(rng.uniform(1.001, 5))
        wf = weighted_functionals(rng.normal(size=16) * rng.uniform(0, 10), p, w)
        assert wf.A >= 0
        assert wf.L**2 <= wf.A / (1 - 1 / w) * (1 + 1e-12)


def test_positivity_margin_examples():
    assert positivity_margin(np.array([1.0, 0.0, 2.0])) == 0.0
    assert positivity_margin(np.array([1.0, -1e-9, 2.0])) == -1e-9
    assert positivity_margin(ShellState(0, np.zeros(4))) == 0.0


def _traj(p, a0, t_end, every=1e-3, tail_cap=None):
    stop = StopCondition(t_end=t_end, tail_cap=tail_cap)
    return integrate(p, ShellState(0, a0), None, StepControl(rel_tol=1e-9), stop, every)


def test_riccati_zero_solution_residual_is_c2():
    cert = make_certificate(1.0, 0.25)
    p = ModelParams(J=10, nu=1.0, gamma=0.25)
    tr = _traj(p, np.zeros(10), 0.01)
    rs = riccati_residual(tr, cert)
    np.testing.assert_allclose(rs.residual, cert.C2)


def test_riccati_exact_and_fd_on_kp_run():
    cert = make_certificate(1.0)
    p = ModelParams(J=20)
    tr = _traj(p, [1.0, 1.0] + [0.0] * 18, 2.0, every=1e-4, tail_cap=1e-2)
    ex = riccati_residual(tr, cert, "exact")
    assert ex.valid.sum() > 100
    assert np.all(ex.residual[ex.valid] >= 0)
    fd = riccati_residual(tr, cert, "fd")
    v = ex.valid[1:-1]
    rel = (np.abs(fd.dLdt - ex.dLdt) / (1 + ex.dLdt))[1:-1][v]
    # second order differences: the error grows with the third derivative of L
    assert rel[: rel.size // 2].max() < 1e-5
    assert rel.max() < 1e-2


def test_riccati_checks_certificate_compatibility():
    cert = make_certificate(1.0, 0.25)
    tr = _traj(ModelParams(J=8), [0.1] + [0.0] * 7, 0.01)
    with pytest.raises(ValueError):
        riccati_residual(tr, cert)
    with pytest.raises(ValueError):
        riccati_residual(tr, make_certificate(1.0), mode="spline")
