"""Parameter algebra behind the blow-up certificates.

With ``b_j = lam^j a_j``, ``L = sum b_j w^-j`` and ``A = sum b_j^2 w^-j``, the
weighted sum obeys ``dL/dt >= C1 L^2 - C2`` whenever ``w`` satisfies

    1/w <= lam^-2 2^(2 s)                       (A is dominated by the H^s norm)
    1/w <  lam^(-4 gamma)                       (viscous only)
    lam^2/w - w^(1/2) > beta (lam w^(-1/2) + w/lam)

and ``L(0) > sqrt(C2/C1)`` then forces non-integrability of ``||a||_s^2``.
All functions keep ``lam`` generic (default 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .model import LAMBDA_DEFAULT, ShellState

__all__ = [
    "EmptyAdmissibleSet",
    "Interval",
    "Certificate",
    "BetaMax",
    "admissible_w",
    "transfer_margin",
    "beta_max",
    "beta_max_closed_form",
    "make_certificate",
    "optimal_eta",
    "theta_window",
    "check_initial_data",
    "golden_section_max",
]

S_CRIT = 1 / 3
_ENDPOINT_TOL = 1e-12


class EmptyAdmissibleSet(ValueError):
    """No weight ``w`` satisfies the certificate inequalities."""


def _validate(s, gamma, beta, lam):
    if not lam > 1:
        raise ValueError(f"lambda must be > 1, got {lam}")
    if not s >= S_CRIT:
        raise ValueError(f"s must exceed 1/3, got {s}")
    if gamma is not None and not 0 < gamma < S_CRIT:
        raise ValueError(f"gamma must lie in (0, 1/3), got {gamma}")
    if not beta >= 0:
        raise ValueError(f"beta must be >= 0, got {beta}")


def transfer_margin(w, beta=0.0, lam=LAMBDA_DEFAULT):
    """``g(w) = lam^2/w - sqrt(w) - beta (lam/sqrt(w) + w/lam)``."""
    w = np.asarray(w, dtype=float)
    g = lam**2 / w - np.sqrt(w) - beta * (lam / np.sqrt(w) + w / lam)
    return g if g.ndim else float(g)


def _beta_ratio(w, lam):
    """Largest beta with ``g(w) > 0`` at this ``w``; strictly decreasing on w > 0."""
    return (lam**2 / w - math.sqrt(w)) / (lam / math.sqrt(w) + w / lam)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool = False
    hi_closed: bool = False

    @property
    def empty(self) -> bool:
        return not self.hi > self.lo

    @property
    def measure(self) -> float:
        return max(0.0, self.hi - self.lo)

    def __contains__(self, w) -> bool:
        above = w >= self.lo if self.lo_closed else w > self.lo
        below = w <= self.hi if self.hi_closed else w < self.hi
        return bool(above and below)


EMPTY = Interval(math.nan, math.nan)


def _lower_bound(s, gamma, lam):
    """Largest lower bound on w and whether it is attained."""
    candidates = [(1.0, False), (lam**2 * 2.0 ** (-2 * s), True)]
    if gamma is not None:
        candidates.append((lam ** (4 * gamma), False))
    lo = max(c[0] for c in candidates)
    # open wins when bounds coincide
    closed = all(c[1] for c in candidates if c[0] == lo)
    return lo, closed


def admissible_w(s, gamma=None, beta=0.0, lam=LAMBDA_DEFAULT) -> Interval:
    """Set of weights ``w > 1`` satisfying every applicable inequality.

    The first two constraints are half-lines in ``w``; the transfer
    constraint is the sublevel set ``w < w3`` with ``w3`` the root of
    ``beta_ratio(w) = beta`` (the ratio is strictly decreasing), located by
    bracketed root finding to 1e-12. Returns ``EMPTY`` when nothing is left;
    a set shrunk to a single point is reported empty.
    """
    _validate(s, gamma, beta, lam)
    lo, lo_closed = _lower_bound(s, gamma, lam)
    w_zero = lam ** (4 / 3)  # beta_ratio vanishes here
    if beta == 0:
        hi = w_zero
    else:
        f = lambda w: _beta_ratio(w, lam) - beta  # noqa: E731
        if f(1.0) <= 0:
            return EMPTY
        hi = brentq(f, 1.0, w_zero, xtol=_ENDPOINT_TOL, rtol=4 * np.finfo(float).eps)
    if hi - lo <= _ENDPOINT_TOL * hi:
        return EMPTY
    return Interval(lo, hi, lo_closed, False)


def golden_section_max(f, a, b, tol=1e-10):
    """Maximize a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    invphi = (math.sqrt(5) - 1) / 2
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    cands = [(f(a), a), (fc, c), (fd, d), (f(b), b)]
    fx, x = max(cands)
    return x, fx


@dataclass(frozen=True)
class BetaMax:
    value: float
    w: float  # maximizing (or limiting) weight
    attained: bool  # False when the supremum sits on an open endpoint


def beta_max(s, gamma=None, lam=LAMBDA_DEFAULT) -> BetaMax:
    """Supremum of the certified ``beta`` range.

    Maximizes the admissible ``beta`` at fixed ``w`` over the ``w`` allowed by
    the first two constraints, by golden-section search to 1e-10 in ``w``.
    The supremum is never itself admissible (the transfer inequality is
    strict); ``attained`` reports whether the maximizing ``w`` is.
    """
    _validate(s, gamma, 0.0, lam)
    lo, lo_closed = _lower_bound(s, gamma, lam)
    hi = lam ** (4 / 3)
    if lo >= hi:
        return BetaMax(0.0, hi, False)
    w, val = golden_section_max(lambda w: _beta_ratio(w, lam), lo, hi, tol=1e-10)
    at_edge = w - lo <= 1e-9
    return BetaMax(max(val, 0.0), w, not at_edge or lo_closed)


def beta_max_closed_form(s) -> float:
    """Inviscid ``lam = 2`` bound obtained with ``1/w = 2^(2(s-1))``.

    For ``s > 1`` this weight falls below 1 and the value exceeds the
    ``w > 1`` supremum returned by :func:`beta_max`.
    """
    return (2.0**s - 2.0 ** (1 - 2 * s)) / (1 + 2.0 ** (1 - 3 * s))


@dataclass(frozen=True)
class Certificate:
    s: float
    gamma: float | None
    beta: float
    lam: float
    w: float
    eta: float | None
    C1: float
    C2: float
    threshold: float

    @property
    def viscous(self) -> bool:
        return self.gamma is not None

    def check(self):
        """Re-assert the defining inequalities and identities."""
        lam, w = self.lam, self.w
        assert w > 1
        assert 1 / w <= lam**-2 * 2.0 ** (2 * self.s) * (1 + 1e-15)
        g = transfer_margin(w, self.beta, lam)
        assert g > 0
        if self.viscous:
            d = 1 - lam ** (4 * self.gamma) / w
            assert d > 0 and self.eta > 0
            c1 = (1 - 1 / w) * (g - self.eta / d)
            c2 = 1 / (4 * self.eta * d)
        else:
            c1, c2 = (1 - 1 / w) * g, 0.0
        assert math.isclose(c1, self.C1, rel_tol=1e-12) and self.C1 > 0
        assert math.isclose(c2, self.C2, rel_tol=1e-12, abs_tol=0.0)
        assert math.isclose(self.threshold**2 * self.C1, self.C2, rel_tol=1e-12, abs_tol=0.0)
        return self

    def as_dict(self) -> dict:
        return {
            "s": self.s,
            "gamma": self.gamma,
            "beta": self.beta,
            "lambda": self.lam,
            "w": self.w,
            "eta": self.eta,
            "C1": self.C1,
            "C2": self.C2,
            "threshold": self.threshold,
        }


def optimal_eta(w, gamma, beta=0.0, lam=LAMBDA_DEFAULT) -> float:
    """``eta`` minimizing the threshold at fixed ``w``.

    ``threshold^2 = 1 / (4 (1 - 1/w) eta (g d - eta))`` with
    ``d = 1 - lam^(4 gamma)/w``, so the optimum is ``eta = g d / 2``.
    """
    g = transfer_margin(w, beta, lam)
    d = 1 - lam ** (4 * gamma) / w
    return g * d / 2


def _build(s, gamma, beta, lam, w, eta) -> Certificate:
    g = transfer_margin(w, beta, lam)
    if gamma is None:
        C1 = (1 - 1 / w) * g
        return Certificate(s, None, beta, lam, w, None, C1, 0.0, 0.0)
    d = 1 - lam ** (4 * gamma) / w
    if eta is None:
        eta = g * d / 2
    C1 = (1 - 1 / w) * (g - eta / d)
    C2 = 1 / (4 * eta * d)
    if not C1 > 0:
        raise ValueError(f"eta={eta} too large: C1 = {C1} <= 0")
    return Certificate(s, gamma, beta, lam, w, eta, C1, C2, math.sqrt(C2 / C1))


def make_certificate(s, gamma=None, beta=0.0, lam=LAMBDA_DEFAULT, w=None, eta=None) -> Certificate:
    """Build a blow-up certificate.

    Viscous: without ``w`` the threshold ``1 / (g d sqrt(1 - 1/w))`` is
    minimized over the admissible interval (grid scan, then golden-section).
    Inviscid: the threshold is zero for every admissible ``w``; without ``w``
    the one maximizing ``C1`` is used.
    """
    iv = admissible_w(s, gamma, beta, lam)
    if iv.empty:
        raise EmptyAdmissibleSet(f"no admissible w for s={s}, gamma={gamma}, beta={beta}, lambda={lam}")
    if w is not None:
        if w not in iv:
            raise ValueError(f"w={w} is not admissible; admissible set is {iv}")
    else:
        if gamma is None:
            score = lambda w: (1 - 1 / w) * transfer_margin(w, beta, lam)  # noqa: E731
        else:
            score = lambda w: (  # noqa: E731
                transfer_margin(w, beta, lam) * (1 - lam ** (4 * gamma) / w) * math.sqrt(1 - 1 / w)
            )
        grid = np.linspace(iv.lo, iv.hi, 201)[1:-1]
        if iv.lo_closed:
            grid = np.concatenate(([iv.lo], grid))
        vals = [score(x) for x in grid]
        k = int(np.argmax(vals))
        a = grid[max(k - 1, 0)]
        b = grid[min(k + 1, len(grid) - 1)]
        w, _ = golden_section_max(score, a, b, tol=1e-12)
    return _build(s, gamma, beta, lam, float(w), eta).check()


def theta_window(s, gamma):
    """Open interval of exponents ``theta`` (``1/w = 2^theta``) for KP with diffusion.

    Returns ``(-4/3, min(2(s-1), -4 gamma))`` or ``None`` when empty.
    """
    _validate(s, gamma, 0.0, 2.0)
    if gamma is None:
        raise ValueError("theta_window needs a dissipation degree gamma")
    hi = min(2 * (s - 1), -4 * gamma)
    lo = -4 / 3
    return (lo, hi) if hi > lo else None


@dataclass(frozen=True)
class DataCheck:
    passes: bool
    margin: float
    L0: float


def check_initial_data(a0, cert: Certificate) -> DataCheck:
    """Compare ``L(0) = sum lam^j a_j(0) w^-j`` with the certificate threshold."""
    a = a0.a if isinstance(a0, ShellState) else np.asarray(a0, dtype=float)
    L0 = math.fsum((cert.lam / cert.w) ** np.arange(a.size) * a)
    return DataCheck(L0 > cert.threshold, L0 - cert.threshold, L0)
