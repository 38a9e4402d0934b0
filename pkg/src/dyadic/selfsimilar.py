"""Self-similar profiles of the KP model and the forced fixed point.

A self-similar solution has ``a_{j+1}/a_j`` constant in time. For ``lam = 2``
its amplitudes obey

    c_j c_{j+1} = 2^-j c_j + c_{j-1}^2 / 2,    c_{-1} = 0,

so ``c_1 = 1`` and ``c_0`` fixes everything else. With this normalization the
solution of the KP system is ``a_j(t) = c_j / (lam (t - t0))``.

Forward iteration is unstable: in log variables a perturbation is multiplied
by ``-2`` per shell, so for ``c_0`` away from the finite-energy value one
parity of the sequence explodes. Which parity turns upward first tells on
which side of the finite-energy value ``c_0`` lies; shooting bisects on it.

Amplitudes are iterated in ``np.longdouble``: checking a profile against the
KP right-hand side cancels terms of relative size ``2^(2j/3)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .model import ShellState

__all__ = [
    "ProfileClass",
    "SelfSimilarProfile",
    "ShootingResult",
    "BracketNotFound",
    "profile_sequence",
    "shoot_c0",
    "decay_ratio",
    "eval_solution",
    "kp_residual",
    "forced_fixed_point",
    "FixedPoint",
    "EXPECTED_RATIO",
]

LAM = 2.0
EXPECTED_RATIO = 2.0 ** (-1 / 3)
DECAY_TOL = 1e-2


class BracketNotFound(RuntimeError):
    pass


class ProfileClass(str, enum.Enum):
    FINITE_ENERGY_CANDIDATE = "FiniteEnergyCandidate"
    GROWING = "Growing"
    DEGENERATE = "Degenerate"

    def __str__(self):
        return self.value


@dataclass(frozen=True, eq=False)
class SelfSimilarProfile:
    """Amplitudes ``c_0..c_{n-1}``.

    ``upturn`` is the first index ``j >= 2`` with ``c_j > c_{j-1}`` (None if
    the sequence decreases throughout). An upturn at an even index means
    ``c_0`` is too large (``Growing``); at an odd index, too small
    (``Degenerate``, the even terms collapse onto the ``2^-j`` floor).
    """

    c0: float
    c: np.ndarray = field(repr=False)
    classification: ProfileClass
    upturn: int | None = None
    t0: float = 0.0
    lam: float = LAM

    @property
    def n(self) -> int:
        return self.c.size

    def recurrence_residual(self) -> np.ndarray:
        """``|c_j c_{j+1} - 2^-j c_j - c_{j-1}^2/2| / max(1, c_j c_{j+1})`` for j >= 0."""
        c = self.c
        if c.size < 2:
            return np.zeros(0)
        prev = np.concatenate((np.zeros(1, dtype=c.dtype), c[:-2]))
        j = np.arange(c.size - 1)
        with np.errstate(over="ignore", invalid="ignore"):
            lhs = c[:-1] * c[1:]
            res = np.abs(lhs - np.ldexp(c[:-1], -j) - prev * prev / 2)
        return (res / np.maximum(1, np.abs(lhs))).astype(float)

    def truncated(self) -> SelfSimilarProfile:
        """The monotone prefix before the upturn (the trustworthy shells)."""
        if self.upturn is None:
            return self
        return replace(self, c=self.c[: self.upturn], classification=ProfileClass.FINITE_ENERGY_CANDIDATE, upturn=None)


_EXT = np.longdouble
_HALF = _EXT(0.5)


def _iterate(c0: float, n: int) -> np.ndarray:
    c = np.empty(n, dtype=_EXT)
    c[0] = c0
    if n > 1:
        c[1] = 1
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for j in range(1, n - 1):
            c[j + 1] = (np.ldexp(c[j], -j) + _HALF * c[j - 1] * c[j - 1]) / c[j]
    return c


def _classify(c: np.ndarray):
    for j in range(2, c.size):
        if not (np.isfinite(c[j]) and c[j] > 0):
            return ProfileClass.DEGENERATE, j
        if c[j] > c[j - 1]:
            return (ProfileClass.GROWING if j % 2 == 0 else ProfileClass.DEGENERATE), j
    return ProfileClass.FINITE_ENERGY_CANDIDATE, None


def profile_sequence(c0: float, n: int, t0: float = 0.0) -> SelfSimilarProfile:
    if not c0 > 0:
        raise ValueError(f"c0 must be positive, got {c0}")
    if n < 2:
        raise ValueError("need n >= 2")
    c = _iterate(float(c0), int(n))
    cls, up = _classify(c)
    c.flags.writeable = False
    return SelfSimilarProfile(float(c0), c, cls, up, t0)


def _class_at(c0, n):
    return _classify(_iterate(c0, n))[0]


@dataclass(frozen=True)
class ShootingResult:
    c0_star: float
    bracket_width: float
    lower: float  # classified Degenerate
    upper: float  # classified Growing
    refinements: int
    converged: bool
    n: int
    #: the bracketing dichotomy is found empirically, not proved
    dichotomy: str = "Degenerate below c0_star, Growing above (empirical)"

    @property
    def profile(self) -> SelfSimilarProfile:
        """Profile at ``c0_star`` cut back to its monotone prefix."""
        return profile_sequence(self.c0_star, self.n).truncated()


def _initial_bracket(n, c_min, c_max):
    grid = np.geomspace(c_min, c_max, 161)
    classes = [_class_at(x, n) for x in grid]
    for i in range(len(grid) - 1):
        if classes[i] is ProfileClass.DEGENERATE and classes[i + 1] is not ProfileClass.DEGENERATE:
            for k in range(i + 1, len(grid)):
                if classes[k] is ProfileClass.GROWING:
                    return float(grid[i]), float(grid[k])
                if classes[k] is ProfileClass.DEGENERATE:
                    break
    raise BracketNotFound(f"no Degenerate/Growing transition in [{c_min}, {c_max}] at depth {n}")


def shoot_c0(n: int, tol: float, c_min: float = 1e-8, c_max: float = 1e8) -> ShootingResult:
    """Locate the finite-energy ``c_0`` by bisection on the profile class.

    Keeps ``lower`` Degenerate and ``upper`` Growing. A midpoint that stays
    monotone for all ``n`` shells (``FiniteEnergyCandidate``) cannot be
    ordered; the two edges of that window are then refined separately and the
    window width is part of ``bracket_width``.
    """
    if n < 20:
        raise ValueError("need n >= 20")
    if not tol > 0:
        raise ValueError("tol must be positive")
    lo, hi = _initial_bracket(n, c_min, c_max)
    inner = None  # (lowest, highest) FiniteEnergyCandidate seen
    refinements = 0
    while hi - lo > tol:
        if inner is None:
            mid = 0.5 * (lo + hi)
        elif inner[0] - lo >= hi - inner[1]:
            mid = 0.5 * (lo + inner[0])
        else:
            mid = 0.5 * (inner[1] + hi)
        if not lo < mid < hi:
            break
        refinements += 1
        cls = _class_at(mid, n)
        if cls is ProfileClass.DEGENERATE:
            lo = mid
        elif cls is ProfileClass.GROWING:
            hi = mid
        else:
            inner = (min(mid, inner[0]), max(mid, inner[1])) if inner else (mid, mid)
        if inner is not None:
            if inner[0] < lo or inner[1] > hi:
                inner = None
            elif max(inner[0] - lo, hi - inner[1]) <= 0.5 * tol * 1e-3:
                break
    width = hi - lo
    return ShootingResult(0.5 * (lo + hi), width, lo, hi, refinements, width <= tol, n)


@dataclass(frozen=True)
class DecayFit:
    ratio: float
    expected: float = EXPECTED_RATIO
    deviates: bool = False


def decay_ratio(profile, min_shells: int = 20) -> DecayFit:
    """Geometric mean of ``c_{j+1}/c_j`` over the middle third of the shells."""
    if isinstance(profile, SelfSimilarProfile):
        if profile.classification is not ProfileClass.FINITE_ENERGY_CANDIDATE:
            raise ValueError(f"profile is {profile.classification}, not FiniteEnergyCandidate")
        c = profile.c
    else:
        c = np.asarray(profile, dtype=float)
    if c.size < min_shells:
        raise ValueError(f"need at least {min_shells} shells, got {c.size}")
    k1, k2 = c.size // 3, (2 * c.size) // 3
    ratio = math.exp((math.log(c[k2]) - math.log(c[k1])) / (k2 - k1))
    return DecayFit(ratio, EXPECTED_RATIO, abs(ratio - EXPECTED_RATIO) > DECAY_TOL)


def eval_solution(profile: SelfSimilarProfile, t: float) -> ShellState:
    """Shell state ``a_j = c_j / (lam (t - t0))`` on the decaying branch."""
    if not t > profile.t0:
        raise ValueError(f"need t > t0 = {profile.t0}")
    return ShellState(t, (profile.c / (profile.lam * (t - profile.t0))).astype(float))


def kp_residual(profile: SelfSimilarProfile, t: float, margin: int = 2) -> np.ndarray:
    """Relative mismatch between ``da_j/dt`` and the KP right-hand side.

    Shells within ``margin`` of the end are dropped (truncation defect).
    """
    if not t > profile.t0:
        raise ValueError(f"need t > t0 = {profile.t0}")
    c = np.asarray(profile.c, dtype=_EXT)
    n = c.size - margin
    if n <= 0:
        return np.zeros(0)
    lam = _EXT(profile.lam)
    tau = _EXT(t) - _EXT(profile.t0)
    a = c / (lam * tau)
    prev = np.concatenate((np.zeros(1, dtype=_EXT), a[:-1]))
    nxt = np.concatenate((a[1:], np.zeros(1, dtype=_EXT)))
    lam_j = lam ** np.arange(c.size, dtype=_EXT)
    rhs = lam_j * prev * prev - lam_j * lam * a * nxt
    dadt = -c / (lam * tau * tau)
    return (np.abs(dadt - rhs) / np.abs(dadt))[:n].astype(float)


@dataclass(frozen=True, eq=False)
class FixedPoint:
    K: float
    abar: np.ndarray = field(repr=False)
    lam: float = LAM
    f0: float = 0.0


def forced_fixed_point(f0: float, lam: float = LAM, J: int = 24) -> FixedPoint:
    """Steady state ``abar_j = K lam^(-j/3)`` of KP forced on shell 0.

    Shell 0 balances ``lam abar_0 abar_1 = f0``, so ``K = sqrt(f0) lam^(-1/3)``;
    every interior shell balances identically.
    """
    if not f0 > 0:
        raise ValueError(f"f0 must be positive, got {f0}")
    if not lam > 1:
        raise ValueError(f"lambda must be > 1, got {lam}")
    K = math.sqrt(f0) * lam ** (-1 / 3)
    abar = K * lam ** (-np.arange(J) / 3)
    abar.flags.writeable = False
    return FixedPoint(K, abar, lam, f0)
