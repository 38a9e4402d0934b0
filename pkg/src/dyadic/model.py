"""Generalized dyadic (shell) model of the Euler equations.

The truncated system evolves shells ``a_0, ..., a_{J-1}`` by

    da_j/dt = alpha (lam^j a_{j-1}^2 - lam^{j+1} a_j a_{j+1})
            + beta  (lam^j a_{j-1} a_j - lam^{j+1} a_{j+1}^2)
            - nu lam^(2 gamma j) a_j  (+ f0 on shell 0)

with the Galerkin closure ``a_{-1} = a_J = 0``. For ``nu = 0`` the closure keeps
``sum a_j^2`` exactly conserved because the nonlinear transfer telescopes.

Rescaled variables ``b_j = lam^j a_j`` turn the system into

    db_j/dt = alpha (lam^2 b_{j-1}^2 - b_j b_{j+1})
            + beta  (lam b_{j-1} b_j - b_{j+1}^2 / lam) - nu lam^(2 gamma j) b_j.

Normalization map: a solution ``a`` with parameters ``(alpha, beta, nu)`` is
``a(t) = (nu/alpha) a~(nu t)`` where ``a~`` solves the system with
``(1, beta/alpha, 1)``. The blow-up analysis is carried out for that
normalized system.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = [
    "LAMBDA_DEFAULT",
    "LAMBDA_3D",
    "ModelParams",
    "ShellState",
    "RescaledState",
    "ForcingSpec",
    "NonFiniteStateError",
    "GenericModelCoefficients",
    "Classification",
    "rhs",
    "rhs_rescaled",
    "to_rescaled",
    "from_rescaled",
    "classify_conservative_model",
]

LAMBDA_DEFAULT = 2.0
#: shell ratio suggested by the Littlewood-Paley scaling of 3D Euler
LAMBDA_3D = 2.0 ** 2.5


class NonFiniteStateError(ValueError):
    """A shell coefficient is NaN or infinite."""

    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"non-finite coefficient a_{index} = {value!r}")


@dataclass(frozen=True)
class ModelParams:
    lam: float = LAMBDA_DEFAULT
    alpha: float = 1.0
    beta: float = 0.0
    nu: float = 0.0
    gamma: float = 0.25
    J: int = 24

    def __post_init__(self):
        if not self.lam > 1:
            raise ValueError(f"lambda must be > 1, got {self.lam}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.nu < 0:
            raise ValueError(f"nu must be >= 0, got {self.nu}")
        if self.nu > 0 and not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if int(self.J) != self.J or self.J < 2:
            raise ValueError(f"J must be an integer >= 2, got {self.J}")

    @property
    def inviscid(self) -> bool:
        return self.nu == 0


@dataclass(frozen=True)
class ForcingSpec:
    f0: float = 0.0

    def __post_init__(self):
        if not self.f0 >= 0:
            raise ValueError(f"f0 must be >= 0, got {self.f0}")


def _frozen_array(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != 1:
        raise ValueError("shell coefficients must be a 1-d sequence")
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise NonFiniteStateError(int(bad[0]), float(arr[bad[0]]))
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ShellState:
    """Time ``t`` and shell coefficients ``a`` (read-only copy)."""

    t: float
    a: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "a", _frozen_array(self.a))

    @property
    def J(self) -> int:
        return self.a.size

    def __eq__(self, other):
        if not isinstance(other, ShellState):
            return NotImplemented
        return self.t == other.t and np.array_equal(self.a, other.a)

    def __repr__(self):
        return f"ShellState(t={self.t!r}, J={self.J})"


@dataclass(frozen=True, eq=False)
class RescaledState:
    """Time ``t`` and rescaled coefficients ``b_j = lam^j a_j``."""

    t: float
    b: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "b", _frozen_array(self.b))

    def __repr__(self):
        return f"RescaledState(t={self.t!r}, J={self.b.size})"


@lru_cache(maxsize=64)
def _weights(params: ModelParams):
    """(lam^j, lam^(j+1), nu lam^(2 gamma j)) as read-only arrays."""
    j = np.arange(params.J, dtype=float)
    lam_j = params.lam ** j
    lam_j1 = lam_j * params.lam
    damp = params.nu * params.lam ** (2 * params.gamma * j) if params.nu else np.zeros(params.J)
    for arr in (lam_j, lam_j1, damp):
        arr.flags.writeable = False
    return lam_j, lam_j1, damp


def _check_input(params: ModelParams, a: np.ndarray):
    if a.shape != (params.J,):
        raise ValueError(f"expected {params.J} shells, got shape {a.shape}")
    if not np.isfinite(a).all():
        i = int(np.flatnonzero(~np.isfinite(a))[0])
        raise NonFiniteStateError(i, float(a[i]))


def nonlinear_rhs(params: ModelParams, a: np.ndarray, f0: float = 0.0, out=None) -> np.ndarray:
    """Quadratic transfer plus forcing, without dissipation. No validation."""
    # with u_j = lam^(j+1) (alpha a_j + beta a_{j+1}) shell j+1 gains u_j a_j and
    # shell j loses u_j a_{j+1}; the two terms cancel in the energy sum
    lam_j1 = _weights(params)[1][:-1]
    u = params.alpha * a[:-1]
    if params.beta:
        u += params.beta * a[1:]
    u *= lam_j1
    if out is None:
        out = np.empty_like(a)
    out[0] = f0
    out[1:] = u * a[:-1]
    out[:-1] -= u * a[1:]
    return out


def _rhs_array(params: ModelParams, a: np.ndarray, f0: float = 0.0) -> np.ndarray:
    out = nonlinear_rhs(params, a, f0)
    if params.nu:
        out -= _weights(params)[2] * a
    return out


def rhs(params: ModelParams, state: ShellState | np.ndarray, forcing: ForcingSpec | None = None) -> np.ndarray:
    """Time derivative ``da/dt`` of the truncated system."""
    a = state.a if isinstance(state, ShellState) else np.asarray(state, dtype=float)
    _check_input(params, a)
    return _rhs_array(params, a, forcing.f0 if forcing else 0.0)


def to_rescaled(params: ModelParams, state: ShellState) -> RescaledState:
    return RescaledState(state.t, _weights(params)[0] * state.a)


def from_rescaled(params: ModelParams, state: RescaledState) -> ShellState:
    return ShellState(state.t, state.b / _weights(params)[0])


def _rhs_rescaled_array(params: ModelParams, b: np.ndarray) -> np.ndarray:
    lam, alpha, beta = params.lam, params.alpha, params.beta
    out = np.zeros_like(b)
    out[1:] += alpha * lam**2 * b[:-1] ** 2 + beta * lam * b[:-1] * b[1:]
    out[:-1] -= alpha * b[:-1] * b[1:] + beta / lam * b[1:] ** 2
    if params.nu:
        out -= _weights(params)[2] * b
    return out


def rhs_rescaled(params: ModelParams, state: RescaledState | np.ndarray) -> np.ndarray:
    """Time derivative ``db/dt`` in the variables ``b_j = lam^j a_j``.

    Satisfies ``rhs_rescaled(b)_j == lam^j * rhs(a)_j`` for any parameters.
    """
    b = state.b if isinstance(state, RescaledState) else np.asarray(state, dtype=float)
    _check_input(params, b)
    return _rhs_rescaled_array(params, b)


# -- energy-conserving classification ---------------------------------------

#: unordered neighbour offsets (mu1, mu2), in the file order used by `classify`
PAIRS = ((-1, -1), (-1, 0), (-1, 1), (0, 0), (0, 1), (1, 1))


@dataclass(frozen=True)
class GenericModelCoefficients:
    """Coefficients of ``F_j = sum C[mu1,mu2] lam^j a_{j+mu1} a_{j+mu2}``.

    Each unordered pair of offsets appears once; ``C[(0, -1)]`` is the same
    entry as ``C[(-1, 0)]``. Values are kept as exact fractions.
    """

    C: tuple  # six Fractions in PAIRS order

    def __post_init__(self):
        if len(self.C) != len(PAIRS):
            raise ValueError("need six coefficients")
        object.__setattr__(self, "C", tuple(Fraction(c) for c in self.C))

    def __getitem__(self, pair):
        return self.C[PAIRS.index(tuple(sorted(pair)))]

    @classmethod
    def from_mapping(cls, mapping) -> GenericModelCoefficients:
        vals = [Fraction(0)] * len(PAIRS)
        for pair, c in mapping.items():
            vals[PAIRS.index(tuple(sorted(pair)))] += Fraction(c)
        return cls(tuple(vals))

    @classmethod
    def from_kpo(cls, alpha, beta, lam=LAMBDA_DEFAULT) -> GenericModelCoefficients:
        """Coefficients of the (alpha, beta) model, computed exactly."""
        a, b, l = Fraction(alpha), Fraction(beta), Fraction(lam)
        return cls.from_mapping({(-1, -1): a, (0, 1): -l * a, (-1, 0): b, (1, 1): -l * b})


@dataclass(frozen=True)
class Classification:
    conservative: bool
    alpha: float | None = None
    beta: float | None = None
    #: finitely supported sequence with nonzero energy rate (not conservative)
    witness: tuple | None = None
    #: exact d/dt sum a_j^2 on the witness
    energy_rate: Fraction | None = None


def _energy_rate(coeffs: GenericModelCoefficients, lam: Fraction, a) -> Fraction:
    """Exact ``sum_j 2 a_j F_j(a)`` for a finitely supported ``a`` (j >= 0)."""
    n = len(a)

    def at(i):
        return a[i] if 0 <= i < n else 0

    total = Fraction(0)
    for j in range(n):
        if not a[j]:
            continue
        Fj = sum(c * at(j + m1) * at(j + m2) for (m1, m2), c in zip(PAIRS, coeffs.C) if c)
        total += 2 * a[j] * lam**j * Fj
    return total


def _monomial_coefficients(coeffs: GenericModelCoefficients, lam: Fraction, base: int) -> dict:
    """Coefficients of the cubic monomials with lowest index ``base`` in ``sum 2 a_j F_j``.

    Monomials are keyed by sorted index triples. ``a_{-1}`` contributes nothing.
    """
    acc: dict = {}
    for j in range(max(0, base), base + 3):
        for (m1, m2), c in zip(PAIRS, coeffs.C):
            idx = tuple(sorted((j, j + m1, j + m2)))
            if idx[0] != base or min(idx) < 0 or not c:
                continue
            acc[idx] = acc.get(idx, Fraction(0)) + 2 * c * lam**j
    return acc


def classify_conservative_model(coeffs: GenericModelCoefficients, lam=LAMBDA_DEFAULT) -> Classification:
    """Decide whether a nearest-neighbour quadratic system conserves energy.

    Expands ``sum_j 2 a_j F_j`` over cubic monomials in exact arithmetic. Every
    monomial coefficient is ``lam^base`` times a constant, so checking the
    lowest two base indices decides cancellation for all ``j >= 0``. A
    conservative system is necessarily the (alpha, beta) model and those two
    numbers are returned. Otherwise the smallest witness on the grid
    ``{0,1,2,3}^4`` with a nonzero exact energy rate is returned; a nonzero
    cubic always has one there.
    """
    if not lam > 1:
        raise ValueError(f"lambda must be > 1, got {lam}")
    lam_q = Fraction(lam)
    conservative = all(
        c == 0
        for base in (0, 1)
        for c in _monomial_coefficients(coeffs, lam_q, base).values()
    )
    if conservative:
        alpha, beta = coeffs[(-1, -1)], coeffs[(-1, 0)]
        assert coeffs == GenericModelCoefficients.from_kpo(alpha, beta, lam_q)
        return Classification(True, float(alpha), float(beta))

    grid = sorted(
        itertools.product(range(4), repeat=4),
        key=lambda v: (sum(x != 0 for x in v), sum(v), v[::-1]),
    )
    for cand in grid:
        rate = _energy_rate(coeffs, lam_q, cand)
        if rate != 0:
            witness = tuple(cand[: max(i for i, x in enumerate(cand) if x) + 1])
            return Classification(False, witness=witness, energy_rate=rate)
    raise AssertionError("non-cancelling monomial without a grid witness")  # pragma: no cover
