"""Norms, energy budget and the weighted functionals of the blow-up argument.

Sums use ``math.fsum`` (exactly rounded), since the Sobolev weights
``2^(2 s j)`` span many orders of magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ForcingSpec, ModelParams, ShellState, _rhs_array, _rhs_rescaled_array, _weights

__all__ = [
    "sobolev_norm",
    "energy",
    "truncated_energy",
    "energy_flux",
    "WeightedFunctionals",
    "weighted_functionals",
    "RiccatiSeries",
    "riccati_residual",
    "positivity_margin",
    "TAIL_SHELLS",
    "RICCATI_TAIL_TOL",
]

TAIL_SHELLS = 3
#: Riccati samples are trusted only while tail_energy <= RICCATI_TAIL_TOL * E
RICCATI_TAIL_TOL = 1e-12


def _coeffs(state) -> np.ndarray:
    return state.a if isinstance(state, ShellState) else np.asarray(state, dtype=float)


def _sobolev_weights(J: int, s: float) -> np.ndarray:
    return 2.0 ** (2 * s * np.arange(J))


def energy_rows(a2d: np.ndarray) -> np.ndarray:
    return np.array([math.fsum(row) for row in np.asarray(a2d) ** 2])


def sobolev_norm(state, s: float) -> float:
    """``(sum_j 2^(2 s j) a_j^2)^(1/2)``."""
    a = _coeffs(state)
    if not np.isfinite(a).all():
        raise ValueError("non-finite shell coefficients")
    return math.sqrt(math.fsum(_sobolev_weights(a.size, s) * a * a))


def energy(state) -> float:
    a = _coeffs(state)
    return math.fsum(a * a)


def truncated_energy(state, j0: int) -> float:
    """Energy in shells ``0..j0``."""
    a = _coeffs(state)
    if not 0 <= j0 < a.size:
        raise IndexError(f"j0={j0} outside 0..{a.size - 1}")
    return math.fsum(a[: j0 + 1] ** 2)


def energy_flux(params: ModelParams, state, j0: int, forcing: ForcingSpec | None = None) -> float:
    """``d/dt`` of the energy in shells ``0..j0``.

    The nonlinear transfer telescopes to the single boundary term between
    shells ``j0`` and ``j0 + 1``; dissipation and forcing act inside.
    """
    a = _coeffs(state)
    if not 0 <= j0 < a.size - 1:
        raise IndexError(f"j0={j0} outside 0..{a.size - 2}")
    lam_next = params.lam ** (j0 + 1)
    x, y = a[j0], a[j0 + 1]
    terms = [
        -2 * params.alpha * lam_next * x * x * y,
        -2 * params.beta * lam_next * x * y * y,
    ]
    if params.nu:
        damp = _weights(params)[2][: j0 + 1]
        terms.extend(-2 * damp * a[: j0 + 1] ** 2)
    if forcing is not None and forcing.f0:
        terms.append(2 * forcing.f0 * a[0])
    return math.fsum(terms)


@dataclass(frozen=True)
class WeightedFunctionals:
    w: float
    L: float  # sum_j b_j w^-j
    A: float  # sum_j b_j^2 w^-j
    tail_energy: float


def weighted_functionals(state, params: ModelParams, w: float) -> WeightedFunctionals:
    if not w > 1:
        raise ValueError(f"w must be > 1, got {w}")
    a = _coeffs(state)
    b = _weights(params)[0] * a
    wj = w ** -np.arange(a.size, dtype=float)
    L = math.fsum(b * wj)
    A = math.fsum(b * b * wj)
    # Cauchy-Schwarz against the infinite geometric series
    bound = A / (1 - 1 / w)
    assert L * L <= bound * (1 + 1e-12) + 1e-300, (L, A, w)
    return WeightedFunctionals(w, L, A, math.fsum(a[-TAIL_SHELLS:] ** 2))


@dataclass(frozen=True, eq=False)
class RiccatiSeries:
    t: np.ndarray
    L: np.ndarray
    dLdt: np.ndarray
    residual: np.ndarray  # dLdt - (C1 L^2 - C2)
    valid: np.ndarray  # tail_energy <= RICCATI_TAIL_TOL * E


def _check_cert_matches(params: ModelParams, cert):
    if not math.isclose(params.lam, cert.lam, rel_tol=1e-15) or params.beta != cert.beta:
        raise ValueError("certificate was built for a different (lambda, beta)")
    if params.alpha != 1:
        raise ValueError("certificates assume the normalization alpha = 1")
    if cert.gamma is None:
        if params.nu != 0:
            raise ValueError("inviscid certificate on a viscous model")
    elif params.nu != 1 or params.gamma != cert.gamma:
        raise ValueError("viscous certificates assume nu = 1 and matching gamma")


def riccati_residual(traj, cert, mode: str = "exact") -> RiccatiSeries:
    """Check ``dL/dt >= C1 L^2 - C2`` along a trajectory.

    ``mode="exact"`` differentiates ``L`` through the rescaled right-hand side;
    ``mode="fd"`` uses second-order finite differences of the sampled ``L``
    (meaningful only for evenly spaced samples).
    """
    if len(traj.t) < 5:
        raise ValueError("need at least five samples")
    params = traj.params
    _check_cert_matches(params, cert)
    f0 = traj.forcing.f0 if traj.forcing else 0.0
    lam_j = _weights(params)[0]
    wj = cert.w ** -np.arange(params.J, dtype=float)
    L = np.empty(len(traj.t))
    dL = np.empty_like(L)
    valid = np.empty(len(traj.t), dtype=bool)
    for i, a in enumerate(traj.a):
        b = lam_j * a
        L[i] = math.fsum(b * wj)
        if mode == "exact":
            db = _rhs_rescaled_array(params, b)
            if f0:
                db[0] += f0
            dL[i] = math.fsum(db * wj)
        e = math.fsum(a * a)
        valid[i] = math.fsum(a[-TAIL_SHELLS:] ** 2) <= RICCATI_TAIL_TOL * e
    if mode == "fd":
        dL = np.gradient(L, traj.t, edge_order=2)
    elif mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    residual = dL - (cert.C1 * L * L - cert.C2)
    return RiccatiSeries(np.asarray(traj.t), L, dL, residual, valid)


def positivity_margin(state) -> float:
    """Smallest shell coefficient."""
    return float(np.min(_coeffs(state)))


def total_energy_rate(params: ModelParams, state, forcing: ForcingSpec | None = None) -> float:
    """``2 sum_j a_j da_j/dt`` evaluated directly from the right-hand side."""
    a = _coeffs(state)
    return 2 * math.fsum(a * _rhs_array(params, a, forcing.f0 if forcing else 0.0))
