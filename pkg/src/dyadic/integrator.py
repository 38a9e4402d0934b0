"""Adaptive time stepping for the truncated shell model.

The dissipation ``-nu lam^(2 gamma j) a_j`` is diagonal, so it is integrated
exactly with a per-shell integrating factor (a Lawson-type scheme built on the
Dormand-Prince 5(4) pair). All exponentials are of the form ``exp(-D x h)``
with ``x >= 0``, which keeps the scheme free of overflow for stiff shells.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .model import ForcingSpec, ModelParams, ShellState, _weights

__all__ = [
    "StepControl",
    "StopCondition",
    "Termination",
    "StepResult",
    "Trajectory",
    "NoBlowupTrend",
    "step",
    "integrate",
    "estimate_blowup_time",
    "BLOWUP_PROXIES",
]

# Dormand-Prince 5(4), FSAL
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

# Exponents x in exp(-D x h) used by the integrating factor: row 0 is x = 0,
# then the stage nodes and every node difference c_i - c_k.
_X = sorted({0.0} | {float(c) for c in _C} | {float(_C[i] - _C[k]) for i in range(7) for k in range(i)} | {float(1 - c) for c in _C})
_ROW = {x: r for r, x in enumerate(_X)}
_STAGE = [(_ROW[float(_C[i])], np.array([_ROW[float(_C[i] - _C[k])] for k in range(i)])) for i in range(1, 7)]
_AM = np.zeros((7, 7))
for _i, _row in enumerate(_A):
    _AM[_i, : len(_row)] = _row
_ERR_ROWS = np.array([_ROW[float(1 - c)] for c in _C])
_XS = np.array(_X)
# non-stiff stage and error coefficients over the stack [a; K_0..K_6]:
# row i < 7 is [1, h A_i], row 7 is [0, h (b5 - b4)]
_MX = np.zeros((8, 8))
_MX[:7, 1:] = _AM
_MX[7, 1:] = _E
_ONECOL = np.zeros((8, 8))
_ONECOL[:7, 0] = 1.0

_FAC_MIN, _FAC_MAX = 0.2, 5.0


class NoBlowupTrend(ValueError):
    """The monitored quantity is not increasing over the fit window."""


class Termination(str, enum.Enum):
    REACHED_T_END = "ReachedTEnd"
    NORM_CAP_EXCEEDED = "NormCapExceeded"
    STEP_FLOOR_HIT = "StepFloorHit"
    TAIL_SATURATED = "TailSaturated"
    MAX_STEPS = "MaxSteps"
    NUMERICAL_FAILURE = "NumericalFailure"

    def __str__(self):
        return self.value


#: terminations read as numerical evidence of blow-up
BLOWUP_PROXIES = frozenset(
    {Termination.NORM_CAP_EXCEEDED, Termination.STEP_FLOOR_HIT, Termination.TAIL_SATURATED}
)


@dataclass(frozen=True)
class StepControl:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    dt_init: float = 1e-4
    dt_min: float = 1e-14
    dt_max: float = 0.1
    safety: float = 0.9

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_init <= dt_max")
        if not 0 < self.safety < 1:
            raise ValueError("safety must lie in (0, 1)")


@dataclass(frozen=True)
class StopCondition:
    """When to stop integrating.

    ``tail_cap`` (optional) stops once the last three shells hold more than
    that fraction of the energy: the cascade has reached the truncation and
    the finite system no longer follows the infinite one.
    """

    t_end: float = 1.0
    norm_s: float = 1.0
    norm_cap: float = 1e6
    max_steps: int = 1_000_000
    tail_cap: float | None = None

    def __post_init__(self):
        if not self.norm_cap > 0:
            raise ValueError("norm_cap must be positive")
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise ValueError("max_steps must be a positive integer")
        if self.tail_cap is not None and not 0 < self.tail_cap <= 1:
            raise ValueError("tail_cap must lie in (0, 1]")


@dataclass(frozen=True)
class StepResult:
    state: ShellState
    error_estimate: float
    dt_next: float
    accepted: bool
    #: set when the step hit the floor or produced a non-finite state
    failure: Termination | None = None


class _Stepper:
    """Integrating-factor Dormand-Prince stepper with FSAL bookkeeping."""

    def __init__(self, params: ModelParams, forcing: ForcingSpec, ctrl: StepControl):
        self.params = params
        self.f0 = forcing.f0
        self.ctrl = ctrl
        self.D = _weights(params)[2]
        self.stiff = bool(params.nu)
        lam = _weights(params)[1][:-1]
        self._lam_a = params.alpha * lam
        self._lam_b = params.beta * lam if params.beta else None
        if not self.stiff:
            self._buffers(params.J)

    def _buffers(self, J):
        # Z = [a; K_0..K_6] lets one dot with [1, h A_i] form each stage input.
        # T[0, 1:] and T[1, :-1] are written through one strided view, then
        # K_i = T[0] - T[1] applies the gain and the loss in a single op.
        as_strided = np.lib.stride_tricks.as_strided
        self.Z = np.empty((8, J))
        self.M = np.empty((8, 8))
        self._y = np.empty(J)
        self._u, self._tmp = np.empty(J - 1), np.empty(J - 1)
        self.T = np.zeros((2, J))
        self.T[0, 0] = self.f0
        flat = self.T.reshape(-1)
        step = flat.strides[0]
        self._T_out = as_strided(flat[1:], shape=(2, J - 1), strides=((J - 1) * step, step))
        y = self._y
        self._y_pair = as_strided(y, shape=(2, J - 1), strides=(step, step))
        self._abs_cache = (None, None)
        self._stages = [(self.M[i, : i + 1], self.Z[: i + 1], self.Z[i + 1]) for i in range(1, 7)]

    def N(self, a, out=None):
        # inlined nonlinear_rhs; this is the hot loop
        u = a[:-1] * self._lam_a
        if self._lam_b is not None:
            u += a[1:] * self._lam_b
        if out is None:
            out = np.empty_like(a)
        np.multiply(u, a[:-1], out=out[1:])
        out[0] = self.f0
        out[:-1] -= u * a[1:]
        return out

    def attempt(self, a, N0, h):
        """One trial step of size ``h`` from ``a`` with ``N0 = N(a)``.

        Returns ``(a_new, N_new, err)`` where ``err`` is the max over shells
        of the local error scaled by ``abs_tol + rel_tol |a|``. Callers
        silence floating point warnings; overflow shows up as ``err = inf``.
        """
        if not self.stiff:
            return self._attempt_plain(a, N0, h)
        K = np.empty((7, a.size))
        K[0] = N0
        hA = h * _AM
        if self.stiff:
            E = np.exp(np.multiply.outer(-h * _XS, self.D))
            for i, (row, rows) in enumerate(_STAGE, 1):
                y = E[row] * a + (hA[i, :i, None] * E[rows] * K[:i]).sum(axis=0)
                self.N(y, K[i])
            err_vec = ((h * _E)[:, None] * E[_ERR_ROWS] * K).sum(axis=0)
        else:
            for i in range(1, 7):
                y = a + hA[i, :i] @ K[:i]
                self.N(y, K[i])
            err_vec = (h * _E) @ K
        a_new = y  # last stage row holds the 5th order weights
        sc = self.ctrl.abs_tol + self.ctrl.rel_tol * np.maximum(np.abs(a), np.abs(a_new))
        # non-finite stages propagate into err as inf or nan
        err = float((np.abs(err_vec) / sc).max())
        if not math.isfinite(err):
            return a_new, None, math.inf
        return a_new, K[6].copy(), err

    def _attempt_plain(self, a, N0, h):
        Z, M, y, u, T = self.Z, self.M, self._y, self._u, self.T
        ylo, yhi = y[:-1], y[1:]
        lam_a, lam_b, pair, T_out = self._lam_a, self._lam_b, self._y_pair, self._T_out
        Z[0] = a
        Z[1] = N0
        np.multiply(_MX, h, out=M)
        M += _ONECOL
        for coef, rows, k in self._stages:
            np.dot(coef, rows, out=y)
            np.multiply(ylo, lam_a, out=u)
            if lam_b is not None:
                u += np.multiply(yhi, lam_b, out=self._tmp)
            np.multiply(u, pair, out=T_out)
            np.subtract(T[0], T[1], out=k)
        a_new = y.copy()
        err_vec = np.dot(M[7], Z)
        # |a| was computed as |a_new| of the previous accepted step
        prev, abs_a = self._abs_cache
        if prev is not a:
            abs_a = np.abs(a)
        abs_new = np.abs(a_new)
        self._abs_cache = (a_new, abs_new)
        sc = np.maximum(abs_a, abs_new)
        sc *= self.ctrl.rel_tol
        sc += self.ctrl.abs_tol
        np.abs(err_vec, out=err_vec)
        err_vec /= sc
        err = float(err_vec.max())
        if not math.isfinite(err):
            return a_new, None, math.inf
        return a_new, Z[7].copy(), err

    def next_dt(self, h, err, accepted):
        ctrl = self.ctrl
        if err == 0.0:
            fac = _FAC_MAX
        else:
            fac = min(_FAC_MAX, max(_FAC_MIN, ctrl.safety * err ** -0.2))
        if not accepted:
            fac = min(fac, 1.0)
        return min(ctrl.dt_max, max(ctrl.dt_min, h * fac))

    def dense(self, a0, N0, a1, N1, h, theta):
        """Cubic Hermite interpolant of the Duhamel remainder.

        ``a(t_n + tau) = exp(-D tau) a_n + r(tau)`` with ``r(0) = 0`` and
        ``r' = N - D r``; exact whenever the nonlinear part vanishes.
        """
        tau = theta * h
        e_full = np.exp(-self.D * h) if self.stiff else 1.0
        e_tau = np.exp(-self.D * tau) if self.stiff else 1.0
        r1 = a1 - e_full * a0
        dr0 = N0
        dr1 = N1 - self.D * r1 if self.stiff else N1
        h01 = theta * theta * (3 - 2 * theta)
        h10 = theta * (1 - theta) ** 2
        h11 = theta * theta * (theta - 1)
        return e_tau * a0 + h01 * r1 + h * (h10 * dr0 + h11 * dr1)


@np.errstate(over="ignore", invalid="ignore")
def step(params: ModelParams, state: ShellState, forcing: ForcingSpec | None, ctrl: StepControl, dt: float) -> StepResult:
    """Attempt a single step of size ``dt``.

    A rejected step returns the input state. A rejection at ``dt <= dt_min``
    is flagged ``StepFloorHit``; a non-finite trial state ``NumericalFailure``.
    """
    forcing = forcing or ForcingSpec()
    st = _Stepper(params, forcing, ctrl)
    a = state.a
    a_new, _, err = st.attempt(a, st.N(a), dt)
    if err <= 1.0:
        return StepResult(ShellState(state.t + dt, a_new), err, st.next_dt(dt, err, True), True)
    failure = None
    if dt <= ctrl.dt_min:
        finite = np.isfinite(a_new).all()
        failure = Termination.STEP_FLOOR_HIT if finite else Termination.NUMERICAL_FAILURE
    return StepResult(state, err, st.next_dt(dt, err, False), False, failure)


@dataclass(eq=False)
class Trajectory:
    """Samples of an integrated run.

    ``t`` has shape (n,), ``a`` shape (n, J). ``energy``, ``norm`` (the
    monitored ``H^s`` norm) and ``min_a`` are the per-sample diagnostics.
    Regular samples sit at ``t0 + k * sample_every``; the state at
    termination is appended as a final sample when it is later than the last
    regular one.
    """

    params: ModelParams
    forcing: ForcingSpec
    norm_s: float
    t: np.ndarray
    a: np.ndarray
    termination: Termination
    steps_accepted: int = 0
    steps_rejected: int = 0
    final_state: ShellState | None = None
    energy: np.ndarray = field(init=False)
    norm: np.ndarray = field(init=False)
    min_a: np.ndarray = field(init=False)

    def __post_init__(self):
        from .diagnostics import _sobolev_weights, energy_rows

        self.energy = energy_rows(self.a)
        w = _sobolev_weights(self.a.shape[1], self.norm_s)
        self.norm = np.sqrt(np.array([math.fsum(row) for row in w * self.a**2]))
        self.min_a = self.a.min(axis=1)

    def __len__(self):
        return self.t.size

    @property
    def samples(self):
        """List of ``(ShellState, record)`` pairs."""
        return [
            (ShellState(t, a), {"E": e, "Hs": n, "min_a": m})
            for t, a, e, n, m in zip(self.t, self.a, self.energy, self.norm, self.min_a)
        ]

    def state(self, i: int) -> ShellState:
        return ShellState(float(self.t[i]), self.a[i])


@np.errstate(over="ignore", invalid="ignore")
def integrate(
    params: ModelParams,
    state0: ShellState,
    forcing: ForcingSpec | None,
    ctrl: StepControl,
    stop: StopCondition,
    sample_every: float,
) -> Trajectory:
    """Integrate until the first stop clause fires. Never raises on blow-up."""
    from .diagnostics import _sobolev_weights

    forcing = forcing or ForcingSpec()
    if state0.J != params.J:
        raise ValueError(f"state has {state0.J} shells, model has {params.J}")
    if not stop.t_end > state0.t:
        raise ValueError("t_end must exceed the start time")
    if not sample_every > 0:
        raise ValueError("sample_every must be positive")

    st = _Stepper(params, forcing, ctrl)
    hs_w = _sobolev_weights(params.J, stop.norm_s)
    cap2 = stop.norm_cap * stop.norm_cap  # inf rather than OverflowError
    capped = cap2 < math.inf

    t0 = state0.t
    t, a = t0, state0.a.copy()
    N0 = st.N(a)
    ts, rows = [t0], [a.copy()]
    k_next = 1
    h = ctrl.dt_init
    accepted = rejected = 0
    termination = None

    def hit_stop(a):
        sq = a * a
        if capped and np.dot(hs_w, sq) > cap2:
            return Termination.NORM_CAP_EXCEEDED
        if stop.tail_cap is not None:
            e = sq.sum()
            if e > 0 and sq[-3:].sum() > stop.tail_cap * e:
                return Termination.TAIL_SATURATED
        return None

    while termination is None:
        if accepted >= stop.max_steps:
            termination = Termination.MAX_STEPS
            break
        h_try = min(h, stop.t_end - t)
        final = h_try < h
        a_new, N_new, err = st.attempt(a, N0, h_try)
        if err <= 1.0:
            accepted += 1
            t_new = stop.t_end if final else t + h_try
            while True:
                ts_k = t0 + k_next * sample_every
                if ts_k > t_new or ts_k > stop.t_end:
                    break
                if ts_k == t_new:
                    rows.append(a_new.copy())
                else:
                    rows.append(st.dense(a, N0, a_new, N_new, h_try, (ts_k - t) / h_try))
                ts.append(ts_k)
                k_next += 1
            t, a, N0 = t_new, a_new, N_new
            h = st.next_dt(h_try, err, True) if not final else h
            if t >= stop.t_end:
                termination = Termination.REACHED_T_END
            else:
                termination = hit_stop(a)
        else:
            rejected += 1
            if h_try <= ctrl.dt_min:
                finite = np.isfinite(a_new).all()
                termination = Termination.STEP_FLOOR_HIT if finite else Termination.NUMERICAL_FAILURE
            else:
                h = st.next_dt(h_try, err, False)

    if t > ts[-1]:
        ts.append(t)
        rows.append(a.copy())
    arr = np.array(rows)
    if not np.isfinite(arr).all():
        keep = np.isfinite(arr).all(axis=1)
        arr, ts = arr[keep], list(np.asarray(ts)[keep])
        termination = Termination.NUMERICAL_FAILURE
    return Trajectory(
        params=params,
        forcing=forcing,
        norm_s=stop.norm_s,
        t=np.asarray(ts, dtype=float),
        a=arr,
        termination=termination,
        steps_accepted=accepted,
        steps_rejected=rejected,
        final_state=ShellState(t, a) if np.isfinite(a).all() else None,
    )


@dataclass(frozen=True)
class BlowupEstimate:
    T_est: float
    fit_residual: float
    n_fit: int


def estimate_blowup_time(t, L, window: float = 0.25, growth: float = 10.0) -> BlowupEstimate:
    """Extrapolate the zero of ``1/L`` from a linear least-squares fit.

    The fit uses the trailing ``window`` fraction (at least three samples) of
    the samples whose ``L`` exceeds ``growth`` times its initial value; if
    fewer than three qualify, all samples are used. ``fit_residual`` is the
    RMS residual divided by the spread of ``1/L`` over the window.
    """
    t = np.asarray(t, dtype=float)
    L = np.asarray(L, dtype=float)
    if t.shape != L.shape or t.size < 3:
        raise ValueError("need at least three (t, L) samples")
    idx = np.flatnonzero(L > growth * L[0]) if L[0] > 0 else np.array([], dtype=int)
    if idx.size < 3:
        idx = np.arange(t.size)
    n = max(3, math.ceil(window * idx.size))
    idx = idx[-n:]
    tw, Lw = t[idx], L[idx]
    if np.any(Lw <= 0) or np.any(np.diff(Lw) <= 0):
        raise NoBlowupTrend("L is not positive and increasing over the fit window")
    y = 1.0 / Lw
    slope, icept = np.polyfit(tw, y, 1)
    if not slope < 0:
        raise NoBlowupTrend("1/L does not decrease over the fit window")
    resid = y - (slope * tw + icept)
    spread = np.ptp(y)
    rms = float(np.sqrt(np.mean(resid**2)))
    return BlowupEstimate(float(-icept / slope), rms / spread if spread > 0 else 0.0, int(idx.size))
