"""Generalized bracket flow and its scalar-normalized variant.

The state is the flat coordinate vector y of a Dorfman bracket (see
:meth:`DorfmanBracket.flat`). In these coordinates the Dorfman norm is
``6 * |y|^2``, which keeps the radial bookkeeping of the normalized flow
trivial.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .courant import (
    CONSTRUCTION_TOL,
    DorfmanBracket,
    d2_tensor,
    d_tensor,
    dstar3_tensor,
    rc_minus_a,
)
from .liealg import LieBracket, jacobiator_tensor, scalar_curvature
from .multilinear import KForm, _components_to_tensor, rho_tensor, theta_tensor

__all__ = [
    "FlowDriftError",
    "FlowOptions",
    "FlowOutcome",
    "OutcomeKind",
    "TrajectorySample",
    "asymptotic_scalar_fit",
    "detect_blowup",
    "integrate",
    "integrate_batch",
    "normalized_vector_field",
    "vector_field",
]

DRIFT_FACTOR = 1e3


class FlowDriftError(RuntimeError):
    """Jacobi or closedness residual grew beyond the drift allowance."""


class OutcomeKind(enum.Enum):
    REACHED_T_MAX = "ReachedTMax"
    BLOW_UP = "BlowUp"
    CONVERGED = "Converged"
    STEP_UNDERFLOW = "StepUnderflow"


@dataclass(frozen=True)
class FlowOptions:
    t_max: float = 1.0
    rtol: float = 1e-9
    atol: float = 1e-12
    max_steps: int = 1_000_000
    min_step: float = 1e-14
    normalized: bool = False
    monitor_every: int = 1
    blowup_norm_cap: float = 1e8
    convergence_tol: float = 1e-8
    convergence_window: int = 10
    stop_on_convergence: bool = True
    sample_times: tuple = ()
    initial_step: float | None = None

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        if not self.min_step > 0:
            raise ValueError("min_step must be positive")
        if self.monitor_every < 1 or self.max_steps < 1:
            raise ValueError("monitor_every and max_steps must be >= 1")


@dataclass
class TrajectorySample:
    t: float
    mud: DorfmanBracket
    norm2_mud: float
    gen_scalar: float
    scal: float
    norm2_H: float
    jacobi_residual: float
    dH_residual: float
    dstarH_norm: float
    ell: float | None
    step_size: float

    @classmethod
    def measure(cls, t, mud: DorfmanBracket, step_size: float, ell=None) -> "TrajectorySample":
        T, W = mud.mu.tensor, mud.H.tensor
        norm2_H = 6.0 * float(mud.H.components @ mud.H.components)
        scal = scalar_curvature(T)
        dstar = dstar3_tensor(T, W)
        return cls(
            t=float(t),
            mud=mud,
            norm2_mud=3.0 * mud.mu.norm2() + norm2_H,
            gen_scalar=scal - norm2_H / 12.0,
            scal=scal,
            norm2_H=norm2_H,
            jacobi_residual=float(np.max(np.abs(jacobiator_tensor(T)), initial=0.0)),
            dH_residual=float(np.max(np.abs(d_tensor(T, W)), initial=0.0)),
            # increasing-tuple norm of the 2-form: half the full sum
            dstarH_norm=float(np.sqrt(0.5 * np.sum(dstar**2))),
            ell=ell,
            step_size=float(step_size),
        )


@dataclass
class FlowOutcome:
    kind: OutcomeKind
    trajectory: list = field(default_factory=list)
    t_final: float = 0.0
    steps: int = 0
    T_estimate: float | None = None
    limit: DorfmanBracket | None = None

    @property
    def final(self) -> TrajectorySample:
        return self.trajectory[-1]


# -- vector fields ----------------------------------------------------------


class _Layout:
    """Index bookkeeping between flat coordinates and full tensors."""

    def __init__(self, n: int):
        self.n = n
        self.iu, self.ju = np.triu_indices(n, 1)
        self.m = n * comb(n, 2)
        self.t3 = np.array(list(_tuples3(n)), dtype=int).reshape(-1, 3)

    def tensors(self, y):
        n = self.n
        T = np.zeros((n, n, n))
        block = y[: self.m].reshape(-1, n)
        T[self.iu, self.ju] = block
        T[self.ju, self.iu] = -block
        W = _components_to_tensor(n, 3, y[self.m :]) if n >= 3 else np.zeros((n, n, n))
        return T, W

    def flat(self, dT, dW):
        parts = [dT[self.iu, self.ju].ravel()]
        if self.t3.size:
            parts.append(dW[self.t3[:, 0], self.t3[:, 1], self.t3[:, 2]])
        return np.concatenate(parts)


def _tuples3(n):
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                yield (i, j, k)


_LAYOUTS: dict[int, _Layout] = {}


def _layout(n: int) -> _Layout:
    if n not in _LAYOUTS:
        _LAYOUTS[n] = _Layout(n)
    return _LAYOUTS[n]


def _field_flat(lay: _Layout, y: np.ndarray, normalized: bool):
    T, W = lay.tensors(y)
    ricb, alpha = rc_minus_a(T, W)
    dT = -theta_tensor(ricb, T)
    dW = -rho_tensor(ricb, W) + d2_tensor(T, alpha)
    f = lay.flat(dT, dW)
    if not np.all(np.isfinite(f)):
        raise FloatingPointError("non-finite curvature in the flow vector field")
    if not normalized:
        return f, None
    yy = float(y @ y)
    ell = -float(f @ y) / yy
    return f + ell * y, ell


def _as_pair(mud: DorfmanBracket, f: np.ndarray):
    n = mud.dim
    lay = _layout(n)
    dT = np.zeros((n, n, n))
    block = f[: lay.m].reshape(-1, n)
    dT[lay.iu, lay.ju] = block
    dT[lay.ju, lay.iu] = -block
    return LieBracket(dT), KForm(n, 3, f[lay.m :])


def vector_field(mud: DorfmanBracket) -> tuple[LieBracket, KForm]:
    """(dmu/dt, dH/dt) = (-theta(Ric^B)mu, -rho(Ric^B)H - d d*H)."""
    f, _ = _field_flat(_layout(mud.dim), mud.flat(), normalized=False)
    return _as_pair(mud, f)


def normalized_vector_field(mud: DorfmanBracket) -> tuple[tuple[LieBracket, KForm], float]:
    """Scalar-normalized field and its coefficient ell; the radial part vanishes."""
    y = mud.flat()
    if not np.any(y):
        raise ValueError("the normalized flow is undefined at the zero bracket")
    f, ell = _field_flat(_layout(mud.dim), y, normalized=True)
    return _as_pair(mud, f), ell


# -- Dormand-Prince 5(4) ----------------------------------------------------

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
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# difference between the 5th and embedded 4th order weights
_E = _B - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])

_SAFETY = 0.9
_BETA = 0.04
_EXPO = 0.2 - 0.75 * _BETA
_FAC_MIN, _FAC_MAX = 0.2, 10.0


def _dopri_step(fun, y, f0, h):
    K = np.empty((7, y.size))
    K[0] = f0
    for s in range(1, 7):
        K[s] = fun(y + h * (np.dot(_A[s], K[:s])))
    y_new = y + h * (_B @ K)
    err = h * (_E @ K)
    return y_new, err, K[6]


class _BlowupWatch:
    """Rolling record of (t, |mud|^2) at every accepted step."""

    def __init__(self, size: int = 40):
        self.t = deque(maxlen=size)
        self.norm2 = deque(maxlen=size)

    def push(self, t, n2):
        self.t.append(t)
        self.norm2.append(n2)

    def estimate(self):
        return _fit_inverse_norm(np.array(self.t), np.array(self.norm2))


def _fit_inverse_norm(t, norm2, window: int = 20, rel_tol: float = 1e-3):
    if t.size < 10 or not np.all(np.isfinite(norm2)) or np.any(norm2 <= 0):
        return None
    t, norm2 = t[-window:], norm2[-window:]
    if not np.all(np.diff(norm2) > 0):
        return None
    inv = 1.0 / norm2
    # centre and scale t so the fit stays well conditioned near the singularity
    t0, span = t.mean(), np.ptp(t)
    if span == 0:
        return None
    s = (t - t0) / span
    V = np.vstack([s, np.ones_like(s)]).T
    coef, *_ = np.linalg.lstsq(V, inv, rcond=None)
    slope, icpt = coef
    resid = inv - V @ coef
    if slope >= 0 or np.linalg.norm(resid) > rel_tol * np.linalg.norm(inv):
        return None
    return float(t0 - icpt / slope * span)


def detect_blowup(trajectory) -> float | None:
    """Blow-up time from a linear fit of 1/|mud|^2 against t on the last samples.

    Returns ``None`` unless the norm is growing and the fit's relative residual
    is below 1e-3.
    """
    t = np.array([s.t for s in trajectory], dtype=float)
    n2 = np.array([s.norm2_mud for s in trajectory], dtype=float)
    return _fit_inverse_norm(t, n2)


def _check_drift(s: TrajectorySample, tol: float):
    allow = DRIFT_FACTOR * tol * max(1.0, s.norm2_mud)
    if s.jacobi_residual > allow or s.dH_residual > allow:
        raise FlowDriftError(
            f"invariant drift at t={s.t:.6g}: jacobi {s.jacobi_residual:.3e}, "
            f"dH {s.dH_residual:.3e} (allowed {allow:.3e})"
        )


def integrate(mud0: DorfmanBracket, opts: FlowOptions | None = None) -> FlowOutcome:
    """Integrate the (optionally scalar-normalized) bracket flow from ``mud0``."""
    opts = opts or FlowOptions()
    n = mud0.dim
    lay = _layout(n)
    # re-run the construction checks in case mud0 was built with check=False
    DorfmanBracket(mud0.mu, mud0.H, check=True)

    y = mud0.flat().astype(float)
    r0 = float(y @ y)
    if opts.normalized and r0 == 0:
        raise ValueError("the normalized flow is undefined at the zero bracket")
    norm_cap_near = 10.0 * max(6.0 * r0, 1e-300)

    def fun(v):
        return _field_flat(lay, v, opts.normalized)[0]

    def sample(t, v, h, f_ell=None):
        mud = DorfmanBracket.from_flat(n, v)
        ell = None
        if opts.normalized:
            ell = f_ell if f_ell is not None else _field_flat(lay, v, True)[1]
        s = TrajectorySample.measure(t, mud, h, ell)
        _check_drift(s, CONSTRUCTION_TOL)
        return s

    checkpoints = sorted(float(x) for x in opts.sample_times if 0 < x < opts.t_max)
    checkpoints.append(float(opts.t_max))

    t = 0.0
    f, ell = _field_flat(lay, y, opts.normalized)
    f0 = f
    traj = [sample(t, y, 0.0, ell)]
    watch = _BlowupWatch()
    watch.push(t, 6.0 * r0)

    fnorm = float(np.linalg.norm(f))
    ynorm = math.sqrt(r0)
    if opts.initial_step is not None:
        h = opts.initial_step
    else:
        h = 0.01 * (ynorm / fnorm) if fnorm > 0 else opts.t_max
        h = min(h, opts.t_max)

    err_prev = 1e-4
    steps = 0
    accepted = 0
    calm = 0
    kind = OutcomeKind.REACHED_T_MAX
    T_est = None
    next_cp = 0

    while True:
        if steps >= opts.max_steps:
            break
        target = checkpoints[next_cp]
        n2 = 6.0 * float(y @ y)
        if n2 > norm_cap_near:
            h = min(h, 0.1 / n2)
        hit = False
        if t + h >= target:
            h = target - t
            hit = True
        if h < opts.min_step:
            kind = OutcomeKind.STEP_UNDERFLOW
            break

        steps += 1
        try:
            y_new, err_vec, f_new = _dopri_step(fun, y, f, h)
        except FloatingPointError:
            y_new = None
        if y_new is None or not np.all(np.isfinite(y_new)):
            h *= 0.25
            err_prev = 1e-4
            continue

        sc = opts.atol + opts.rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / sc) ** 2)))
        if err > 1.0:
            h *= max(_FAC_MIN, _SAFETY * err ** (-0.2))
            continue

        # accepted
        if opts.normalized:
            c = math.sqrt(r0 / float(y_new @ y_new))
            y_new = c * y_new
            f_new = c**3 * f_new  # the field is homogeneous of degree 3
        t = target if hit else t + h
        y, f = y_new, f_new
        accepted += 1
        h_used = h

        # PI step-size controller
        fac = _SAFETY * max(err, 1e-10) ** (-_EXPO) * err_prev**_BETA
        fac = min(_FAC_MAX, max(_FAC_MIN, fac))
        err_prev = max(err, 1e-4)
        h = h_used * fac if not hit else max(h, h_used * fac)

        n2 = 6.0 * float(y @ y)
        watch.push(t, n2)

        record = hit or accepted % opts.monitor_every == 0
        if record:
            traj.append(sample(t, y, h_used))

        if opts.normalized:
            fn = float(np.linalg.norm(f)) / math.sqrt(float(y @ y))
            calm = calm + 1 if fn < opts.convergence_tol else 0

        if hit:
            next_cp += 1
            if next_cp >= len(checkpoints):
                break

        if opts.normalized:
            if calm >= opts.convergence_window and opts.stop_on_convergence:
                if not record:
                    traj.append(sample(t, y, h_used))
                kind = OutcomeKind.CONVERGED
                break

        if n2 > opts.blowup_norm_cap:
            T_est = watch.estimate()
            if T_est is not None:
                if not record:
                    traj.append(sample(t, y, h_used))
                kind = OutcomeKind.BLOW_UP
                break

    if kind is OutcomeKind.REACHED_T_MAX and opts.normalized and accepted and calm == accepted:
        # an exact fixed point can reach t_max in fewer steps than the window
        if float(np.linalg.norm(f0)) <= opts.convergence_tol * math.sqrt(r0):
            kind = OutcomeKind.CONVERGED
    if traj[-1].t != t:
        traj.append(sample(t, y, h if steps else 0.0))
    limit = traj[-1].mud if kind is OutcomeKind.CONVERGED else None
    return FlowOutcome(kind=kind, trajectory=traj, t_final=t, steps=accepted, T_estimate=T_est, limit=limit)


def asymptotic_scalar_fit(trajectory, decade: float = 10.0) -> tuple[float, float]:
    """Estimate lim t*S(t) from the samples in the final decade of time.

    Fits ``t*S = a + b/t`` and returns ``(a, spread)`` where ``spread`` is the
    relative range of t*S over the window.
    """
    t = np.array([s.t for s in trajectory], dtype=float)
    S = np.array([s.gen_scalar for s in trajectory], dtype=float)
    keep = t >= t[-1] / decade
    keep &= t > 0
    t, tS = t[keep], t[keep] * S[keep]
    if t.size == 0:
        return 0.0, 0.0
    ref = float(np.max(np.abs(tS)))
    if ref == 0.0:
        return 0.0, 0.0
    spread = float(np.ptp(tS)) / ref
    if t.size < 3:
        return float(tS[-1]), spread
    V = np.vstack([np.ones_like(t), 1.0 / t]).T
    (a, _), *_ = np.linalg.lstsq(V, tS, rcond=None)
    return float(a), spread


def _integrate_job(args):
    mud, opts = args
    return integrate(mud, opts)


def integrate_batch(starts, opts: FlowOptions | None = None, workers: int = 1) -> list[FlowOutcome]:
    """Integrate independent trajectories, optionally in worker processes.

    Results come back in input order and do not depend on ``workers``.
    """
    opts = opts or FlowOptions()
    jobs = [(m, opts) for m in starts]
    if workers <= 1 or len(jobs) <= 1:
        return [_integrate_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_integrate_job, jobs))
