"""Adaptive Dormand-Prince 5(4) integration with domain-aware step rejection."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateMetricError, DomainError, SignatureError

# Butcher tableau; the 7th stage is FSAL and doubles as the next step's first.
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
_B_LOW = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B_LOW

# Failures that mean "this point is not in the chart" rather than a bug.
DOMAIN_FAILURES = (DomainError, DegenerateMetricError, SignatureError, FloatingPointError, ZeroDivisionError)


@dataclass
class StepControl:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float = np.inf
    first_step: float | None = None
    min_step: float = 1e-12  # relative to the parameter span
    max_steps: int = 100_000


@dataclass
class Solution:
    s: np.ndarray
    y: np.ndarray
    f: np.ndarray  # derivatives at the samples, for Hermite interpolation
    status: str  # "end", "event", "domain_exit", "step_underflow", "max_steps"
    message: str = ""
    rejected: int = 0
    evaluations: int = 0
    extra: dict = field(default_factory=dict)


def hermite(s0, y0, f0, s1, y1, f1, s):
    """Cubic Hermite interpolant between two samples."""
    h = s1 - s0
    t = (np.asarray(s, dtype=float) - s0) / h
    t = t[..., None] if np.ndim(t) else t
    h00 = (1 + 2 * t) * (1 - t) ** 2
    h10 = t * (1 - t) ** 2
    h01 = t * t * (3 - 2 * t)
    h11 = t * t * (t - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def hermite5(s0, y0, d0, a0, s1, y1, d1, a1, s, derivative: bool = False):
    """Quintic Hermite interpolant matching values, first and second derivatives.

    With ``derivative=True`` returns the derivative in ``s`` instead.
    """
    h = s1 - s0
    t = (np.asarray(s, dtype=float) - s0) / h
    t = t[..., None] if np.ndim(t) else t
    t2, t3, t4, t5 = t * t, t**3, t**4, t**5
    if derivative:
        w = (
            -30 * t2 + 60 * t3 - 30 * t4,
            1 - 18 * t2 + 32 * t3 - 15 * t4,
            t - 4.5 * t2 + 6 * t3 - 2.5 * t4,
            1.5 * t2 - 4 * t3 + 2.5 * t4,
            -12 * t2 + 28 * t3 - 15 * t4,
            30 * t2 - 60 * t3 + 30 * t4,
        )
        scale = 1.0 / h
    else:
        w = (
            1 - 10 * t3 + 15 * t4 - 6 * t5,
            t - 6 * t3 + 8 * t4 - 3 * t5,
            0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5,
            0.5 * t3 - t4 + 0.5 * t5,
            -4 * t3 + 7 * t4 - 3 * t5,
            10 * t3 - 15 * t4 + 6 * t5,
        )
        scale = 1.0
    return scale * (
        w[0] * y0 + w[1] * h * d0 + w[2] * h * h * a0 + w[3] * h * h * a1 + w[4] * h * d1 + w[5] * y1
    )


def _initial_step(fun, s0, y0, f0, direction, control) -> float:
    scale = control.atol + np.abs(y0) * control.rtol
    d0 = np.linalg.norm(y0 / scale) / np.sqrt(y0.size)
    d1 = np.linalg.norm(f0 / scale) / np.sqrt(y0.size)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, control.max_step)
    try:
        f1 = fun(s0 + direction * h0, y0 + direction * h0 * f0)
    except DOMAIN_FAILURES:
        return h0 * 1e-3
    d2 = np.linalg.norm((f1 - f0) / scale) / np.sqrt(y0.size) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, control.max_step)


def dormand_prince(
    fun: Callable[[float, np.ndarray], np.ndarray],
    s0: float,
    y0,
    s_end: float,
    control: StepControl | None = None,
    event: Callable[[np.ndarray], float] | None = None,
) -> Solution:
    """Integrate ``y' = fun(s, y)`` from ``s0`` to ``s_end``.

    A step whose stages leave the domain (``fun`` raises a domain failure) is
    retried with a quarter of the length; when that shrinks below the minimum
    step the run ends with status ``"domain_exit"``. When the error estimate
    alone drives the step below the minimum, the status is
    ``"step_underflow"``. ``event(y)`` stops the run at its first sign change,
    located on the Hermite interpolant.
    """
    control = control or StepControl()
    y = np.array(y0, dtype=float)
    direction = 1.0 if s_end >= s0 else -1.0
    span = abs(s_end - s0)
    h_min = control.min_step * max(span, 1.0)
    f = fun(s0, y)
    nfev = 1
    ss, ys, fs = [float(s0)], [y.copy()], [f.copy()]
    if span == 0.0:
        return Solution(np.array(ss), np.array(ys), np.array(fs), "end", evaluations=nfev)
    h = control.first_step or _initial_step(fun, s0, y, f, direction, control)
    h = min(h, span)
    s = float(s0)
    ev0 = event(y) if event is not None else None
    status, message, rejected = "max_steps", "", 0
    domain_hit = False

    for _ in range(control.max_steps):
        if h < h_min:
            if domain_hit:
                status, message = "domain_exit", f"left the chart domain near s = {s:.12g}"
            else:
                status, message = "step_underflow", f"step size underflow at s = {s:.12g}"
            break
        last = abs(s_end - s) <= h * (1 + 1e-12)
        step = abs(s_end - s) if last else h
        hs = direction * step
        try:
            K = _stages(fun, s, y, f, hs)
            nfev += 6
        except DOMAIN_FAILURES:
            domain_hit = True
            rejected += 1
            h = 0.25 * step
            continue
        y_new = y + hs * (_B @ K)
        err_vec = hs * (_E @ K)
        scale = control.atol + control.rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = np.linalg.norm(err_vec / scale) / np.sqrt(y.size)
        if not np.isfinite(err):
            domain_hit = True
            rejected += 1
            h = 0.25 * step
            continue
        if err > 1.0:
            rejected += 1
            h = step * max(0.2, 0.9 * err ** -0.2)
            continue
        domain_hit = False
        s_new = s_end if last else s + hs
        f_new = K[6]
        if event is not None:
            ev1 = event(y_new)
            if ev0 != 0 and np.sign(ev1) != np.sign(ev0):
                s_hit, y_hit, f_hit, used = _locate(fun, event, s, y, f, s_new)
                nfev += used
                ss.append(s_hit)
                ys.append(y_hit)
                fs.append(f_hit)
                status = "event"
                break
        s, y, f = s_new, y_new, f_new
        ss.append(s)
        ys.append(y.copy())
        fs.append(f.copy())
        if last:
            status = "end"
            break
        grow = 5.0 if err == 0 else min(5.0, 0.9 * err ** -0.2)
        h = min(step * grow, control.max_step)
    return Solution(np.array(ss), np.array(ys), np.array(fs), status, message, rejected, nfev)


def _stages(fun, s, y, f, hs) -> np.ndarray:
    K = np.empty((7, y.size))
    K[0] = f
    for i in range(1, 7):
        K[i] = fun(s + _C[i] * hs, y + hs * (np.dot(_A[i], K[:i])))
    return K


def _locate(fun, event, s0, y0, f0, s1, iterations: int = 100):
    """Root of ``event`` along true partial steps from ``(s0, y0)``."""
    from scipy.optimize import brentq

    calls = [0]

    def land(s):
        hs = s - s0
        K = _stages(fun, s0, y0, f0, hs)
        calls[0] += 6
        return y0 + hs * (_B @ K), K[6]

    lo, hi = min(s0, s1), max(s0, s1)
    s_hit = float(brentq(lambda s: event(land(s)[0]), lo, hi, xtol=1e-15 * max(1.0, abs(s1)), maxiter=iterations))
    y_hit, f_hit = land(s_hit)
    return s_hit, y_hit, f_hit, calls[0]
