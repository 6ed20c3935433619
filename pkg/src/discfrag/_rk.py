"""Dormand-Prince 5(4) pair with PI step-size control.

Works on arrays of any shape; the error norm is the scaled RMS of Hairer &
Wanner (Solving ODEs I, II.4).  Outputs are hit exactly by shortening the
step that would cross them, so no interpolation is involved.
"""

from __future__ import annotations

import math

import numpy as np

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B5 = np.array(A[6] + [0.0])
# difference between the 5th and embedded 4th order weights
E = B5 - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])

SAFETY = 0.9
ALPHA = 0.17  # 1/5 - 0.75*BETA
BETA = 0.04
FAC_MIN, FAC_MAX = 0.2, 10.0


class SolverError(RuntimeError):
    """Integration could not be completed."""


class StepSizeUnderflow(SolverError):
    pass


def _error_norm(err, y, y_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return math.sqrt(float(np.mean((err / scale) ** 2)))


def _initial_step(f, t0, y0, f0, rtol, atol, max_step):
    scale = atol + rtol * np.abs(y0)
    d0 = math.sqrt(float(np.mean((y0 / scale) ** 2)))
    d1 = math.sqrt(float(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, max_step)
    f1 = f(t0 + h0, y0 + h0 * f0)
    d2 = math.sqrt(float(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, 1e-3 * h0)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, max_step)


def integrate(f, t0, y0, t_out, rtol, atol, max_step, min_step, max_steps=10**6):
    """Integrate ``y' = f(t, y)`` from ``t0`` and return states at ``t_out``.

    ``t_out`` must be increasing and not below ``t0``; an entry equal to
    ``t0`` yields ``y0`` itself.  Returns ``(states, stats)``.
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    out = []
    targets = [float(x) for x in t_out]
    stats = {"steps": 0, "rejected": 0, "rhs_evals": 0}
    k1 = f(t, y)
    stats["rhs_evals"] += 1
    h = None
    err_old = 1e-4
    for target in targets:
        while t < target:
            if h is None:
                h = _initial_step(f, t, y, k1, rtol, atol, min(max_step, target - t))
                stats["rhs_evals"] += 1
            step = min(h, max_step)
            landing = t + step >= target
            if landing:
                step = target - t
            if step < min_step and not landing:
                raise StepSizeUnderflow(
                    f"step size {step:.3e} fell below min_step={min_step:.3e} at t={t:.6g}; "
                    "the system is likely stiff: reduce the truncation size or use "
                    "method='voc_recursion', which treats the diagonal exactly"
                )
            ks = [k1]
            for i in range(1, 7):
                yi = y + step * sum(a * k for a, k in zip(A[i], ks) if a != 0.0)
                ks.append(f(t + C[i] * step, yi))
            stats["rhs_evals"] += 6
            y_new = y + step * sum(b * k for b, k in zip(B5, ks) if b != 0.0)
            err_vec = step * sum(e * k for e, k in zip(E, ks) if e != 0.0)
            if not np.all(np.isfinite(y_new)):
                raise SolverError(f"non-finite state at t={t + step:.6g}")
            err = _error_norm(err_vec, y, y_new, rtol, atol)
            if err <= 1.0:
                fac = SAFETY * max(err, 1e-10) ** -ALPHA * err_old**BETA
                fac = min(FAC_MAX, max(FAC_MIN, fac))
                err_old = max(err, 1e-4)
                t = target if landing else t + step
                y = y_new
                k1 = ks[6]
                stats["steps"] += 1
                # a step shortened to land on an output says nothing about the next one
                h = max(h, step) if landing else step * fac
            else:
                stats["rejected"] += 1
                fac = max(FAC_MIN, SAFETY * err**-ALPHA)
                h = step * fac
            if stats["steps"] + stats["rejected"] > max_steps:
                raise SolverError(f"exceeded max_steps={max_steps}")
        out.append(y.copy())
    return out, stats
