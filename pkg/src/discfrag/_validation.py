"""Argument checking shared across the package."""

from __future__ import annotations

import math

import numpy as np


class DomainError(ValueError):
    """An index or time lies outside the domain where coefficients are defined."""


class PreconditionError(ValueError):
    """A mathematical hypothesis of an inequality check does not hold."""


def check_time(t, horizon=math.inf, name="t"):
    t = float(t)
    if not math.isfinite(t) or t < 0.0 or t > horizon:
        raise DomainError(f"{name}={t!r} outside [0, {horizon}]")
    return t


def check_index(n, minimum=1, name="n"):
    if isinstance(n, (bool, np.bool_)) or int(n) != n:
        raise ValueError(f"{name} must be an integer, got {n!r}")
    n = int(n)
    if n < minimum:
        raise DomainError(f"{name}={n} must be >= {minimum}")
    return n


def check_grid(times, horizon=math.inf, name="time_grid"):
    """Return a sorted 1-d float array of distinct times inside ``[0, horizon]``."""
    grid = np.unique(np.atleast_1d(np.asarray(times, dtype=float)))
    if grid.size == 0:
        raise ValueError(f"{name} is empty")
    for t in (grid[0], grid[-1]):
        check_time(t, horizon, name)
    return grid


def check_weight(w, n=None, name="weight"):
    """Validate a weight sequence and return it as a float array.

    If ``n`` is given the sequence must hold at least ``n`` entries and only
    the first ``n`` are returned.
    """
    w = np.asarray(getattr(w, "w", w), dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-d sequence")
    if n is not None:
        if w.size < n:
            raise ValueError(f"{name} has length {w.size} < {n}")
        w = w[:n]
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ValueError(f"{name} entries must be finite and positive")
    return w


def check_vector(u, name="u"):
    u = np.asarray(getattr(u, "u", u), dtype=float)
    if u.ndim != 1 or u.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(u)):
        raise ValueError(f"{name} has non-finite entries")
    return u


def frozen(a):
    """Read-only view, so shared arrays cannot be mutated by callers."""
    a = np.asarray(a)
    a.setflags(write=False)
    return a
